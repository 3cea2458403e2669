import json

import pytest


def manifest_row(i, caption, tags, modality="t2i", payload_row=None, gt_rows=None):
    return {
        "test_id": f"t{i:03d}",
        "modality": modality,
        "caption": caption,
        "tags": tags,
        "payload_row": i if payload_row is None else payload_row,
        "gt_rows": [i] if gt_rows is None else gt_rows,
    }


FIVE_CAPTIONS = [
    manifest_row(0, "a dog catching a frisbee", ["dog", "frisbee"]),
    manifest_row(1, "two cats on a sofa", ["cat", "sofa"]),
    manifest_row(2, "a zebra near a tree", ["zebra", "tree"]),
    manifest_row(3, "a red car on the road", ["car", "road"]),
    manifest_row(4, "a bowl of apples", ["apple", "bowl"]),
]


def write_manifest(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    return path


@pytest.fixture
def five_caption_manifest(tmp_path):
    return write_manifest(tmp_path / "manifest.jsonl", FIVE_CAPTIONS)
