"""Test-set manifest parsing and row-index validation.

The manifest is JSONL; each row describes one retrieval test sample:

    {"test_id": str, "modality": "t2i"|"i2t", "caption": str?,
     "tags": [str, ...]?, "payload_row": int, "gt_rows": [int, ...]}

payload_row positions the sample's query in queries.cgem and gt_rows
position its ground truth in gallery.cgem, so together the rows must
tile both index ranges exactly. Every inconsistency is reported before
any embedding work starts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ManifestError

MODALITIES = ("t2i", "i2t")


@dataclass(frozen=True)
class ManifestRow:
    test_id: str
    modality: str
    caption: str | None
    tags: tuple[str, ...] | None
    payload_row: int
    gt_rows: tuple[int, ...]

    def query_text(self) -> str:
        # the query side is text for t2i and the tag description for i2t
        if self.modality == "t2i":
            if not self.caption:
                raise ManifestError(f"sample {self.test_id!r}: t2i row has no caption")
            return self.caption
        if not self.tags:
            raise ManifestError(f"sample {self.test_id!r}: i2t row has no tags")
        return " ".join(self.tags)

    def gallery_text(self) -> str:
        if self.modality == "t2i":
            if not self.tags:
                raise ManifestError(f"sample {self.test_id!r}: t2i row has no tags")
            return " ".join(self.tags)
        if not self.caption:
            raise ManifestError(f"sample {self.test_id!r}: i2t row has no caption")
        return self.caption


def _parse_row(obj: object) -> ManifestRow:
    if not isinstance(obj, dict):
        raise ManifestError("row is not a JSON object")
    test_id = obj.get("test_id")
    if not isinstance(test_id, str) or not test_id:
        raise ManifestError("missing or invalid 'test_id'")
    modality = obj.get("modality")
    if modality not in MODALITIES:
        raise ManifestError(f"invalid 'modality' {modality!r}")
    payload_row = obj.get("payload_row")
    if not isinstance(payload_row, int) or isinstance(payload_row, bool) or payload_row < 0:
        raise ManifestError("missing or invalid 'payload_row'")
    gt_rows = obj.get("gt_rows")
    if (
        not isinstance(gt_rows, list)
        or not gt_rows
        or not all(isinstance(g, int) and not isinstance(g, bool) and g >= 0 for g in gt_rows)
    ):
        raise ManifestError("missing or invalid 'gt_rows'")
    caption = obj.get("caption")
    if caption is not None and not isinstance(caption, str):
        raise ManifestError("invalid 'caption'")
    tags = obj.get("tags")
    if tags is not None and (
        not isinstance(tags, list) or not all(isinstance(t, str) for t in tags)
    ):
        raise ManifestError("invalid 'tags'")
    return ManifestRow(
        test_id=test_id,
        modality=modality,
        caption=caption,
        tags=None if tags is None else tuple(tags),
        payload_row=payload_row,
        gt_rows=tuple(gt_rows),
    )


def read_rows(path: str | Path) -> list[ManifestRow]:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {p}: {exc}") from exc
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{p}:{lineno}: invalid JSON: {exc.msg}") from exc
        try:
            rows.append(_parse_row(obj))
        except ManifestError as exc:
            raise ManifestError(f"{p}:{lineno}: {exc}") from exc
    if not rows:
        raise ManifestError(f"manifest {p} has no rows")
    return rows


def query_texts(rows: list[ManifestRow]) -> list[str]:
    """Query strings ordered by payload_row; rows must tile 0..n-1."""
    by_row: dict[int, ManifestRow] = {}
    for r in rows:
        if r.payload_row in by_row:
            raise ManifestError(
                f"duplicate payload row {r.payload_row} "
                f"({by_row[r.payload_row].test_id!r} and {r.test_id!r})"
            )
        by_row[r.payload_row] = r
    missing = sorted(set(range(len(rows))) - set(by_row))
    if missing:
        raise ManifestError(f"payload rows have gaps: missing {missing}")
    return [by_row[i].query_text() for i in range(len(rows))]


def gallery_texts(rows: list[ManifestRow]) -> list[str]:
    """Gallery strings ordered by gt row; gt rows must tile 0..m-1.

    Several samples may point at the same gallery row (shared ground
    truth) as long as they agree on its content.
    """
    by_row: dict[int, tuple[str, str]] = {}
    for r in rows:
        text = r.gallery_text()
        for g in r.gt_rows:
            seen = by_row.get(g)
            if seen is not None and seen[1] != text:
                raise ManifestError(
                    f"gallery row {g} has conflicting content "
                    f"({seen[0]!r} vs {r.test_id!r})"
                )
            by_row[g] = (r.test_id, text)
    top = max(by_row)
    missing = sorted(set(range(top + 1)) - set(by_row))
    if missing:
        raise ManifestError(f"gallery rows have gaps: missing {missing}")
    return [by_row[i][1] for i in range(top + 1)]
