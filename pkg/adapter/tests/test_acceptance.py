"""Acceptance gate for the export adapter, one [PASS]/[FAIL] line."""

import numpy as np

from compgen import is_unit_normalized, load_embeddings
from compgen_adapter import ExportJob, export_embeddings, read_rows


def test_adapter_export_contract(capsys, five_caption_manifest, tmp_path):
    # exported files must load in the retrieval toolkit, match the
    # manifest cardinalities, be unit-norm within 1e-5, and repeat
    # with per-row self-similarity >= 1 - 1e-5
    try:
        results = []
        for sub in ("a", "b"):
            results.append(
                export_embeddings(
                    ExportJob(
                        manifest=five_caption_manifest,
                        model="hashproj:96",
                        queries_path=tmp_path / sub / "queries.cgem",
                        gallery_path=tmp_path / sub / "gallery.cgem",
                    )
                )
            )
        rows = read_rows(five_caption_manifest)
        n_queries = len(rows)
        n_gallery = 1 + max(g for r in rows for g in r.gt_rows)
        for result in results:
            for path, expected in (
                (result.queries_path, n_queries),
                (result.gallery_path, n_gallery),
            ):
                loaded = load_embeddings(path)
                assert loaded.rows == expected
                assert is_unit_normalized(loaded, tol=1e-5)
        for attr in ("queries_path", "gallery_path"):
            first = load_embeddings(getattr(results[0], attr)).data.astype(np.float64)
            second = load_embeddings(getattr(results[1], attr)).data.astype(np.float64)
            self_sim = np.sum(first * second, axis=1)
            assert np.all(self_sim >= 1.0 - 1e-5)
    except BaseException:
        with capsys.disabled():
            print("[FAIL] adapter export contract", flush=True)
        raise
    with capsys.disabled():
        print("[PASS] adapter export contract", flush=True)
