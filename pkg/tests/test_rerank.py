import pytest

from veristack.backend import StubBackend
from veristack.errors import BackendMalformed
from veristack.retrieval.chunking import chunk_document
from veristack.retrieval.rerank import rerank


class _FixedScores:
    """Backend stand-in returning a preset score list."""

    def __init__(self, scores):
        self.scores = scores
        self.calls = 0

    def rerank(self, model, query, documents):
        self.calls += 1
        return list(self.scores)


def _candidates(texts):
    out = []
    for i, t in enumerate(texts):
        out.extend(chunk_document(t, 4096, doc_url=f"d{i}"))
    return out


class TestRerank:
    def test_orders_by_score_descending(self):
        cands = _candidates(["low", "high", "mid"])
        backend = _FixedScores([0.1, 0.9, 0.5])
        hits = rerank("q", cands, 3, backend, "m")
        assert [h[0].doc_url for h in hits] == ["d1", "d2", "d0"]
        assert [h[1] for h in hits] == [0.9, 0.5, 0.1]

    def test_single_backend_call(self):
        cands = _candidates(["a", "b", "c", "d"])
        backend = _FixedScores([1, 2, 3, 4])
        rerank("q", cands, 2, backend, "m")
        assert backend.calls == 1

    def test_ties_keep_input_order(self):
        cands = _candidates(["a", "b", "c"])
        backend = _FixedScores([1.0, 1.0, 1.0])
        hits = rerank("q", cands, 3, backend, "m")
        assert [h[0].doc_url for h in hits] == ["d0", "d1", "d2"]

    def test_top_k_truncation(self):
        cands = _candidates(["a", "b", "c"])
        backend = _FixedScores([3.0, 1.0, 2.0])
        hits = rerank("q", cands, 2, backend, "m")
        assert [h[0].doc_url for h in hits] == ["d0", "d2"]

    def test_score_count_mismatch_rejected(self):
        cands = _candidates(["a", "b"])
        backend = _FixedScores([1.0])
        with pytest.raises(BackendMalformed):
            rerank("q", cands, 2, backend, "m")

    def test_empty_candidates_rejected(self):
        with pytest.raises(ValueError):
            rerank("q", [], 2, _FixedScores([]), "m")

    def test_with_stub_backend_token_overlap(self):
        cands = _candidates(
            ["the solar farm in nevada", "solar power", "unrelated text entirely"]
        )
        hits = rerank("solar farm nevada", cands, 3, StubBackend(), "m")
        assert [h[0].doc_url for h in hits] == ["d0", "d1", "d2"]
        assert [h[1] for h in hits] == [3.0, 1.0, 0.0]
