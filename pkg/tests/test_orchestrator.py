"""Serialization, stage caching, and the per-claim pipeline driver."""

import dataclasses
import hashlib

import pytest

from veristack.agents.prompts import AgentKind, FewshotExample
from veristack.agents.stages import AnalysisReport
from veristack.backend import CountingBackend, StubBackend
from veristack.core import (
    Claim,
    ImageRef,
    KnowledgeStore,
    Label,
    PipelineConfig,
    QAPair,
    QASet,
    StoreEntry,
    StoreKind,
    Verdict,
)
from veristack.orchestrator import serialize as ser
from veristack.orchestrator.pipeline import (
    STAGES,
    FewshotSelector,
    run_batch,
    run_pipeline,
)
from veristack.orchestrator.stagecache import StageCache
from veristack.retrieval.chunking import TextChunk, TextEvidenceItem
from veristack.retrieval.evidence import EvidenceBundle, ImageEvidenceItem


class TestCanonicalJson:
    def test_sorted_compact(self):
        assert ser.canonical_json({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'

    def test_non_ascii_escaped(self):
        assert ser.canonical_json({"a": "é"}) == '{"a":"\\u00e9"}'

    def test_digest_ignores_key_order(self):
        assert ser.digest({"a": 1, "b": 2}) == ser.digest({"b": 2, "a": 1})

    def test_digest_separates_payloads(self):
        assert ser.digest({"a": 1}) != ser.digest({"a": 2})


def _chunk(text="hello", index=0, start=0, url="https://docs.example.com/a"):
    return TextChunk(doc_url=url, index=index, start=start, end=start + len(text), text=text)


def _text_item():
    center = _chunk("middle part", index=1, start=10)
    before = _chunk("first part", index=0, start=0)
    return TextEvidenceItem(
        center=center,
        neighbors=(before,),
        combined_text=before.text + center.text,
        source_store=StoreKind.TEXT_QUERY_TEXT,
        embed_score=0.83,
        rerank_score=2.0,
    )


def _image_item():
    return ImageEvidenceItem(
        image=ImageRef(id="img-1", location="not-a-file-caption"),
        source_url="https://gallery.example.com/1",
        score=0.5,
        matched_by="claim_text",
    )


class TestRoundTrips:
    def test_image_ref(self):
        ref = ImageRef(id="a", location="b", bytes_digest="ff" * 32)
        assert ser.image_ref_from_dict(ser.image_ref_to_dict(ref)) == ref

    def test_image_ref_without_digest(self):
        ref = ImageRef(id="a", location="b")
        assert ser.image_ref_from_dict(ser.image_ref_to_dict(ref)) == ref

    def test_chunk(self):
        c = _chunk()
        assert ser.chunk_from_dict(ser.chunk_to_dict(c)) == c

    def test_text_item(self):
        item = _text_item()
        assert ser.text_item_from_dict(ser.text_item_to_dict(item)) == item

    def test_text_item_without_store(self):
        item = dataclasses.replace(_text_item(), source_store=None)
        assert ser.text_item_from_dict(ser.text_item_to_dict(item)) == item

    def test_image_item(self):
        item = _image_item()
        assert ser.image_item_from_dict(ser.image_item_to_dict(item)) == item

    def test_bundle(self):
        bundle = EvidenceBundle(
            text_text=(_text_item(),),
            image_text=(),
            images=(_image_item(),),
        )
        assert ser.bundle_from_dict(ser.bundle_to_dict(bundle)) == bundle

    def test_bundle_preserves_absent_sets(self):
        bundle = EvidenceBundle(text_text=None, image_text=(), images=None)
        back = ser.bundle_from_dict(ser.bundle_to_dict(bundle))
        assert back.text_text is None
        assert back.image_text == ()
        assert back.images is None

    def test_report(self):
        report = AnalysisReport(
            kind=AgentKind.TEXT_TEXT,
            raw="## 1. A\nbody",
            sections=(("A", "body"),),
        )
        assert ser.report_from_dict(ser.report_to_dict(report)) == report

    def test_qaset(self):
        qaset = QASet(
            pairs=(
                QAPair("q one?", "a one", iteration=1, position=1),
                QAPair("q two?", "a two", iteration=2, position=1),
            ),
            retries=1,
            deviations=(2,),
        )
        assert ser.qaset_from_dict(ser.qaset_to_dict(qaset)) == qaset

    def test_verdict(self):
        verdict = Verdict(
            label=Label.CONFLICTING_CHERRYPICKING,
            justification="both readings have support",
            selected=(QAPair("q?", "a", 1, 1),),
        )
        d = ser.verdict_to_dict(verdict)
        assert d["label"] == "Conflicting Evidence/Cherrypicking"
        assert ser.verdict_from_dict(d) == verdict


class TestClaimFingerprint:
    def test_plain_claim(self):
        claim = Claim(id="c1", text="the sky is blue", claimant="who", date="2024-01-01")
        fp = ser.claim_fingerprint(claim)
        assert fp == {
            "id": "c1",
            "text": "the sky is blue",
            "claimant": "who",
            "date": "2024-01-01",
            "images": [],
        }

    def test_image_content_hashed(self, tmp_path):
        img = tmp_path / "a.bin"
        img.write_bytes(b"first bytes")
        claim = Claim(id="c1", text="t", images=(ImageRef(id="i1", location=str(img)),))
        fp1 = ser.claim_fingerprint(claim)
        assert fp1["images"] == [
            {"id": "i1", "sha256": hashlib.sha256(b"first bytes").hexdigest()}
        ]
        img.write_bytes(b"second bytes")
        fp2 = ser.claim_fingerprint(claim)
        assert fp1 != fp2

    def test_missing_file_falls_back_to_location_bytes(self):
        claim = Claim(id="c1", text="t", images=(ImageRef(id="i1", location="inline-cap"),))
        fp = ser.claim_fingerprint(claim)
        assert fp["images"][0]["sha256"] == hashlib.sha256(b"inline-cap").hexdigest()


class TestStoreDigest:
    def _store(self, *texts):
        return KnowledgeStore(
            kind=StoreKind.TEXT_QUERY_TEXT,
            entries=tuple(StoreEntry(url=f"https://e.example.com/{i}", text=t)
                          for i, t in enumerate(texts)),
        )

    def test_none_store_is_empty_hash(self):
        assert ser.store_digest(None) == hashlib.sha256(b"").hexdigest()

    def test_equal_content_equal_digest(self):
        assert ser.store_digest(self._store("a", "b")) == ser.store_digest(self._store("a", "b"))

    def test_text_changes_digest(self):
        assert ser.store_digest(self._store("a")) != ser.store_digest(self._store("b"))

    def test_kind_changes_digest(self):
        text_store = self._store()
        image_store = KnowledgeStore(kind=StoreKind.TEXT_QUERY_IMAGE)
        assert ser.store_digest(text_store) != ser.store_digest(image_store)

    def test_field_boundaries_not_ambiguous(self):
        # Without separators "a"+"b" and "ab"+"" would hash identically.
        one = KnowledgeStore(
            kind=StoreKind.TEXT_QUERY_TEXT,
            entries=(StoreEntry(url="a", text="b"),),
        )
        other = KnowledgeStore(
            kind=StoreKind.TEXT_QUERY_TEXT,
            entries=(StoreEntry(url="ab", text=""),),
        )
        assert ser.store_digest(one) != ser.store_digest(other)

    def test_image_bytes_hashed(self, tmp_path):
        img = tmp_path / "pic.bin"
        img.write_bytes(b"\x00\x01")
        def build():
            return KnowledgeStore(
                kind=StoreKind.TEXT_QUERY_IMAGE,
                entries=(StoreEntry(url="u", image=ImageRef(id="i", location=str(img))),),
            )
        before = ser.store_digest(build())
        img.write_bytes(b"\x00\x02")
        assert ser.store_digest(build()) != before


class TestStageCache:
    def test_disabled_cache(self):
        cache = StageCache(None)
        assert not cache.enabled
        cache.put("retrieval", "k", {"x": 1})
        assert cache.get("retrieval", "k") is None
        assert cache.clear() == 0

    def test_round_trip(self, tmp_path):
        cache = StageCache(tmp_path)
        assert cache.enabled
        key = StageCache.key({"claim": "c1"})
        assert cache.get("retrieval", key) is None
        cache.put("retrieval", key, {"x": [1, 2]})
        assert cache.get("retrieval", key) == {"x": [1, 2]}

    def test_stages_isolated(self, tmp_path):
        cache = StageCache(tmp_path)
        cache.put("retrieval", "k", {"x": 1})
        assert cache.get("analysis", "k") is None

    def test_corrupt_entry_is_a_miss(self, tmp_path):
        cache = StageCache(tmp_path)
        cache.put("qa", "k", {"x": 1})
        (tmp_path / "qa" / "k.json").write_text("{torn", encoding="utf-8")
        assert cache.get("qa", "k") is None

    def test_no_temp_files_left_behind(self, tmp_path):
        cache = StageCache(tmp_path)
        for n in range(3):
            cache.put("verdict", f"k{n}", {"n": n})
        leftovers = [p for p in (tmp_path / "verdict").iterdir() if p.name.startswith(".tmp-")]
        assert leftovers == []

    def test_clear_counts_files(self, tmp_path):
        cache = StageCache(tmp_path)
        cache.put("retrieval", "a", {})
        cache.put("retrieval", "b", {})
        cache.put("qa", "c", {})
        assert cache.clear() == 3
        assert cache.get("retrieval", "a") is None
        assert cache.clear() == 0


_EXEMPLARS = (
    FewshotExample("a solar farm powers nevada homes", (("q1?", "a1"),)),
    FewshotExample("the bridge collapsed in spring floods", (("q2?", "a2"),)),
    FewshotExample("penguins appeared in an oslo mall", (("q3?", "a3"),)),
    FewshotExample("vaccination rates fell in the county", (("q4?", "a4"),)),
)


class TestFewshotSelector:
    def test_best_match_first(self):
        selector = FewshotSelector(_EXEMPLARS, PipelineConfig())
        picked = selector.select("how many nevada homes does the solar farm power")
        assert picked
        assert picked[0] is _EXEMPLARS[0]
        assert len(picked) <= PipelineConfig().fewshot_k

    def test_only_scoring_exemplars_returned(self):
        selector = FewshotSelector(_EXEMPLARS, PipelineConfig())
        picked = selector.select("penguins")
        assert [ex.claim_text for ex in picked] == ["penguins appeared in an oslo mall"]

    def test_no_exemplars(self):
        assert FewshotSelector((), PipelineConfig()).select("anything") == ()

    def test_k_limits_selection(self):
        cfg = dataclasses.replace(PipelineConfig(), fewshot_k=2)
        selector = FewshotSelector(_EXEMPLARS, cfg)
        picked = selector.select("the solar farm near the bridge in the county mall")
        assert len(picked) == 2


_CLAIM = Claim(
    id="c1",
    text="A solar farm outside Tonopah now powers one million Nevada homes.",
    claimant="Desert Herald",
    date="2024-05-12",
    images=(ImageRef(id="c1:img:1", location="panorama of solar panels"),),
)

_STORES = {
    StoreKind.TEXT_QUERY_TEXT: KnowledgeStore(
        kind=StoreKind.TEXT_QUERY_TEXT,
        entries=(
            StoreEntry(
                url="https://energy.example.com/report",
                text="Grid operators confirmed the solar farm outside Tonopah "
                     "delivers power for about one million Nevada homes.",
            ),
            StoreEntry(
                url="https://desertnews.example.com/story",
                text="The facility came online last year after two years of "
                     "construction in the desert north of town.",
            ),
        ),
    ),
    StoreKind.IMAGE_QUERY_TEXT: KnowledgeStore(
        kind=StoreKind.IMAGE_QUERY_TEXT,
        entries=(
            StoreEntry(
                url="https://reverse.example.com/hit",
                text="The aerial photo shows rows of heliostats at the Tonopah site.",
            ),
        ),
    ),
    StoreKind.TEXT_QUERY_IMAGE: KnowledgeStore(
        kind=StoreKind.TEXT_QUERY_IMAGE,
        entries=(
            StoreEntry(
                url="https://gallery.example.com/1",
                image=ImageRef(id="img-solar", location="solar farm aerial view"),
            ),
        ),
    ),
}

_CFG = PipelineConfig(chunk_chars=256)


class TestRunPipeline:
    def test_success_structure(self):
        result = run_pipeline(_CLAIM, _STORES, _CFG, StubBackend())
        assert not result.failed
        assert result.error is None and result.error_stage is None
        assert result.bundle is not None and result.bundle.text_text
        assert result.reports is not None and len(result.reports) == 3
        assert result.qaset is not None and len(result.qaset) == 20
        assert result.verdict is not None and result.verdict.label in Label
        assert result.cache_hits == ()
        assert [name for name, _ in result.timings] == list(STAGES)

    def test_exactly_eight_generate_calls(self):
        # 3 analysis agents + 4 QA iterations + 1 verdict.
        result = run_pipeline(_CLAIM, _STORES, _CFG, StubBackend())
        assert result.generate_calls == 8

    def test_cache_skips_model_traffic(self, tmp_path):
        cache = StageCache(tmp_path)
        outer = CountingBackend(StubBackend())
        first = run_pipeline(_CLAIM, _STORES, _CFG, outer, cache=cache)
        assert first.cache_hits == ()
        calls_after_first = dict(outer.counts)

        second = run_pipeline(_CLAIM, _STORES, _CFG, outer, cache=cache)
        assert second.cache_hits == ("retrieval", "analysis", "qa", "verdict")
        assert second.generate_calls == 0
        assert outer.counts == calls_after_first
        assert second.verdict == first.verdict
        assert second.qaset == first.qaset
        assert second.bundle == first.bundle

    def test_cache_keys_track_claim_content(self, tmp_path):
        cache = StageCache(tmp_path)
        run_pipeline(_CLAIM, _STORES, _CFG, StubBackend(), cache=cache)
        other = dataclasses.replace(_CLAIM, id="c2", text="The Riverton bridge collapsed.")
        result = run_pipeline(other, _STORES, _CFG, StubBackend(), cache=cache)
        assert result.cache_hits == ()

    def test_cache_keys_track_config(self, tmp_path):
        cache = StageCache(tmp_path)
        run_pipeline(_CLAIM, _STORES, _CFG, StubBackend(), cache=cache)
        cfg = dataclasses.replace(_CFG, generate_model="other-model")
        result = run_pipeline(_CLAIM, _STORES, cfg, StubBackend(), cache=cache)
        assert "analysis" not in result.cache_hits
        assert "qa" not in result.cache_hits
        assert "verdict" not in result.cache_hits

    def test_stage_failure_keeps_earlier_artifacts(self):
        class Boom(StubBackend):
            def generate(self, model, segments, max_tokens, temperature):
                text = "".join(s.get("text", "") for s in segments if s["type"] == "text")
                if "## 1. Evidence Consistency Check" in text:
                    raise RuntimeError("backend down")
                return super().generate(model, segments, max_tokens, temperature)

        result = run_pipeline(_CLAIM, _STORES, _CFG, Boom())
        assert result.failed
        assert result.error_stage == "analysis:cross_modal"
        assert "backend down" in result.error
        assert result.bundle is not None
        assert result.reports is None
        assert result.qaset is None
        assert result.verdict is None

    def test_failure_never_raises(self):
        class Dead(StubBackend):
            def embed(self, model, texts):
                raise ConnectionError("no backend")

        result = run_pipeline(_CLAIM, _STORES, _CFG, Dead())
        assert result.failed
        assert result.error_stage == "retrieval"
        assert "no backend" in result.error


class TestRunBatch:
    def _claims(self, n=3):
        texts = [
            "A solar farm outside Tonopah now powers one million Nevada homes.",
            "The Riverton bridge collapsed during the 2023 spring floods.",
            "An ancient shipwreck was found intact in Lake Veyron.",
            "Vaccination rates in Kestrel County fell below forty percent last year.",
        ]
        return [Claim(id=f"c{i + 1}", text=texts[i]) for i in range(n)]

    def test_order_preserved_with_workers(self):
        claims = self._claims(4)
        results = run_batch(claims, lambda c: {}, _CFG, StubBackend(), workers=3)
        assert [r.claim_id for r in results] == ["c1", "c2", "c3", "c4"]
        assert all(not r.failed for r in results)

    def test_store_loader_error_isolated(self):
        claims = self._claims(3)

        def loader(claim):
            if claim.id == "c2":
                raise KeyError("no stores for c2")
            return {}

        results = run_batch(claims, loader, _CFG, StubBackend())
        assert [r.failed for r in results] == [False, True, False]
        failed = results[1]
        assert failed.error_stage == "retrieval"
        assert "store loading failed" in failed.error

    def test_workers_validated(self):
        with pytest.raises(ValueError, match="workers"):
            run_batch([], lambda c: {}, _CFG, StubBackend(), workers=0)

    def test_exemplars_reach_qa_prompts(self):
        seen = []

        class Spy(StubBackend):
            def generate(self, model, segments, max_tokens, temperature):
                seen.append("".join(s.get("text", "") for s in segments if s["type"] == "text"))
                return super().generate(model, segments, max_tokens, temperature)

        run_batch(self._claims(1), lambda c: {}, _CFG, Spy(), exemplars=list(_EXEMPLARS))
        qa_prompts = [p for p in seen if '"qa_pairs"' in p]
        assert qa_prompts
        assert "a solar farm powers nevada homes" in qa_prompts[0]
