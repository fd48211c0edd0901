"""Small in-memory BM25 index, used to pick few-shot exemplars.

Scoring follows the Okapi formulation with the non-negative idf variant
``ln(1 + (N - df + 0.5) / (df + 0.5))``, so a matching term always adds a
positive contribution. Each distinct query token contributes once.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from typing import Iterable, Mapping

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on every non-alphanumeric run."""
    return _TOKEN_RE.findall(text.lower())


class Bm25Index:
    def __init__(
        self,
        documents: Mapping[str, str] | Iterable[tuple[str, str]],
        k1: float = 1.5,
        b: float = 0.75,
    ) -> None:
        if k1 <= 0:
            raise ValueError("k1 must be > 0")
        if not 0.0 <= b <= 1.0:
            raise ValueError("b must be in [0, 1]")
        pairs = documents.items() if isinstance(documents, Mapping) else documents
        self.k1 = k1
        self.b = b
        self.doc_ids: list[str] = []
        self._tf: list[Counter[str]] = []
        self._len: list[int] = []
        self._df: Counter[str] = Counter()
        seen: set[str] = set()
        for doc_id, text in pairs:
            if doc_id in seen:
                raise ValueError(f"duplicate document id {doc_id!r}")
            seen.add(doc_id)
            toks = tokenize(text)
            tf = Counter(toks)
            self.doc_ids.append(doc_id)
            self._tf.append(tf)
            self._len.append(len(toks))
            for term in tf:
                self._df[term] += 1
        self._n = len(self.doc_ids)
        self._avgdl = (sum(self._len) / self._n) if self._n else 0.0

    def __len__(self) -> int:
        return self._n

    def _idf(self, term: str) -> float:
        df = self._df.get(term, 0)
        if df == 0:
            return 0.0
        return math.log(1.0 + (self._n - df + 0.5) / (df + 0.5))

    def score(self, query: str) -> dict[str, float]:
        """BM25 score of every document for ``query`` (zero included)."""
        terms = sorted(set(tokenize(query)))
        out: dict[str, float] = {}
        for i, doc_id in enumerate(self.doc_ids):
            score = 0.0
            dl = self._len[i]
            norm = self.k1 * (1.0 - self.b + self.b * (dl / self._avgdl)) if self._avgdl else 0.0
            for term in terms:
                tf = self._tf[i].get(term, 0)
                if tf == 0:
                    continue
                score += self._idf(term) * (tf * (self.k1 + 1.0)) / (tf + norm)
            out[doc_id] = score
        return out


def bm25_topk(index: Bm25Index, query: str, k: int) -> list[tuple[str, float]]:
    """Top ``k`` positively scoring documents, ties broken by ascending id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scored = index.score(query)
    ranked = sorted(
        ((doc_id, s) for doc_id, s in scored.items() if s > 0.0),
        key=lambda pair: (-pair[1], pair[0]),
    )
    return ranked[:k]
