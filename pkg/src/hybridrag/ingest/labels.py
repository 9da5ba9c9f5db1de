"""TF-IDF label proposal over a document corpus."""
from __future__ import annotations

import math
from collections import Counter

from .text import stopwords


def _terms(doc: str) -> list[str]:
    return doc.lower().split()


def tfidf_table(corpus: list[str]) -> list[dict[str, float]]:
    """Per-document ``{term: tf * idf}`` over all whitespace tokens.

    tf is count / document length, idf is ``ln((1 + N) / (1 + df)) + 1``.
    """
    docs = [_terms(d) for d in corpus]
    n = len(docs)
    df: Counter[str] = Counter()
    for terms in docs:
        df.update(set(terms))
    table = []
    for terms in docs:
        counts = Counter(terms)
        length = len(terms)
        table.append({
            t: (c / length) * (math.log((1 + n) / (1 + df[t])) + 1.0) for t, c in counts.items()
        })
    return table


def propose_labels(corpus: list[str], top_n: int) -> list[str]:
    """Top ``top_n`` candidate node labels by maximum TF-IDF across documents.

    Stop words and tokens that are not purely alphabetic are never proposed,
    though they still count toward document length. Ties break alphabetically.
    """
    if top_n <= 0:
        raise ValueError("top_n must be positive")
    if not corpus:
        raise ValueError("corpus must not be empty")
    stop = stopwords()
    best: dict[str, float] = {}
    for row in tfidf_table(corpus):
        for term, score in row.items():
            if term in stop or not term.isalpha():
                continue
            if score > best.get(term, -1.0):
                best[term] = score
    ranked = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))
    return [term for term, _ in ranked[:top_n]]
