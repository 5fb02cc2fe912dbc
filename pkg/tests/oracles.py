"""Brute-force oracles used across the suite.

Each oracle reimplements the documented contract with straight-line code
(linear scans, naive loops) and stays independent of the index/engine
machinery it checks; only elementary numpy float ops are shared.
"""

from __future__ import annotations

import math
import re

import numpy as np

_WORDS = re.compile(r"[^\W_]+", re.UNICODE)


# -- text ----------------------------------------------------------------


def oracle_tokenize(text: str) -> list[str]:
    return _WORDS.findall(text.casefold())


def oracle_doc_text(doc: dict) -> str:
    parts = []
    if doc.get("title"):
        parts.append(doc["title"])
    for field in sorted(doc.get("metadata", {})):
        parts.extend(doc["metadata"][field])
    return " ".join(parts)


def oracle_keyword_scores(query: str, docs: dict[str, dict]) -> dict[str, float]:
    """Linear-scan TF-IDF: idf = ln((1+N)/(1+df)) + 1, tf normalized by doc length."""
    tokens = sorted(set(oracle_tokenize(query)))
    doc_tokens = {d: oracle_tokenize(oracle_doc_text(doc)) for d, doc in docs.items()}
    n = len(docs)
    scores: dict[str, float] = {}
    for token in tokens:
        df = sum(1 for toks in doc_tokens.values() if token in toks)
        if df == 0:
            continue
        idf = math.log((1 + n) / (1 + df)) + 1.0
        for d, toks in doc_tokens.items():
            count = toks.count(token)
            if count and len(toks) > 0:
                scores[d] = scores.get(d, 0.0) + idf * (count / len(toks))
    return scores


def oracle_keyword_search(query: str, docs: dict[str, dict],
                          allowed: set[str] | None, limit: int) -> list[tuple[str, float]]:
    scores = oracle_keyword_scores(query, docs)
    hits = [(d, s) for d, s in scores.items() if allowed is None or d in allowed]
    hits.sort(key=lambda pair: (-pair[1], pair[0]))
    return hits[:limit]


# -- facets ----------------------------------------------------------------


def oracle_year(value: str) -> int | None:
    text = value.strip()
    if re.fullmatch(r"[+-]?\d+", text):
        return int(text)
    return None


def oracle_doc_matches(doc: dict, flt: dict) -> bool:
    values = doc.get("metadata", {}).get(flt["field"], [])
    if "values" in flt:
        return any(v in flt["values"] for v in values)
    lo, hi = flt["range"]
    years = [oracle_year(v) for v in values]
    return any(y is not None and lo <= y <= hi for y in years)


def oracle_match_set(docs: dict[str, dict], filters: list[dict]) -> list[str]:
    return sorted(
        d for d, doc in docs.items()
        if all(oracle_doc_matches(doc, f) for f in filters)
    )


def oracle_facet_counts(docs: dict[str, dict], filters: list[dict],
                        field: str, kind: str) -> dict:
    matched = oracle_match_set(docs, filters)
    counts: dict = {}
    for d in matched:
        values = docs[d].get("metadata", {}).get(field, [])
        if kind == "numeric-year":
            distinct = {y for y in (oracle_year(v) for v in values) if y is not None}
        else:
            distinct = set(values)
        for v in distinct:
            counts[v] = counts.get(v, 0) + 1
    return counts


# -- vectors -----------------------------------------------------------------


def oracle_top_k(vectors: dict[str, np.ndarray], query: np.ndarray, k: int,
                 allowed: set[str] | None = None) -> list[tuple[str, float]]:
    """Exhaustive cosine top-k under (similarity desc, doc_id asc)."""
    q = np.asarray(query, dtype=np.float64)
    scored = []
    for doc_id in vectors:
        if allowed is not None and doc_id not in allowed:
            continue
        sim = float(np.dot(np.asarray(vectors[doc_id], dtype=np.float64), q))
        scored.append((-sim, doc_id))
    scored.sort()
    return [(doc_id, -neg) for neg, doc_id in scored[:k]]


# -- k-means -------------------------------------------------------------------


def oracle_lloyd(ids: list[str], X: np.ndarray, k: int, seed: int,
                 max_iter: int = 100, tol: float = 1e-4):
    """Independent Lloyd implementation following the documented procedure."""
    n = X.shape[0]
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(n))]
    d2 = np.array([float(np.sum((X[i] - X[chosen[0]]) ** 2)) for i in range(n)])
    for _ in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            u = float(rng.random())
            cum = np.cumsum(d2)
            idx = int(np.searchsorted(cum, u * total, side="right"))
            idx = min(idx, n - 1)
        chosen.append(idx)
        cand = np.array([float(np.sum((X[i] - X[idx]) ** 2)) for i in range(n)])
        d2 = np.minimum(d2, cand)
    C = X[np.array(chosen)].copy()

    def assign_repair(C):
        assign = np.empty(n, dtype=np.int64)
        dmin = np.empty(n)
        for i in range(n):
            dists = ((X[i] - C) ** 2).sum(axis=1)
            assign[i] = int(dists.argmin())
            dmin[i] = float(dists[assign[i]])
        counts = np.bincount(assign, minlength=k)
        for c in range(k):
            if counts[c] == 0:
                best_p, best_d = -1, -1.0
                for i in range(n):
                    if counts[assign[i]] >= 2 and dmin[i] > best_d:
                        best_p, best_d = i, dmin[i]
                counts[assign[best_p]] -= 1
                counts[c] += 1
                C[c] = X[best_p]
                assign[best_p] = c
                dmin[best_p] = 0.0
        return assign, float(dmin.sum())

    assign, sse = assign_repair(C)
    history = [sse]
    iterations = 0
    for _ in range(max_iter):
        C_new = np.empty_like(C)
        for c in range(k):
            members = X[assign == c]
            C_new[c] = members.mean(axis=0)
        assign_new, sse_new = assign_repair(C_new)
        iterations += 1
        history.append(sse_new)
        converged = sse_new >= sse or (sse - sse_new) <= tol * sse
        C, assign, sse = C_new, assign_new, sse_new
        if converged:
            break
    return {ids[i]: int(assign[i]) for i in range(n)}, sse, history, iterations


# -- end-to-end ranking ----------------------------------------------------------


def oracle_execute(doc_vectors: dict[str, dict[str, np.ndarray]],
                   fused: dict[str, np.ndarray],
                   weights: dict[str, float],
                   candidates: list[str]) -> list[tuple[str, float, dict[str, float]]]:
    """Brute-force fusion scoring: returns (doc_id, final, per_plugin) ranked.

    ``doc_vectors``: plugin -> doc_id -> vector. ``fused``: plugin -> unit
    query vector (plugins with absent fused vectors must not appear).
    """
    total_w = sum(weights[p] for p in fused)
    rows = []
    for doc_id in candidates:
        per = {}
        for plugin in sorted(fused):
            vec = doc_vectors.get(plugin, {}).get(doc_id)
            if vec is None:
                per[plugin] = 0.0
            else:
                sim = float(np.dot(np.asarray(vec, dtype=np.float64),
                                   fused[plugin].astype(np.float64)))
                per[plugin] = float(np.clip((1.0 + sim) / 2.0, 0.0, 1.0))
        final = sum(weights[p] * per[p] for p in fused) / total_w
        rows.append((doc_id, final, per))
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows


def oracle_fuse(embeddings: list[tuple[float, np.ndarray]]) -> np.ndarray | None:
    """Weighted-sum fusion: None when empty or the norm collapses."""
    if not embeddings:
        return None
    acc = np.zeros(embeddings[0][1].shape[0], dtype=np.float64)
    for weight, vec in embeddings:
        acc += weight * np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(acc))
    if norm < 1e-8:
        return None
    return (acc / norm).astype(np.float32)
