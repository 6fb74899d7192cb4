"""Retrieval pools, queries, and the retrieval metrics.

Similarity is the raw dot product on unit-norm embeddings (cosine). Ranking
is exhaustive over the pool with ties broken by ascending candidate id, so
results are reproducible regardless of insertion order or platform. Two pool
settings exist: a Local pool holds one (modality, task) bank, a Global pool
mixes candidate banks freely.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .embeddings import Modality
from .errors import (
    ConfigError,
    DuplicateIdError,
    EmptyPoolError,
    KOutOfRangeError,
    ShapeMismatchError,
)


class PoolSetting(Enum):
    GLOBAL = "global"
    LOCAL = "local"


@dataclass(frozen=True)
class Candidate:
    """One retrievable item: id, unit-norm embedding, modality, and the
    candidate bank it came from."""

    id: int
    embedding: np.ndarray
    modality: Modality
    source_task: str = ""


@dataclass(frozen=True)
class Query:
    id: int
    embedding: np.ndarray
    modality: Modality


class RetrievalPool:
    """An immutable candidate set with cached id/embedding arrays."""

    def __init__(self, candidates: Sequence[Candidate], setting: PoolSetting):
        candidates = list(candidates)
        if not candidates:
            raise EmptyPoolError("pool needs at least one candidate")
        ids = [c.id for c in candidates]
        seen: set[int] = set()
        for cid in ids:
            if cid in seen:
                raise DuplicateIdError(f"candidate id {cid} appears more than once")
            seen.add(cid)
        dims = {c.embedding.shape for c in candidates}
        if len(dims) != 1 or candidates[0].embedding.ndim != 1:
            raise ShapeMismatchError(f"candidate embeddings must share one 1-D shape, got {sorted(dims)}")
        if setting is PoolSetting.LOCAL:
            combos = {(c.modality, c.source_task) for c in candidates}
            if len(combos) != 1:
                raise ConfigError(
                    f"local pools hold exactly one (modality, task) bank, got {len(combos)}"
                )
        self.candidates = candidates
        self.setting = setting
        self.ids = np.array(ids, dtype=np.int64)
        self.matrix = np.stack([np.asarray(c.embedding, dtype=np.float64) for c in candidates])

    @property
    def size(self) -> int:
        return len(self.candidates)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class QuerySet:
    """Queries plus their ground-truth candidate ids."""

    queries: list[Query]
    ground_truth: dict[int, set[int]]

    def __post_init__(self):
        if not self.queries:
            raise EmptyPoolError("query set needs at least one query")
        for q in self.queries:
            gt = self.ground_truth.get(q.id)
            if not gt:
                raise ConfigError(f"query {q.id} has no ground-truth candidates")


def _check_ground_truth_in_pool(queries: QuerySet, pool: RetrievalPool) -> None:
    pool_ids = set(pool.ids.tolist())
    for q in queries.queries:
        missing = queries.ground_truth[q.id] - pool_ids
        if missing:
            raise ConfigError(f"ground-truth ids {sorted(missing)} for query {q.id} not in pool")


def _full_ranking(query_embedding: np.ndarray, pool: RetrievalPool) -> np.ndarray:
    """All candidate ids in rank order (best first, ties by ascending id)."""
    scores = pool.matrix @ np.asarray(query_embedding, dtype=np.float64)
    order = np.lexsort((pool.ids, -scores))
    return pool.ids[order]


def top_k(query_embedding: np.ndarray, pool: RetrievalPool, k: int) -> list[int]:
    """The k best candidate ids for one query."""
    if not (1 <= k <= pool.size):
        raise KOutOfRangeError(f"K={k} outside [1, {pool.size}]")
    return _full_ranking(query_embedding, pool)[:k].tolist()


def recall_at_k(queries: QuerySet, pool: RetrievalPool, k: int) -> float:
    """Fraction of queries whose top-K hits their ground-truth set."""
    if not (1 <= k <= pool.size):
        raise KOutOfRangeError(f"K={k} outside [1, {pool.size}]")
    _check_ground_truth_in_pool(queries, pool)
    hits = 0
    for q in queries.queries:
        gt = queries.ground_truth[q.id]
        if gt.intersection(top_k(q.embedding, pool, k)):
            hits += 1
    return hits / len(queries.queries)


def _bucket_edges(pool_size: int) -> list[int]:
    edges = [1]
    while edges[-1] * 2 <= pool_size:
        edges.append(edges[-1] * 2)
    return edges


def rank_of_ground_truth(
    queries: QuerySet,
    pool: RetrievalPool,
    bucket_edges: list[int] | None = None,
) -> tuple[list[int], dict[str, int]]:
    """Per-query best (minimum, 1-based) ground-truth rank plus a histogram.

    Buckets default to powers of two up to the pool size; each bucket spans
    [edge, next_edge) clipped to the pool size.
    """
    _check_ground_truth_in_pool(queries, pool)
    ranks = []
    for q in queries.queries:
        ranking = _full_ranking(q.embedding, pool)
        position = {cid: r + 1 for r, cid in enumerate(ranking.tolist())}
        ranks.append(min(position[g] for g in queries.ground_truth[q.id]))
    edges = bucket_edges if bucket_edges is not None else _bucket_edges(pool.size)
    if not edges or any(e < 1 for e in edges) or sorted(edges) != list(edges):
        raise ConfigError(f"bucket edges must be ascending and >= 1, got {edges}")
    histogram: dict[str, int] = {}
    for i, lo in enumerate(edges):
        hi = (edges[i + 1] - 1) if i + 1 < len(edges) else pool.size
        hi = min(hi, pool.size)
        label = str(lo) if lo == hi else f"{lo}-{hi}"
        histogram[label] = sum(1 for r in ranks if lo <= r <= hi)
    return ranks, histogram


def build_global_pool(sources: Iterable[Iterable[Candidate]]) -> RetrievalPool:
    """Union candidate banks into one mixed Global pool; ids must stay unique."""
    merged: list[Candidate] = []
    for source in sources:
        merged.extend(source)
    return RetrievalPool(merged, PoolSetting.GLOBAL)


def build_local_pool(candidates: Iterable[Candidate]) -> RetrievalPool:
    """Wrap one (modality, task) candidate bank as a Local pool."""
    return RetrievalPool(list(candidates), PoolSetting.LOCAL)


def cosine_to_ground_truth(queries: QuerySet, pool: RetrievalPool) -> list[float]:
    """cosine(query, best-ranked ground-truth candidate) per query."""
    _check_ground_truth_in_pool(queries, pool)
    by_id = {c.id: np.asarray(c.embedding, dtype=np.float64) for c in pool.candidates}
    out = []
    for q in queries.queries:
        emb = np.asarray(q.embedding, dtype=np.float64)
        best = max(
            queries.ground_truth[q.id],
            key=lambda cid: (float(by_id[cid] @ emb), -cid),
        )
        out.append(float(np.clip(by_id[best] @ emb, -1.0, 1.0)))
    return out


def cosine_by_rank(queries: QuerySet, pool: RetrievalPool, max_rank: int) -> np.ndarray:
    """Mean over queries of cosine(query, r-th ranked candidate), r = 1..max_rank."""
    if not (1 <= max_rank <= pool.size):
        raise KOutOfRangeError(f"max_rank={max_rank} outside [1, {pool.size}]")
    by_id = {c.id: np.asarray(c.embedding, dtype=np.float64) for c in pool.candidates}
    acc = np.zeros(max_rank)
    for q in queries.queries:
        emb = np.asarray(q.embedding, dtype=np.float64)
        ranking = _full_ranking(emb, pool)[:max_rank]
        acc += np.clip([by_id[cid] @ emb for cid in ranking.tolist()], -1.0, 1.0)
    return acc / len(queries.queries)


@dataclass
class RetrievalReport:
    """Metrics for one (query set, pool) pair, serializable to JSON and CSV.

    When a rank cap is set, both conventions for out-of-range ranks are
    recorded: capped_ranks clips them to the cap, while dropped_beyond_cap
    counts how many were discarded (ranks within the cap are unchanged).
    """

    setting: str
    k_values: list[int]
    recall_at: dict[int, float]
    rank_histogram: dict[str, int]
    ranks: list[int]
    gt_cosines: list[float]
    query_ids: list[int]
    rank_cap: int | None = None
    capped_ranks: list[int] | None = None
    dropped_beyond_cap: int | None = None

    def to_json_dict(self) -> dict:
        d = {
            "setting": self.setting,
            "k_values": self.k_values,
            "recall_at": {str(k): v for k, v in self.recall_at.items()},
            "rank_histogram": self.rank_histogram,
            "ranks": self.ranks,
            "gt_cosines": self.gt_cosines,
            "query_ids": self.query_ids,
        }
        if self.rank_cap is not None:
            d["rank_cap"] = self.rank_cap
            d["capped_ranks"] = self.capped_ranks
            d["dropped_beyond_cap"] = self.dropped_beyond_cap
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        """One row per query: id, best GT rank, GT cosine, hit@K flags."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["query_id", "best_gt_rank", "gt_cosine"] + [f"hit@{k}" for k in self.k_values])
        for qid, rank, cos in zip(self.query_ids, self.ranks, self.gt_cosines):
            writer.writerow([qid, rank, f"{cos:.8f}"] + [int(rank <= k) for k in self.k_values])
        return buffer.getvalue()


def build_report(
    queries: QuerySet,
    pool: RetrievalPool,
    k_values: Sequence[int],
    rank_cap: int | None = None,
) -> RetrievalReport:
    """Compute ranks once and derive recalls, histogram, and cosines."""
    k_values = sorted(set(int(k) for k in k_values))
    for k in k_values:
        if not (1 <= k <= pool.size):
            raise KOutOfRangeError(f"K={k} outside [1, {pool.size}]")
    ranks, histogram = rank_of_ground_truth(queries, pool)
    recall = {k: float(np.mean([r <= k for r in ranks])) for k in k_values}
    report = RetrievalReport(
        setting=pool.setting.value,
        k_values=list(k_values),
        recall_at=recall,
        rank_histogram=histogram,
        ranks=ranks,
        gt_cosines=cosine_to_ground_truth(queries, pool),
        query_ids=[q.id for q in queries.queries],
        rank_cap=rank_cap,
    )
    if rank_cap is not None:
        if rank_cap < 1:
            raise ConfigError(f"rank_cap must be >= 1, got {rank_cap}")
        report.capped_ranks = [min(r, rank_cap) for r in ranks]
        report.dropped_beyond_cap = sum(1 for r in ranks if r > rank_cap)
    return report
