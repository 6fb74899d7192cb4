"""Retrieval metric tests against a brute-force sort oracle."""

import numpy as np
import pytest

from gcl_lab.embeddings import Modality
from gcl_lab.errors import (
    ConfigError,
    DuplicateIdError,
    EmptyPoolError,
    KOutOfRangeError,
    ShapeMismatchError,
)
from gcl_lab.evaluation import (
    Candidate,
    PoolSetting,
    Query,
    QuerySet,
    RetrievalPool,
    build_global_pool,
    build_local_pool,
    build_report,
    cosine_by_rank,
    cosine_to_ground_truth,
    rank_of_ground_truth,
    recall_at_k,
    top_k,
)

from oracles import unit_rows


def oracle_ranking(query, candidates):
    """Rank ids by (descending score, ascending id) with plain Python sort."""
    scored = [(float(c.embedding @ query), c.id) for c in candidates]
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return [cid for _, cid in scored]


def make_candidates(rng, n, d, modality=Modality.IMAGE, task="bank", id_offset=0):
    rows = unit_rows(rng, n, d)
    return [
        Candidate(id=id_offset + i, embedding=rows[i], modality=modality, source_task=task)
        for i in range(n)
    ]


def make_query_set(rng, pool, n_queries, d, gt_per_query=1):
    """Random queries with ground truth drawn from the pool."""
    rows = unit_rows(rng, n_queries, d)
    ids = pool.ids.tolist()
    queries, gt = [], {}
    for i in range(n_queries):
        queries.append(Query(id=i, embedding=rows[i], modality=Modality.TEXT))
        gt[i] = set(rng.choice(ids, size=gt_per_query, replace=False).tolist())
    return QuerySet(queries=queries, ground_truth=gt)


class TestPoolConstruction:
    def test_empty_pool_rejected(self):
        with pytest.raises(EmptyPoolError):
            RetrievalPool([], PoolSetting.GLOBAL)

    def test_duplicate_id_rejected(self):
        rng = np.random.default_rng(0)
        cands = make_candidates(rng, 3, 4)
        dup = Candidate(id=1, embedding=cands[0].embedding, modality=Modality.TEXT, source_task="x")
        with pytest.raises(DuplicateIdError, match="id 1"):
            RetrievalPool(cands + [dup], PoolSetting.GLOBAL)

    def test_mixed_dims_rejected(self):
        a = Candidate(id=0, embedding=np.array([1.0, 0.0]), modality=Modality.IMAGE)
        b = Candidate(id=1, embedding=np.array([1.0, 0.0, 0.0]), modality=Modality.IMAGE)
        with pytest.raises(ShapeMismatchError):
            RetrievalPool([a, b], PoolSetting.GLOBAL)

    def test_local_pool_single_bank_enforced(self):
        rng = np.random.default_rng(1)
        image_bank = make_candidates(rng, 3, 4, Modality.IMAGE, "t1")
        text_bank = make_candidates(rng, 3, 4, Modality.TEXT, "t1", id_offset=10)
        build_local_pool(image_bank)  # single bank is fine
        with pytest.raises(ConfigError, match="one .modality, task. bank"):
            build_local_pool(image_bank + text_bank)

    def test_global_pool_mixes_banks(self):
        rng = np.random.default_rng(2)
        image_bank = make_candidates(rng, 3, 4, Modality.IMAGE, "t1")
        text_bank = make_candidates(rng, 4, 4, Modality.TEXT, "t2", id_offset=10)
        pool = build_global_pool([image_bank, text_bank])
        assert pool.size == 7
        assert pool.setting is PoolSetting.GLOBAL

    def test_global_pool_duplicate_across_banks(self):
        rng = np.random.default_rng(3)
        bank_a = make_candidates(rng, 3, 4, Modality.IMAGE, "t1")
        bank_b = make_candidates(rng, 3, 4, Modality.TEXT, "t2")  # same ids 0..2
        with pytest.raises(DuplicateIdError):
            build_global_pool([bank_a, bank_b])

    def test_empty_query_set_rejected(self):
        with pytest.raises(EmptyPoolError):
            QuerySet(queries=[], ground_truth={})

    def test_query_without_ground_truth_rejected(self):
        q = Query(id=0, embedding=np.array([1.0, 0.0]), modality=Modality.TEXT)
        with pytest.raises(ConfigError, match="no ground-truth"):
            QuerySet(queries=[q], ground_truth={0: set()})


class TestTopK:
    def test_matches_oracle_on_100_seeded_pools(self):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(2, 40))
            d = int(rng.integers(2, 10))
            pool = RetrievalPool(make_candidates(rng, n, d), PoolSetting.GLOBAL)
            query = unit_rows(rng, 1, d)[0]
            k = int(rng.integers(1, n + 1))
            assert top_k(query, pool, k) == oracle_ranking(query, pool.candidates)[:k]

    def test_ties_broken_by_ascending_id(self):
        emb = np.array([1.0, 0.0])
        cands = [
            Candidate(id=i, embedding=emb, modality=Modality.IMAGE, source_task="t")
            for i in (7, 3, 5)
        ]
        pool = RetrievalPool(cands, PoolSetting.LOCAL)
        assert top_k(np.array([1.0, 0.0]), pool, 3) == [3, 5, 7]

    def test_insertion_order_invariance(self):
        rng = np.random.default_rng(11)
        cands = make_candidates(rng, 20, 6)
        query = unit_rows(rng, 1, 6)[0]
        pool_fwd = RetrievalPool(cands, PoolSetting.GLOBAL)
        pool_rev = RetrievalPool(list(reversed(cands)), PoolSetting.GLOBAL)
        assert top_k(query, pool_fwd, 20) == top_k(query, pool_rev, 20)

    def test_k_out_of_range(self):
        rng = np.random.default_rng(4)
        pool = RetrievalPool(make_candidates(rng, 5, 3), PoolSetting.GLOBAL)
        query = unit_rows(rng, 1, 3)[0]
        with pytest.raises(KOutOfRangeError):
            top_k(query, pool, 0)
        with pytest.raises(KOutOfRangeError):
            top_k(query, pool, 6)


class TestRecall:
    def test_recall_monotone_in_k(self):
        for seed in range(20):
            rng = np.random.default_rng(100 + seed)
            pool = RetrievalPool(make_candidates(rng, 30, 5), PoolSetting.GLOBAL)
            queries = make_query_set(rng, pool, 10, 5, gt_per_query=2)
            recalls = [recall_at_k(queries, pool, k) for k in (1, 2, 4, 8, 16, 30)]
            assert all(a <= b for a, b in zip(recalls, recalls[1:]))
            assert recalls[-1] == 1.0  # K = pool size always hits

    def test_recall_hand_case(self):
        # Two orthogonal candidates; the query sits on candidate 0.
        cands = [
            Candidate(id=0, embedding=np.array([1.0, 0.0]), modality=Modality.IMAGE, source_task="t"),
            Candidate(id=1, embedding=np.array([0.0, 1.0]), modality=Modality.IMAGE, source_task="t"),
        ]
        pool = RetrievalPool(cands, PoolSetting.LOCAL)
        q_hit = Query(id=0, embedding=np.array([1.0, 0.0]), modality=Modality.TEXT)
        q_miss = Query(id=1, embedding=np.array([1.0, 0.0]), modality=Modality.TEXT)
        queries = QuerySet(queries=[q_hit, q_miss], ground_truth={0: {0}, 1: {1}})
        assert recall_at_k(queries, pool, 1) == 0.5
        assert recall_at_k(queries, pool, 2) == 1.0

    def test_ground_truth_must_exist_in_pool(self):
        rng = np.random.default_rng(5)
        pool = RetrievalPool(make_candidates(rng, 5, 3), PoolSetting.GLOBAL)
        q = Query(id=0, embedding=unit_rows(rng, 1, 3)[0], modality=Modality.TEXT)
        queries = QuerySet(queries=[q], ground_truth={0: {99}})
        with pytest.raises(ConfigError, match="not in pool"):
            recall_at_k(queries, pool, 1)

    def test_local_pool_recall_at_least_global(self):
        # The local pool is a subset of the global pool containing all the
        # ground truth, so every ground-truth rank can only improve locally.
        for seed in range(10):
            rng = np.random.default_rng(200 + seed)
            local_bank = make_candidates(rng, 15, 4, Modality.IMAGE, "t1")
            other_bank = make_candidates(rng, 25, 4, Modality.TEXT, "t2", id_offset=100)
            local = build_local_pool(local_bank)
            global_pool = build_global_pool([local_bank, other_bank])
            queries = make_query_set(rng, local, 8, 4)
            for k in (1, 3, 5):
                assert recall_at_k(queries, local, k) >= recall_at_k(queries, global_pool, k)


class TestRankOfGroundTruth:
    def test_ranks_match_oracle(self):
        for seed in range(30):
            rng = np.random.default_rng(300 + seed)
            pool = RetrievalPool(make_candidates(rng, 25, 4), PoolSetting.GLOBAL)
            queries = make_query_set(rng, pool, 6, 4, gt_per_query=3)
            ranks, _ = rank_of_ground_truth(queries, pool)
            for q, rank in zip(queries.queries, ranks):
                order = oracle_ranking(q.embedding, pool.candidates)
                expected = min(order.index(g) + 1 for g in queries.ground_truth[q.id])
                assert rank == expected

    def test_histogram_buckets_are_powers_of_two(self):
        rng = np.random.default_rng(6)
        pool = RetrievalPool(make_candidates(rng, 20, 4), PoolSetting.GLOBAL)
        queries = make_query_set(rng, pool, 12, 4)
        ranks, hist = rank_of_ground_truth(queries, pool)
        assert list(hist.keys()) == ["1", "2-3", "4-7", "8-15", "16-20"]
        assert sum(hist.values()) == len(ranks) == 12

    def test_histogram_counts_hand_case(self):
        emb = np.eye(4)
        cands = [
            Candidate(id=i, embedding=emb[i], modality=Modality.IMAGE, source_task="t")
            for i in range(4)
        ]
        pool = RetrievalPool(cands, PoolSetting.LOCAL)
        # Query along axis 0 with ground truth at id 2: rank of id 2 is
        # decided by the id tie-break among the three zero-score candidates.
        q = Query(id=0, embedding=emb[0], modality=Modality.TEXT)
        queries = QuerySet(queries=[q], ground_truth={0: {2}})
        ranks, hist = rank_of_ground_truth(queries, pool)
        assert ranks == [3]
        assert hist == {"1": 0, "2-3": 1, "4": 0}

    def test_bad_bucket_edges_rejected(self):
        rng = np.random.default_rng(7)
        pool = RetrievalPool(make_candidates(rng, 5, 3), PoolSetting.GLOBAL)
        queries = make_query_set(rng, pool, 2, 3)
        with pytest.raises(ConfigError):
            rank_of_ground_truth(queries, pool, bucket_edges=[2, 1])
        with pytest.raises(ConfigError):
            rank_of_ground_truth(queries, pool, bucket_edges=[0, 1])


class TestCosines:
    def test_cosine_to_ground_truth_picks_best_ranked(self):
        cands = [
            Candidate(id=0, embedding=np.array([1.0, 0.0]), modality=Modality.IMAGE, source_task="t"),
            Candidate(id=1, embedding=np.array([0.0, 1.0]), modality=Modality.IMAGE, source_task="t"),
        ]
        pool = RetrievalPool(cands, PoolSetting.LOCAL)
        q = Query(id=0, embedding=np.array([0.6, 0.8]), modality=Modality.TEXT)
        queries = QuerySet(queries=[q], ground_truth={0: {0, 1}})
        # id 1 scores 0.8 > 0.6, so the best ground truth is id 1.
        assert cosine_to_ground_truth(queries, pool) == [pytest.approx(0.8)]

    def test_cosine_by_rank_non_increasing_per_query(self):
        # With a single query the mean curve is that query's own sorted
        # scores, which must be non-increasing by construction.
        for seed in range(20):
            rng = np.random.default_rng(400 + seed)
            pool = RetrievalPool(make_candidates(rng, 15, 4), PoolSetting.GLOBAL)
            queries = make_query_set(rng, pool, 1, 4)
            curve = cosine_by_rank(queries, pool, 15)
            assert np.all(np.diff(curve) <= 1e-12)

    def test_cosine_by_rank_matches_oracle(self):
        rng = np.random.default_rng(8)
        pool = RetrievalPool(make_candidates(rng, 10, 3), PoolSetting.GLOBAL)
        queries = make_query_set(rng, pool, 4, 3)
        curve = cosine_by_rank(queries, pool, 5)
        by_id = {c.id: c.embedding for c in pool.candidates}
        expected = np.zeros(5)
        for q in queries.queries:
            order = oracle_ranking(q.embedding, pool.candidates)[:5]
            expected += [float(by_id[cid] @ q.embedding) for cid in order]
        expected /= len(queries.queries)
        np.testing.assert_allclose(curve, expected, atol=1e-12)

    def test_cosine_by_rank_range_check(self):
        rng = np.random.default_rng(9)
        pool = RetrievalPool(make_candidates(rng, 5, 3), PoolSetting.GLOBAL)
        queries = make_query_set(rng, pool, 2, 3)
        with pytest.raises(KOutOfRangeError):
            cosine_by_rank(queries, pool, 6)


class TestReport:
    def test_report_consistent_with_metric_functions(self):
        rng = np.random.default_rng(10)
        pool = RetrievalPool(make_candidates(rng, 40, 5), PoolSetting.GLOBAL)
        queries = make_query_set(rng, pool, 15, 5, gt_per_query=2)
        report = build_report(queries, pool, k_values=[1, 5, 10])
        for k in (1, 5, 10):
            assert report.recall_at[k] == pytest.approx(recall_at_k(queries, pool, k))
        ranks, hist = rank_of_ground_truth(queries, pool)
        assert report.ranks == ranks
        assert report.rank_histogram == hist
        assert report.gt_cosines == cosine_to_ground_truth(queries, pool)

    def test_report_recall_monotone(self):
        rng = np.random.default_rng(12)
        pool = RetrievalPool(make_candidates(rng, 60, 6), PoolSetting.GLOBAL)
        queries = make_query_set(rng, pool, 20, 6)
        report = build_report(queries, pool, k_values=[1, 5, 10, 20, 50])
        values = [report.recall_at[k] for k in report.k_values]
        assert all(a <= b for a, b in zip(values, values[1:]))

    def test_rank_cap_records_both_conventions(self):
        emb = np.eye(3)
        cands = [
            Candidate(id=i, embedding=emb[i], modality=Modality.IMAGE, source_task="t")
            for i in range(3)
        ]
        pool = RetrievalPool(cands, PoolSetting.LOCAL)
        q0 = Query(id=0, embedding=emb[0], modality=Modality.TEXT)  # GT rank 1
        q1 = Query(id=1, embedding=emb[0], modality=Modality.TEXT)  # GT id 2 -> rank 3
        queries = QuerySet(queries=[q0, q1], ground_truth={0: {0}, 1: {2}})
        report = build_report(queries, pool, k_values=[1], rank_cap=2)
        assert report.ranks == [1, 3]            # raw ranks stay exact
        assert report.capped_ranks == [1, 2]     # clipped convention
        assert report.dropped_beyond_cap == 1    # dropped convention
        assert "rank_cap" in report.to_json_dict()

    def test_csv_one_row_per_query(self):
        rng = np.random.default_rng(13)
        pool = RetrievalPool(make_candidates(rng, 10, 4), PoolSetting.GLOBAL)
        queries = make_query_set(rng, pool, 5, 4)
        report = build_report(queries, pool, k_values=[1, 5])
        lines = report.to_csv().strip().split("\n")
        assert lines[0] == "query_id,best_gt_rank,gt_cosine,hit@1,hit@5"
        assert len(lines) == 6
        for line, rank in zip(lines[1:], report.ranks):
            cols = line.split(",")
            assert int(cols[1]) == rank
            assert cols[3] == str(int(rank <= 1))
            assert cols[4] == str(int(rank <= 5))

    def test_json_round_trip_stable(self):
        import json

        rng = np.random.default_rng(14)
        pool = RetrievalPool(make_candidates(rng, 8, 3), PoolSetting.GLOBAL)
        queries = make_query_set(rng, pool, 3, 3)
        report = build_report(queries, pool, k_values=[1, 2])
        assert report.to_json() == report.to_json()
        parsed = json.loads(report.to_json())
        assert parsed["recall_at"]["2"] == report.recall_at[2]


class TestBenchmarkScaleAnalog:
    def test_mixed_pool_at_benchmark_scale(self):
        # 250 queries against a 2900-candidate mixed pool: the shape of the
        # standard evaluation. Verifies the exhaustive path handles it and
        # stays consistent with the oracle on a sample of queries.
        rng = np.random.default_rng(999)
        banks = [
            make_candidates(rng, 1000, 8, Modality.IMAGE, "t1", id_offset=0),
            make_candidates(rng, 1000, 8, Modality.TEXT, "t2", id_offset=1000),
            make_candidates(rng, 900, 8, Modality.FUSED, "t3", id_offset=2000),
        ]
        pool = build_global_pool(banks)
        assert pool.size == 2900
        queries = make_query_set(rng, pool, 250, 8, gt_per_query=1)
        report = build_report(queries, pool, k_values=[1, 5, 10, 20, 50])
        assert len(report.ranks) == 250
        values = [report.recall_at[k] for k in report.k_values]
        assert all(a <= b for a, b in zip(values, values[1:]))
        for q, rank in list(zip(queries.queries, report.ranks))[:5]:
            order = oracle_ranking(q.embedding, pool.candidates)
            assert rank == min(order.index(g) + 1 for g in queries.ground_truth[q.id])
