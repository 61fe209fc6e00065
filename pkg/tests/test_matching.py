import statistics

import numpy as np
import pytest

from windcompare.matching import (
    MatchSpec,
    match_one_way,
    match_two_way,
    matching_diagnostics,
    verify_threshold_certificate,
)

from conftest import make_dataset, random_weather


def oracle_one_way(base_rows, cand_rows, varpi):
    """Plain-Python re-implementation of the greedy hierarchical matching.

    base_rows / cand_rows are lists of per-covariate tuples. Returns the
    set of (baseline index, candidate index) pairs.
    """
    p = len(base_rows[0])
    sigmas = [statistics.stdev([row[l] for row in cand_rows]) for l in range(p)]
    available = set(range(len(cand_rows)))
    pairs = set()
    for j, brow in enumerate(base_rows):
        group = []
        for i in sorted(available):
            crow = cand_rows[i]
            if all(abs(crow[l] - brow[l]) < varpi * sigmas[l] for l in range(p)):
                dist = sum(((crow[l] - brow[l]) / sigmas[l]) ** 2 for l in range(p))
                group.append((dist, i))
        if group:
            _, best = min(group)
            pairs.add((j, best))
            available.discard(best)
    return pairs


class TestMatchSpec:
    def test_rejects_bad_varpi(self):
        with pytest.raises(ValueError, match="varpi"):
            MatchSpec(("W",), varpi=0.0)

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError, match="duplicates"):
            MatchSpec(("W", "W"))

    def test_rejects_empty_order(self):
        with pytest.raises(ValueError, match="empty"):
            MatchSpec(())


class TestMatchOneWay:
    def test_identity_datasets_match_fully(self, rng):
        ds = make_dataset(**random_weather(rng, 30))
        result = match_one_way(ds, ds, MatchSpec(("W", "T")))
        assert result.pairs == [(j, j) for j in range(30)]
        assert result.matched_1.n == 30

    def test_single_candidate_within_threshold(self):
        base = make_dataset(W=[5.0])
        cand = make_dataset(W=[5.01, 9.0])
        # sample sd of {5.01, 9} is 2.8214; threshold 0.2 * sd = 0.5643
        assert statistics.stdev([5.01, 9.0]) == pytest.approx(2.82, abs=0.005)
        result = match_one_way(base, cand, MatchSpec(("W",)))
        assert result.pairs == [(0, 0)]

    def test_no_candidate_within_threshold(self):
        base = make_dataset(W=[5.0])
        cand = make_dataset(W=[9.0, 10.0])
        result = match_one_way(base, cand, MatchSpec(("W",)))
        assert result.pairs == []
        assert result.matched_1.n == 0
        assert result.matched_2.n == 0

    def test_agrees_with_bruteforce_oracle(self, rng):
        for trial in range(8):
            nb, nc = int(rng.integers(3, 12)), int(rng.integers(3, 12))
            base = make_dataset(W=rng.uniform(4, 12, nb), T=rng.normal(15, 4, nb))
            cand = make_dataset(W=rng.uniform(4, 12, nc), T=rng.normal(15, 4, nc))
            result = match_one_way(base, cand, MatchSpec(("W", "T"), varpi=0.5))
            base_rows = list(zip(base.columns["W"], base.columns["T"]))
            cand_rows = list(zip(cand.columns["W"], cand.columns["T"]))
            assert set(result.pairs) == oracle_one_way(base_rows, cand_rows, 0.5)

    def test_one_to_one_consumption(self, rng):
        base = make_dataset(**random_weather(rng, 80))
        cand = make_dataset(**random_weather(rng, 50))
        result = match_one_way(base, cand, MatchSpec(("W", "T"), varpi=1.0))
        used = [i for _, i in result.pairs]
        assert len(used) == len(set(used))

    def test_zero_spread_warns(self):
        base = make_dataset(W=[5.0, 6.0])
        cand = make_dataset(W=[5.0, 5.0, 5.0])
        with pytest.warns(RuntimeWarning, match="exact match"):
            result = match_one_way(base, cand, MatchSpec(("W",)))
        assert result.pairs == [(0, 0)]  # exact hit only

    def test_monotone_in_varpi(self, rng):
        for trial in range(6):
            base = make_dataset(**random_weather(rng, 60))
            cand = make_dataset(**random_weather(rng, 60, w_scale=8.6))
            counts = [
                len(match_one_way(base, cand, MatchSpec(("W", "T", "TI"), varpi=v)).pairs)
                for v in (0.05, 0.1, 0.2, 0.4, 0.8)
            ]
            assert counts == sorted(counts)

    def test_empty_candidate_rejected(self, rng):
        base = make_dataset(W=[5.0])
        with pytest.raises(ValueError, match="empty"):
            match_one_way(base, base.subset([]), MatchSpec(("W",)))

    def test_circular_covariate_wraps(self):
        base = make_dataset(W=[8.0, 8.1], D=[359.0, 180.0])
        cand = make_dataset(W=[8.0, 8.05, 8.1], D=[1.0, 185.0, 90.0])
        result = match_one_way(base, cand, MatchSpec(("D",), varpi=0.2))
        # 359 vs 1 differ by 2 degrees on the circle, far under the threshold
        assert (0, 0) in result.pairs


class TestMatchTwoWay:
    def test_identical_inputs(self, rng):
        ds = make_dataset(**random_weather(rng, 25))
        result = match_two_way(ds, ds, MatchSpec(("W", "T")))
        assert result.matched_1.n == 25
        assert result.matched_2.n == 25

    def test_symmetry_under_swap(self, rng):
        spec = MatchSpec(("W", "T"), varpi=0.3)
        for trial in range(10):
            d1 = make_dataset(**random_weather(rng, 40))
            d2 = make_dataset(turbine_id="T02", **random_weather(rng, 35, w_scale=9.0))
            r12 = match_two_way(d1, d2, spec)
            r21 = match_two_way(d2, d1, spec)
            assert (r12.matched_1.timestamps == r21.matched_2.timestamps).all()
            assert (r12.matched_2.timestamps == r21.matched_1.timestamps).all()

    def test_union_equals_bruteforce_union(self, rng):
        d1 = make_dataset(W=rng.uniform(4, 12, 5), T=rng.normal(15, 4, 5))
        d2 = make_dataset(W=rng.uniform(4, 12, 5), T=rng.normal(15, 4, 5))
        rows1 = list(zip(d1.columns["W"], d1.columns["T"]))
        rows2 = list(zip(d2.columns["W"], d2.columns["T"]))
        varpi = 0.6
        from_d2_baseline = oracle_one_way(rows2, rows1, varpi)
        from_d1_baseline = oracle_one_way(rows1, rows2, varpi)
        want_1 = {i for _, i in from_d2_baseline} | {j for j, _ in from_d1_baseline}
        want_2 = {j for j, _ in from_d2_baseline} | {i for _, i in from_d1_baseline}
        result = match_two_way(d1, d2, MatchSpec(("W", "T"), varpi=varpi))
        got_1 = {list(d1.timestamps).index(t) for t in result.matched_1.timestamps}
        got_2 = {list(d2.timestamps).index(t) for t in result.matched_2.timestamps}
        assert got_1 == want_1
        assert got_2 == want_2

    def test_certificate_holds(self, rng):
        for trial in range(5):
            d1 = make_dataset(**random_weather(rng, 50))
            d2 = make_dataset(turbine_id="T02", **random_weather(rng, 45, w_scale=8.8))
            result = match_two_way(d1, d2, MatchSpec(("W", "T", "TI"), varpi=0.25))
            verify_threshold_certificate(result)


class TestDiagnostics:
    def test_identical_inputs_zero_ks_after(self, rng):
        ds = make_dataset(**random_weather(rng, 40))
        result = match_two_way(ds, ds, MatchSpec(("W", "T")))
        diag = matching_diagnostics(ds, ds, result)
        assert all(v == 0.0 for v in diag.ks_after.values())
        assert diag.retention_1 == 1.0

    def test_shifted_distributions_improve(self, rng):
        cols1 = random_weather(rng, 400)
        cols2 = random_weather(rng, 400)
        cols2["W"] = np.clip(cols2["W"] + 1.5, 0.0, None)  # shifted wind regime
        d1 = make_dataset(**cols1)
        d2 = make_dataset(turbine_id="T02", **cols2)
        result = match_two_way(d1, d2, MatchSpec(("W", "T")))
        diag = matching_diagnostics(d1, d2, result)
        assert diag.ks_after["W"] < diag.ks_before["W"]
        assert 0.0 <= diag.retention_1 <= 1.0
        assert 0.0 <= diag.retention_2 <= 1.0
