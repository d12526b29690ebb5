import numpy as np
import pytest

from prefolio.efficient import (
    CandidatePool,
    alpha_distinct_set,
    blended_strategy,
    evaluate_strategies,
    inclusion_thresholds,
)
from prefolio.market import generate_price_series, realized_stats
from prefolio.preference import PreferenceModel, predict_more_distinct
from prefolio.simplex import Portfolio


def _random_portfolio(rng):
    w = rng.dirichlet(np.ones(5))
    w = np.maximum(w, 1e-9)
    return Portfolio(w / w.sum())


def _random_pool(rng, n):
    ref = _random_portfolio(rng)
    portfolios = [_random_portfolio(rng) for _ in range(n)]
    values = rng.normal(0, 1, n).tolist()
    return CandidatePool.from_candidates(portfolios, values, ref)


def _brute_force_members(pool, model, alpha):
    """Independent re-implementation straight from the inclusion rule."""
    ref = pool.reference.weights
    members = [0]
    for i in range(1, len(pool)):
        ok = True
        for j in range(i):
            p = predict_more_distinct(
                model, ref, pool.entries[i].portfolio.weights,
                ref, pool.entries[j].portfolio.weights,
            )
            if not p > alpha:
                ok = False
                break
        if ok:
            members.append(i)
    return tuple(members)


class TestAlphaDistinctSet:
    def test_singleton_pool(self, rng):
        pool = _random_pool(rng, 1)
        model = PreferenceModel(weights=rng.normal(0, 1, 5), lam=1e-3)
        eff = alpha_distinct_set(pool, model, 0.5)
        assert eff.members == (0,)

    def test_alpha_near_one_keeps_only_best(self, rng):
        pool = _random_pool(rng, 20)
        model = PreferenceModel(weights=rng.normal(0, 1, 5), lam=1e-3)
        eff = alpha_distinct_set(pool, model, 1.0 - 1e-12)
        assert eff.members == (0,)

    def test_matches_brute_force(self, rng):
        for trial in range(25):
            pool = _random_pool(rng, 10)
            model = PreferenceModel(weights=rng.normal(0, 3, 5), lam=1e-3)
            alpha = float(rng.uniform(0.05, 0.95))
            got = alpha_distinct_set(pool, model, alpha).members
            assert got == _brute_force_members(pool, model, alpha)

    def test_empty_pool_rejected(self, rng):
        pool = CandidatePool(entries=(), reference=_random_portfolio(rng))
        model = PreferenceModel(weights=np.ones(5), lam=1e-3)
        with pytest.raises(ValueError, match="empty"):
            alpha_distinct_set(pool, model, 0.5)

    def test_alpha_bounds(self, rng):
        pool = _random_pool(rng, 3)
        model = PreferenceModel(weights=np.ones(5), lam=1e-3)
        for bad in (0.0, 1.0, -0.1, 1.1):
            with pytest.raises(ValueError):
                alpha_distinct_set(pool, model, bad)

    def test_nesting(self, rng):
        grid = [0.5, 0.6, 0.7, 0.8, 0.9]
        for trial in range(25):
            pool = _random_pool(rng, 15)
            model = PreferenceModel(weights=rng.normal(0, 3, 5), lam=1e-3)
            sets = [set(alpha_distinct_set(pool, model, a).members) for a in grid]
            for low, high in zip(sets, sets[1:]):
                assert high <= low

    def test_deterministic(self, rng):
        pool = _random_pool(rng, 10)
        model = PreferenceModel(weights=rng.normal(0, 2, 5), lam=1e-3)
        a = alpha_distinct_set(pool, model, 0.6).members
        b = alpha_distinct_set(pool, model, 0.6).members
        assert a == b

    def test_efficient_only_rule_differs_when_it_should(self, rng):
        # under the members-only rule a candidate blocked by a skipped
        # predecessor can re-enter; under all-preceding it cannot
        found_difference = False
        for trial in range(200):
            pool = _random_pool(rng, 12)
            model = PreferenceModel(weights=rng.normal(0, 4, 5), lam=1e-3)
            a = alpha_distinct_set(pool, model, 0.6, rule="all-preceding").members
            b = alpha_distinct_set(pool, model, 0.6, rule="efficient-only").members
            assert set(a) <= set(b)  # relaxing comparisons can only admit more
            if a != b:
                found_difference = True
        assert found_difference

    def test_thresholds_reproduce_sets(self, rng):
        for trial in range(10):
            pool = _random_pool(rng, 12)
            model = PreferenceModel(weights=rng.normal(0, 3, 5), lam=1e-3)
            thr = inclusion_thresholds(pool, model)
            assert thr[0] == 1.0
            for alpha in (0.3, 0.5, 0.7, 0.9):
                expected = tuple(i for i in range(len(pool)) if i == 0 or thr[i] > alpha)
                assert alpha_distinct_set(pool, model, alpha).members == expected


class TestBlended:
    def test_blend_with_self_is_identity(self, rng):
        x = _random_portfolio(rng)
        out = blended_strategy(x, [x])
        np.testing.assert_allclose(out.weights, x.weights, atol=1e-15)

    def test_single_supplement_is_midpoint(self):
        eps = 0.01
        a = Portfolio(np.array([1 - 4 * eps, eps, eps, eps, eps]))
        b = Portfolio(np.array([eps, eps, eps, eps, 1 - 4 * eps]))
        out = blended_strategy(a, [b])
        np.testing.assert_allclose(out.weights, 0.5 * (a.weights + b.weights), atol=1e-15)

    def test_output_is_valid_portfolio(self, rng):
        for _ in range(50):
            x = _random_portfolio(rng)
            supplements = [_random_portfolio(rng) for _ in range(rng.integers(1, 6))]
            out = blended_strategy(x, supplements)
            assert abs(out.weights.sum() - 1.0) <= 1e-12
            assert np.all(out.weights > 0)

    def test_empty_supplements_rejected(self, rng):
        with pytest.raises(ValueError):
            blended_strategy(_random_portfolio(rng), [])


class TestPool:
    def test_sorted_with_stable_ties(self, rng):
        ports = [_random_portfolio(rng) for _ in range(4)]
        values = [1.0, 3.0, 3.0, 2.0]
        pool = CandidatePool.from_candidates(ports, values, _random_portfolio(rng))
        assert [e.value for e in pool.entries] == [3.0, 3.0, 2.0, 1.0]
        # the earlier-evaluated of the tied pair comes first
        assert pool.entries[0].portfolio is ports[1]
        assert pool.entries[1].portfolio is ports[2]

    def test_unsorted_entries_rejected(self, rng):
        from prefolio.efficient import PoolEntry

        ports = [_random_portfolio(rng) for _ in range(2)]
        with pytest.raises(ValueError, match="sorted"):
            CandidatePool(
                entries=(
                    PoolEntry(portfolio=ports[0], value=1.0),
                    PoolEntry(portfolio=ports[1], value=2.0),
                ),
                reference=ports[0],
            )


class TestEvaluateStrategies:
    def _setup(self, rng, n_pool=8):
        series = generate_price_series(days=120, seed=5, daily_vol=0.02, correlation="two-group")
        dates = [series.dates[i] for i in (20, 40, 60, 80, 100)]
        sessions = []
        for _ in dates:
            pool = _random_pool(rng, n_pool)
            model = PreferenceModel(weights=rng.normal(0, 2, 5), lam=1e-3)
            sessions.append((pool, model))
        return series, dates, sessions

    def test_blend_equal_to_reference_reduces_to_opt_only(self, rng):
        series, dates, sessions = self._setup(rng)
        # force every pool to a single candidate equal to the reference, so
        # blended == opt_only exactly
        degenerate = []
        for pool, model in sessions:
            ref = pool.reference
            degenerate.append(
                (CandidatePool.from_candidates([ref], [1.0], ref), model)
            )
        report = evaluate_strategies(series, dates, degenerate, alpha=0.5, random_draws=2)
        opt = report.row("opt_only")
        blended = report.row("blended")
        assert blended.mean == pytest.approx(opt.mean, abs=1e-15)
        assert blended.variance == pytest.approx(opt.variance, abs=1e-15)

    def test_report_matches_brute_force_recomputation(self, rng):
        series, dates, sessions = self._setup(rng)
        report = evaluate_strategies(series, dates, sessions, alpha=0.6, random_draws=3, random_seed=7)

        # independent recomputation of the blended row
        per_date = []
        for pool, model in sessions:
            members = _brute_force_members(pool, model, 0.6)
            supplement = np.mean(
                [pool.entries[i].portfolio.weights for i in members], axis=0
            )
            per_date.append(Portfolio(0.5 * (pool.reference.weights + supplement)))
        mean, var = realized_stats(series, dates, per_date, horizon=1)
        blended = report.row("blended")
        assert blended.mean == pytest.approx(mean, abs=1e-12)
        assert blended.variance == pytest.approx(var, abs=1e-12)

    def test_rows_and_csv(self, rng):
        series, dates, sessions = self._setup(rng)
        report = evaluate_strategies(series, dates, sessions, alpha=0.5, random_draws=4)
        names = [r.strategy for r in report.rows]
        assert names == ["opt_only", "blended", "random[0]", "random[1]", "random[2]", "random[3]"]
        csv = report.to_csv()
        assert csv.startswith("strategy,mean,variance\n")
        assert len(csv.strip().splitlines()) == 7

    def test_random_draws_seeded(self, rng):
        series, dates, sessions = self._setup(rng)
        a = evaluate_strategies(series, dates, sessions, alpha=0.5, random_seed=3)
        b = evaluate_strategies(series, dates, sessions, alpha=0.5, random_seed=3)
        assert a.to_json() == b.to_json()
