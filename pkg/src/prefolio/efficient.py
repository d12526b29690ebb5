"""Extraction of distinctly-efficient portfolios and blended strategies.

After the supplemental search there is a pool of evaluated portfolios,
sorted by objective value, plus the learned distinctness model.  A pool
member is alpha-distinctly efficient when the model says it is more
distinct from the reference than EVERY better-scoring candidate with
probability above alpha; the best-scoring member is always included.

Comparing against all preceding candidates (not just the ones already
admitted) is what makes the sets nest: raising alpha can only shrink the
set.  The admitted-members-only reading is available behind the
rule="efficient-only" flag for comparison, but it does not guarantee
nesting and is not the default.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .market import PriceSeries, realized_stats
from .preference import PreferenceModel, predict_more_distinct
from .simplex import Portfolio, SearchPoint

RULES = ("all-preceding", "efficient-only")


@dataclass(frozen=True, eq=False)
class PoolEntry:
    portfolio: Portfolio
    value: float
    point: SearchPoint | None = None


@dataclass(frozen=True, eq=False)
class CandidatePool:
    """Evaluated supplemental portfolios, best value first."""

    entries: tuple[PoolEntry, ...]
    reference: Portfolio
    reference_point: SearchPoint | None = None

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        values = [e.value for e in self.entries]
        if any(a < b for a, b in zip(values, values[1:])):
            raise ValueError("pool entries must be sorted by value, nonincreasing")

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def from_candidates(
        cls,
        portfolios: Sequence[Portfolio],
        values: Sequence[float],
        reference: Portfolio,
        points: Sequence[SearchPoint] | None = None,
        reference_point: SearchPoint | None = None,
    ) -> "CandidatePool":
        """Sort candidates by value (ties keep evaluation order)."""
        if len(portfolios) != len(values):
            raise ValueError("one value per portfolio required")
        order = np.argsort(-np.asarray(values, dtype=float), kind="stable")
        entries = tuple(
            PoolEntry(
                portfolio=portfolios[i],
                value=float(values[i]),
                point=None if points is None else points[i],
            )
            for i in order
        )
        return cls(entries=entries, reference=reference, reference_point=reference_point)

    def feature_vector(self, i: int, feature_space: str) -> np.ndarray:
        return _entry_vector(self.entries[i], feature_space)

    def reference_vector(self, feature_space: str) -> np.ndarray:
        if feature_space == "simplex":
            return self.reference.weights
        if feature_space == "log":
            if self.reference_point is None:
                raise ValueError("log feature space needs the reference search point")
            return self.reference_point.log_coords
        raise ValueError(f"unknown feature space {feature_space!r}")


def _entry_vector(entry: PoolEntry, feature_space: str) -> np.ndarray:
    if feature_space == "simplex":
        return entry.portfolio.weights
    if feature_space == "log":
        if entry.point is None:
            raise ValueError("log feature space needs per-entry search points")
        return entry.point.log_coords
    raise ValueError(f"unknown feature space {feature_space!r}")


@dataclass(frozen=True, eq=False)
class EfficientSet:
    alpha: float
    members: tuple[int, ...]  # pool indices, best value first

    def __post_init__(self):
        if not self.members or self.members[0] != 0:
            raise ValueError("the best-valued candidate is always a member")
        object.__setattr__(self, "members", tuple(self.members))


def alpha_distinct_set(
    pool: CandidatePool,
    model: PreferenceModel,
    alpha: float,
    rule: str = "all-preceding",
) -> EfficientSet:
    """Indices of the alpha-distinctly-efficient pool members."""
    if len(pool) == 0:
        raise ValueError("pool is empty")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}, expected one of {RULES}")

    space = model.feature_space
    ref = pool.reference_vector(space)
    vecs = [pool.feature_vector(i, space) for i in range(len(pool))]

    members = [0]
    for i in range(1, len(pool)):
        against = range(i) if rule == "all-preceding" else list(members)
        if all(
            predict_more_distinct(model, ref, vecs[i], ref, vecs[j]) > alpha
            for j in against
        ):
            members.append(i)
    return EfficientSet(alpha=alpha, members=tuple(members))


def inclusion_thresholds(pool: CandidatePool, model: PreferenceModel) -> np.ndarray:
    """Largest alpha at which each candidate is still efficient.

    Under the all-preceding rule, candidate i belongs to the alpha-set iff
    alpha < min over j < i of P(more distinct than j); the best candidate
    gets threshold 1.  members(alpha) == {i : thresholds[i] > alpha}.
    """
    space = model.feature_space
    ref = pool.reference_vector(space)
    vecs = [pool.feature_vector(i, space) for i in range(len(pool))]
    out = np.empty(len(pool))
    for i in range(len(pool)):
        if i == 0:
            out[i] = 1.0
            continue
        out[i] = min(
            predict_more_distinct(model, ref, vecs[i], ref, vecs[j]) for j in range(i)
        )
    return out


def blended_strategy(x_opt: Portfolio, efficient: Sequence[Portfolio]) -> Portfolio:
    """Half the optimum plus half the equal mix of the supplements.

    A convex combination of simplex points, so the result is a valid
    portfolio by construction.
    """
    if len(efficient) == 0:
        raise ValueError("need at least one supplemental portfolio")
    supplement = np.mean([p.weights for p in efficient], axis=0)
    return Portfolio(0.5 * (x_opt.weights + supplement))


# ---------------------------------------------------------------------------
# strategy evaluation over forward trading days


@dataclass(frozen=True)
class StrategyRow:
    strategy: str
    mean: float
    variance: float


@dataclass(frozen=True)
class StrategyReport:
    rows: tuple[StrategyRow, ...]

    def row(self, name: str) -> StrategyRow:
        for r in self.rows:
            if r.strategy == name:
                return r
        raise KeyError(name)

    def to_csv(self) -> str:
        lines = ["strategy,mean,variance"]
        lines += [f"{r.strategy},{r.mean!r},{r.variance!r}" for r in self.rows]
        return "\n".join(lines) + "\n"

    def to_json(self) -> list[dict]:
        return [
            {"strategy": r.strategy, "mean": r.mean, "variance": r.variance}
            for r in self.rows
        ]


def _blend_for_date(pool: CandidatePool, model: PreferenceModel | None, alpha: float, rule: str):
    """Efficient members and blended portfolio for one session's pool."""
    if len(pool) == 0 or model is None:
        return (), pool.reference
    eff = alpha_distinct_set(pool, model, alpha, rule=rule)
    portfolios = [pool.entries[i].portfolio for i in eff.members]
    return eff.members, blended_strategy(pool.reference, portfolios)


def evaluate_strategies(
    series: PriceSeries,
    trade_dates: Sequence,
    sessions: Sequence[tuple[CandidatePool, PreferenceModel | None]],
    alpha: float,
    horizon: int = 1,
    rule: str = "all-preceding",
    random_draws: int = 8,
    random_k: int | None = None,
    random_seed: int = 0,
) -> StrategyReport:
    """Realized mean/variance of the optimum-only, blended, and random-
    supplement strategies over the given trade dates.

    Each random draw replaces the efficient supplements with portfolios
    sampled uniformly without replacement from the pool, sized to match
    the efficient set unless random_k is given.
    """
    if len(sessions) != len(trade_dates):
        raise ValueError("one session per trade date required")

    opt_per_date = [pool.reference for pool, _ in sessions]
    blended_per_date = []
    eff_sizes = []
    for pool, model in sessions:
        members, blended = _blend_for_date(pool, model, alpha, rule)
        blended_per_date.append(blended)
        eff_sizes.append(max(len(members), 1))

    rows = [
        StrategyRow("opt_only", *realized_stats(series, trade_dates, opt_per_date, horizon)),
        StrategyRow("blended", *realized_stats(series, trade_dates, blended_per_date, horizon)),
    ]

    rng = np.random.default_rng(random_seed)
    for draw in range(random_draws):
        per_date = []
        for (pool, _), k in zip(sessions, eff_sizes):
            if len(pool) == 0:
                per_date.append(pool.reference)
                continue
            size = min(random_k if random_k is not None else k, len(pool))
            idx = rng.choice(len(pool), size=size, replace=False)
            per_date.append(
                blended_strategy(pool.reference, [pool.entries[i].portfolio for i in idx])
            )
        rows.append(
            StrategyRow(f"random[{draw}]", *realized_stats(series, trade_dates, per_date, horizon))
        )
    return StrategyReport(rows=tuple(rows))
