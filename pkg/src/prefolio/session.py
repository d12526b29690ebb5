"""Two-phase optimization session: a resumable state machine.

Phase 1 is plain Bayesian optimization of the backtested Sharpe ratio:
a Latin-hypercube design followed by sequential EI maximization, ending
with the incumbent best as the reference optimum.  Phase 2 keeps
optimizing, but proposes constant-liar batches of m points, asks for a
distinctness ranking of each batch against the reference, evaluates only
the candidate ranked most distinct, and refits the preference model after
every answer.

All randomness flows from one seeded generator that is part of the
persisted state, so a session serialized at any transition resumes to a
bit-identical trajectory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Callable

import numpy as np

from . import acquisition, gp, market, preference
from .efficient import CandidatePool, alpha_distinct_set, blended_strategy, inclusion_thresholds
from .oracle import Deferred, DistinctnessOracle, answer_ranking
from .simplex import LOG_LOWER, LOG_UPPER, SEARCH_DIM, Portfolio, SearchPoint, to_simplex

SCHEMA_VERSION = 1

PHASES = ("phase1", "phase2", "done")


class PhaseError(RuntimeError):
    """Operation not valid in the session's current phase."""


class PendingQueryError(RuntimeError):
    """A ranking query is already awaiting an answer."""


class StaleQueryError(ValueError):
    """The response does not match the pending query."""


class InvalidRankingError(ValueError):
    """The response order is not a valid permutation."""


class ConfigError(ValueError):
    """The session configuration fails validation."""


def canonical_json(obj) -> str:
    """Stable serialization: sorted keys, minimal separators.

    Used for every persisted or emitted document so identical runs
    produce byte-identical files.
    """
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class DataSpec:
    """Where prices come from: a CSV file or the seeded generator."""

    kind: str  # "csv" | "synthetic"
    path: str | None = None
    assets: tuple[str, ...] = market.DEFAULT_ASSETS
    days: int = 260
    start: date = date(2016, 1, 4)
    seed: int = 0
    correlation: str | tuple = "identity"
    drift: float | tuple = 0.0
    daily_vol: float | tuple = 0.01

    def load(self) -> market.PriceSeries:
        if self.kind == "csv":
            if not self.path:
                raise ConfigError("csv data spec requires a path")
            p = Path(self.path)
            if not p.exists():
                raise FileNotFoundError(f"data file not found: {self.path}")
            return market.load_price_series(p.read_text(encoding="utf-8"))
        if self.kind == "synthetic":
            corr = self.correlation
            if not isinstance(corr, str):
                corr = np.asarray(corr, dtype=float)
            return market.generate_price_series(
                assets=self.assets, days=self.days, start=self.start, seed=self.seed,
                correlation=corr, drift=self.drift, daily_vol=self.daily_vol,
            )
        raise ConfigError(f"unknown data kind {self.kind!r}")

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "csv":
            out["path"] = self.path
        else:
            out.update(
                assets=list(self.assets), days=self.days, start=self.start.isoformat(),
                seed=self.seed, drift=_num_or_list(self.drift), daily_vol=_num_or_list(self.daily_vol),
                correlation=self.correlation if isinstance(self.correlation, str)
                else [list(row) for row in np.asarray(self.correlation).tolist()],
            )
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "DataSpec":
        kind = obj.get("kind")
        if kind == "csv":
            return cls(kind="csv", path=obj.get("path"))
        if kind == "synthetic":
            corr = obj.get("correlation", "identity")
            if not isinstance(corr, str):
                corr = tuple(tuple(row) for row in corr)
            return cls(
                kind="synthetic",
                assets=tuple(obj.get("assets", market.DEFAULT_ASSETS)),
                days=obj.get("days", 260),
                start=date.fromisoformat(obj.get("start", "2016-01-04")),
                seed=obj.get("seed", 0),
                correlation=corr,
                drift=_tuple_or_num(obj.get("drift", 0.0)),
                daily_vol=_tuple_or_num(obj.get("daily_vol", 0.01)),
            )
        raise ConfigError(f"objective.data.kind must be 'csv' or 'synthetic', got {kind!r}")


def _num_or_list(v):
    return list(v) if isinstance(v, (tuple, list)) else v


def _tuple_or_num(v):
    return tuple(v) if isinstance(v, (tuple, list)) else v


@dataclass(frozen=True)
class ObjectiveSpec:
    data: DataSpec
    anchor: date
    lookback: int = market.DEFAULT_LOOKBACK

    def to_json(self) -> dict:
        return {"data": self.data.to_json(), "anchor": self.anchor.isoformat(), "lookback": self.lookback}

    @classmethod
    def from_json(cls, obj: dict) -> "ObjectiveSpec":
        try:
            anchor = date.fromisoformat(obj["anchor"])
        except (KeyError, ValueError) as e:
            raise ConfigError(f"objective.anchor must be an ISO date: {e}") from None
        return cls(
            data=DataSpec.from_json(obj.get("data", {})),
            anchor=anchor,
            lookback=obj.get("lookback", market.DEFAULT_LOOKBACK),
        )


@dataclass(frozen=True)
class SessionConfig:
    objective: ObjectiveSpec
    oracle: DistinctnessOracle | None = None
    n_phase1: int = 60
    n_phase2: int = 60
    m: int = 5
    init_design: int = 8
    alpha_default: float = 0.7
    seed: int = 0
    feature_space: str = "simplex"
    preference_lambda: float = preference.DEFAULT_LAMBDA
    init_queries: int = 0
    gp_restarts: int = gp.N_RESTARTS
    efficient_rule: str = "all-preceding"

    def validate(self) -> None:
        if self.m < 2:
            raise ConfigError(f"m must be >= 2, got {self.m}")
        if self.init_design < 2:
            raise ConfigError(f"init_design must be >= 2, got {self.init_design}")
        if self.n_phase1 < self.init_design:
            raise ConfigError(
                f"n_phase1 ({self.n_phase1}) must be >= init_design ({self.init_design})"
            )
        if self.n_phase2 < 0:
            raise ConfigError("n_phase2 must be >= 0")
        if not 0.0 < self.alpha_default < 1.0:
            raise ConfigError(f"alpha_default must be in (0, 1), got {self.alpha_default}")
        if self.feature_space not in ("simplex", "log"):
            raise ConfigError(f"feature_space must be 'simplex' or 'log', got {self.feature_space!r}")
        if self.preference_lambda <= 0:
            raise ConfigError("preference_lambda must be > 0")
        if self.init_queries < 0:
            raise ConfigError("init_queries must be >= 0")
        if self.gp_restarts < 1:
            raise ConfigError("gp_restarts must be >= 1")
        if self.efficient_rule not in ("all-preceding", "efficient-only"):
            raise ConfigError(f"unknown efficient_rule {self.efficient_rule!r}")
        if self.lookback < 1:
            raise ConfigError("lookback must be >= 1")

    @property
    def lookback(self) -> int:
        return self.objective.lookback

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "objective": self.objective.to_json(),
            "oracle": None if self.oracle is None else self.oracle.to_json(),
            "n_phase1": self.n_phase1,
            "n_phase2": self.n_phase2,
            "m": self.m,
            "init_design": self.init_design,
            "alpha_default": self.alpha_default,
            "seed": self.seed,
            "feature_space": self.feature_space,
            "preference_lambda": self.preference_lambda,
            "init_queries": self.init_queries,
            "gp_restarts": self.gp_restarts,
            "efficient_rule": self.efficient_rule,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SessionConfig":
        if "objective" not in obj:
            raise ConfigError("config requires an 'objective' section")
        oracle = obj.get("oracle")
        try:
            oracle = None if oracle is None else DistinctnessOracle.from_json(oracle)
        except ValueError as e:
            raise ConfigError(f"oracle: {e}") from None
        cfg = cls(
            objective=ObjectiveSpec.from_json(obj["objective"]),
            oracle=oracle,
            n_phase1=obj.get("n_phase1", 60),
            n_phase2=obj.get("n_phase2", 60),
            m=obj.get("m", 5),
            init_design=obj.get("init_design", 8),
            alpha_default=obj.get("alpha_default", 0.7),
            seed=obj.get("seed", 0),
            feature_space=obj.get("feature_space", "simplex"),
            preference_lambda=obj.get("preference_lambda", preference.DEFAULT_LAMBDA),
            init_queries=obj.get("init_queries", 0),
            gp_restarts=obj.get("gp_restarts", gp.N_RESTARTS),
            efficient_rule=obj.get("efficient_rule", "all-preceding"),
        )
        cfg.validate()
        return cfg


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True, eq=False)
class SessionResult:
    """Everything the final selection step needs, at one alpha."""

    config: SessionConfig
    assets: tuple[str, ...]
    x_opt: SearchPoint
    x_opt_portfolio: Portfolio
    best_value: float
    pool: CandidatePool
    preference_model: preference.PreferenceModel | None
    alpha: float
    efficient_members: tuple[int, ...]
    efficient_portfolios: tuple[Portfolio, ...]
    blended: Portfolio
    thresholds: tuple[float, ...] | None
    n_observations: int
    n_rankings: int

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "config": self.config.to_json(),
            "assets": list(self.assets),
            "x_opt": {
                "log_coords": self.x_opt.log_coords.tolist(),
                "portfolio": self.x_opt_portfolio.to_json(),
                "value": self.best_value,
            },
            "candidates": [
                {
                    "log_coords": None if e.point is None else e.point.log_coords.tolist(),
                    "portfolio": e.portfolio.to_json(),
                    "value": e.value,
                }
                for e in self.pool.entries
            ],
            "alpha": self.alpha,
            "efficient": list(self.efficient_members),
            "efficient_portfolios": [p.to_json() for p in self.efficient_portfolios],
            "blended": self.blended.to_json(),
            "thresholds": None if self.thresholds is None else list(self.thresholds),
            "preference_model": (
                None if self.preference_model is None else self.preference_model.to_json()
            ),
            "n_observations": self.n_observations,
            "n_rankings": self.n_rankings,
        }


# ---------------------------------------------------------------------------
# the session itself


class Session:
    """Single-writer state machine for one optimization run.

    Mutating methods (step_phase1, propose_query, submit_ranking) require
    exclusive access; snapshots via to_json_dict are cheap and read-only.
    """

    def __init__(self, config: SessionConfig, objective: Callable[[SearchPoint], float] | None = None):
        config.validate()
        self.config = config
        if objective is not None:
            self._objective = objective
            self.assets: tuple[str, ...] = tuple(
                f"A{i + 1}" for i in range(SEARCH_DIM + 1)
            )
        else:
            series = config.objective.data.load()
            window = market.return_window(series, config.objective.anchor, config.lookback)
            if window.n_assets != SEARCH_DIM + 1:
                raise ConfigError(
                    f"objective data has {window.n_assets} assets, the search box "
                    f"parameterizes {SEARCH_DIM + 1}"
                )
            self._objective = lambda pt: market.sharpe_objective(window, to_simplex(pt))
            self.assets = tuple(series.assets)
        self._custom_objective = objective is not None

        self.rng = np.random.default_rng(config.seed)
        self.phase = "phase1"
        self.observations: list[gp.Observation] = []
        self.x_opt: SearchPoint | None = None
        self.best_value: float | None = None
        self.pending_query: preference.RankingQuery | None = None
        self.rankings: list[tuple[preference.RankingQuery, preference.RankingResponse]] = []
        self.preference_model: preference.PreferenceModel | None = None
        self.n_phase1_done = 0
        self.n_phase2_done = 0
        self.init_queries_done = 0
        self.query_seq = 0
        self._gp_warm: dict | None = None

    # -- construction ------------------------------------------------------

    @classmethod
    def start(cls, config: SessionConfig, objective=None) -> "Session":
        """New session with the initial design already evaluated."""
        session = cls(config, objective=objective)
        design = acquisition.latin_hypercube(session.rng, config.init_design, SEARCH_DIM)
        for row in design:
            pt = SearchPoint(row)
            session.observations.append(gp.Observation(pt, session._objective(pt)))
        return session

    # -- phase 1 -----------------------------------------------------------

    def _fit_gp(self) -> gp.GPModel:
        model = gp.fit(
            self.observations,
            rng=self.rng,
            n_restarts=self.config.gp_restarts,
            warm_start=self._gp_warm,
        )
        self._gp_warm = model.hyperparameters()
        return model

    def step_phase1(self) -> None:
        """Evaluate one EI-maximizing point; close the phase on budget end."""
        if self.phase != "phase1":
            raise PhaseError(f"step_phase1 requires phase1, session is in {self.phase}")
        if self.n_phase1_done >= self.config.n_phase1:
            raise PhaseError("phase over: phase-1 budget exhausted")
        model = self._fit_gp()
        res = acquisition.maximize_acquisition(
            model, exclude=[o.point for o in self.observations], rng=self.rng
        )
        self.observations.append(gp.Observation(res.point, self._objective(res.point)))
        self.n_phase1_done += 1
        if self.n_phase1_done == self.config.n_phase1:
            self._finish_phase1()

    def _finish_phase1(self) -> None:
        best = max(range(len(self.observations)), key=lambda i: self.observations[i].value)
        self.x_opt = self.observations[best].point
        self.best_value = self.observations[best].value
        self.phase = "done" if self.config.n_phase2 == 0 else "phase2"

    def run_phase1(self) -> None:
        while self.phase == "phase1":
            self.step_phase1()

    # -- phase 2 -----------------------------------------------------------

    @property
    def x_opt_portfolio(self) -> Portfolio:
        if self.x_opt is None:
            raise PhaseError("x_opt is not set until phase 1 completes")
        return to_simplex(self.x_opt)

    def propose_query(self) -> preference.RankingQuery:
        """Next ranking query: classifier warm-up first, then CL batches."""
        if self.phase != "phase2":
            raise PhaseError(f"propose_query requires phase2, session is in {self.phase}")
        if self.pending_query is not None:
            raise PendingQueryError("awaiting ranking for the current query")

        warmup = self.init_queries_done < self.config.init_queries
        if not warmup and self.n_phase2_done >= self.config.n_phase2:
            raise PhaseError("phase over: phase-2 budget exhausted")

        if warmup:
            pts = [
                SearchPoint(row)
                for row in self.rng.uniform(LOG_LOWER, LOG_UPPER, size=(self.config.m, SEARCH_DIM))
            ]
            kind = "init"
        else:
            model = self._fit_gp()
            pts = acquisition.constant_liar_batch(
                model, self.config.m, rng=self.rng,
                exclude=[o.point for o in self.observations],
            )
            kind = "phase2"

        query = preference.RankingQuery(
            query_id=f"q-{self.query_seq:04d}",
            reference=self.x_opt_portfolio,
            candidates=tuple(to_simplex(p) for p in pts),
            kind=kind,
            candidate_points=tuple(pts),
        )
        self.query_seq += 1
        self.pending_query = query
        return query

    def submit_ranking(self, response: preference.RankingResponse) -> None:
        """Apply an answer: refit the classifier, evaluate the most distinct."""
        if self.pending_query is None:
            raise StaleQueryError("no ranking query is pending")
        query = self.pending_query
        if response.query_id != query.query_id:
            raise StaleQueryError(
                f"response targets {response.query_id!r}, pending query is {query.query_id!r}"
            )
        try:
            response.validate_for(query)
        except ValueError as e:
            raise InvalidRankingError(str(e)) from None

        self.rankings.append((query, response))
        self._refit_preference()

        if query.kind == "phase2":
            most_distinct = response.order[-1]
            pt = query.candidate_points[most_distinct]
            self.observations.append(gp.Observation(pt, self._objective(pt)))
            self.n_phase2_done += 1
            if self.n_phase2_done == self.config.n_phase2:
                self.phase = "done"
        else:
            self.init_queries_done += 1
        self.pending_query = None

    def _query_vectors(self, query: preference.RankingQuery):
        if self.config.feature_space == "simplex":
            ref = query.reference.weights
            cands = [c.weights for c in query.candidates]
        else:
            ref = self.x_opt.log_coords
            cands = [p.log_coords for p in query.candidate_points]
        return ref, cands

    def _refit_preference(self) -> None:
        samples: list[preference.PairwiseSample] = []
        for query, response in self.rankings:
            ref, cands = self._query_vectors(query)
            ranked = [cands[i] for i in response.order]
            samples.extend(preference.ranking_to_pairs(ref, ranked))
        self.preference_model = preference.fit_preference(
            samples, lam=self.config.preference_lambda,
            feature_space=self.config.feature_space,
        )

    # -- results -----------------------------------------------------------

    @property
    def is_done(self) -> bool:
        return self.phase == "done"

    def phase2_observations(self) -> list[gp.Observation]:
        base = self.config.init_design + self.n_phase1_done
        return self.observations[base:]

    def candidate_pool(self) -> CandidatePool:
        obs = self.phase2_observations()
        return CandidatePool.from_candidates(
            portfolios=[to_simplex(o.point) for o in obs],
            values=[o.value for o in obs],
            points=[o.point for o in obs],
            reference=self.x_opt_portfolio,
            reference_point=self.x_opt,
        )

    def result(self, alpha: float | None = None) -> SessionResult:
        """Efficient set, blend, and transcript summary at the given alpha.

        Valid once x_opt exists; mid-phase-2 calls give a partial snapshot
        over the candidates evaluated so far.
        """
        if self.x_opt is None:
            raise PhaseError("results are not available before phase 1 completes")
        alpha = self.config.alpha_default if alpha is None else float(alpha)
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {alpha}")
        pool = self.candidate_pool()

        if len(pool) == 0 or self.preference_model is None:
            # degenerate budget: the supplemental search produced nothing,
            # so the era best (x_opt itself) is the whole efficient set
            members: tuple[int, ...] = ()
            efficient = (self.x_opt_portfolio,)
            thresholds = None
        else:
            eff = alpha_distinct_set(pool, self.preference_model, alpha, rule=self.config.efficient_rule)
            members = eff.members
            efficient = tuple(pool.entries[i].portfolio for i in members)
            thresholds = (
                tuple(float(t) for t in inclusion_thresholds(pool, self.preference_model))
                if self.config.efficient_rule == "all-preceding" else None
            )
        blended = blended_strategy(self.x_opt_portfolio, list(efficient))
        return SessionResult(
            config=self.config,
            assets=self.assets,
            x_opt=self.x_opt,
            x_opt_portfolio=self.x_opt_portfolio,
            best_value=self.best_value,
            pool=pool,
            preference_model=self.preference_model,
            alpha=alpha,
            efficient_members=members,
            efficient_portfolios=efficient,
            blended=blended,
            thresholds=thresholds,
            n_observations=len(self.observations),
            n_rankings=len(self.rankings),
        )

    # -- persistence ---------------------------------------------------------

    def to_json_dict(self) -> dict:
        """Complete state snapshot, including the generator state."""
        if self._custom_objective:
            raise ValueError("sessions with injected objectives cannot be serialized")
        return {
            "schema": SCHEMA_VERSION,
            "config": self.config.to_json(),
            "assets": list(self.assets),
            "phase": self.phase,
            "observations": [o.to_json() for o in self.observations],
            "x_opt": None if self.x_opt is None else self.x_opt.log_coords.tolist(),
            "best_value": self.best_value,
            "pending_query": None if self.pending_query is None else self.pending_query.to_json(),
            "rankings": [
                {"query": q.to_json(), "order": list(r.order)} for q, r in self.rankings
            ],
            "preference_model": (
                None if self.preference_model is None else self.preference_model.to_json()
            ),
            "n_phase1_done": self.n_phase1_done,
            "n_phase2_done": self.n_phase2_done,
            "init_queries_done": self.init_queries_done,
            "query_seq": self.query_seq,
            "gp_warm": self._gp_warm,
            "rng_state": self.rng.bit_generator.state,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "Session":
        if obj.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported state schema {obj.get('schema')!r}")
        config = SessionConfig.from_json(obj["config"])
        session = cls(config)
        session.phase = obj["phase"]
        session.observations = [gp.Observation.from_json(o) for o in obj["observations"]]
        session.x_opt = (
            None if obj["x_opt"] is None else SearchPoint(np.asarray(obj["x_opt"], dtype=float))
        )
        session.best_value = obj["best_value"]
        session.pending_query = (
            None if obj["pending_query"] is None
            else preference.RankingQuery.from_json(obj["pending_query"])
        )
        session.rankings = [
            (
                preference.RankingQuery.from_json(r["query"]),
                preference.RankingResponse.from_json(
                    {"query_id": r["query"]["query_id"], "order": r["order"]}
                ),
            )
            for r in obj["rankings"]
        ]
        session.preference_model = (
            None if obj["preference_model"] is None
            else preference.PreferenceModel.from_json(obj["preference_model"])
        )
        session.n_phase1_done = obj["n_phase1_done"]
        session.n_phase2_done = obj["n_phase2_done"]
        session.init_queries_done = obj["init_queries_done"]
        session.query_seq = obj["query_seq"]
        session._gp_warm = obj["gp_warm"]
        session.rng.bit_generator.state = obj["rng_state"]
        return session

    def save(self, path: Path | str) -> None:
        Path(path).write_text(canonical_json(self.to_json_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: Path | str) -> "Session":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def run_session(
    config: SessionConfig,
    oracle: DistinctnessOracle | None = None,
    objective: Callable[[SearchPoint], float] | None = None,
) -> SessionResult:
    """Drive a session to completion with a simulated oracle."""
    oracle = oracle if oracle is not None else config.oracle
    if config.n_phase2 > 0 or config.init_queries > 0:
        if oracle is None:
            raise ConfigError("phase 2 needs an oracle; configure one or pass it explicitly")
        if oracle.is_deferred:
            raise ConfigError(
                "deferred oracles cannot run synchronously; use the service for human answering"
            )
    session = Session.start(config, objective=objective)
    session.run_phase1()
    while not session.is_done:
        query = session.propose_query()
        response = answer_ranking(oracle, query)
        assert not isinstance(response, Deferred)
        session.submit_ranking(response)
    return session.result()
