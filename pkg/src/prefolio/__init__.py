"""Preference-guided Bayesian optimization for portfolio construction.

Find the globally best backtested portfolio, learn the user's implicit
sense of distinctness from ranking queries, and extract distinctly
efficient supplements to blend into a variance-reduced strategy.
"""

from .acquisition import AcquisitionResult, constant_liar_batch, latin_hypercube, maximize_acquisition
from .efficient import (
    CandidatePool,
    EfficientSet,
    StrategyReport,
    alpha_distinct_set,
    blended_strategy,
    evaluate_strategies,
    inclusion_thresholds,
)
from .gp import GPModel, Observation, expected_improvement, fit
from .market import (
    PriceSeries,
    ReturnWindow,
    generate_price_series,
    load_price_series,
    realized_stats,
    return_window,
    sharpe_objective,
)
from .oracle import Deferred, DistinctnessOracle, answer_ranking
from .preference import (
    PairwiseSample,
    PreferenceModel,
    RankingQuery,
    RankingResponse,
    feature_map,
    fit_preference,
    predict_more_distinct,
    ranking_to_pairs,
)
from .session import Session, SessionConfig, SessionResult, run_session
from .simplex import Portfolio, SearchPoint, from_simplex, to_simplex

__version__ = "0.1.0"
