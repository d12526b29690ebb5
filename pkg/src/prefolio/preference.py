"""Pairwise distinctness model learned from ranking queries.

The model answers one question: given two pairs of portfolios, how likely
is the first pair to be more distinct than the second?  It is a logistic
regression over absolute-difference features, parameterized so that the
two orderings of the same comparison always sum to probability one:

    P(d(w,x) > d(y,z)) = sigmoid( weights . (|w-x| - |y-z|) )

with no bias term.  Swapping the pairs negates the feature vector exactly,
so antisymmetry holds bit-for-bit, not just approximately.

Rankings of m candidates against a fixed reference expand into
2*C(m,2) pairwise samples, one per ordered pair of candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from .simplex import Portfolio

DEFAULT_LAMBDA = 1e-3
GRAD_TOL = 1e-8
MAX_NEWTON_ITER = 200


class UninformativeSamplesError(ValueError):
    """Every sample has an all-zero feature vector; nothing to fit."""


def _as_vector(v) -> np.ndarray:
    if isinstance(v, Portfolio):
        return v.weights
    return np.asarray(v, dtype=float)


def feature_map(w, x, y, z) -> np.ndarray:
    """Difference of absolute-difference blocks: |w-x| - |y-z|.

    Equivalent to weighting the concatenation (|w-x|, |y-z|) with tied
    opposite-sign blocks, which is what makes the prediction antisymmetric
    under swapping the two pairs.
    """
    w, x, y, z = (_as_vector(v) for v in (w, x, y, z))
    if not (w.shape == x.shape == y.shape == z.shape):
        raise ValueError("all four vectors must share a dimension")
    return np.abs(w - x) - np.abs(y - z)


@dataclass(frozen=True, eq=False)
class PairwiseSample:
    """One comparison: label is True when d(w,x) > d(y,z)."""

    w: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    label: bool

    def __post_init__(self):
        for name in ("w", "x", "y", "z"):
            object.__setattr__(self, name, _as_vector(getattr(self, name)))

    @property
    def features(self) -> np.ndarray:
        return feature_map(self.w, self.x, self.y, self.z)


def ranking_to_pairs(reference, ranked: Sequence) -> list[PairwiseSample]:
    """Expand a least-to-most-distinct ranking into 2*C(m,2) samples.

    For positions i < j (so ranked[i] is less distinct than ranked[j]):
      (ref, ranked[i], ref, ranked[j]) -> False
      (ref, ranked[j], ref, ranked[i]) -> True
    """
    ref = _as_vector(reference)
    vecs = [_as_vector(r) for r in ranked]
    if len(vecs) < 2:
        raise ValueError(f"need at least 2 ranked items, got {len(vecs)}")
    samples: list[PairwiseSample] = []
    for i in range(len(vecs)):
        for j in range(i + 1, len(vecs)):
            samples.append(PairwiseSample(ref, vecs[i], ref, vecs[j], False))
            samples.append(PairwiseSample(ref, vecs[j], ref, vecs[i], True))
    return samples


@dataclass(eq=False)
class PreferenceModel:
    """Fitted antisymmetric logistic model over distinctness features."""

    weights: np.ndarray
    lam: float
    feature_space: str = "simplex"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if not np.all(np.isfinite(w)):
            raise ValueError("model weights must be finite")
        if self.lam <= 0:
            raise ValueError("regularization lambda must be > 0")
        self.weights = w

    def to_json(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "lambda": self.lam,
            "feature_space": self.feature_space,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PreferenceModel":
        return cls(
            weights=np.asarray(obj["weights"], dtype=float),
            lam=obj["lambda"],
            feature_space=obj.get("feature_space", "simplex"),
        )


def _prob_from_logit(t: float) -> float:
    """Logistic probability with exact antisymmetry.

    Computed from |t| so that the t and -t branches share every rounding
    step: p(t) + p(-t) == 1.0 exactly.  Kept inside the open interval
    (0, 1) even when exp underflows.
    """
    p = 1.0 / (1.0 + math.exp(-abs(t)))
    if p == 1.0:
        p = math.nextafter(1.0, 0.0)
    return p if t >= 0 else 1.0 - p


def predict_more_distinct(model: PreferenceModel, w, x, y, z) -> float:
    """P(d(w,x) > d(y,z)) under the fitted model, in (0, 1)."""
    t = float(np.dot(model.weights, feature_map(w, x, y, z)))
    return _prob_from_logit(t)


def _loss_grad_hess(w, Phi, labels, lam, want_hess=True):
    n = Phi.shape[0]
    t = Phi @ w
    # stable mean log-loss: log(1 + e^t) - y*t
    loss = float(np.mean(np.logaddexp(0.0, t) - labels * t)) + lam * float(w @ w)
    p = expit(t)
    grad = Phi.T @ (p - labels) / n + 2.0 * lam * w
    if not want_hess:
        return loss, grad, None
    s = p * (1.0 - p)
    hess = (Phi.T * s) @ Phi / n + 2.0 * lam * np.eye(len(w))
    return loss, grad, hess


def fit_preference(
    samples: Sequence[PairwiseSample],
    lam: float = DEFAULT_LAMBDA,
    feature_space: str = "simplex",
    grad_tol: float = GRAD_TOL,
) -> PreferenceModel:
    """Newton fit of the regularized logistic loss.

    Loss is MEAN log-loss plus lam * ||weights||^2, so duplicating the
    dataset does not change the fit.  Deterministic full-batch descent;
    converges to gradient norm <= grad_tol (the problem is strictly convex
    for lam > 0).
    """
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    if len(samples) == 0:
        raise UninformativeSamplesError("no samples")
    Phi = np.array([s.features for s in samples], dtype=float)
    labels = np.array([1.0 if s.label else 0.0 for s in samples])
    if float(np.abs(Phi).max(initial=0.0)) < 1e-12:
        raise UninformativeSamplesError("uninformative samples: all feature vectors are zero")

    w = np.zeros(Phi.shape[1])
    for _ in range(MAX_NEWTON_ITER):
        loss, grad, hess = _loss_grad_hess(w, Phi, labels, lam)
        if float(np.linalg.norm(grad)) <= grad_tol:
            break
        step = np.linalg.solve(hess, grad)
        # backtracking line search (Armijo)
        t_ls, slope = 1.0, float(grad @ step)
        while t_ls > 1e-12:
            trial = w - t_ls * step
            trial_loss, _, _ = _loss_grad_hess(trial, Phi, labels, lam, want_hess=False)
            if trial_loss <= loss - 1e-4 * t_ls * slope:
                break
            t_ls *= 0.5
        w = w - t_ls * step
    else:
        raise RuntimeError(f"preference fit did not reach gradient norm {grad_tol}")
    return PreferenceModel(weights=w, lam=lam, feature_space=feature_space)


# ---------------------------------------------------------------------------
# ranking query plumbing shared by the orchestrator, oracle, and service


@dataclass(frozen=True, eq=False)
class RankingQuery:
    """Ask a user to order candidates by distinctness from the reference."""

    query_id: str
    reference: Portfolio
    candidates: tuple[Portfolio, ...]
    kind: str = "phase2"  # "phase2" proposals are evaluated, "init" warm-ups are not
    candidate_points: tuple | None = None  # matching SearchPoints, when known

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if len(self.candidates) < 2:
            raise ValueError("a ranking query needs at least 2 candidates")
        for i in range(len(self.candidates)):
            for j in range(i + 1, len(self.candidates)):
                if np.array_equal(self.candidates[i].weights, self.candidates[j].weights):
                    raise ValueError(f"candidates {i} and {j} are identical")
        if self.candidate_points is not None:
            object.__setattr__(self, "candidate_points", tuple(self.candidate_points))

    @property
    def m(self) -> int:
        return len(self.candidates)

    def to_json(self) -> dict:
        out = {
            "query_id": self.query_id,
            "kind": self.kind,
            "reference": self.reference.to_json(),
            "candidates": [c.to_json() for c in self.candidates],
        }
        if self.candidate_points is not None:
            out["candidate_points"] = [p.log_coords.tolist() for p in self.candidate_points]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "RankingQuery":
        from .simplex import SearchPoint

        points = obj.get("candidate_points")
        return cls(
            query_id=obj["query_id"],
            kind=obj.get("kind", "phase2"),
            reference=Portfolio.from_json(obj["reference"]),
            candidates=tuple(Portfolio.from_json(c) for c in obj["candidates"]),
            candidate_points=(
                tuple(SearchPoint(np.asarray(p, dtype=float)) for p in points)
                if points is not None else None
            ),
        )


@dataclass(frozen=True, eq=False)
class RankingResponse:
    """Candidate indices ordered least distinct to most distinct."""

    query_id: str
    order: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(i) for i in self.order))

    def validate_for(self, query: RankingQuery) -> None:
        if self.query_id != query.query_id:
            raise ValueError(f"response is for query {self.query_id!r}, pending is {query.query_id!r}")
        if sorted(self.order) != list(range(query.m)):
            raise ValueError(f"order must be a permutation of 0..{query.m - 1}, got {list(self.order)}")

    def to_json(self) -> dict:
        return {"query_id": self.query_id, "order": list(self.order)}

    @classmethod
    def from_json(cls, obj: dict) -> "RankingResponse":
        return cls(query_id=obj["query_id"], order=tuple(obj["order"]))
