"""Acquisition maximization and constant-liar batch proposal.

Maximization is derivative-free and fully seeded: a scrambled Sobol sweep
of the log box followed by a batched coordinate-wise golden-section polish
of the top candidates.  Batch proposals use the constant-liar trick with
the lie pinned to the incumbent maximum, so sequential EI spreads the
batch out instead of stacking it on one peak.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .gp import GPModel, condition_on, ei_batch
from .simplex import LOG_LOWER, LOG_UPPER, SearchPoint

MIN_SEPARATION = 1e-6  # L-infinity, log space
N_CANDIDATES = 2048
N_POLISH = 8
POLISH_ITERS = 100
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class AllCandidatesExcludedError(RuntimeError):
    """Every candidate fell within min_separation of an excluded point."""


@dataclass(frozen=True, eq=False)
class AcquisitionResult:
    point: SearchPoint
    ei_value: float

    def __post_init__(self):
        if self.ei_value < 0:
            raise ValueError("ei_value must be >= 0")


def _sub_seed(rng: np.random.Generator) -> int:
    """Integer seed drawn from the session stream.

    scipy's QMC engines fork entropy from a Generator's seed sequence, not
    its state, so handing them the session generator directly would break
    state-restore determinism.  A drawn integer keeps the whole chain a
    pure function of the persisted generator state.
    """
    return int(rng.integers(0, 2**63 - 1))


def latin_hypercube(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    """n-point Latin hypercube in the log box, one point per stratum."""
    sampler = qmc.LatinHypercube(d=dim, seed=_sub_seed(rng))
    return qmc.scale(sampler.random(n), LOG_LOWER, LOG_UPPER)


def _separation_mask(points: np.ndarray, exclude: np.ndarray, min_separation: float) -> np.ndarray:
    """True where a point is at least min_separation (L-inf) from all excluded."""
    if exclude.size == 0:
        return np.ones(len(points), dtype=bool)
    d = np.max(np.abs(points[:, None, :] - exclude[None, :, :]), axis=2)
    return d.min(axis=1) >= min_separation


def _golden_polish(model: GPModel, pts: np.ndarray, best: float, iters: int, radius: float = 0.3):
    """Coordinate-wise golden-section refinement, batched over candidates.

    Returns every point evaluated along the way with its EI, so the caller
    can take a global argmax; the polish itself only has to not lose the
    starting values.
    """
    n, d = pts.shape
    sweeps = 2
    steps = max(iters // (sweeps * d), 4)
    evaluated = [pts.copy()]
    ei_log = [ei_batch(model, pts, best)]

    cur = pts.copy()
    cur_ei = ei_log[0].copy()
    for _ in range(sweeps):
        for k in range(d):
            a = np.clip(cur[:, k] - radius, LOG_LOWER, LOG_UPPER)
            b = np.clip(cur[:, k] + radius, LOG_LOWER, LOG_UPPER)

            def eval_at(col):
                trial = cur.copy()
                trial[:, k] = col
                e = ei_batch(model, trial, best)
                evaluated.append(trial)
                ei_log.append(e)
                return e

            x1 = b - _GOLDEN * (b - a)
            x2 = a + _GOLDEN * (b - a)
            f1 = eval_at(x1)
            f2 = eval_at(x2)
            for _ in range(steps - 2):
                # keep [a, x2] where f1 wins, [x1, b] otherwise
                shrink_right = f1 >= f2
                b = np.where(shrink_right, x2, b)
                a = np.where(shrink_right, a, x1)
                x1 = b - _GOLDEN * (b - a)
                x2 = a + _GOLDEN * (b - a)
                fresh = np.where(shrink_right, x1, x2)
                f_fresh = eval_at(fresh)
                f1_old = f1
                f1 = np.where(shrink_right, f_fresh, f2)
                f2 = np.where(shrink_right, f1_old, f_fresh)
            mid = (a + b) / 2.0
            f_mid = eval_at(mid)
            improved = f_mid > cur_ei
            cur[:, k] = np.where(improved, mid, cur[:, k])
            cur_ei = np.where(improved, f_mid, cur_ei)
    return np.vstack(evaluated), np.concatenate(ei_log)


def maximize_acquisition(
    model: GPModel,
    exclude: Sequence[SearchPoint] = (),
    *,
    rng: np.random.Generator,
    n_candidates: int = N_CANDIDATES,
    n_polish: int = N_POLISH,
    polish_iters: int = POLISH_ITERS,
    min_separation: float = MIN_SEPARATION,
) -> AcquisitionResult:
    """Point with the highest expected improvement found in the box.

    The returned point is at least min_separation away (L-inf, log space)
    from every excluded point, and its EI is the maximum over everything
    evaluated during the search.
    """
    d = model.dim
    excl = (
        np.array([p.log_coords for p in exclude], dtype=float)
        if len(exclude) else np.empty((0, d))
    )

    sobol = qmc.Sobol(d, scramble=True, seed=_sub_seed(rng))
    cand = qmc.scale(sobol.random(n_candidates), LOG_LOWER, LOG_UPPER)
    keep = _separation_mask(cand, excl, min_separation)
    cand = cand[keep]
    if len(cand) == 0:
        raise AllCandidatesExcludedError(
            f"all {n_candidates} candidates are within {min_separation} of an excluded point"
        )

    best = model.best_observed
    cand_ei = ei_batch(model, cand, best)

    top = np.argsort(cand_ei)[-min(n_polish, len(cand)):]
    polished_pts, polished_ei = _golden_polish(model, cand[top], best, polish_iters)

    pool_pts = np.vstack([cand, polished_pts])
    pool_ei = np.concatenate([cand_ei, polished_ei])
    feasible = _separation_mask(pool_pts, excl, min_separation)
    pool_pts, pool_ei = pool_pts[feasible], pool_ei[feasible]

    i = int(np.argmax(pool_ei))
    return AcquisitionResult(point=SearchPoint(pool_pts[i]), ei_value=float(pool_ei[i]))


def constant_liar_batch(
    model: GPModel,
    m: int,
    *,
    rng: np.random.Generator,
    exclude: Sequence[SearchPoint] = (),
    **acq_kwargs,
) -> list[SearchPoint]:
    """m pairwise-separated points proposed by sequential EI with lies.

    After each proposal the model is re-conditioned on the point with a
    fabricated value equal to the incumbent maximum (CL-max), and the next
    EI maximization runs against that augmented copy.  The caller's model
    is untouched; the lies exist only inside this function.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    lie = model.best_observed
    work = model
    chosen: list[SearchPoint] = []
    for _ in range(m):
        res = maximize_acquisition(work, exclude=list(exclude) + chosen, rng=rng, **acq_kwargs)
        chosen.append(res.point)
        work = condition_on(work, res.point.log_coords, lie)
    return chosen
