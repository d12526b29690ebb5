"""Simplex parameterization of long-only portfolios.

The optimizer never touches portfolio weights directly.  It works in a
4-dimensional box on a base-10 log scale, and every box point maps to a
strictly positive 5-asset weight vector summing to one:

    weights = (c1, c2, c3, c4, 1) / (1 + c1 + c2 + c3 + c4)

where c = 10**log_coords and each raw coordinate lives in [1e-3, 1e3].
The inverse map divides the first weights by the last one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOG_LOWER = -3.0
LOG_UPPER = 3.0
SEARCH_DIM = 4

WEIGHT_SUM_TOL = 1e-12

# relative slack when checking raw-scale box membership, so that values
# produced by the forward map round-trip cleanly at the box boundary
_BOUND_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class SearchPoint:
    """Point in the log-scale search box [LOG_LOWER, LOG_UPPER]^d."""

    log_coords: np.ndarray

    def __post_init__(self):
        lc = np.array(self.log_coords, dtype=float)
        if lc.ndim != 1 or lc.size == 0:
            raise ValueError("log_coords must be a non-empty 1-D vector")
        lo, hi = float(lc.min()), float(lc.max())
        # NaN fails both comparisons, so non-finite input lands here too
        if not (lo >= LOG_LOWER - 1e-9 and hi <= LOG_UPPER + 1e-9):
            raise ValueError(
                f"log coordinates outside [{LOG_LOWER}, {LOG_UPPER}]: {lc.tolist()}"
            )
        if lo < LOG_LOWER or hi > LOG_UPPER:
            lc = np.clip(lc, LOG_LOWER, LOG_UPPER)
        lc.setflags(write=False)
        object.__setattr__(self, "log_coords", lc)

    @classmethod
    def _unchecked(cls, log_coords: np.ndarray) -> "SearchPoint":
        """Wrap coordinates already known to satisfy the invariants."""
        p = object.__new__(cls)
        log_coords.setflags(write=False)
        object.__setattr__(p, "log_coords", log_coords)
        return p

    @property
    def dim(self) -> int:
        return self.log_coords.size

    @property
    def coords(self) -> np.ndarray:
        """Raw-scale coordinates, 10**log_coords, each in [1e-3, 1e3]."""
        return 10.0 ** self.log_coords

    @classmethod
    def from_coords(cls, coords) -> "SearchPoint":
        c = np.asarray(coords, dtype=float)
        if np.any(c <= 0.0):
            raise ValueError("raw coordinates must be strictly positive")
        return cls(np.log10(c))

    def to_json(self, scale: str = "log") -> dict:
        if scale == "log":
            return {"scale": "log", "coords": self.log_coords.tolist()}
        if scale == "raw":
            return {"scale": "raw", "coords": self.coords.tolist()}
        raise ValueError(f"unknown scale {scale!r}")

    @classmethod
    def from_json(cls, obj: dict) -> "SearchPoint":
        scale = obj.get("scale", "log")
        if scale == "log":
            return cls(np.asarray(obj["coords"], dtype=float))
        if scale == "raw":
            return cls.from_coords(obj["coords"])
        raise ValueError(f"unknown scale {scale!r}")


@dataclass(frozen=True, eq=False)
class Portfolio:
    """Partition of unity: strictly positive weights summing to one."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 2:
            raise ValueError("weights must be a 1-D vector of length >= 2")
        total = float(w.sum())
        # a NaN or infinite weight poisons the sum and fails this check
        if not (abs(total - 1.0) <= WEIGHT_SUM_TOL):
            raise ValueError(f"weights must sum to 1 within {WEIGHT_SUM_TOL}: sum={total!r}")
        if not float(w.min()) > 0.0:
            raise ValueError(f"weights must be strictly positive: {w.tolist()}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def _unchecked(cls, weights: np.ndarray) -> "Portfolio":
        """Wrap weights already known to satisfy the invariants."""
        p = object.__new__(cls)
        weights.setflags(write=False)
        object.__setattr__(p, "weights", weights)
        return p

    @property
    def n_assets(self) -> int:
        return self.weights.size

    def to_json(self) -> list[float]:
        return self.weights.tolist()

    @classmethod
    def from_json(cls, obj) -> "Portfolio":
        return cls(np.asarray(obj, dtype=float))


def to_simplex(p: SearchPoint) -> Portfolio:
    """Map a search point to its portfolio: (c, 1) / (1 + sum(c)).

    The output is a valid portfolio by construction (positive raw
    coordinates, exact normalization), so it skips re-validation.
    """
    c = p.coords
    denom = 1.0 + c.sum()
    return Portfolio._unchecked(np.append(c, 1.0) / denom)


def from_simplex(x: Portfolio) -> SearchPoint:
    """Invert to_simplex: coordinate i is weight_i / weight_last.

    Raises ValueError when a ratio falls outside the raw-scale box, i.e.
    the portfolio is not representable in the search domain.
    """
    w = x.weights
    ratios = w[:-1] / w[-1]
    lo = 10.0 ** LOG_LOWER
    hi = 10.0 ** LOG_UPPER
    if not (float(ratios.min()) >= lo * (1.0 - _BOUND_SLACK)
            and float(ratios.max()) <= hi * (1.0 + _BOUND_SLACK)):
        raise ValueError(
            "portfolio not representable in search box: "
            f"weight ratios {ratios.tolist()} outside [{lo}, {hi}]"
        )
    return SearchPoint._unchecked(np.clip(np.log10(ratios), LOG_LOWER, LOG_UPPER))


def uniform_log_points(rng: np.random.Generator, n: int, dim: int = SEARCH_DIM) -> np.ndarray:
    """n points sampled uniformly in the log box, as an (n, dim) array."""
    return rng.uniform(LOG_LOWER, LOG_UPPER, size=(n, dim))
