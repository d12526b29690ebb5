"""Answering interfaces for ranking queries.

Simulated oracles stand in for a human during scripted experiments: they
rank candidates by a weighted Euclidean distance to the reference, with
optional Gaussian noise on the distances to model inconsistent judgment.
The deferred kind returns a token instead, signalling that a human must
answer through the service.

Noise is seeded per (oracle seed, query id), so a simulated answer is a
pure function of the query regardless of call order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .preference import RankingQuery, RankingResponse

KINDS = ("euclidean", "weighted", "noisy-weighted", "deferred")


@dataclass(frozen=True)
class Deferred:
    """Marker: the query must be routed to a human."""

    query_id: str


@dataclass(frozen=True, eq=False)
class DistinctnessOracle:
    kind: str
    weight_profile: np.ndarray | None = None
    noise_scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown oracle kind {self.kind!r}, expected one of {KINDS}")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")
        if self.weight_profile is not None:
            profile = np.asarray(self.weight_profile, dtype=float)
            if np.any(profile < 0) or not np.any(profile > 0):
                raise ValueError("weight profile must be >= 0 with at least one positive entry")
            object.__setattr__(self, "weight_profile", profile)
        elif self.kind in ("weighted", "noisy-weighted"):
            raise ValueError(f"{self.kind} oracle requires a weight profile")

    @property
    def is_deferred(self) -> bool:
        return self.kind == "deferred"

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "weights": None if self.weight_profile is None else self.weight_profile.tolist(),
            "noise": self.noise_scale,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DistinctnessOracle":
        return cls(
            kind=obj["kind"],
            weight_profile=obj.get("weights"),
            noise_scale=obj.get("noise", 0.0),
            seed=obj.get("seed", 0),
        )


def _query_rng(oracle: DistinctnessOracle, query_id: str) -> np.random.Generator:
    digest = hashlib.sha256(query_id.encode("utf-8")).digest()
    return np.random.default_rng([oracle.seed, int.from_bytes(digest[:8], "big")])


def simulated_distances(oracle: DistinctnessOracle, query: RankingQuery) -> np.ndarray:
    """Per-candidate perceived distance to the reference (noise included)."""
    if oracle.is_deferred:
        raise ValueError("deferred oracles have no simulated distances")
    ref = query.reference.weights
    profile = oracle.weight_profile
    if profile is None:
        profile = np.ones_like(ref)
    if profile.size != ref.size:
        raise ValueError(f"weight profile has {profile.size} entries, portfolios have {ref.size}")
    deltas = np.array([c.weights - ref for c in query.candidates])
    dist = np.linalg.norm(deltas * profile, axis=1)
    if oracle.kind == "noisy-weighted" and oracle.noise_scale > 0:
        dist = dist + _query_rng(oracle, query.query_id).normal(0.0, oracle.noise_scale, size=dist.shape)
    return dist


def answer_ranking(oracle: DistinctnessOracle, query: RankingQuery) -> RankingResponse | Deferred:
    """Rank candidates least to most distinct, or defer to a human.

    Ties in perceived distance break toward the lower candidate index.
    """
    if oracle.is_deferred:
        return Deferred(query_id=query.query_id)
    dist = simulated_distances(oracle, query)
    order = tuple(int(i) for i in np.argsort(dist, kind="stable"))
    return RankingResponse(query_id=query.query_id, order=order)
