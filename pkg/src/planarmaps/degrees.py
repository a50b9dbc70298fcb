"""Degree sequences of bipartite maps and their forest encodings.

A degree sequence prescribes, for every k >= 1, the number ``d(k)`` of inner
faces of degree ``2k`` (equivalently: forest vertices with out-degree ``k``),
together with the half boundary-length ``rho`` (the number of trees in the
encoding forest).  Everything derived here is integer-exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


class DegreeSequenceError(ValueError):
    """Invalid counts, or a derived quantity that is not defined."""


@dataclass(frozen=True)
class DegreeStats:
    """Derived integer statistics of a degree sequence."""

    sigma2: int  # sum k(k-1) d(k)
    eps: int  # edges of the forest: sum k d(k)
    leaves: int  # d(0) = rho + sum (k-1) d(k)
    upsilon: int  # vertices of the forest: eps + rho
    delta: int  # largest k with d(k) > 0 (0 if none)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


@dataclass(frozen=True)
class DegreeSequence:
    """Sparse map ``k -> d(k)`` (k >= 1) plus the half boundary-length rho.

    Immutable after construction; zero counts are dropped so that equal
    sequences compare equal.
    """

    counts: dict[int, int]
    rho: int

    def __post_init__(self):
        if self.rho < 1:
            raise DegreeSequenceError(f"rho must be >= 1, got {self.rho}")
        clean = {}
        for k, c in self.counts.items():
            k = int(k)
            c = int(c)
            if k < 1:
                raise DegreeSequenceError(f"degree keys must be >= 1, got {k}")
            if c < 0:
                raise DegreeSequenceError(f"count for k={k} is negative")
            if c > 0:
                clean[k] = c
        object.__setattr__(self, "counts", dict(sorted(clean.items())))

    # -- derived quantities -------------------------------------------------

    @property
    def n_inner(self) -> int:
        """Number of inner faces / internal vertices, n = sum_k d(k)."""
        return sum(self.counts.values())

    def stats(self) -> DegreeStats:
        return derive_stats(self)

    # -- text / JSON round-trip ---------------------------------------------

    def to_text(self) -> str:
        lines = [f"rho {self.rho}"]
        lines += [f"{k} {c}" for k, c in self.counts.items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DegreeSequence":
        rho = None
        counts: dict[int, int] = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            a, b = line.split()
            if a == "rho":
                rho = int(b)
            else:
                counts[int(a)] = counts.get(int(a), 0) + int(b)
        if rho is None:
            raise DegreeSequenceError("missing 'rho R' header line")
        return cls(counts, rho)

    def to_json(self) -> str:
        payload = {"rho": self.rho, "counts": {str(k): c for k, c in self.counts.items()}}
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "DegreeSequence":
        payload = json.loads(text)
        return cls({int(k): int(c) for k, c in payload["counts"].items()}, int(payload["rho"]))


def derive_stats(d: DegreeSequence) -> DegreeStats:
    """All derived statistics of ``d``; exact (Python integers do not overflow)."""
    sigma2 = sum(k * (k - 1) * c for k, c in d.counts.items())
    eps = sum(k * c for k, c in d.counts.items())
    leaves = d.rho + sum((k - 1) * c for k, c in d.counts.items())
    upsilon = eps + d.rho
    delta = max(d.counts) if d.counts else 0
    return DegreeStats(sigma2=sigma2, eps=eps, leaves=leaves, upsilon=upsilon, delta=delta)


def scaling_factors(d: DegreeSequence) -> dict[str, float]:
    """Normalisations used by the scaling-limit checks.

    Returns ``dist_scale_disk = (3/(2 sigma))**0.5`` (needs sigma > 0),
    ``dist_scale_crt = (2 rho)**-0.5`` and the tightness normalisation
    ``label_scale = (sigma + rho)**-0.5``.
    """
    st = derive_stats(d)
    if st.sigma2 == 0:
        raise DegreeSequenceError("disk distance scale undefined: sigma is zero")
    sigma = st.sigma
    return {
        "dist_scale_disk": math.sqrt(3.0 / (2.0 * sigma)),
        "dist_scale_crt": 1.0 / math.sqrt(2.0 * d.rho),
        "label_scale": 1.0 / math.sqrt(sigma + d.rho),
    }


def label_scale(d: DegreeSequence) -> float:
    st = derive_stats(d)
    return 1.0 / math.sqrt(st.sigma + d.rho)


def dist_scale_crt(d: DegreeSequence) -> float:
    return 1.0 / math.sqrt(2.0 * d.rho)


# -- common families ---------------------------------------------------------


def quadrangulation(n: int, rho: int = 1) -> DegreeSequence:
    """All inner faces of degree 4: d(2) = n."""
    return DegreeSequence({2: n}, rho)


def q_angulation(q: int, n: int, rho: int = 1) -> DegreeSequence:
    """All inner faces of degree 2q: d(q) = n."""
    if q < 1:
        raise DegreeSequenceError(f"q must be >= 1, got {q}")
    return DegreeSequence({q: n}, rho)
