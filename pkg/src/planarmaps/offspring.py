"""Boltzmann weight sequences and the built-in offspring-law families.

Laws are kept in walk form: ``nu(i) = mu(i + 1)`` on ``{-1, 0, 1, ...}``.
Slowly varying functions are never represented generically; each family
carries closed-form pmf and tails together with its normalisation sequences
``a_n`` (and ``b_n`` in the Cauchy regime), which is what makes the
conditioned samplers and the condensation reports computable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate
from scipy.special import zeta as _zeta


class InadmissibleError(ValueError):
    """Weight or offspring data that does not define a probability law."""


# -- weight sequences and eq.-style conversions --------------------------------


@dataclass(frozen=True)
class WeightSequence:
    """Face-degree weights q_k >= 0, k >= 1; q_i > 0 for some i >= 2."""

    q: dict[int, float]

    def __post_init__(self):
        clean = {int(k): float(v) for k, v in self.q.items() if v > 0.0}
        if any(k < 1 for k in clean):
            raise InadmissibleError("weights are indexed by k >= 1")
        if not any(k >= 2 for k in clean):
            raise InadmissibleError("need q_i > 0 for at least one i >= 2")
        object.__setattr__(self, "q", dict(sorted(clean.items())))

    def partition_root(self) -> float:
        """W_star: smallest root >= 1 of f(W) = 1 + sum C(2k-1,k-1) W^k q_k = W.

        g(W) = f(W) - W is convex; admissibility means g reaches <= 0, with a
        tangent root exactly at criticality.
        """
        from scipy.optimize import brentq, minimize_scalar

        ks = np.array(sorted(self.q), dtype=np.int64)
        qs = np.array([self.q[int(k)] for k in ks])
        coef = np.array([math.comb(2 * int(k) - 1, int(k) - 1) for k in ks], dtype=float)

        def g(w):
            return 1.0 + float(np.sum(coef * qs * w ** ks)) - w

        hi = 2.0
        while g(hi) < g(hi / 1.3):  # expand until past the convex minimum
            hi *= 1.3
            if hi > 1e12:
                break
        res = minimize_scalar(g, bounds=(1.0, hi), method="bounded",
                              options={"xatol": 1e-13})
        gmin = float(res.fun)
        if gmin > 1e-9:
            raise InadmissibleError("weight sequence is not admissible (no W_star)")
        if gmin > -1e-12:
            return float(res.x)  # critical: tangency
        return float(brentq(g, 1.0, float(res.x), xtol=1e-14, rtol=8.9e-16))


def offspring_from_weights(q: WeightSequence, w_star: float | None = None) -> "OffspringLaw":
    """mu(k) = W_star^(k-1) C(2k-1, k-1) q_k with mu(0) = 1 / W_star."""
    w = q.partition_root() if w_star is None else float(w_star)
    mu = {0: 1.0 / w}
    for k, qk in q.q.items():
        mu[k] = w ** (k - 1) * math.comb(2 * k - 1, k - 1) * qk
    total = sum(mu.values())
    if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
        raise InadmissibleError(f"mu sums to {total!r}, not 1")
    return OffspringLaw.from_mu(mu)


def weights_from_offspring(law: "OffspringLaw") -> WeightSequence:
    """Inverse direction: W_star = 1/mu(0), q_k = mu(k) W_star^(1-k) / C(2k-1,k-1)."""
    if law.family != "finite_support":
        raise InadmissibleError("only finite-support laws convert back to weights")
    mu = law.params["mu"]
    w = 1.0 / mu[0]
    q = {
        k: mk * w ** (1 - k) / math.comb(2 * k - 1, k - 1)
        for k, mk in mu.items()
        if k >= 1 and mk > 0
    }
    return WeightSequence(q)


# -- numeric helpers for the cauchy family -------------------------------------


def _cauchy_series(power: int, m0: int = 1_000_000) -> float:
    """sum_{m >= 2} 1 / (m**power * log(m)**2) to ~1e-13."""
    m = np.arange(2, m0, dtype=float)
    s = float(np.sum(m ** (-power) / np.log(m) ** 2))
    if power == 1:
        # integral tail has the closed form 1 / log(m0)
        f0 = 1.0 / (m0 * math.log(m0) ** 2)
        fp0 = -(math.log(m0) + 2.0) / (m0 ** 2 * math.log(m0) ** 3)
        return s + 1.0 / math.log(m0) + f0 / 2.0 - fp0 / 12.0
    # tail integral via x = m0 / u, smooth on (0, 1]
    tail, _ = integrate.quad(
        lambda u: m0 ** (1 - power) * u ** (power - 2) / math.log(m0 / u) ** 2,
        0.0,
        1.0,
        epsabs=1e-16,
        epsrel=1e-13,
    )
    f0 = m0 ** (-power) / math.log(m0) ** 2
    return s + tail + f0 / 2.0


# -- offspring laws -------------------------------------------------------------


@dataclass
class OffspringLaw:
    """A walk-form step law nu on {-1, 0, 1, ...} with closed-form metadata.

    ``family`` is one of ``finite_support`` (includes the geometric law and
    laws built from weight sequences), ``stable``, ``cauchy_loc`` (equally
    usable for the tail conditioning) and ``subcritical``.
    """

    family: str
    params: dict
    alpha: float | None
    mean_walk: float
    variance_walk: float  # inf in the stable / cauchy regimes
    _nu_cache: dict = field(default_factory=dict, repr=False)

    # -- constructors ---------------------------------------------------------

    @classmethod
    def from_mu(cls, mu: dict[int, float]) -> "OffspringLaw":
        mu = {int(k): float(v) for k, v in mu.items() if v > 0}
        if any(k < 0 for k in mu):
            raise InadmissibleError("offspring values must be >= 0")
        total = sum(mu.values())
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-12):
            raise InadmissibleError(f"mu sums to {total!r}")
        if mu.get(0, 0.0) <= 0.0:
            raise InadmissibleError("need mu(0) > 0 (nu(-1) != 0)")
        if not any(k >= 2 for k in mu):
            raise InadmissibleError("need mu(i) > 0 for some i >= 2")
        mean = sum(k * v for k, v in mu.items())
        var = sum((k - 1) ** 2 * v for k, v in mu.items()) - (mean - 1.0) ** 2
        return cls(
            family="finite_support",
            params={"mu": dict(sorted(mu.items()))},
            alpha=2.0,
            mean_walk=mean - 1.0,
            variance_walk=var,
        )

    @classmethod
    def geometric(cls) -> "OffspringLaw":
        """nu(i) = 2^-(i+2), i >= -1: the critical finite-variance workhorse."""
        return cls(
            family="geometric", params={}, alpha=2.0, mean_walk=0.0, variance_walk=2.0
        )

    @classmethod
    def stable(cls, alpha: float, c: float) -> "OffspringLaw":
        """Pure power tail P(X >= k) = c k^-alpha (k >= 1), centred via nu(-1)."""
        if not 1.0 < alpha <= 2.0:
            raise InadmissibleError("stable family needs alpha in (1, 2]")
        p_neg = c * float(_zeta(alpha))  # E[X 1_{X>=1}] = c zeta(alpha)
        p_zero = 1.0 - c - p_neg
        if p_zero < 0 or p_neg <= 0:
            raise InadmissibleError(f"tail constant c={c} too large for alpha={alpha}")
        return cls(
            family="stable",
            params={"c": c, "p_neg": p_neg, "p_zero": p_zero},
            alpha=alpha,
            mean_walk=0.0,
            variance_walk=np.inf if alpha < 2.0 else np.nan,
        )

    @classmethod
    def cauchy_loc(cls, c: float = 1.0 / 3.0) -> "OffspringLaw":
        """nu(m) = c / (m^2 log^2 m) for m >= 2; remaining mass on {-1, 0}.

        a_n = c n / log^2 n and b_n = -c n / log n.  The same law satisfies the
        plain Cauchy tail condition, so it also backs the tail conditioning.
        """
        s1 = _cauchy_series(1)  # sum 1/(m log^2 m)
        s2 = _cauchy_series(2)  # sum 1/(m^2 log^2 m)
        p_neg = c * s1
        p_zero = 1.0 - c * s2 - p_neg
        if p_zero < 0:
            raise InadmissibleError(f"c={c} too large: nu(0) = {p_zero}")
        return cls(
            family="cauchy_loc",
            params={"c": c, "p_neg": p_neg, "p_zero": p_zero, "s1": s1, "s2": s2},
            alpha=1.0,
            mean_walk=0.0,
            variance_walk=np.inf,
        )

    # alias: the same distribution backs the tail-conditioned walks
    cauchy_tail = cauchy_loc

    @classmethod
    def subcritical(cls, beta: float, mean: float) -> "OffspringLaw":
        """mu(k) = theta k^-(1+beta) for k >= 1, rescaled to offspring mean < 1."""
        if beta <= 1.0:
            raise InadmissibleError("subcritical family needs beta > 1")
        if not 0.0 < mean < 1.0:
            raise InadmissibleError("offspring mean must lie in (0, 1)")
        theta = mean / float(_zeta(beta))
        mu0 = 1.0 - theta * float(_zeta(1.0 + beta))
        if mu0 <= 0:
            raise InadmissibleError(f"beta={beta}, mean={mean} leaves mu(0) = {mu0}")
        return cls(
            family="subcritical",
            params={"beta": beta, "theta": theta, "mu0": mu0, "m_mu": mean},
            alpha=None,
            mean_walk=mean - 1.0,
            variance_walk=(
                theta * (float(_zeta(beta - 1.0)) - 2.0 * float(_zeta(beta)) + float(_zeta(beta + 1.0)))
                + mu0
                - (mean - 1.0) ** 2
                if beta > 2.0
                else np.inf
            ),
        )

    # -- pmf ------------------------------------------------------------------

    def nu(self, i) -> np.ndarray:
        """Walk-form pmf at integer(s) i."""
        i = np.asarray(i, dtype=np.int64)
        out = np.zeros(i.shape, dtype=float)
        if self.family == "geometric":
            m = i >= -1
            out[m] = 0.5 ** (i[m] + 2.0)
        elif self.family == "finite_support":
            mu = self.params["mu"]
            for k, v in mu.items():
                out[i == k - 1] = v
        elif self.family == "stable":
            c = self.params["c"]
            out[i == -1] = self.params["p_neg"]
            out[i == 0] = self.params["p_zero"]
            m = i >= 1
            km = i[m].astype(float)
            out[m] = c * (km ** -self.alpha - (km + 1.0) ** -self.alpha)
        elif self.family == "cauchy_loc":
            c = self.params["c"]
            out[i == -1] = self.params["p_neg"]
            out[i == 0] = self.params["p_zero"]
            m = i >= 2
            km = i[m].astype(float)
            out[m] = c / (km ** 2 * np.log(km) ** 2)
        elif self.family == "subcritical":
            th, b = self.params["theta"], self.params["beta"]
            out[i == -1] = self.params["mu0"]
            m = i >= 0
            km = i[m].astype(float) + 1.0
            out[m] = th * km ** -(1.0 + b)
        else:
            raise ValueError(self.family)
        return out

    def mu(self, k) -> np.ndarray:
        return self.nu(np.asarray(k, dtype=np.int64) - 1)

    @property
    def mean_mu(self) -> float:
        return self.mean_walk + 1.0

    @property
    def is_critical(self) -> bool:
        return abs(self.mean_walk) <= 1e-10

    # -- normalisation sequences ----------------------------------------------

    def a_n(self, n: int) -> float:
        if self.family in ("geometric", "finite_support"):
            return math.sqrt(n * self.variance_walk / 2.0)
        if self.family == "stable":
            if self.alpha == 2.0:
                raise ValueError("alpha = 2 with infinite variance has no closed a_n here")
            c, al = self.params["c"], self.alpha
            return (c * n * math.gamma(2.0 - al) / (al - 1.0)) ** (1.0 / al)
        if self.family == "cauchy_loc":
            return self.params["c"] * n / math.log(n) ** 2
        if self.family == "subcritical":
            raise ValueError("subcritical walks are not centred; a_n not defined")
        raise ValueError(self.family)

    def b_n(self, n: int) -> float:
        if self.family != "cauchy_loc":
            raise ValueError("b_n is only defined for the Cauchy family")
        return -self.params["c"] * n / math.log(n)

    # -- sampling ----------------------------------------------------------------

    def sample_steps(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """i.i.d. walk-form steps."""
        if self.family == "geometric":
            return rng.geometric(0.5, size=size).astype(np.int64) - 2
        if self.family == "finite_support":
            vals, probs = self._finite_table()
            return rng.choice(vals, size=size, p=probs)
        if self.family == "stable":
            u = rng.random(size)
            out = np.full(size, -1, dtype=np.int64)
            pn, pz = self.params["p_neg"], self.params["p_zero"]
            out[u >= pn] = 0
            pos = u >= pn + pz
            v = (u[pos] - pn - pz) / self.params["c"]  # uniform on (0, 1)
            out[pos] = np.floor((1.0 - v) ** (-1.0 / self.alpha)).astype(np.int64)
            return out
        u = rng.random(size)
        return self._inverse_cdf(u, rng)

    def _finite_table(self):
        if "table" not in self._nu_cache:
            mu = self.params["mu"]
            vals = np.array(sorted(mu), dtype=np.int64) - 1
            probs = np.array([mu[int(v) + 1] for v in vals])
            probs = probs / probs.sum()
            self._nu_cache["table"] = (vals, probs)
        return self._nu_cache["table"]

    _TABLE_TOP = 1 << 23

    def _cdf_table(self):
        if "cdf" not in self._nu_cache:
            vals = np.arange(-1, self._TABLE_TOP + 1, dtype=np.int64)
            self._nu_cache["cdf"] = (vals, np.cumsum(self.nu(vals)))
        return self._nu_cache["cdf"]

    def _inverse_cdf(self, u: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        vals, cdf = self._cdf_table()
        out = np.empty(u.shape, dtype=np.int64)
        inside = u < cdf[-1]
        idx = np.searchsorted(cdf, u[inside], side="right")
        out[inside] = vals[np.minimum(idx, len(vals) - 1)]
        n_tail = int((~inside).sum())
        if n_tail:
            out[~inside] = self._sample_far_tail(n_tail, int(vals[-1]), rng)
        return out

    def _sample_far_tail(self, size: int, above: int, rng: np.random.Generator) -> np.ndarray:
        """Exact draws of nu given {X > above}: floor of a continuous Pareto
        proposal accepted against an explicit dominating bound."""
        if self.family == "subcritical":
            expo = self.params["beta"]
            # nu(m) = theta (m+1)^-(1+beta); prop pmf >= expo * (m+1)^-(1+expo) m0^expo
            bound = self.params["theta"] / expo
        elif self.family == "cauchy_loc":
            expo = 1.0
            c = self.params["c"]
            bound = 2.0 * c / math.log(above + 1) ** 2
        else:
            raise ValueError(f"no far tail for family {self.family}")
        m0 = above + 1
        bound /= m0 ** expo
        out = np.empty(size, dtype=np.int64)
        filled = 0
        while filled < size:
            m = max(2 * (size - filled), 16)
            cand = np.floor(m0 * rng.random(m) ** (-1.0 / expo)).astype(np.int64)
            prop = m0 ** expo * (cand.astype(float) ** -expo - (cand + 1.0) ** -expo)
            ratio = self.nu(cand) / (prop * bound)
            if np.any(ratio > 1.0 + 1e-9):
                raise AssertionError("far-tail rejection bound violated")
            acc = rng.random(m) < ratio
            take = cand[acc][: size - filled]
            out[filled : filled + len(take)] = take
            filled += len(take)
        return out

    # -- pieces used by the collapsed conditioned samplers ---------------------

    @property
    def p_minus(self) -> float:
        return float(self.nu(np.array([-1]))[0])

    @property
    def p_zero(self) -> float:
        return float(self.nu(np.array([0]))[0])

    def sample_positive(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """i.i.d. draws of nu conditioned on {X >= 1}."""
        if self.family == "geometric":
            return rng.geometric(0.5, size=size).astype(np.int64)
        if self.family == "finite_support":
            vals, probs = self._finite_table()
            keep = vals >= 1
            p = probs[keep]
            return rng.choice(vals[keep], size=size, p=p / p.sum())
        if self.family == "stable":
            u = rng.random(size)
            return np.floor((1.0 - u) ** (-1.0 / self.alpha)).astype(np.int64)
        _, cdf = self._cdf_table()
        base = float(cdf[1])  # mass of {-1, 0}
        u = base + rng.random(size) * (1.0 - base)
        return self._inverse_cdf(u, rng)

    def bulk_pmf(self, cutoff: int) -> np.ndarray:
        """nu on [-1, cutoff] as a dense vector (offset -1); exact closed forms."""
        return self.nu(np.arange(-1, cutoff + 1, dtype=np.int64))

    def tail_pmf(self, lo: int, hi: int) -> np.ndarray:
        """nu on [lo, hi] as a dense vector."""
        return self.nu(np.arange(lo, hi + 1, dtype=np.int64))

    def tail_mass_above(self, cutoff: int) -> float:
        """P(X > cutoff); exact closed form where available."""
        if self.family == "stable":
            return self.params["c"] * float(cutoff + 1) ** -self.alpha
        if self.family == "subcritical":
            th, b = self.params["theta"], self.params["beta"]
            # sum_{m > cutoff} theta (m+1)^-(1+beta) via Hurwitz zeta
            return th * float(_zeta(1.0 + b, cutoff + 2))
        vals = np.arange(-1, cutoff + 1, dtype=np.int64)
        return max(0.0, 1.0 - float(self.nu(vals).sum()))
