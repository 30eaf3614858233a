"""Kullback-Leibler and Shannon functionals over cluster duration distributions.

Natural logarithms throughout. Besides the empirical functionals the module
carries the closed-form divergence between two power-law duration laws and
an independent quadrature route to the same number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import integrate

from klcluster.clusters import DurationDistribution
from klcluster.errors import DomainError, NumericError, SupportError

DEFAULT_MAX_DISCARDED = 0.01


@dataclass(frozen=True)
class EntropyProfile:
    """Per-cell functional values and their total.

    ``components`` maps (window, duration) to the functional value of that
    cell. ``discarded_mass`` is the fraction of P dropped by support
    alignment (always 0 for Shannon profiles).
    """

    kind: str
    components: Mapping[tuple[int, int], float]
    aggregate: float = field(default=float("nan"))
    discarded_mass: float = 0.0

    def __post_init__(self):
        if self.kind not in ("kl", "shannon"):
            raise DomainError(f"profile kind must be 'kl' or 'shannon', got {self.kind!r}")
        comps = {(int(n), int(t)): float(v) for (n, t), v in sorted(self.components.items())}
        object.__setattr__(self, "components", comps)
        if math.isnan(self.aggregate):
            object.__setattr__(self, "aggregate", math.fsum(comps.values()))

    def by_window(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Durations and component values of window ``n``, sorted by duration."""
        items = [(t, v) for (w, t), v in self.components.items() if w == n]
        if not items:
            return np.empty(0, dtype=np.int64), np.empty(0)
        taus, vals = zip(*items)
        return np.asarray(taus, dtype=np.int64), np.asarray(vals)

    @property
    def windows(self) -> tuple[int, ...]:
        return tuple(sorted({n for n, _ in self.components}))


@dataclass(frozen=True)
class PowerLawPair:
    """Exponents of two power-law duration densities on [1, inf)."""

    alpha1: float
    alpha2: float

    def __post_init__(self):
        if not (self.alpha1 > 1.0 and self.alpha2 > 1.0):
            raise DomainError(f"power-law exponents must exceed 1, got ({self.alpha1}, {self.alpha2})")

    @classmethod
    def from_hurst(cls, h1: float, h2: float) -> PowerLawPair:
        _check_hurst(h1, h2)
        return cls(2.0 - h1, 2.0 - h2)


def _check_hurst(*hs):
    for h in hs:
        if not 0.0 < h < 1.0:
            raise DomainError(f"Hurst exponent must lie in (0, 1), got {h}")


def _check_probability(p, name="p"):
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"{name} must be a probability in [0, 1], got {p}")


def kl_component(p: float, q: float) -> float:
    """p log(p / q), with the 0 log 0 = 0 convention."""
    _check_probability(p, "p")
    _check_probability(q, "q")
    if p == 0.0:
        return 0.0
    if q == 0.0:
        raise SupportError("p > 0 where q = 0", uncovered_mass=p)
    return p * math.log(p / q)


def shannon_component(p: float) -> float:
    """-p log p, with the 0 log 0 = 0 convention."""
    _check_probability(p)
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log(p)


def align_support(P: DurationDistribution, Q: DurationDistribution):
    """Restrict P and Q to supp(Q) and renormalise both.

    Returns the aligned masses of P and Q over the kept cells of supp(P) and
    the fraction of P's mass that fell outside supp(Q). Renormalisation
    follows the distributions' own mode, jointly or per window.
    """
    if P.normalization != Q.normalization:
        raise DomainError(f"P is {P.normalization}-normalised but Q is {Q.normalization}-normalised")
    kept = [k for k in P.counts if k in Q.counts]
    p_total = P.total_clusters
    lost = p_total - sum(P.counts[k] for k in kept)
    discarded = lost / p_total
    if not kept:
        return {}, {}, 1.0

    if P.normalization == "joint":
        pz = {None: sum(P.counts[k] for k in kept)}
        qz = {None: Q.total_clusters}
        key = lambda k: None  # noqa: E731
    else:
        pz, qz = {}, Q.window_totals()
        for k in kept:
            pz[k[0]] = pz.get(k[0], 0) + P.counts[k]
        key = lambda k: k[0]  # noqa: E731
    p = {k: P.counts[k] / pz[key(k)] for k in kept}
    q = {k: Q.counts[k] / qz[key(k)] for k in kept}
    return p, q, discarded


def kl_cluster_entropy(
    P: DurationDistribution,
    Q: DurationDistribution,
    max_discarded: float = DEFAULT_MAX_DISCARDED,
) -> EntropyProfile:
    """Kullback-Leibler cluster divergence D_C[P || Q] and its per-cell components.

    Cells of P outside the support of Q are dropped and both distributions
    renormalised over supp(Q); if more than ``max_discarded`` of P's mass is
    dropped a :class:`SupportError` is raised.
    """
    p, q, discarded = align_support(P, Q)
    if discarded > max_discarded:
        raise SupportError(
            f"P mass outside supp(Q) exceeds the tolerated fraction {max_discarded:g}", uncovered_mass=discarded
        )
    comps = {k: kl_component(p[k], q[k]) for k in p}
    return EntropyProfile("kl", comps, discarded_mass=discarded)


def shannon_cluster_entropy(P: DurationDistribution) -> EntropyProfile:
    """Shannon cluster entropy S_C[P] and its per-cell components."""
    comps = {k: shannon_component(m) for k, m in P.entries.items()}
    return EntropyProfile("shannon", comps)


def cumulative_by_window(profile: EntropyProfile, n: int, tau_max: int | None = None):
    """Running sum of the window-``n`` components over increasing duration."""
    taus, vals = profile.by_window(n)
    if tau_max is not None:
        keep = taus < tau_max
        taus, vals = taus[keep], vals[keep]
    return taus, np.cumsum(vals)


def kl_closed_form_alpha(pair: PowerLawPair) -> float:
    """Divergence between power laws with exponents alpha1 (P) and alpha2 (Q) on [1, inf).

    log((a1 - 1)/(a2 - 1)) - (a1 - a2)/(a1 - 1)
    """
    a1, a2 = pair.alpha1, pair.alpha2
    return math.log((a1 - 1.0) / (a2 - 1.0)) - (a1 - a2) / (a1 - 1.0)


def kl_closed_form_hurst(h1: float, h2: float) -> float:
    """Closed-form divergence in terms of Hurst exponents via alpha = 2 - H.

    Algebraically log((1 - H1)/(1 - H2)) + (H1 - H2)/(1 - H1).
    """
    return kl_closed_form_alpha(PowerLawPair.from_hurst(h1, h2))


def _truncated_integral(a1, a2, tau_max, epsabs):
    # integrate P log(P/Q) over [1, tau_max] in u = log(tau), where the
    # integrand is smooth and decays like exp(-(a1 - 1) u)
    c = math.log((a1 - 1.0) / (a2 - 1.0))
    g = a1 - 1.0
    da = a2 - a1

    def f(u):
        return g * math.exp(-g * u) * (c + da * u)

    upper = math.log(tau_max)
    val, err = integrate.quad(f, 0.0, upper, epsabs=epsabs, epsrel=1e-13, limit=500)
    return val, err


def kl_integral_oracle(
    pair: PowerLawPair,
    tau_max: float = 1e8,
    extrapolate: bool = True,
    tol: float = 1e-7,
) -> float:
    """Numerical quadrature of the continuous divergence integral.

    The integral of P log(P/Q) for P = (a1-1) tau^-a1 and Q = (a2-1) tau^-a2
    is evaluated on [1, tau_max]. Heavy tails (a1 close to 1) leave a large
    truncation remainder, which behaves like tau_max^-(a1-1) (A + B log tau_max).
    With ``extrapolate`` the quadrature is repeated at tau_max/10 and
    tau_max/100 and that remainder is eliminated from the three values;
    a second elimination from tau_max/10 .. tau_max/1000 serves as the
    convergence check, and a disagreement above ``tol`` raises
    :class:`NumericError`. Without ``extrapolate`` the plain truncated
    integral is returned.
    """
    if not tau_max > 1.0:
        raise DomainError(f"tau_max must exceed 1, got {tau_max}")
    a1, a2 = pair.alpha1, pair.alpha2
    if a1 == a2:
        return 0.0
    epsabs = 1e-14
    if not extrapolate:
        val, err = _truncated_integral(a1, a2, tau_max, epsabs)
        if err > tol:
            raise NumericError(f"quadrature did not converge (error estimate {err:.3g})")
        return val

    ts = [tau_max / 10.0**k for k in range(4)]
    if ts[-1] <= 1.0:
        raise DomainError(f"tau_max={tau_max} too small for tail extrapolation (needs > 1e3)")
    vals = []
    for t in ts:
        v, err = _truncated_integral(a1, a2, t, epsabs)
        if err > tol:
            raise NumericError(f"quadrature did not converge at tau_max={t:g} (error estimate {err:.3g})")
        vals.append(v)

    g = a1 - 1.0

    def limit(points, values):
        # I(t) = L - t^-g (A + B log t): linear in (L, A, B)
        rows = [[1.0, -(t**-g), -(t**-g) * math.log(t)] for t in points]
        return float(np.linalg.solve(np.array(rows), np.array(values))[0])

    best = limit(ts[:3], vals[:3])
    check = limit(ts[1:], vals[1:])
    residual = abs(best - check)
    if residual > tol:
        raise NumericError(f"tail extrapolation unstable (Richardson residual {residual:.3g})")
    return best
