"""Solvers for the reservation-margin equation c = phi(m) + m*(Phi(m) - 1).

The map m(c) is strictly decreasing with a unique root for every c > 0.
Three interchangeable routes are provided: a safeguarded Newton solver, a
contraction-mapping solver, and a pre-computed look-up table with linear
interpolation (the benchmark's route).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .stats import norm_pdf, norm_sf

__all__ = [
    "NonPositiveCost",
    "NoConvergence",
    "MaxIterationsExceeded",
    "OutOfRange",
    "cost_of_m",
    "solve_m_newton",
    "solve_m_contraction",
    "LookupTable",
    "build_lookup",
    "lookup_m",
    "table_to_csv",
    "table_from_csv",
]


class NonPositiveCost(ValueError):
    """Search cost must be strictly positive."""


class NoConvergence(RuntimeError):
    """Newton failed to reach tolerance; indicates a solver bug."""


class MaxIterationsExceeded(RuntimeError):
    """Contraction iteration cap hit before reaching tolerance."""


class OutOfRange(ValueError):
    """Cost falls outside the look-up table's domain; no extrapolation."""


def cost_of_m(m: float) -> float:
    """Search cost implied by reservation margin m.

    Evaluates phi(m) - m*(1 - Phi(m)) with the upper tail computed
    directly, so the heavy cancellation at large m does not destroy the
    ~1e-12 residuals the solvers need.
    """
    return norm_pdf(m) - m * norm_sf(m)


def _bracket_low(c: float) -> float:
    lo = -10.0
    while cost_of_m(lo) < c:
        lo *= 2.0
    return lo


def solve_m_newton(c: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Reservation margin via safeguarded Newton on q(m) = cost_of_m(m) - c.

    q'(m) = Phi(m) - 1 analytically; a maintained bracket turns any
    wayward Newton step into a bisection step, so the iteration is
    globally convergent. Converges when the cost residual is within
    ``tol`` and the implied margin error |q|/(1 - Phi(m)) is negligible,
    which keeps all three solution routes mutually consistent.
    """
    if not c > 0.0:
        raise NonPositiveCost(f"search cost must be > 0, got {c}")
    if not tol > 0.0:
        raise ValueError("tol must be > 0")
    lo = _bracket_low(c)  # cost_of_m(lo) >= c
    hi = 10.0  # cost_of_m(10) ~ 8e-24, below any representable c of interest
    m = 0.0
    for _ in range(max_iter):
        q = cost_of_m(m) - c
        sf = norm_sf(m)
        if abs(q) <= tol and abs(q) <= _margin_tol(m, tol) * sf:
            return m
        if q > 0.0:
            lo = m
        else:
            hi = m
        m_new = m + q / sf if sf > 0.0 else 0.5 * (lo + hi)
        if not lo < m_new < hi:
            m_new = 0.5 * (lo + hi)
        if m_new == m:
            return m
        m = m_new
    q = cost_of_m(m) - c
    if abs(q) <= tol:
        return m
    raise NoConvergence(f"newton residual {q:.3e} > tol {tol:.3e} for c={c}")


def _margin_tol(m: float, tol: float) -> float:
    # target accuracy in m itself: tol, but never below a few ulps of m
    return max(tol, 8.0 * abs(m) * np.finfo(float).eps)


def solve_m_contraction(c: float, tol: float = 1e-12, max_iter: int = 10 ** 6) -> float:
    """Reservation margin via the contraction Gamma(m) = -c + phi(m) + m*Phi(m).

    Gamma(m) - m equals cost_of_m(m) - c, so the iterate is evaluated in
    that cancellation-free form. Successive substitution alone is
    painfully slow for tiny c (contraction factor Phi(m) -> 1), so each
    sweep also forms the secant through (m, Gamma(m)) and takes the
    extrapolated point when it is sane; the accepted point is still a
    fixed point of Gamma to within tolerance.
    """
    if not c > 0.0:
        raise NonPositiveCost(f"search cost must be > 0, got {c}")
    if not tol > 0.0:
        raise ValueError("tol must be > 0")
    m = 0.0
    for it in range(max_iter):
        q = cost_of_m(m) - c  # == Gamma(m) - m
        if q == 0.0 or abs(q) <= _margin_tol(m, tol) * norm_sf(m):
            return m
        if it > 500 and abs(q) <= tol:
            # settled onto the floating-point fixed point; residual met
            return m
        m1 = m + q  # plain contraction step
        step = m1 - m
        if step == 0.0:
            return m
        q1 = cost_of_m(m1) - c
        slope = (q1 - q) / step
        if math.isfinite(slope) and slope < 0.0:
            m_new = m - q / slope
            if not math.isfinite(m_new):
                m_new = m1
        else:
            m_new = m1
        m = m_new
    raise MaxIterationsExceeded(
        f"contraction did not converge within {max_iter} iterations for c={c}"
    )


@dataclass(frozen=True)
class LookupTable:
    """Pre-computed monotone map from search cost to reservation margin.

    Node costs are ``c_min + k*fineness``; ``m_values[k]`` solves the
    reservation equation at node k to 1e-12. Immutable after build.
    """

    c_min: float
    c_max: float
    fineness: float
    m_values: np.ndarray

    @property
    def c_values(self) -> np.ndarray:
        return self.c_min + self.fineness * np.arange(len(self.m_values))


def build_lookup(c_min: float, c_max: float, fineness: float = 0.001) -> LookupTable:
    """Build a look-up table over [c_min, c_max] with the given grid step."""
    if not (0.0 < c_min < c_max):
        raise ValueError("require 0 < c_min < c_max")
    if not fineness > 0.0:
        raise ValueError("fineness must be > 0")
    n_nodes = int(math.floor((c_max - c_min) / fineness + 1e-9)) + 1
    costs = c_min + fineness * np.arange(n_nodes)
    m_values = np.array([solve_m_newton(float(c), tol=1e-12) for c in costs])
    return LookupTable(c_min=c_min, c_max=float(costs[-1]), fineness=fineness,
                       m_values=m_values)


def lookup_m(table: LookupTable, c: float) -> float:
    """Linearly interpolated margin; exact at grid nodes, no extrapolation."""
    if not (table.c_min <= c <= table.c_max):
        raise OutOfRange(
            f"cost {c} outside table range [{table.c_min}, {table.c_max}]"
        )
    k = int(math.floor((c - table.c_min) / table.fineness))
    k = min(max(k, 0), len(table.m_values) - 1)
    c_k = table.c_min + k * table.fineness
    # floor rounding can land one node high when c sits exactly on a node
    if c < c_k and k > 0:
        k -= 1
        c_k = table.c_min + k * table.fineness
    if c == c_k or k == len(table.m_values) - 1:
        return float(table.m_values[k])
    t = (c - c_k) / table.fineness
    return float((1.0 - t) * table.m_values[k] + t * table.m_values[k + 1])


def table_to_csv(table: LookupTable, path: str) -> None:
    """Write the table as two-column ``c,m`` CSV with 17 significant digits."""
    with open(path, "w") as fh:
        fh.write("c,m\n")
        for c, m in zip(table.c_values, table.m_values):
            fh.write(f"{c:.17g},{m:.17g}\n")


def table_from_csv(path: str) -> LookupTable:
    """Rebuild a table from :func:`table_to_csv` output."""
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    data = np.atleast_2d(data)
    c = data[:, 0]
    if len(c) < 2:
        raise ValueError("table CSV needs at least two nodes")
    fineness = float(c[1] - c[0])
    return LookupTable(c_min=float(c[0]), c_max=float(c[-1]),
                       fineness=fineness, m_values=data[:, 1].copy())
