"""Maximum simulated likelihood two ways: nested look-up and MPEC.

The benchmark estimator re-solves the reservation margin from a look-up
table inside every objective evaluation. The MPEC estimator promotes the
margin to a free variable and enforces the reservation-cost equation as
an equality constraint through an augmented-Lagrangian outer loop around
the same derivative-free inner optimizer.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .likelihood import DrawSet, log_likelihood
from .model import Dataset, Parameters
from .reservation import LookupTable, OutOfRange, cost_of_m, lookup_m, solve_m_newton

__all__ = [
    "OptimizerConfig",
    "EstimationResult",
    "nelder_mead",
    "augmented_lagrangian",
    "estimate_benchmark",
    "estimate_mpec",
]

_PENALTY = 1e10  # objective value substituted when the table range is left


@dataclass(frozen=True)
class OptimizerConfig:
    """Inner-optimizer and augmented-Lagrangian settings."""

    start: np.ndarray | None = None  # None -> all zeros
    f_tol: float = 1e-8
    x_tol: float = 1e-6
    max_evals: int = 50_000
    al_penalty0: float = 10.0
    al_growth: float = 10.0
    # enough outer iterations for the penalty ramp to finish: while the
    # residual is still improving 4x per round nu stays put, and larger
    # samples spend more rounds in that phase before the growth kicks in
    al_outer_max: int = 25
    constraint_tol: float = 1e-8
    # diagnostics switch: solve m by Newton instead of the table in the
    # benchmark's inner loop
    benchmark_newton: bool = False

    def __post_init__(self):
        if min(self.f_tol, self.x_tol, self.constraint_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.al_growth <= 1:
            raise ValueError("al_growth must exceed 1")


@dataclass
class EstimationResult:
    """Point estimates plus the run's bookkeeping."""

    theta_hat: Parameters
    m_hat: float
    loglik: float
    constraint_residual: float
    converged: bool
    evals: int
    wall_time: float
    method: str

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "beta": self.theta_hat.beta.tolist(),
            "log_c": self.theta_hat.log_c,
            "m_hat": self.m_hat,
            "loglik": self.loglik,
            "constraint_residual": self.constraint_residual,
            "converged": self.converged,
            "evals": self.evals,
            "wall_time": self.wall_time,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "EstimationResult":
        return cls(theta_hat=Parameters(beta=np.array(d["beta"]), log_c=d["log_c"]),
                   m_hat=d["m_hat"], loglik=d["loglik"],
                   constraint_residual=d["constraint_residual"],
                   converged=d["converged"], evals=d["evals"],
                   wall_time=d["wall_time"], method=d["method"])


def nelder_mead(objective, start: np.ndarray, f_tol: float = 1e-8,
                x_tol: float = 1e-6, max_evals: int = 50_000,
                initial_step: float = 0.25):
    """Simplex minimizer with standard coefficients (1, 2, 0.5, 0.5).

    The initial simplex is the start point plus one per-coordinate step.
    Terminates when the simplex function spread falls below ``f_tol``,
    its diameter below ``x_tol``, or the evaluation budget runs out.

    Returns ``(x_best, f_best, converged, evals)``.
    """
    start = np.asarray(start, dtype=float)
    n = len(start)
    evals = 0

    def f(x):
        nonlocal evals
        evals += 1
        return float(objective(x))

    # start vertex is evaluated first, honoring the declared initial point
    simplex = [start.copy()]
    fvals = [f(start)]
    for j in range(n):
        if evals >= max_evals:
            break
        x = start.copy()
        x[j] += initial_step
        simplex.append(x)
        fvals.append(f(x))
    while len(simplex) < n + 1:  # budget too small to even build the simplex
        simplex.append(simplex[0].copy())
        fvals.append(fvals[0])
    simplex = np.array(simplex)
    fvals = np.array(fvals)

    converged = False
    while True:
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        spread = fvals[-1] - fvals[0]
        diam = max(np.max(np.abs(simplex[k] - simplex[0]))
                   for k in range(1, n + 1))
        if spread <= f_tol or diam <= x_tol:
            converged = True
            break
        if evals >= max_evals:
            break
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)  # reflection
        fr = f(xr)
        if fr < fvals[0]:
            if evals < max_evals:
                xe = centroid + 2.0 * (centroid - worst)  # expansion
                fe = f(xe)
                if fe < fr:
                    simplex[-1], fvals[-1] = xe, fe
                    continue
            simplex[-1], fvals[-1] = xr, fr
        elif fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
        else:
            if fr < fvals[-1]:
                xc = centroid + 0.5 * (xr - centroid)  # outside contraction
            else:
                xc = centroid - 0.5 * (centroid - worst)  # inside contraction
            if evals >= max_evals:
                break
            fc = f(xc)
            if fc < min(fr, fvals[-1]):
                simplex[-1], fvals[-1] = xc, fc
            else:  # shrink toward the best vertex
                for k in range(1, n + 1):
                    if evals >= max_evals:
                        break
                    simplex[k] = simplex[0] + 0.5 * (simplex[k] - simplex[0])
                    fvals[k] = f(simplex[k])
                else:
                    continue
                break
    order = np.argsort(fvals, kind="stable")
    return simplex[order[0]].copy(), float(fvals[order[0]]), converged, evals


def _start_vector(config: OptimizerConfig, n: int) -> np.ndarray:
    if config.start is None:
        return np.zeros(n)
    start = np.asarray(config.start, dtype=float)
    if len(start) != n:
        raise ValueError(f"start vector must have length {n}")
    return start.copy()


def estimate_benchmark(dataset: Dataset, draws: DrawSet, table: LookupTable,
                       config: OptimizerConfig = OptimizerConfig(),
                       rho=10.0) -> EstimationResult:
    """Nested estimator: the margin is read from the table at every step."""
    J = dataset.J
    t0 = time.perf_counter()

    def m_of(log_c: float) -> float:
        c = math.exp(log_c)
        if config.benchmark_newton:
            return solve_m_newton(c, tol=1e-12)
        return lookup_m(table, c)

    def objective(x):
        theta = Parameters.from_vector(x)
        try:
            m = m_of(theta.log_c)
        except (OutOfRange, OverflowError):
            return _PENALTY
        return -log_likelihood(dataset, theta, draws, m, method="kernel", rho=rho)

    x_best, f_best, nm_converged, evals = nelder_mead(
        objective, _start_vector(config, J + 1), f_tol=config.f_tol,
        x_tol=config.x_tol, max_evals=config.max_evals)
    theta_hat = Parameters.from_vector(x_best)
    try:
        m_hat = m_of(theta_hat.log_c)
        in_range = True
    except (OutOfRange, OverflowError):
        m_hat = math.nan
        in_range = False
    loglik = -f_best if in_range else math.nan
    residual = (abs(cost_of_m(m_hat) - theta_hat.cost) if in_range else math.inf)
    return EstimationResult(theta_hat=theta_hat, m_hat=m_hat, loglik=loglik,
                            constraint_residual=residual,
                            converged=nm_converged and in_range, evals=evals,
                            wall_time=time.perf_counter() - t0,
                            method="benchmark")


def augmented_lagrangian(neg_objective, constraint, start: np.ndarray,
                         config: OptimizerConfig = OptimizerConfig()):
    """Minimize ``neg_objective`` subject to ``constraint(x) == 0``.

    Classic equality-constrained augmented Lagrangian: minimize
    f + lam*h + (nu/2)*h^2 with the derivative-free inner solver, update
    the multiplier lam <- lam + nu*h, and grow nu when the residual
    stalls. Returns ``(x, h, converged, evals)``.
    """
    lam = 0.0
    nu = config.al_penalty0
    x = np.asarray(start, dtype=float).copy()
    total_evals = 0
    converged = False
    prev_abs_h = math.inf
    # the constraint must be resolvable by the inner solver, so its
    # simplex diameter tolerance is capped at the constraint tolerance
    inner_x_tol = min(config.x_tol, config.constraint_tol)
    step = 0.25
    for _ in range(config.al_outer_max):
        def objective(xv):
            h = constraint(xv)
            return neg_objective(xv) + lam * h + 0.5 * nu * h * h

        budget = config.max_evals - total_evals
        if budget <= 0:
            break
        x, _, inner_ok, evals = nelder_mead(
            objective, x, f_tol=config.f_tol, x_tol=inner_x_tol,
            max_evals=budget, initial_step=step)
        total_evals += evals
        h = constraint(x)
        if abs(h) <= config.constraint_tol and inner_ok:
            converged = True
            break
        lam += nu * h
        # grow the penalty on stall, and keep growing it once the residual
        # is small: the inner solver's constraint noise shrinks ~1/sqrt(nu),
        # so a frozen penalty would plateau above constraint_tol
        if abs(h) > prev_abs_h / 4.0 or abs(h) <= 1e4 * config.constraint_tol:
            nu *= config.al_growth
        prev_abs_h = abs(h)
        # warm restarts only need a local simplex around the last optimum
        step = max(0.01, 0.2 * step)
    return x, constraint(x), converged, total_evals


def estimate_mpec(dataset: Dataset, draws: DrawSet,
                  config: OptimizerConfig = OptimizerConfig(),
                  rho=10.0) -> EstimationResult:
    """MPEC estimator via an augmented Lagrangian.

    Optimizes over (beta, log_c, m) jointly; the reservation-cost
    equation enters as the scalar equality h = cost_of_m(m) - exp(log_c).
    The definitional identities for u and z are substituted analytically
    inside the likelihood.
    """
    J = dataset.J
    t0 = time.perf_counter()

    def h_of(x) -> float:
        return cost_of_m(x[J + 1]) - math.exp(min(x[J], 700.0))

    def nll(xv):
        theta = Parameters(beta=xv[:J], log_c=float(xv[J]))
        return -log_likelihood(dataset, theta, draws, float(xv[J + 1]),
                               method="kernel", rho=rho)

    x, _, converged, total_evals = augmented_lagrangian(
        nll, h_of, _start_vector(config, J + 2), config)
    theta_hat = Parameters(beta=x[:J].copy(), log_c=float(x[J]))
    m_hat = float(x[J + 1])
    loglik = log_likelihood(dataset, theta_hat, draws, m_hat, method="kernel",
                            rho=rho)
    return EstimationResult(theta_hat=theta_hat, m_hat=m_hat, loglik=loglik,
                            constraint_residual=abs(h_of(x)),
                            converged=converged, evals=total_evals,
                            wall_time=time.perf_counter() - t0, method="mpec")
