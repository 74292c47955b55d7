"""Structural search model: utilities and Weitzman's optimal policy.

A consumer sees pre-search utility delta_ij = xi_ij + mu_ij, reservation
utility z_ij = delta_ij + m(c), and post-search utility u_ij = delta_ij +
eps_ij; the outside option j=0 costs nothing and delivers u_i0 = eps_i0.
Consumers search in descending z, stop as soon as the best utility in
hand beats every unsearched z, and buy the best searched option.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .reservation import solve_m_newton
from .stats import RngStream, draw_normal_array

__all__ = [
    "Parameters",
    "ConsumerDraws",
    "ConsumerRecord",
    "Dataset",
    "pre_search_utility",
    "reservation_utility",
    "post_search_utility",
    "simulate_consumer",
    "simulate_dataset",
    "dataset_to_csv",
    "dataset_from_csv",
]


@dataclass(frozen=True)
class Parameters:
    """Structural parameter vector: brand intercepts and log search cost."""

    beta: np.ndarray
    log_c: float

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))

    @property
    def cost(self) -> float:
        return math.exp(self.log_c)

    def as_vector(self) -> np.ndarray:
        return np.append(self.beta, self.log_c)

    @classmethod
    def from_vector(cls, x) -> "Parameters":
        x = np.asarray(x, dtype=float)
        return cls(beta=x[:-1].copy(), log_c=float(x[-1]))


@dataclass(frozen=True)
class ConsumerDraws:
    """One consumer's shocks: mu, eps per product plus the outside eps0."""

    mu: np.ndarray
    eps: np.ndarray
    eps0: float


@dataclass(frozen=True)
class ConsumerRecord:
    """Observed search order (1-based product ids) and purchase (0 = outside)."""

    searched: tuple[int, ...]
    purchase: int
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "searched", tuple(int(j) for j in self.searched))
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=float))
        if len(set(self.searched)) != len(self.searched):
            raise ValueError("searched list contains duplicates")
        if self.purchase != 0 and self.purchase not in self.searched:
            raise ValueError("purchase must be a searched product or the outside option")


@dataclass
class Dataset:
    """A cross-section of consumer records sharing a product count J."""

    consumers: list[ConsumerRecord]
    J: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for rec in self.consumers:
            if len(rec.xi) != self.J:
                raise ValueError("all records must share the dataset's J")

    def __len__(self) -> int:
        return len(self.consumers)

    def xi_matrix(self) -> np.ndarray:
        return np.array([rec.xi for rec in self.consumers])


def pre_search_utility(params: Parameters, draws: ConsumerDraws, j: int) -> float:
    """delta_ij = xi_ij + mu_ij with xi_ij = beta_j (1-based j)."""
    if not 1 <= j <= len(params.beta):
        raise IndexError(f"product index {j} out of range")
    return float(params.beta[j - 1] + draws.mu[j - 1])


def reservation_utility(params: Parameters, draws: ConsumerDraws, j: int,
                        m: float) -> float:
    """z_ij = delta_ij + m."""
    return pre_search_utility(params, draws, j) + m


def post_search_utility(params: Parameters, draws: ConsumerDraws, j: int) -> float:
    """u_ij = delta_ij + eps_ij; j = 0 is the outside option u_i0 = eps0."""
    if j == 0:
        return float(draws.eps0)
    return pre_search_utility(params, draws, j) + float(draws.eps[j - 1])


def simulate_consumer(params: Parameters, draws: ConsumerDraws, m: float) -> ConsumerRecord:
    """Run the selection/stopping/choice rules for one consumer.

    The outside utility is in hand from the start and participates in the
    running maximum but is never "searched". Ties in z break by ascending
    product index; ties in u break by ascending index with the outside
    option winning.
    """
    J = len(params.beta)
    delta = params.beta + draws.mu
    z = delta + m
    u = delta + draws.eps
    # descending z, ascending index on ties
    order = sorted(range(J), key=lambda k: (-z[k], k))
    u_star = float(draws.eps0)
    searched: list[int] = []
    for k in order:
        if u_star >= z[k]:
            break
        searched.append(k + 1)
        if u[k] > u_star:
            u_star = float(u[k])
    purchase = 0
    best = float(draws.eps0)
    for j in sorted(searched):
        if u[j - 1] > best:
            best = float(u[j - 1])
            purchase = j
    return ConsumerRecord(searched=tuple(searched), purchase=purchase,
                          xi=params.beta.copy())


def simulate_dataset(params: Parameters, N: int, J: int, stream: RngStream) -> Dataset:
    """Simulate N consumers with per-consumer substreams.

    The reservation equation is solved once since the cost is common.
    Per-consumer draw layout is (mu_1..mu_J, eps_1..eps_J, eps0), so a
    parallel split over consumers reproduces the sequential result.
    """
    if N < 1 or J < 1:
        raise ValueError("N and J must be >= 1")
    if len(params.beta) != J:
        raise ValueError("parameter vector does not match J")
    m = solve_m_newton(params.cost, tol=1e-12)
    consumers = []
    for i in range(N):
        raw = draw_normal_array(stream.child(i), 2 * J + 1)
        draws = ConsumerDraws(mu=raw[:J], eps=raw[J:2 * J], eps0=float(raw[2 * J]))
        consumers.append(simulate_consumer(params, draws, m))
    return Dataset(consumers=consumers, J=J,
                   meta={"root_seed": stream.root_seed, "path": list(stream.path),
                         "beta": params.beta.tolist(), "log_c": params.log_c})


def dataset_to_csv(dataset: Dataset, path: str) -> None:
    """One row per (consumer, product) plus an outside-option row each.

    Columns: consumer_id, product_id, xi, searched_rank (0 = not
    searched), purchased (0/1). Reals carry 17 significant digits so the
    file round-trips losslessly.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["consumer_id", "product_id", "xi", "searched_rank", "purchased"])
        for i, rec in enumerate(dataset.consumers):
            rank = {j: h + 1 for h, j in enumerate(rec.searched)}
            w.writerow([i, 0, f"{0.0:.17g}", 0, int(rec.purchase == 0)])
            for j in range(1, dataset.J + 1):
                w.writerow([i, j, f"{rec.xi[j - 1]:.17g}", rank.get(j, 0),
                            int(rec.purchase == j)])


def dataset_from_csv(path: str) -> Dataset:
    """Inverse of :func:`dataset_to_csv`."""
    rows: dict[int, dict[int, tuple[float, int, int]]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            i = int(row["consumer_id"])
            j = int(row["product_id"])
            rows.setdefault(i, {})[j] = (float(row["xi"]),
                                         int(row["searched_rank"]),
                                         int(row["purchased"]))
    if not rows:
        raise ValueError(f"no records in {path}")
    J = max(max(prods) for prods in rows.values())
    consumers = []
    for i in sorted(rows):
        prods = rows[i]
        xi = np.array([prods[j][0] for j in range(1, J + 1)])
        by_rank = sorted((rank, j) for j, (_, rank, _) in prods.items()
                         if j > 0 and rank > 0)
        searched = tuple(j for _, j in by_rank)
        purchased = [j for j, (_, _, p) in prods.items() if p == 1]
        if len(purchased) != 1:
            raise ValueError(f"consumer {i} must purchase exactly one option")
        consumers.append(ConsumerRecord(searched=searched, purchase=purchased[0],
                                        xi=xi))
    return Dataset(consumers=consumers, J=J)
