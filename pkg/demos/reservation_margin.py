"""Walkthrough: the reservation-cost equation and its three solvers.

The margin m(c) solves c = phi(m) + m*(Phi(m) - 1). It is the amount by
which a product's reservation utility exceeds its pre-search utility:
costly search is only worthwhile while some unsearched reservation
utility beats the best utility in hand.

Run:  python3 demos/reservation_margin.py
"""

import math

import numpy as np

from seqsearch import (build_lookup, cost_of_m, lookup_m,
                       solve_m_contraction, solve_m_newton)

# --- m(c) is strictly decreasing: cheap search -> high threshold -------

print("cost c        margin m(c)")
for c in (1e-6, 1e-4, 0.01, math.exp(-3), 0.1, 0.3989422804014327, 1.0):
    print(f"{c:10.6f}    {solve_m_newton(c):+.10f}")
print()
print("At c = phi(0) ~ 0.39894 the margin is exactly zero: paying that")
print("much to open a box is only justified when its pre-search utility")
print("already matches the best alternative.")
print()

# --- Newton and the accelerated contraction agree to ~1e-11 ------------

costs = np.exp(np.linspace(math.log(1e-6), math.log(0.39), 9))
print("cost c        newton            contraction       |gap|")
for c in costs:
    mn = solve_m_newton(c)
    mc = solve_m_contraction(c)
    print(f"{c:10.2e}  {mn:+.12f}   {mc:+.12f}   {abs(mn - mc):.1e}")
print()

# --- the benchmark's look-up table and its interpolation error ---------

table = build_lookup(1e-6, 0.5, 0.001)
print(f"look-up table: {len(table.m_values)} nodes on "
      f"[{table.c_min:g}, {table.c_max:g}], fineness {table.fineness:g}")
worst = 0.0
rng = np.random.default_rng(0)
for c in np.exp(rng.uniform(-4.0, -1.0, size=2000)):
    worst = max(worst, abs(lookup_m(table, c) - solve_m_newton(c)))
print(f"max linear-interpolation error over 2000 costs in [e-4, e-1]: "
      f"{worst:.2e}")
print()
print("Residual check: every solver output m satisfies the equation")
m = solve_m_newton(math.exp(-3))
print(f"|cost_of_m(m) - c| at c = e^-3: {abs(cost_of_m(m) - math.exp(-3)):.2e}")
