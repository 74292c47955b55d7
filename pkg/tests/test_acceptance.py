"""End-to-end acceptance checks, one per shipped guarantee.

Each test prints a single PASS/FAIL line with the measured quantity.
Checks 6-8 share a 10-replication Monte Carlo run; setting
``SEQSEARCH_FULL_MC=1`` switches check 7 to the full 50-replication
experiment (hours), and ``SEQSEARCH_MC_DIR`` can point it at an existing
output directory produced by ``seqsearch montecarlo`` with the default
configuration instead of recomputing it.
"""

import json
import math
import os
import time

import numpy as np
import pytest

from seqsearch.estimation import OptimizerConfig
from seqsearch.harness import MonteCarloConfig, run_monte_carlo
from seqsearch.likelihood import (DrawSet, build_draw_set, compute_v,
                                  consumer_likelihoods, crude_likelihood)
from seqsearch.model import (ConsumerDraws, ConsumerRecord, Dataset,
                             Parameters, simulate_consumer)
from seqsearch.reservation import (build_lookup, cost_of_m, lookup_m,
                                   solve_m_contraction, solve_m_newton)
from seqsearch.stats import RngStream, draw_normal_array

from .oracle import oracle_crude, oracle_policy, oracle_v

TRUTH = Parameters(beta=np.array([1.0, 0.7, 0.5, 0.3]), log_c=-3.0)

# Reference values for the qualitative comparison in check 7: published
# Monte Carlo bias/RMSE for (beta1..beta4, log c) and mean seconds, per
# sample size and method.
REFERENCE = {
    (500, "mpec"): {
        "bias": [-0.179, -0.156, -0.044, -0.062, 0.214],
        "rmse": [0.250, 0.216, 0.071, 0.182, 0.250],
        "time": 67.957,
    },
    (500, "benchmark"): {
        "bias": [-0.212, -0.168, -0.109, -0.060, 0.248],
        "rmse": [0.273, 0.237, 0.200, 0.192, 0.304],
        "time": 12.691,
    },
    (1000, "mpec"): {
        "bias": [-0.272, -0.199, -0.173, -0.112, 0.161],
        "rmse": [0.361, 0.332, 0.255, 0.258, 0.255],
        "time": 182.293,
    },
    (1000, "benchmark"): {
        "bias": [-0.203, -0.114, -0.088, -0.036, 0.265],
        "rmse": [0.251, 0.174, 0.157, 0.159, 0.290],
        "time": 40.294,
    },
}

PARAMS = ("beta1", "beta2", "beta3", "beta4", "log_c")


def _verdict(num, name, ok, detail):
    print(f"ACCEPTANCE {num} ({name}): {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"acceptance {num} ({name}): {detail}"


def test_01_equation_fidelity():
    t0 = time.perf_counter()
    costs = np.exp(np.linspace(math.log(1e-6), math.log(0.39), 1000))
    worst_resid = 0.0
    worst_gap = 0.0
    for c in costs:
        mn = solve_m_newton(c)
        mc = solve_m_contraction(c)
        worst_resid = max(worst_resid, abs(cost_of_m(mn) - c),
                          abs(cost_of_m(mc) - c))
        worst_gap = max(worst_gap, abs(mn - mc))
    elapsed = time.perf_counter() - t0
    ok = worst_resid <= 1e-11 and worst_gap <= 1e-9 and elapsed < 1.0
    _verdict(1, "equation fidelity",
             ok, f"max residual {worst_resid:.2e}, max solver gap "
                 f"{worst_gap:.2e}, {elapsed:.2f}s over 1000 costs")


def test_02_boundary_anchor():
    phi0 = 0.3989422804014327  # phi(0): the cost at which m = 0 exactly
    worst = max(abs(solve_m_newton(phi0)), abs(solve_m_contraction(phi0)))
    _verdict(2, "boundary anchor", worst <= 1e-10, f"|m(phi(0))| = {worst:.2e}")


def test_03_lookup_interpolation_error():
    t0 = time.perf_counter()
    table = build_lookup(1e-6, 0.5, 0.001)
    rng = np.random.default_rng(2024)
    costs = np.exp(rng.uniform(-4.0, -1.0, size=10_000))
    worst = max(abs(lookup_m(table, c) - solve_m_newton(c)) for c in costs)
    elapsed = time.perf_counter() - t0
    ok = worst <= 5e-4 and elapsed < 5.0
    _verdict(3, "look-up interpolation error", ok,
             f"max |interp - newton| = {worst:.2e} over 10000 costs "
             f"in [e^-4, e^-1], {elapsed:.2f}s")


def _check_policy_invariants(rec, z, u, u0):
    J = len(z)
    order = sorted(range(J), key=lambda k: (-z[k], k))
    s = [j - 1 for j in rec.searched]
    # selection rule: the searched set is a prefix of the descending-z order
    if s != order[:len(s)]:
        return "selection"
    # stopping rule: strictly beaten best-in-hand before each search, and
    # best-in-hand at least the best unsearched z at the stop
    best = u0
    for k in s:
        if best >= z[k]:
            return "stopping (searched too far)"
        best = max(best, u[k])
    unsearched = [z[k] for k in order[len(s):]]
    if unsearched and best < max(unsearched):
        return "stopping (stopped too early)"
    # choice rule: best searched utility, outside on ties
    want = 0
    bought = u0
    for k in sorted(s):
        if u[k] > bought:
            bought = u[k]
            want = k + 1
    if rec.purchase != want:
        return "choice"
    return None


def test_04_policy_invariants():
    t0 = time.perf_counter()
    N, J = 100_000, 4
    m = solve_m_newton(TRUTH.cost)
    raw_all = draw_normal_array(RngStream(31415, (0,)),
                                N * (2 * J + 1)).reshape(N, 2 * J + 1)
    violations = 0
    for i in range(N):
        raw = raw_all[i]
        draws = ConsumerDraws(mu=raw[:J], eps=raw[J:2 * J],
                              eps0=float(raw[2 * J]))
        rec = simulate_consumer(TRUTH, draws, m)
        z = TRUTH.beta + draws.mu + m
        u = TRUTH.beta + draws.mu + draws.eps
        if _check_policy_invariants(rec, z, u, draws.eps0) is not None:
            violations += 1
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and elapsed < 10.0
    _verdict(4, "policy invariants", ok,
             f"{violations} violations over {N} consumers, {elapsed:.1f}s")


def test_05_kernel_crude_limit():
    t0 = time.perf_counter()
    # pool consumers with clear margins: every finite per-draw |v| >= 0.01
    m = solve_m_newton(TRUTH.cost)
    stream = RngStream(27182)
    J, D = 4, 3
    selected = []
    batch = 0
    while len(selected) < 100 and batch < 40:
        n = 100
        draw_stream = stream.child(0, batch)
        data_stream = stream.child(1, batch)
        draws = build_draw_set(n, J, D, draw_stream)
        for i in range(n):
            raw = draw_normal_array(data_stream.child(i), 2 * J + 1)
            cd = ConsumerDraws(mu=raw[:J], eps=raw[J:2 * J],
                               eps0=float(raw[2 * J]))
            rec = simulate_consumer(TRUTH, cd, m)
            clear = True
            for d in range(D):
                z = TRUTH.beta + draws.mu[i, :, d] + m
                u = TRUTH.beta + draws.mu[i, :, d] + draws.eps[i, :, d]
                v = compute_v(rec, z, u, float(draws.eps0[i, d]))
                finite = [x for x in v.all_margins() if math.isfinite(x)]
                if finite and min(abs(x) for x in finite) < 0.01:
                    clear = False
                    break
            if clear:
                selected.append((rec, draws.mu[i], draws.eps[i],
                                 draws.eps0[i]))
            if len(selected) == 100:
                break
        batch += 1
    assert len(selected) == 100, "could not assemble a clear-margin panel"
    dataset = Dataset(consumers=[rec for rec, *_ in selected], J=J)
    pool = DrawSet(mu=np.stack([mu for _, mu, _, _ in selected]),
                   eps=np.stack([eps for _, _, eps, _ in selected]),
                   eps0=np.stack([e0 for _, _, _, e0 in selected]))
    crude = consumer_likelihoods(dataset, TRUTH, pool, m, method="crude")
    kern = consumer_likelihoods(dataset, TRUTH, pool, m, method="kernel",
                                rho=1e4)
    worst = float(np.max(np.abs(kern - crude)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 5.0
    _verdict(5, "kernel-to-crude limit", ok,
             f"max |kernel(rho=1e4) - crude| = {worst:.2e} over 100 "
             f"clear-margin consumers, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# Monte Carlo based checks (6-8) share one 10-replication run


def _ci_config(replications=10):
    return MonteCarloConfig(replications=replications)


@pytest.fixture(scope="module")
def ci_run(tmp_path_factory):
    mc_dir = os.environ.get("SEQSEARCH_MC_DIR")
    if mc_dir and os.path.exists(os.path.join(mc_dir, "report.csv")):
        return mc_dir
    out = tmp_path_factory.mktemp("mc") / "ci"
    run_monte_carlo(_ci_config(), out_dir=str(out), workers=1)
    return str(out)


def _load_results(out_dir, N, method):
    results = []
    base = os.path.join(out_dir, "runs", f"N{N}")
    for rep in sorted(os.listdir(base)):
        path = os.path.join(base, rep, f"{method}.json")
        with open(path) as fh:
            results.append(json.load(fh))
    return results


def _load_report_csv(out_dir):
    cells = {}
    with open(os.path.join(out_dir, "report.csv")) as fh:
        header = fh.readline().strip()
        assert header == "N,method,parameter,bias,rmse"
        for line in fh:
            N, method, param, a, b = line.strip().split(",")
            cells[(int(N), method, param)] = (float(a), float(b))
    return cells


def test_06_mpec_feasibility(ci_run):
    checked = 0
    worst = 0.0
    for N in (500, 1000):
        for doc in _load_results(ci_run, N, "mpec"):
            if doc["converged"]:
                checked += 1
                worst = max(worst, doc["constraint_residual"])
    ok = checked > 0 and worst <= 1e-8
    _verdict(6, "MPEC feasibility", ok,
             f"max constraint residual {worst:.2e} over {checked} "
             f"converged MPEC runs")


def test_07_qualitative_table(ci_run, tmp_path_factory):
    full = os.environ.get("SEQSEARCH_FULL_MC") == "1"
    if full and not (os.environ.get("SEQSEARCH_MC_DIR")
                     and ci_run == os.environ.get("SEQSEARCH_MC_DIR")):
        out = tmp_path_factory.mktemp("mc") / "full"
        run_monte_carlo(_ci_config(50), out_dir=str(out), workers=1)
        out_dir = str(out)
    else:
        out_dir = ci_run
    cells = _load_report_csv(out_dir)
    times = {}
    for (N, method), ref in REFERENCE.items():
        secs = [doc["wall_time"] for doc in _load_results(out_dir, N, method)
                if doc["converged"]]
        times[(N, method)] = float(np.mean(secs))

    sign_ok, factor_ok, logc_ok = [], [], []
    for (N, method), ref in REFERENCE.items():
        for k, p in enumerate(PARAMS):
            bias, rmse = cells[(N, method, p)]
            want_bias, want_rmse = ref["bias"][k], ref["rmse"][k]
            if p == "log_c":
                logc_ok.append(bias > 0)
            else:
                sign_ok.append(bias < 0)
            factor_ok.append(abs(want_bias) / 3 <= abs(bias)
                             <= abs(want_bias) * 3)
            factor_ok.append(want_rmse / 3 <= rmse <= want_rmse * 3)
    time_ok = all(times[(N, "mpec")] > times[(N, "benchmark")]
                  for N in (500, 1000))

    detail = (f"{'full' if full else 'reps=10 CI'} run: "
              f"beta sign {sum(sign_ok)}/{len(sign_ok)}, "
              f"log c sign {sum(logc_ok)}/{len(logc_ok)}, "
              f"factor-3 {sum(factor_ok)}/{len(factor_ok)}, "
              f"mpec slower at both N: {time_ok}; "
              f"times {{(500): {times[(500, 'mpec')]:.1f}/"
              f"{times[(500, 'benchmark')]:.1f}s, (1000): "
              f"{times[(1000, 'mpec')]:.1f}/{times[(1000, 'benchmark')]:.1f}s}}")
    if full:
        ok = all(sign_ok) and all(logc_ok) and all(factor_ok) and time_ok
    else:
        # at 10 replications the small-bias sign and factor-3 comparisons
        # are inside Monte Carlo noise; they bind on the full run only
        ok = all(logc_ok) and time_ok
    _verdict(7, "qualitative table reproduction", ok, detail)


def test_08_determinism_across_workers(ci_run, tmp_path_factory):
    if os.environ.get("SEQSEARCH_MC_DIR"):
        # an externally supplied run may use a different configuration, so
        # produce the reps=10 baseline locally
        base = tmp_path_factory.mktemp("mc") / "base"
        run_monte_carlo(_ci_config(), out_dir=str(base), workers=1)
        ci_run = str(base)
    with open(os.path.join(ci_run, "report.csv"), "rb") as fh:
        baseline = fh.read()
    out = tmp_path_factory.mktemp("mc") / "rerun"
    run_monte_carlo(_ci_config(), out_dir=str(out), workers=2)
    with open(out / "report.csv", "rb") as fh:
        rerun = fh.read()
    ok = baseline == rerun
    _verdict(8, "determinism across worker counts", ok,
             f"report.csv byte-identical across workers=1 and workers=2: {ok}")


def test_09_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(161803)
    m = solve_m_newton(TRUTH.cost)
    mism_v = 0
    mism_crude = 0
    for _ in range(1000):
        J = 4
        mu = rng.normal(size=J)
        eps = rng.normal(size=J)
        eps0 = float(rng.normal())
        cd = ConsumerDraws(mu=mu, eps=eps, eps0=eps0)
        rec = simulate_consumer(TRUTH, cd, m)
        z = TRUTH.beta + mu + m
        u = TRUTH.beta + mu + eps
        want = oracle_v(list(rec.searched), rec.purchase, list(z), list(u),
                        eps0)
        got = compute_v(rec, z, u, eps0)
        if (list(got.v1) != want["v1"] or list(got.v2) != want["v2"]
                or got.v3 != want["v3"] or got.v4 != want["v4"]):
            mism_v += 1
        D = 7
        dmu = rng.normal(size=(J, D))
        deps = rng.normal(size=(J, D))
        deps0 = rng.normal(size=D)
        ds = DrawSet(mu=dmu[None], eps=deps[None], eps0=deps0[None])
        got_c = crude_likelihood(rec, TRUTH, ds, m)
        want_c = oracle_crude(list(rec.searched), rec.purchase,
                              list(TRUTH.beta), m,
                              [list(dmu[:, d]) for d in range(D)],
                              [list(deps[:, d]) for d in range(D)],
                              list(deps0))
        if got_c != want_c:
            mism_crude += 1
    elapsed = time.perf_counter() - t0
    ok = mism_v == 0 and mism_crude == 0 and elapsed < 5.0
    _verdict(9, "oracle equivalence", ok,
             f"{mism_v} margin and {mism_crude} crude-likelihood mismatches "
             f"over 1000 random pairs, {elapsed:.1f}s")
