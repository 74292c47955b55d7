"""Monte Carlo harness: aggregation, report rendering, reproducibility."""

import os

import numpy as np
import pytest

from seqsearch.estimation import EstimationResult, OptimizerConfig
from seqsearch.harness import (AllDiverged, MonteCarloConfig, MonteCarloReport,
                               aggregate, render_table, run_monte_carlo,
                               run_replication)
from seqsearch.model import Parameters


def _result(beta, log_c, converged=True, wall_time=1.0):
    theta = Parameters(beta=np.asarray(beta, dtype=float), log_c=log_c)
    return EstimationResult(theta_hat=theta, m_hat=1.0, loglik=-100.0,
                            constraint_residual=0.0, converged=converged,
                            evals=10, wall_time=wall_time, method="mpec")


TRUTH2 = Parameters(beta=np.array([1.0, 0.5]), log_c=-3.0)


class TestAggregate:
    def test_exact_estimate(self):
        cell = aggregate([_result([1.0, 0.5], -3.0)], TRUTH2)
        assert cell.bias == {"beta1": 0.0, "beta2": 0.0, "log_c": 0.0}
        assert cell.rmse == {"beta1": 0.0, "beta2": 0.0, "log_c": 0.0}
        assert cell.converged_count == 1

    def test_symmetric_errors(self):
        results = [_result([1.1, 0.5], -3.0), _result([0.9, 0.5], -3.0)]
        cell = aggregate(results, TRUTH2)
        assert cell.bias["beta1"] == pytest.approx(0.0, abs=1e-15)
        assert cell.rmse["beta1"] == pytest.approx(0.1)

    def test_skips_nonconverged(self):
        results = [_result([1.2, 0.5], -3.0, wall_time=2.0),
                   _result([55.0, 55.0], 9.0, converged=False, wall_time=88.0)]
        cell = aggregate(results, TRUTH2)
        assert cell.bias["beta1"] == pytest.approx(0.2)
        assert cell.mean_time == pytest.approx(2.0)
        assert cell.converged_count == 1
        assert cell.total_count == 2

    def test_all_diverged(self):
        with pytest.raises(AllDiverged):
            aggregate([_result([1.0, 0.5], -3.0, converged=False)], TRUTH2)

    def test_rmse_dominates_abs_bias(self):
        rng = np.random.default_rng(0)
        results = [_result(np.array([1.0, 0.5]) + rng.normal(size=2) * 0.2,
                           -3.0 + rng.normal() * 0.2) for _ in range(20)]
        cell = aggregate(results, TRUTH2)
        for p in ("beta1", "beta2", "log_c"):
            assert cell.rmse[p] >= abs(cell.bias[p])


class TestRenderTable:
    def test_markdown_and_csv_contents(self):
        from seqsearch.harness import CellStats
        stats = CellStats(bias={"beta1": -0.179, "log_c": 0.214},
                          rmse={"beta1": 0.250, "log_c": 0.250},
                          mean_time=67.957, converged_count=48, total_count=50)
        report = MonteCarloReport(cells={(500, "mpec"): stats},
                                  sample_sizes=(500,), methods=("mpec",),
                                  param_names=("beta1", "log_c"))
        md, csv_text = render_table(report)
        assert "## N = 500" in md
        assert "| beta_1 | -0.179 | 0.250 |" in md
        assert "| log c | 0.214 | 0.250 |" in md
        assert "67.957" in md
        assert "48/50" in md
        lines = csv_text.strip().split("\n")
        assert lines[0] == "N,method,parameter,bias,rmse"
        n, method, param, bias, rmse = lines[1].split(",")
        assert (n, method, param) == ("500", "mpec", "beta1")
        assert float(bias) == -0.179
        assert float(rmse) == 0.250
        assert "500,mpec,converged,48,50" in lines[-1]
        # timings never enter the CSV: it must be run-to-run reproducible
        assert "67.957" not in csv_text


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            MonteCarloConfig(replications=0)
        with pytest.raises(ValueError):
            MonteCarloConfig(sample_sizes=(200,))  # no rho for N=200
        with pytest.raises(ValueError):
            MonteCarloConfig(methods=("gradient",))


TINY = MonteCarloConfig(
    replications=2, sample_sizes=(40,), rho_by_N={40: 10.0}, D=10,
    methods=("benchmark",), root_seed=77,
    optimizer=OptimizerConfig(f_tol=1e-5, x_tol=1e-3, max_evals=1500))


class TestRunReplication:
    def test_determinism_and_methods(self):
        a = run_replication(0, 40, TINY)
        b = run_replication(0, 40, TINY)
        assert set(a) == {"benchmark"}
        assert np.array_equal(a["benchmark"].theta_hat.beta,
                              b["benchmark"].theta_hat.beta)
        assert a["benchmark"].evals == b["benchmark"].evals

    def test_replications_differ(self):
        a = run_replication(0, 40, TINY)["benchmark"]
        b = run_replication(1, 40, TINY)["benchmark"]
        assert not np.array_equal(a.theta_hat.beta, b.theta_hat.beta)

    def test_index_validated(self):
        with pytest.raises(ValueError):
            run_replication(5, 40, TINY)


class TestRunMonteCarlo:
    def test_artifacts_and_worker_invariance(self, tmp_path):
        out1 = tmp_path / "w1"
        out2 = tmp_path / "w2"
        run_monte_carlo(TINY, out_dir=str(out1), workers=1)
        run_monte_carlo(TINY, out_dir=str(out2), workers=2)
        for out in (out1, out2):
            assert (out / "report.md").exists()
            assert (out / "report.csv").exists()
            for r in range(TINY.replications):
                assert (out / "runs" / "N40" / f"rep{r}" / "benchmark.json").exists()
        assert (out1 / "report.csv").read_bytes() == (out2 / "report.csv").read_bytes()
