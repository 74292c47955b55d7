"""Weitzman sequential-search model: simulation, likelihood, estimation.

Subpackages by pipeline stage:

- :mod:`seqsearch.stats` — normal primitives and reproducible streams
- :mod:`seqsearch.reservation` — reservation-margin equation solvers
- :mod:`seqsearch.model` — structural model and optimal-policy simulator
- :mod:`seqsearch.likelihood` — crude and kernel-smoothed simulators
- :mod:`seqsearch.estimation` — nested benchmark and MPEC estimators
- :mod:`seqsearch.harness` — Monte Carlo bias/RMSE/time comparison
- :mod:`seqsearch.cli` — command-line entry points
"""

from .estimation import (EstimationResult, OptimizerConfig,
                         augmented_lagrangian, estimate_benchmark,
                         estimate_mpec, nelder_mead)
from .harness import (AllDiverged, MonteCarloConfig, MonteCarloReport,
                      aggregate, render_table, run_monte_carlo, run_replication)
from .likelihood import (DrawSet, MalformedRecord, VStatistics, build_draw_set,
                         compute_v, consumer_likelihoods, crude_likelihood,
                         kernel_likelihood, log_likelihood)
from .model import (ConsumerDraws, ConsumerRecord, Dataset, Parameters,
                    simulate_consumer, simulate_dataset)
from .reservation import (LookupTable, MaxIterationsExceeded, NoConvergence,
                          NonPositiveCost, OutOfRange, build_lookup, cost_of_m,
                          lookup_m, solve_m_contraction, solve_m_newton)
from .stats import RngStream, draw_normal_array, norm_cdf, norm_pdf

__version__ = "0.1.0"
