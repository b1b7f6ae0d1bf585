"""Spectral statistics laboratory for non-Hermitian random matrices.

The package computes both sides of the central limit theorem for linear
eigenvalue statistics of i.i.d. matrices: deterministic predictions
(self-consistent resolvent solver, variance and expectation functionals,
overlap kernels) and Monte Carlo measurements (ensemble sampling,
log-determinant reconstructions, coupled particle dynamics, a replica
harness with jackknife errors).  A compiled extension accelerates the
hot kernels when available; a pure Python fallback keeps results
bit-identical either way.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .errors import (AccuracyError, CollisionError, ConvergenceError,
                     InvalidParameterError, NumericalBackendError,
                     OutOfMassError, PreconditionError, ReplicaFailureError,
                     RmtlabError, SingularityError, StabilityError,
                     StepFailureError)
from .seeding import derive_seed, generator_for, splitmix64
from .quadrature import (DiskGrid, converge_disk_integrals, disk_grid,
                         disk_integral, log_eta_grid)
from .ensembles import (EntryDistribution, MatrixSample, Moments,
                        distribution_from_config, four_phase, ginibre,
                        mixture, moments_of, sample_matrix, sparse_phase)
from .spectral import (HermitizedSpectrum, NonHermitianSpectrum,
                       eigenvector_overlap, eta_integral_closed_form,
                       hermitized_spectrum, log_abs_det_regularized,
                       nonhermitian_eigenvalues, overlap_matrix,
                       resolvent_trace, trace_im_product,
                       two_resolvent_trace)
from .dyson import (DensityProfile, DysonPoint, TwoBodyStability,
                    block_average, density_at, density_profile,
                    dyson_residual, quantile, solve_m, solve_m_fixed_point,
                    two_body_stability, two_resolvent_approx)
from .testfunctions import (TestFunction, available_families, combine,
                            conjugate, cos_mode, from_config, monomial,
                            radial_gaussian, sin_mode)
from .clt_theory import (BoundarySpectrum, CovarianceBreakdown,
                         boundary_fourier, covariance_functional,
                         expectation_correction, h_half_inner,
                         stability_log_argument, theta_closed,
                         theta_quadrature, u_integral, u_integral_closed,
                         u_kernel, v_kernel)
from .girko import (GirkoConfig, GirkoReport, girko_reconstruct,
                    regime_decomposition)
from .dbm import (DbmConfig, DbmRunResult, DbmState, DriverSpec, dbm_drift,
                  dbm_step, extract_driver_increments, independence_statistic,
                  matrix_flow_step, run_coupled, scaled_positions)
from .harness import (ExperimentConfig, ExperimentResult, LocalLawResult,
                      RunManifest, SummaryStats, compare_to_theory,
                      local_law_scan, overlap_scan, run_clt_experiment,
                      summarize_replicas, theory_prediction_for,
                      write_outputs)

__all__ = [
    "__version__",
    "BACKEND",
    # errors
    "RmtlabError", "InvalidParameterError", "PreconditionError",
    "NumericalBackendError", "ConvergenceError", "StabilityError",
    "SingularityError", "AccuracyError", "OutOfMassError", "CollisionError",
    "StepFailureError", "ReplicaFailureError",
    # seeding
    "splitmix64", "derive_seed", "generator_for",
    # quadrature
    "DiskGrid", "disk_grid", "disk_integral", "converge_disk_integrals",
    "log_eta_grid",
    # ensembles
    "EntryDistribution", "MatrixSample", "Moments", "ginibre", "four_phase",
    "sparse_phase", "mixture", "distribution_from_config", "moments_of",
    "sample_matrix",
    # spectral
    "HermitizedSpectrum", "NonHermitianSpectrum", "hermitized_spectrum",
    "nonhermitian_eigenvalues", "resolvent_trace", "eta_integral_closed_form",
    "log_abs_det_regularized", "trace_im_product", "two_resolvent_trace",
    "eigenvector_overlap", "overlap_matrix",
    # dyson
    "DysonPoint", "TwoBodyStability", "DensityProfile", "solve_m",
    "solve_m_fixed_point", "dyson_residual", "two_body_stability",
    "two_resolvent_approx", "block_average", "density_at", "density_profile",
    "quantile",
    # test functions
    "TestFunction", "monomial", "radial_gaussian", "cos_mode", "sin_mode",
    "combine", "conjugate", "from_config", "available_families",
    # theory functionals
    "BoundarySpectrum", "CovarianceBreakdown", "v_kernel",
    "stability_log_argument", "u_kernel", "theta_closed", "theta_quadrature",
    "u_integral", "u_integral_closed", "boundary_fourier", "h_half_inner",
    "covariance_functional", "expectation_correction",
    # reconstruction
    "GirkoConfig", "GirkoReport", "girko_reconstruct", "regime_decomposition",
    # dynamics
    "DbmConfig", "DbmState", "DriverSpec", "DbmRunResult", "dbm_drift",
    "dbm_step", "matrix_flow_step", "extract_driver_increments",
    "run_coupled", "independence_statistic", "scaled_positions",
    # harness
    "ExperimentConfig", "SummaryStats", "ExperimentResult", "LocalLawResult",
    "RunManifest", "run_clt_experiment", "summarize_replicas",
    "compare_to_theory", "local_law_scan", "overlap_scan", "write_outputs",
    "theory_prediction_for",
]
