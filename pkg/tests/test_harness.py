"""Tests for the Monte Carlo harness: configs, statistics, runs, outputs."""

import csv
import json

import numpy as np
import pytest
import scipy.stats
from numpy.testing import assert_allclose

from rmtlab.clt_theory import covariance_functional
from rmtlab.ensembles import four_phase, ginibre, sample_matrix
from rmtlab.errors import InvalidParameterError, ReplicaFailureError
from rmtlab.harness import (
    ExperimentConfig,
    compare_to_theory,
    local_law_scan,
    overlap_scan,
    run_clt_experiment,
    summarize_replicas,
    theory_prediction_for,
    write_outputs,
)
from rmtlab.seeding import derive_seed
from rmtlab.spectral import nonhermitian_eigenvalues
from rmtlab.testfunctions import from_config

from conftest import stat_for

Z_LABEL = "monomial(1,0)"
ABS2_LABEL = "monomial(1,1)"
BUMP_LABEL = "radial_gaussian(center=0j, width=0.5)"


# ---------------------------------------------------------------------------
# configuration


def test_from_dict_routes_extras():
    cfg = ExperimentConfig.from_dict({
        "experiment": "clt-run", "n": 32, "functions": ["cutoff"],
        "replicas": 10, "zgrid": [0.0, 0.5], "eta": 0.01,
    })
    assert cfg.n == 32
    assert cfg.replicas == 10
    assert cfg.extras == {"zgrid": [0.0, 0.5], "eta": 0.01}


def test_override_parses_json_values():
    cfg = ExperimentConfig()
    cfg.apply_override("n", "128")
    assert cfg.n == 128
    cfg.apply_override("base_seed", "42")
    assert cfg.base_seed == 42
    cfg.apply_override("experiment", "girko-check")
    assert cfg.experiment == "girko-check"


def test_override_nested_and_extras():
    cfg = ExperimentConfig()
    cfg.apply_override("output.csv", "out.csv")
    assert cfg.output == {"csv": "out.csv"}
    cfg.apply_override("extras.eta", "0.01")
    assert cfg.extras["eta"] == 0.01
    cfg.apply_override("zscan.count", "5")
    assert cfg.extras["zscan"] == {"count": 5}


def test_override_error_paths():
    cfg = ExperimentConfig()
    with pytest.raises(InvalidParameterError):
        cfg.apply_override("extras", "3")
    with pytest.raises(InvalidParameterError):
        cfg.apply_override("n.sub", "3")


def test_resolved_distribution_paths():
    assert ExperimentConfig().resolved_distribution().label() == ginibre().label()
    assert ExperimentConfig(distribution=four_phase()).resolved_distribution() is not None
    cfg = ExperimentConfig(distribution={"kind": "four_phase"})
    assert cfg.resolved_distribution().label() == four_phase().label()


def test_function_configs_normalise_objects():
    f = from_config("z_cutoff")
    cfg = ExperimentConfig(functions=["cutoff", f])
    out = cfg.function_configs()
    assert out[0] == "cutoff"
    assert out[1] == f.config


# ---------------------------------------------------------------------------
# statistics


def test_constant_replicas_have_zero_spread():
    st = summarize_replicas(np.array([1.0, 1.0, 1.0], dtype=complex))
    assert st.mean == 1.0 + 0.0j
    assert st.variance == 0.0
    assert st.second_moment == 0.0 + 0.0j
    assert st.kurtosis_re == 0.0
    assert np.isnan(st.se_kurtosis_re)


def test_small_integer_sample_hand_values():
    st = summarize_replicas(np.arange(1.0, 6.0) + 0.0j)
    assert st.mean == pytest.approx(3.0)
    assert st.variance == pytest.approx(2.5)
    assert st.second_moment.real == pytest.approx(2.5)
    assert st.third_cumulant_re == pytest.approx(0.0, abs=1e-14)
    # biased central moments: m2 = 2, m4 = 6.8, excess = 6.8/4 - 3
    assert st.kurtosis_re == pytest.approx(6.8 / 4.0 - 3.0)


def test_complex_pair_moments():
    st = summarize_replicas(np.array([1.0 + 1.0j, -1.0 - 1.0j]))
    assert st.mean == 0.0 + 0.0j
    assert st.variance == pytest.approx(4.0)
    assert st.second_moment == pytest.approx(4.0j)
    assert np.isnan(st.se_variance)


def test_single_replica_rejected():
    with pytest.raises(InvalidParameterError):
        summarize_replicas(np.array([1.0 + 0.0j]))


def test_kurtosis_matches_biased_moment_convention():
    x = np.random.default_rng(0).normal(size=200)
    st = summarize_replicas(x + 0.0j)
    assert st.kurtosis_re == pytest.approx(scipy.stats.kurtosis(x, bias=True), abs=1e-12)
    assert np.isfinite(st.se_kurtosis_re)


def test_mean_se_is_standard_formula():
    x = np.random.default_rng(4).normal(size=50)
    y = np.random.default_rng(5).normal(size=50)
    st = summarize_replicas(x + 1j * y)
    assert st.se_mean_re == pytest.approx(np.std(x, ddof=1) / np.sqrt(50.0))
    assert st.se_mean_im == pytest.approx(np.std(y, ddof=1) / np.sqrt(50.0))


def test_jackknife_variance_se_against_normal_theory():
    # for N(0, s^2) the sd of the sample variance is s^2 sqrt(2/(R-1))
    y = np.random.default_rng(1).normal(scale=2.0, size=2000)
    st = summarize_replicas(y + 0.0j)
    theory = 4.0 * np.sqrt(2.0 / 1999.0)
    assert abs(st.se_variance / theory - 1.0) < 0.15


# ---------------------------------------------------------------------------
# experiment runs


@pytest.fixture(scope="module")
def small_run():
    cfg = ExperimentConfig(n=16, functions=["z_cutoff", "abs2_cutoff"],
                           replicas=40, base_seed=5)
    return run_clt_experiment(cfg)


def test_run_labels_and_shapes(small_run):
    assert small_run.labels == [Z_LABEL, ABS2_LABEL]
    assert small_run.values[Z_LABEL].shape == (40,)
    assert small_run.annulus_flags.dtype == np.bool_
    assert small_run.failures == []


def test_run_replica_is_recomputable_bitwise(small_run):
    f = from_config("z_cutoff")
    X = sample_matrix(ginibre(), 16, derive_seed(5, 3))
    sig = nonhermitian_eigenvalues(X).sigmas
    assert complex(np.sum(f.value(sig))) == small_run.values[Z_LABEL][3]


def test_run_flags_annulus_without_dropping(small_run):
    count = int(small_run.annulus_flags.sum())
    assert 0 < count < 40
    for st in small_run.stats:
        assert st.annulus_count == count
        assert st.replicas == 40


def test_cross_covariance_consistency(small_run):
    cross = small_run.cross_covariance
    assert cross.shape == (2, 2)
    assert_allclose(np.diag(cross).real,
                    [st.variance for st in small_run.stats], rtol=1e-12)
    assert_allclose(cross, cross.conj().T, rtol=1e-12)


def test_run_accepts_plain_dict():
    res = run_clt_experiment({"n": 8, "functions": ["cutoff"], "replicas": 4,
                              "base_seed": 1})
    assert res.config.n == 8
    assert res.values["monomial(0,0)"].shape == (4,)


def test_run_validation():
    with pytest.raises(InvalidParameterError):
        run_clt_experiment(ExperimentConfig(functions=["cutoff"], replicas=1))
    with pytest.raises(InvalidParameterError):
        run_clt_experiment(ExperimentConfig(functions=[], replicas=4))


def test_run_aborts_when_every_replica_fails():
    cfg = ExperimentConfig(n=0, functions=["z_cutoff"], replicas=4, base_seed=0)
    with pytest.raises(ReplicaFailureError) as exc:
        run_clt_experiment(cfg)
    assert exc.value.failed == 4
    assert exc.value.total == 4


def test_run_is_deterministic_across_repeats_and_workers(monkeypatch):
    cfg = dict(n=16, functions=["z_cutoff"], replicas=12, base_seed=9)
    first = run_clt_experiment(ExperimentConfig(**cfg))
    second = run_clt_experiment(ExperimentConfig(**cfg))
    assert np.array_equal(first.values[Z_LABEL], second.values[Z_LABEL])
    monkeypatch.setenv("RMTLAB_THREADS", "2")
    third = run_clt_experiment(ExperimentConfig(**cfg))
    assert np.array_equal(first.values[Z_LABEL], third.values[Z_LABEL])
    assert np.array_equal(first.annulus_flags, third.annulus_flags)


def test_worker_count_env_validation(monkeypatch):
    monkeypatch.setenv("RMTLAB_THREADS", "0")
    with pytest.raises(InvalidParameterError):
        run_clt_experiment(ExperimentConfig(n=8, functions=["cutoff"], replicas=2))
    monkeypatch.setenv("RMTLAB_THREADS", "two")
    with pytest.raises(InvalidParameterError):
        run_clt_experiment(ExperimentConfig(n=8, functions=["cutoff"], replicas=2))


def test_pool_is_cached_per_worker_count():
    from rmtlab.harness import _get_pool

    assert _get_pool() is _get_pool()


# ---------------------------------------------------------------------------
# theory predictions and comparison


def test_prediction_for_rotation_invariant_function():
    pred = theory_prediction_for(from_config("z_cutoff"), 0.0, 64)
    assert set(pred) == {"variance", "variance_breakdown", "second_moment",
                        "leading", "correction"}
    assert abs(pred["variance"] - 1.0) < 1e-6
    assert abs(pred["second_moment"]) < 1e-10
    assert abs(pred["leading"]) < 1e-10
    assert pred["correction"] == 0.0


def test_prediction_kappa4_channel():
    pred = theory_prediction_for(from_config("abs2_cutoff"), -1.0, 500)
    assert abs(pred["variance"] - 0.25) < 1e-6
    assert abs(pred["leading"] - 250.0) < 1e-4
    assert abs(pred["correction"] - 1.0 / 6.0) < 1e-8


def test_compare_emits_z_scores():
    rng = np.random.default_rng(6)
    vals = rng.normal(size=400) + 1j * rng.normal(size=400)
    st = summarize_replicas(vals)
    pred = {"variance": 2.0, "second_moment": 0.0}
    out = compare_to_theory(st, pred, (0.0, 0.0))
    assert set(out) == {"mean_re", "mean_im", "variance", "kurtosis_re",
                        "kurtosis_im", "second_moment_re", "second_moment_im"}
    assert all(np.isfinite(v) for v in out.values())
    assert max(abs(v) for v in out.values()) < 5.0


def test_compare_accepts_breakdown_and_scalar():
    st = summarize_replicas(np.random.default_rng(7).normal(size=100) + 0.0j)
    bd = covariance_functional(from_config("cutoff"), from_config("cutoff"), 0.0)
    out_bd = compare_to_theory(st, bd, 0.0)
    out_sc = compare_to_theory(st, complex(bd.total), 0.0)
    assert "second_moment_re" not in out_bd
    assert out_bd["variance"] == out_sc["variance"]
    assert out_bd["mean_re"] == out_sc["mean_re"]


def test_safe_z_edge_cases():
    from rmtlab.harness import _safe_z

    assert _safe_z(1.0, 1.0, 0.0) == 0.0
    assert _safe_z(2.0, 1.0, 0.0) == float("inf")
    assert _safe_z(2.0, 1.0, float("nan")) == float("inf")
    assert _safe_z(3.0, 1.0, 0.5) == pytest.approx(4.0)


# ---------------------------------------------------------------------------
# scans


def test_overlap_scan_identity_at_equal_shifts():
    M = overlap_scan(16, 0.4, 0.4, 3, 3, base_seed=2)
    assert M.shape == (3, 3)
    assert np.abs(M - np.eye(3)).max() < 1e-12


def test_overlap_scan_validation():
    with pytest.raises(InvalidParameterError):
        overlap_scan(16, 0.0, 0.5, 3, 0)


def test_local_law_scan_structure():
    res = local_law_scan([32, 64], [0.5, 1.0], 0.0, replicas=4, base_seed=3)
    assert len(res.rows) == 4
    for row in res.rows:
        assert set(row) == {"n", "eta", "error", "se"}
        assert row["error"] > 0.0
    assert np.isfinite(res.slope)
    assert np.isfinite(res.slope_stderr)


def test_local_law_scan_callable_eta_grid():
    res = local_law_scan([32, 64], lambda n: [2.0 / np.sqrt(n)], 0.0,
                         replicas=4, base_seed=3)
    etas = sorted(row["eta"] for row in res.rows)
    assert etas[0] == pytest.approx(2.0 / 8.0)
    assert etas[1] == pytest.approx(2.0 / np.sqrt(32.0))


def test_local_law_scan_validation():
    with pytest.raises(InvalidParameterError):
        local_law_scan([32, 64], [0.001], 0.0, replicas=4)
    with pytest.raises(InvalidParameterError):
        local_law_scan([32], [-0.5], 0.0, replicas=4)
    with pytest.raises(InvalidParameterError):
        local_law_scan([32], [0.5], 0.0, replicas=1)


# ---------------------------------------------------------------------------
# outputs


def _tiny_result():
    cfg = ExperimentConfig(n=8, functions=["z_cutoff"], replicas=4, base_seed=1)
    return run_clt_experiment(cfg)


def test_write_outputs_round_trip(tmp_path):
    result = _tiny_result()
    csv_path = tmp_path / "stats.csv"
    json_path = tmp_path / "stats.json"
    written = write_outputs(result, csv_path=csv_path, json_path=json_path,
                            comparisons={Z_LABEL: {"variance": 0.5}})
    assert set(written) == {"csv", "json", "manifest"}

    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    assert len(rows[0]) == 20
    assert rows[0]["label"] == Z_LABEL
    assert float(rows[0]["variance"]) == result.stats[0].variance

    payload = json.loads(json_path.read_text())
    assert payload["n"] == 8
    assert payload["replicas"] == 4
    assert payload["comparisons"] == {Z_LABEL: {"variance": 0.5}}
    assert payload["stats"][0]["label"] == Z_LABEL

    manifest = json.loads((tmp_path / "stats.csv.manifest.json").read_text())
    for key in ("created", "package_version", "backend", "workers",
                "config_hash", "seed_scheme", "annulus_flags"):
        assert key in manifest
    assert manifest["failed"] == 0
    assert len(manifest["annulus_flags"]) == 4


def test_write_outputs_uses_config_paths(tmp_path):
    cfg = ExperimentConfig(n=8, functions=["cutoff"], replicas=4, base_seed=2,
                           output={"csv": str(tmp_path / "via_config.csv")})
    result = run_clt_experiment(cfg)
    written = write_outputs(result)
    assert written["csv"] == str(tmp_path / "via_config.csv")
    assert "json" not in written
    assert (tmp_path / "via_config.csv").exists()


def test_data_files_are_byte_stable(tmp_path):
    csv_a, json_a = tmp_path / "a.csv", tmp_path / "a.json"
    csv_b, json_b = tmp_path / "b.csv", tmp_path / "b.json"
    write_outputs(_tiny_result(), csv_path=csv_a, json_path=json_a)
    write_outputs(_tiny_result(), csv_path=csv_b, json_path=json_b)
    assert csv_a.read_bytes() == csv_b.read_bytes()
    assert json_a.read_bytes() == json_b.read_bytes()


# ---------------------------------------------------------------------------
# large-ensemble consistency (shares the session fixture with the
# acceptance suite)


def test_ginibre_bump_mean_tracks_leading_order(ginibre_run):
    """All five z-scores of the radial bump against the limit targets.

    The mean gate documents a real, reproducible offset: the sampled
    ensemble resolves a finite-n boundary contribution to the expectation
    that the bulk-density prediction used here does not carry.  The gate is
    kept at 3 standard errors rather than widened to mask it.
    """
    f = from_config("radial_bump")
    pred = theory_prediction_for(f, 0.0, 256)
    st = stat_for(ginibre_run, BUMP_LABEL)
    out = compare_to_theory(st, pred, (pred["leading"], pred["correction"]))
    # The bump is real-valued, so the imaginary part of every replica sum
    # vanishes identically and its standard error is exactly zero; any
    # roundoff residue in the quadrature target then scores as inf.  Those
    # degenerate components are held to roundoff directly, the rest to 3 SE.
    degenerate = {k for k, v in out.items() if not np.isfinite(v)}
    assert degenerate <= {"mean_im", "second_moment_im"}, out
    assert abs(complex(pred["second_moment"]).imag) <= 1e-10
    scored = {k: v for k, v in out.items() if k not in degenerate}
    worst = max(scored.items(), key=lambda kv: abs(kv[1]))
    assert all(abs(v) <= 3.0 for v in scored.values()), (
        f"z-scores {scored}; worst {worst[0]} = {worst[1]:+.2f}; "
        f"measured mean {st.mean:.4f} vs predicted "
        f"{complex(pred['leading']) + complex(pred['correction']):.4f}"
    )
