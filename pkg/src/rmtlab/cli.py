"""Command line interface.

Six subcommands under one entry point:

* ``theory``: solver and covariance tables as CSV, no sampling.
* ``clt-run``: Monte Carlo linear-statistics experiment plus theory
  comparison report.
* ``girko-check``: one-matrix spectral-sum reconstruction, JSON report.
* ``locallaw``: resolvent error scan over (n, eta) with fitted slope.
* ``overlap``: seed-averaged singular-vector overlap kernel at two shifts.
* ``dbm``: coupled particle-system trajectories and summaries.

Config-driven subcommands accept ``--config file.json`` plus repeatable
``--override key=value``; the flag-driven ones (girko-check, dbm) also
accept a config file, with explicit flags taking precedence.  Every CSV
gets a header row and a ``<path>.manifest.json`` provenance sidecar.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import sys

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .dbm import DbmConfig, DbmState, DriverSpec, run_coupled, scaled_positions
from .dyson import solve_m, two_body_stability
from .ensembles import distribution_from_config, ginibre, sample_matrix
from .errors import InvalidParameterError
from .girko import GirkoConfig, girko_reconstruct
from .harness import (ExperimentConfig, compare_to_theory, local_law_scan,
                      overlap_scan, run_clt_experiment, theory_prediction_for,
                      write_outputs)
from .clt_theory import covariance_functional
from .seeding import derive_seed
from .spectral import hermitized_spectrum, overlap_matrix
from .testfunctions import from_config

__all__ = ["main"]


def _parse_complex(text: str) -> complex:
    """Parse '0.5' or '0.5,-0.3' into a complex number."""
    if "," in text:
        re_part, im_part = text.split(",", 1)
        return complex(float(re_part), float(im_part))
    return complex(float(text))


def _as_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    if isinstance(value, str):
        return _parse_complex(value)
    return complex(value)


def _c_pair(z: complex) -> list:
    return [float(np.real(z)), float(np.imag(z))]


def _parse_dist(text: str):
    kind, _, param = text.partition(":")
    if not param:
        return distribution_from_config({"kind": kind, "params": {}})
    names = {"sparse_phase": "p", "mixture": "weight"}
    if kind not in names:
        raise InvalidParameterError(f"distribution {kind!r} takes no parameter")
    return distribution_from_config({"kind": kind, "params": {names[kind]: float(param)}})


def _sidecar(path: str, payload: dict) -> None:
    body = {
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "package_version": __version__,
        "backend": BACKEND,
    }
    body.update(payload)
    with open(str(path) + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(body, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _write_csv(path: str, columns: list, rows: list, manifest: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
    _sidecar(path, manifest)


def _load_config(args, default_experiment: str) -> ExperimentConfig:
    if getattr(args, "config", None):
        cfg = ExperimentConfig.from_json_file(args.config)
    else:
        cfg = ExperimentConfig(experiment=default_experiment)
    for item in getattr(args, "override", None) or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise InvalidParameterError(f"override {item!r} is not key=value")
        cfg.apply_override(key, val)
    return cfg


def _stem_sibling(path: str, suffix: str) -> str:
    if path.endswith(".csv"):
        return path[:-4] + suffix + ".csv"
    return path + suffix


# ---------------------------------------------------------------------------
# theory


def cmd_theory(args) -> int:
    cfg = _load_config(args, "theory")
    dist = cfg.resolved_distribution()
    kappa4 = dist.kappa4
    ex = cfg.extras
    z_values = [_as_complex(z) for z in ex.get("z_values", [0.0, 0.3, 0.6, 0.9, 1.2])]
    eta_values = [float(e) for e in ex.get("eta_values", [1e-3, 1e-2, 1e-1, 1.0])]
    pairs = [(_as_complex(a), _as_complex(b))
             for a, b in ex.get("pairs", [[0.0, 0.5], [0.3, 0.9]])]
    eta1, eta2 = [float(e) for e in ex.get("pair_etas", [1e-2, 1e-2])]
    func_cfgs = cfg.functions or ["z_cutoff", "radial_bump"]
    funcs = [from_config(c) for c in func_cfgs]

    cov_path = cfg.output.get("csv", "theory_covariance.csv")
    dyson_path = _stem_sibling(cov_path, "_dyson")
    stab_path = _stem_sibling(cov_path, "_stability")

    dyson_rows = []
    for z in z_values:
        for eta in eta_values:
            p = solve_m(z, 1j * eta)
            dyson_rows.append({
                "z_re": repr(z.real), "z_im": repr(z.imag), "eta": repr(eta),
                "m_re": repr(float(np.real(p.m))), "m_im": repr(float(np.imag(p.m))),
                "u_re": repr(float(np.real(p.u))), "u_im": repr(float(np.imag(p.u))),
                "beta_re": repr(float(np.real(p.beta))),
                "beta_im": repr(float(np.imag(p.beta))),
                "beta_star_re": repr(float(np.real(p.beta_star))),
                "beta_star_im": repr(float(np.imag(p.beta_star))),
                "m_prime_re": repr(float(np.real(p.m_prime))),
                "m_prime_im": repr(float(np.imag(p.m_prime))),
                "residual": repr(float(p.residual)),
            })
    _write_csv(dyson_path, list(dyson_rows[0].keys()), dyson_rows,
               {"table": "dyson-points", "distribution": dist.label()})

    stab_rows = []
    for z1, z2 in pairs:
        s = two_body_stability(z1, z2, 1j * eta1, 1j * eta2)
        stab_rows.append({
            "z1_re": repr(z1.real), "z1_im": repr(z1.imag),
            "z2_re": repr(z2.real), "z2_im": repr(z2.imag),
            "eta1": repr(eta1), "eta2": repr(eta2),
            "beta_hat_re": repr(float(np.real(s.beta_hat))),
            "beta_hat_im": repr(float(np.imag(s.beta_hat))),
            "beta_hat_star_re": repr(float(np.real(s.beta_hat_star))),
            "beta_hat_star_im": repr(float(np.imag(s.beta_hat_star))),
            "inv_norm_bound": repr(float(s.inv_norm_bound)),
        })
    _write_csv(stab_path, list(stab_rows[0].keys()), stab_rows,
               {"table": "two-body-stability", "distribution": dist.label()})

    cov_rows = []
    for f in funcs:
        for g in funcs:
            br = covariance_functional(g, f, kappa4)
            cov_rows.append({
                "label_f": f.label, "label_g": g.label, "kappa4": repr(kappa4),
                "gradient_term": repr(br.gradient_term),
                "h_half_term": repr(br.h_half_term),
                "kappa4_term": repr(br.kappa4_term),
                "total": repr(br.total),
            })
    _write_csv(cov_path, ["label_f", "label_g", "kappa4", "gradient_term",
                          "h_half_term", "kappa4_term", "total"], cov_rows,
               {"table": "covariance-breakdown", "distribution": dist.label(),
                "kappa4": kappa4})

    json_path = cfg.output.get("json")
    if json_path:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump({"covariance_csv": cov_path, "dyson_csv": dyson_path,
                       "stability_csv": stab_path, "kappa4": kappa4},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(f"theory tables written: {dyson_path}, {stab_path}, {cov_path}")
    return 0


# ---------------------------------------------------------------------------
# clt-run


def cmd_clt_run(args) -> int:
    cfg = _load_config(args, "clt-run")
    if not cfg.functions:
        cfg.functions = ["z_cutoff"]
    cfg.output.setdefault("csv", "clt_stats.csv")
    cfg.output.setdefault("json", "clt_report.json")
    result = run_clt_experiment(cfg)
    kappa4 = cfg.resolved_distribution().kappa4
    comparisons = {}
    for stats in result.stats:
        f = from_config(next(c for c in cfg.function_configs()
                             if from_config(c).label == stats.label))
        pred = theory_prediction_for(f, kappa4, cfg.n)
        z = compare_to_theory(stats, pred, (pred["leading"], pred["correction"]))
        comparisons[stats.label] = z
        print(f"{stats.label}: var={stats.variance:.6g} "
              f"(z={z['variance']:+.2f}), mean z=({z['mean_re']:+.2f}, "
              f"{z['mean_im']:+.2f}), kurt z=({z['kurtosis_re']:+.2f}, "
              f"{z['kurtosis_im']:+.2f})")
    written = write_outputs(result, comparisons=comparisons)
    print("outputs:", ", ".join(f"{k}={v}" for k, v in sorted(written.items())))
    return 0


# ---------------------------------------------------------------------------
# girko-check


def cmd_girko_check(args) -> int:
    cfg = _load_config(args, "girko-check")
    ex = cfg.extras
    n = args.n if args.n is not None else cfg.n
    seed = args.seed if args.seed is not None else cfg.base_seed
    dist = _parse_dist(args.dist) if args.dist else cfg.resolved_distribution()
    fn_cfg = args.function if args.function else (
        cfg.functions[0] if cfg.functions else "radial_bump")
    gkw = {}
    for key, flag in (("n_radial", args.grid_r), ("n_angular", args.grid_theta),
                      ("T", args.T)):
        extra_key = {"n_radial": "grid_r", "n_angular": "grid_theta", "T": "T"}[key]
        value = flag if flag is not None else ex.get(extra_key)
        if value is not None:
            gkw[key] = type(getattr(GirkoConfig, key))(value)
    gcfg = GirkoConfig(**gkw)
    f = from_config(fn_cfg)
    X = sample_matrix(dist, n, seed)
    report = girko_reconstruct(X, f, gcfg)
    payload = {
        "n": report.n,
        "function": f.label,
        "distribution": dist.label(),
        "seed": seed,
        "total": _c_pair(report.total),
        "direct": _c_pair(report.direct),
        "j_term": _c_pair(report.j_term),
        "i_small": _c_pair(report.i_small),
        "i_middle": _c_pair(report.i_middle),
        "i_large": _c_pair(report.i_large),
        "eta0": report.eta0,
        "eta_c": report.eta_c,
        "T": report.T,
        "relative_error": report.relative_error,
        "active_nodes": report.active_nodes,
        "jittered_nodes": report.jittered_nodes,
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        _sidecar(args.output, {"table": "girko-report"})
    return 0


# ---------------------------------------------------------------------------
# locallaw


def cmd_locallaw(args) -> int:
    cfg = _load_config(args, "locallaw")
    ex = cfg.extras
    ns = [int(v) for v in ex.get("ns", [128, 256, 512])]
    z = _as_complex(ex.get("z", 0.0))
    replicas = int(ex.get("replicas", cfg.replicas))
    lo_exp = float(ex.get("eta_lo_exp", -0.8))
    hi = float(ex.get("eta_hi", 1.0))
    count = int(ex.get("eta_count", 6))

    def etas(n):
        return np.geomspace(float(n) ** lo_exp, hi, count)

    result = local_law_scan(ns, etas, z, replicas, base_seed=cfg.base_seed,
                            distribution=cfg.resolved_distribution())
    csv_path = cfg.output.get("csv", "locallaw.csv")
    rows = [{"n": r["n"], "eta": repr(r["eta"]), "error": repr(r["error"]),
             "se": repr(r["se"])} for r in result.rows]
    _write_csv(csv_path, ["n", "eta", "error", "se"], rows,
               {"table": "local-law-scan", "z": _c_pair(z), "replicas": replicas})
    json_path = cfg.output.get("json", "locallaw.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump({"slope": result.slope, "intercept": result.intercept,
                   "slope_stderr": result.slope_stderr, "rows": len(result.rows)},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"local law slope {result.slope:+.4f} (stderr {result.slope_stderr:.4f}); "
          f"table {csv_path}")
    return 0


# ---------------------------------------------------------------------------
# overlap


def cmd_overlap(args) -> int:
    cfg = _load_config(args, "overlap")
    ex = cfg.extras
    z1 = _as_complex(ex.get("z1", 0.0))
    z2 = _as_complex(ex.get("z2", 0.8))
    k = int(ex.get("k", 5))
    replicas = int(ex.get("replicas", cfg.replicas))
    theta = overlap_scan(cfg.n, z1, z2, k, replicas, base_seed=cfg.base_seed,
                         distribution=cfg.resolved_distribution())
    csv_path = cfg.output.get("csv", "overlap.csv")
    rows = [{"i": i + 1, "j": j + 1, "value": repr(float(theta[i, j]))}
            for i in range(k) for j in range(k)]
    _write_csv(csv_path, ["i", "j", "value"], rows,
               {"table": "overlap-kernel", "z1": _c_pair(z1), "z2": _c_pair(z2),
                "replicas": replicas})
    json_path = cfg.output.get("json", "overlap.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump({"max_abs": float(np.max(np.abs(theta))),
                   "mean_abs": float(np.mean(np.abs(theta))),
                   "k": k, "replicas": replicas},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"overlap kernel ({k}x{k}) max|theta| = {np.max(np.abs(theta)):.4f}; "
          f"table {csv_path}")
    return 0


# ---------------------------------------------------------------------------
# dbm


def cmd_dbm(args) -> int:
    cfg = _load_config(args, "dbm")
    ex = cfg.extras
    n = args.n if args.n is not None else cfg.n
    dt = args.dt if args.dt is not None else float(ex.get("dt", 1e-4))
    t_final = args.t_final if args.t_final is not None else float(ex.get("t_final", 1e-2))
    mode = args.mode if args.mode else ex.get("mode", "independent")
    zs = [_parse_complex(z) for z in args.z] if args.z else \
        [_as_complex(z) for z in ex.get("zs", [0.0])]
    replicas = args.replicas if args.replicas is not None else int(ex.get("replicas", 1))
    record_every = args.record_every if args.record_every is not None else \
        int(ex.get("record_every", 0))
    seed = args.seed if args.seed is not None else cfg.base_seed
    substep_cap = int(ex.get("substep_cap", 64))
    coupling_k = args.coupling_k if args.coupling_k is not None else int(ex.get("K", 8))
    dist = ginibre()

    dconf = DbmConfig(n=n, dt=dt, t_final=t_final, substep_cap=substep_cap,
                      record_every=record_every)
    runs = []
    for rep in range(replicas):
        X = sample_matrix(dist, n, derive_seed(seed, 2 * rep))
        states = []
        specs = []
        for z in zs:
            s = hermitized_spectrum(X, z, with_vectors=(mode == "overlap_correlated"))
            specs.append(s)
            states.append(DbmState(time=0.0, points=s.lambdas.copy(), n=n))
        driver_kwargs = {"mode": mode, "seed": derive_seed(seed, 2 * rep + 1)}
        if mode == "coupled_below_K":
            driver_kwargs["K"] = coupling_k
        elif mode == "overlap_correlated":
            if len(zs) != 2:
                raise InvalidParameterError("overlap_correlated needs exactly two --z")
            driver_kwargs["overlap"] = overlap_matrix(specs[0], specs[1])
        elif mode == "matrix_flow":
            driver_kwargs["zs"] = tuple(zs)
            driver_kwargs["initial_matrix"] = X.entries
        runs.append(run_coupled(dconf, states, DriverSpec(**driver_kwargs)))

    csv_base = args.output_csv or cfg.output.get("csv", "dbm_trajectory.csv")
    first = runs[0]
    for s_idx in range(len(zs)):
        path = csv_base if len(zs) == 1 else _stem_sibling(csv_base, f"_sys{s_idx}")
        rows = []
        for r_idx, t in enumerate(first.times):
            for p_idx, val in enumerate(first.points[s_idx][r_idx]):
                rows.append({"time": repr(float(t)), "index": p_idx,
                             "value": repr(float(val))})
        _write_csv(path, ["time", "index", "value"], rows,
                   {"table": "dbm-trajectory", "mode": mode,
                    "z": _c_pair(zs[s_idx]), "replica": 0})

    finals = np.array([[run.final_states[s].points for s in range(len(zs))]
                       for run in runs])
    summary = {
        "mode": mode, "n": n, "dt": dt, "t_final": t_final,
        "replicas": replicas, "seed": seed,
        "zs": [_c_pair(z) for z in zs],
        "final_mean": [float(finals[:, s].mean()) for s in range(len(zs))],
        "final_min": [float(finals[:, s].min()) for s in range(len(zs))],
        "final_max": [float(finals[:, s].max()) for s in range(len(zs))],
    }
    if len(zs) >= 2:
        k = min(8, n)
        raw = np.abs(finals[:, 0, :k] - finals[:, 1, :k])
        sc0 = np.array([scaled_positions(finals[r, 0, :k], zs[0], n)
                        for r in range(replicas)])
        sc1 = np.array([scaled_positions(finals[r, 1, :k], zs[1], n)
                        for r in range(replicas)])
        summary["deviation_unscaled_max"] = float(raw.max())
        summary["deviation_unscaled_mean"] = float(raw.mean())
        summary["deviation_scaled_max"] = float(np.abs(sc0 - sc1).max())
        summary["deviation_scaled_mean"] = float(np.abs(sc0 - sc1).mean())
    json_path = args.output_json or cfg.output.get("json", "dbm_summary.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"dbm run ({mode}): trajectories at {csv_base}, summary {json_path}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--override", action="append", metavar="KEY=VALUE",
                   help="config override, repeatable")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rmtlab",
        description="Spectral statistics laboratory for non-Hermitian random matrices",
    )
    parser.add_argument("--version", action="version", version=f"rmtlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="solver and covariance tables (no sampling)")
    _add_common(p)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("clt-run", help="Monte Carlo linear statistics experiment")
    _add_common(p)
    p.set_defaults(func=cmd_clt_run)

    p = sub.add_parser("girko-check", help="log-determinant reconstruction check")
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--dist", help="ginibre | four_phase | sparse_phase:p | mixture:w")
    p.add_argument("--seed", type=int)
    p.add_argument("--function", help="test function shortcut or family name")
    p.add_argument("--grid-r", type=int)
    p.add_argument("--grid-theta", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--output", help="also write the JSON report here")
    p.set_defaults(func=cmd_girko_check)

    p = sub.add_parser("locallaw", help="resolvent error scan and slope fit")
    _add_common(p)
    p.set_defaults(func=cmd_locallaw)

    p = sub.add_parser("overlap", help="averaged singular-vector overlap kernel")
    _add_common(p)
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("dbm", help="coupled particle-system dynamics")
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-final", type=float)
    p.add_argument("--mode", choices=["independent", "coupled_below_K",
                                      "overlap_correlated", "matrix_flow"])
    p.add_argument("--z", action="append", metavar="RE[,IM]",
                   help="shift point, repeatable")
    p.add_argument("--replicas", type=int)
    p.add_argument("--record-every", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--coupling-k", type=int)
    p.add_argument("--output-csv")
    p.add_argument("--output-json")
    p.set_defaults(func=cmd_dbm)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
