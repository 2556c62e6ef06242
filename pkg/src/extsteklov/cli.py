"""Command-line surface: spectrum, solve, psteklov, constants.

Each command resolves a configuration (defaults, then an optional
key=value file, then command-line overrides), validates it against the
preconditions of the modules it drives, runs the computation, and writes
self-describing output files into the output directory: CSV for tabular
results, JSON for structured ones, SVG plots behind ``--plot``.

Exit status is 0 when all requested computations completed, 2 for
configuration or validation errors, and 1 for runtime failures.
"""

import argparse
import json
import sys
from dataclasses import asdict, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import basis as basis_mod
from . import critical, energy, kernels, psteklov
from .config import (ConfigError, RunConfig, parse_config_file,
                     resolve_config, validate_config)
from .quadrature import build_rule, default_order

try:
    from importlib.metadata import PackageNotFoundError, version

    try:
        _VERSION = version("extsteklov")
    except PackageNotFoundError:
        _VERSION = "unknown"
except ImportError:  # pragma: no cover
    _VERSION = "unknown"


def _fmt(x):
    """CSV float format: 17 significant digits."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x == int(x) and abs(x) < 1e16:
        return f"{x:.1f}"
    return f"{x:.17g}"


def _config_value(value):
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    return value


def _config_comments(cfg):
    return [f"# {f.name} = {_config_value(getattr(cfg, f.name))}"
            for f in fields(RunConfig)]


def _write_csv(path, cfg, header, rows, notes=()):
    lines = _config_comments(cfg)
    lines.extend(f"# note: {n}" for n in notes)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _versions():
    import scipy

    doc = {"extsteklov": _VERSION, "numpy": np.__version__,
           "scipy": scipy.__version__}
    if "numba" in kernels.available_backends():
        import numba

        doc["numba"] = numba.__version__
    doc["kernel_backend"] = kernels.active_backend()
    return doc


def _json_doc(command, cfg, body):
    doc = {"command": command,
           "generated": datetime.now(timezone.utc).isoformat(),
           "versions": _versions(),
           "config": {k: (list(v) if isinstance(v, tuple) else v)
                      for k, v in asdict(cfg).items()}}
    doc.update(body)
    return doc


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _savefig(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})


def _basis_degree(kmax):
    lmax = 0
    while (lmax + 1) ** 2 < kmax:
        lmax += 1
    return lmax


def _solve_setup(cfg):
    lmax = _basis_degree(cfg.kmax)
    basis = basis_mod.SteklovBasis(lmax, dim=3)
    order = cfg.quad_order or default_order(lmax)
    rule = build_rule(order)
    params = energy.EnergyParams(lam=cfg.lam, mu=cfg.mu, q=cfg.q, p=cfg.p,
                                 dim=cfg.dim,
                                 allow_supercritical=cfg.allow_supercritical)
    return basis, rule, params


def cmd_spectrum(cfg, out_dir):
    """CSV of exact and truncated eigenvalues per degree."""
    radius = cfg.radius[0]
    truncated = None
    if cfg.dim == 3:
        mesh = psteklov.build_mesh(radius, n_cells=cfg.mesh_nodes,
                                   grading=cfg.mesh_grading, dim=3)
        truncated = dict(psteklov.p2_mode_spectrum(cfg.lmax, mesh, dim=3,
                                                   threads=cfg.threads))
    rows = []
    for l in range(cfg.lmax + 1):
        mult = basis_mod.multiplicity(l, 3) if cfg.dim == 3 else None
        trunc = truncated[l] if truncated is not None else None
        rows.append((l, mult, basis_mod.eigenvalue(l, cfg.dim), trunc))
    _write_csv(out_dir / "spectrum.csv", cfg,
               ("l", "multiplicity", "delta_exact", "delta_truncated"), rows)
    if cfg.plot:
        plt = _pyplot()
        fig, ax = plt.subplots(figsize=(6, 4))
        ls = [r[0] for r in rows]
        ax.plot(ls, [r[2] for r in rows], "o-", label="exact exterior")
        if truncated is not None:
            ax.plot(ls, [r[3] for r in rows], "s--",
                    label=f"truncated R={radius:g}")
        ax.set_xlabel("degree l")
        ax.set_ylabel("Steklov eigenvalue")
        ax.legend()
        fig.tight_layout()
        _savefig(fig, out_dir / "spectrum.svg")
    return 0


def _solution_entry(rec, prop_entry):
    entry = {"rung": rec.rung,
             "start_kind": rec.start_kind,
             "sign_class": rec.sign_class,
             "energy": rec.energy,
             "gradient_norm": rec.gradient_norm,
             "bvp_residual": rec.bvp_residual,
             "norm": rec.element.grad_norm,
             "iterations": rec.iterations,
             "coefficients": rec.element.coeffs.tolist(),
             "prop31_bound": None,
             "prop31_margin": None,
             "prop31_ok": None,
             "prop31_note": None}
    if prop_entry is not None:
        entry["prop31_bound"] = prop_entry.bound
        entry["prop31_margin"] = prop_entry.margin
        entry["prop31_ok"] = prop_entry.ok
        entry["prop31_note"] = prop_entry.note
    return entry


def cmd_solve(cfg, out_dir):
    """JSON report of the fountain scan and its norm-bound checks."""
    basis, rule, params = _solve_setup(cfg)
    ladder = critical.fountain_scan(
        basis, rule, params, K=cfg.kmax, starts_per_rung=cfg.starts_per_rung,
        seed=cfg.seed, tol=cfg.newton_tol, max_iter=cfg.newton_max_iter,
        eps=cfg.hess_eps, dedup_tol=cfg.dedup_tol, threads=cfg.threads)
    prop = critical.check_prop31(ladder.records, params, ladder.constants)
    by_index = {e.index: e for e in prop}
    notes = []
    if params.mu <= 0.0:
        found = len(ladder.by_sign("positive"))
        notes.append(f"mu <= 0: no positive-energy critical point exists; "
                     f"scan found {found}")
    if params.lam <= 0.0:
        found = len(ladder.by_sign("negative"))
        notes.append(f"lam <= 0: no negative-energy critical point exists; "
                     f"scan found {found}")
    body = {
        "constants": {
            "K": ladder.constants.K,
            "c1": ladder.constants.c1,
            "c2": ladder.constants.c2,
            "rungs": [
                {"k": row["k"],
                 "alpha": float(ladder.constants.alpha[row["k"] - 1]),
                 "beta": float(ladder.constants.beta[row["k"] - 1]),
                 "rho": row["rho"], "varrho": row["varrho"],
                 "dual_rho": row["dual_rho"],
                 "dual_varrho": row["dual_varrho"]}
                for row in ladder.radii
            ],
        },
        "n_starts": ladder.n_starts,
        "solutions": [_solution_entry(rec, by_index.get(i))
                      for i, rec in enumerate(ladder.records)],
        "failures": [{"rung": f.rung, "start_kind": f.start_kind,
                      "reason": f.reason, "gradient_norm": f.gradient_norm,
                      "iterations": f.iterations}
                     for f in ladder.failures],
        "prop31_all_ok": all(e.ok for e in prop),
        "notes": notes,
        "distinct_negative_energies": ladder.distinct_energies("negative"),
        "distinct_positive_energies": ladder.distinct_energies("positive"),
    }
    _write_json(out_dir / "solve.json", _json_doc("solve", cfg, body))
    if cfg.plot:
        plt = _pyplot()
        fig, ax = plt.subplots(figsize=(6, 4))
        colors = {"positive": "tab:red", "negative": "tab:blue",
                  "zero": "tab:gray"}
        for sign in ("negative", "zero", "positive"):
            recs = [r for r in ladder.records if r.sign_class == sign]
            if recs:
                ax.scatter([r.rung for r in recs], [r.energy for r in recs],
                           c=colors[sign], label=sign, s=24)
        ax.axhline(0.0, color="k", lw=0.5)
        ax.set_xlabel("discovery rung k")
        ax.set_ylabel("energy")
        ax.legend()
        fig.tight_layout()
        _savefig(fig, out_dir / "solve.svg")
    return 0


def cmd_psteklov(cfg, out_dir):
    """JSON report of the first-eigenpair flow, per truncation radius."""
    runs = []
    results = []
    all_converged = True
    for radius in cfg.radius:
        mesh = psteklov.build_mesh(radius, n_cells=cfg.mesh_nodes,
                                   grading=cfg.mesh_grading, dim=cfg.dim)
        res = psteklov.first_eigenpair(cfg.p, cfg.dim, mesh,
                                       tol=cfg.flow_tol,
                                       max_steps=cfg.flow_max_steps,
                                       t_init=cfg.flow_t_init)
        results.append((mesh, res))
        all_converged = all_converged and res.converged
        runs.append({
            "radius": radius,
            "kappa": res.kappa,
            "delta": res.delta,
            "iterations": res.iterations,
            "residual": res.residual,
            "converged": res.converged,
            "mesh": {"n_cells": mesh.n_cells, "node_ratio": mesh.ratio},
            "eigenfunction": {
                "nodes": mesh.nodes.tolist(),
                "values": res.eigenfunction.values.tolist() + [0.0],
            },
        })
    extrapolated = None
    if len(cfg.radius) >= 2 and all_converged:
        extrapolated = psteklov.extrapolate_eigenvalue(
            cfg.p, cfg.dim, [(r["radius"], r["delta"]) for r in runs])
    body = {"runs": runs, "extrapolated_delta": extrapolated,
            "exterior_closed_form": psteklov.closed_form_delta(cfg.p, cfg.dim)}
    _write_json(out_dir / "psteklov.json", _json_doc("psteklov", cfg, body))
    if cfg.plot:
        plt = _pyplot()
        fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10, 4))
        for mesh, res in results:
            vals = np.append(res.eigenfunction.values, 0.0)
            ax0.plot(mesh.nodes, vals, label=f"R={mesh.radius:g}")
        ax0.set_xscale("log")
        ax0.set_xlabel("r")
        ax0.set_ylabel("eigenfunction")
        ax0.legend()
        for mesh, res in results:
            if res.history:
                ax1.plot([h[1] for h in res.history],
                         label=f"R={mesh.radius:g}")
        ax1.set_xlabel("accepted step")
        ax1.set_ylabel("phi")
        ax1.legend()
        fig.tight_layout()
        _savefig(fig, out_dir / "psteklov.svg")
    if not all_converged:
        print("error: the ascent flow did not reach tolerance; see "
              "psteklov.json for the flow history", file=sys.stderr)
        return 1
    return 0


def cmd_constants(cfg, out_dir):
    """CSV of tail embedding constants and fountain radii per rung."""
    basis, rule, params = _solve_setup(cfg)
    constants = energy.compute_embedding_constants(
        basis, rule, cfg.kmax, cfg.q, cfg.p, n_starts=cfg.ascent_starts,
        tol=cfg.ascent_tol, seed=cfg.seed, include_s2=cfg.include_s2)
    notes = []
    if params.mu <= 0.0:
        notes.append("mu <= 0: rho_k and varrho_k undefined")
    if params.lam <= 0.0:
        notes.append("lam <= 0: dual_rho_k and dual_varrho_k undefined")
    header = ["k", "alpha_k", "beta_k", "rho_k", "varrho_k", "dual_rho_k",
              "dual_varrho_k"]
    if cfg.include_s2:
        header.append("s2_k")
    rows = []
    for k in range(1, cfg.kmax + 1):
        rho = varrho = dual_rho = dual_varrho = None
        if params.mu > 0.0:
            rho, varrho = energy.convex_radii(constants, params, k)
        if params.lam > 0.0:
            dual_rho, dual_varrho = energy.concave_radii(constants, params, k)
        row = [k, constants.alpha[k - 1], constants.beta[k - 1],
               rho, varrho, dual_rho, dual_varrho]
        if cfg.include_s2:
            row.append(constants.s2[k - 1])
        rows.append(row)
    _write_csv(out_dir / "constants.csv", cfg, header, rows, notes)
    if cfg.plot:
        plt = _pyplot()
        fig, ax = plt.subplots(figsize=(6, 4))
        ks = np.arange(1, cfg.kmax + 1)
        ax.semilogy(ks, constants.alpha, "o-", label="alpha_k")
        ax.semilogy(ks, constants.beta, "s-", label="beta_k")
        ax.set_xlabel("tail start k")
        ax.set_ylabel("embedding constant")
        ax.legend()
        fig.tight_layout()
        _savefig(fig, out_dir / "constants.svg")
    return 0


COMMANDS = {"spectrum": cmd_spectrum, "solve": cmd_solve,
            "psteklov": cmd_psteklov, "constants": cmd_constants}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="key=value configuration file")
    common.add_argument("--out", metavar="DIR", default=None,
                        help="output directory (default: current)")
    common.add_argument("--seed", metavar="U64", type=int, default=None,
                        help="64-bit seed driving all randomness")
    common.add_argument("--threads", metavar="INT", type=int, default=None,
                        help="worker-parallelism cap; 1 is bit-reproducible")
    common.add_argument("--plot", action="store_true", default=None,
                        help="emit SVG plots next to the data files")
    common.add_argument("--set", metavar="KEY=VALUE", action="append",
                        default=[], dest="overrides",
                        help="override any config key (repeatable)")
    parser = argparse.ArgumentParser(
        prog="extsteklov",
        description="Exterior harmonic Steklov spectra, concave-convex "
                    "boundary critical points, and p-harmonic Steklov "
                    "eigenvalue flows")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common],
                   help="exact and truncated eigenvalue table")
    sub.add_parser("solve", parents=[common],
                   help="multistart critical-point scan")
    sub.add_parser("psteklov", parents=[common],
                   help="first p-Steklov eigenpair by the ascent flow")
    sub.add_parser("constants", parents=[common],
                   help="tail embedding constants and fountain radii")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        file_values = (parse_config_file(args.config)
                       if args.config else {})
        overrides = {}
        for item in args.overrides:
            if "=" not in item:
                raise ConfigError(
                    f"--set expects KEY=VALUE, got {item!r}")
            key, _, value = item.partition("=")
            overrides[key.strip()] = value.strip()
        if args.out is not None:
            overrides["out_dir"] = args.out
        if args.seed is not None:
            overrides["seed"] = str(args.seed)
        if args.threads is not None:
            overrides["threads"] = str(args.threads)
        if args.plot:
            overrides["plot"] = "true"
        cfg = resolve_config(file_values, overrides)
        validate_config(cfg, args.command)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        out_dir = Path(cfg.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out_dir)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
