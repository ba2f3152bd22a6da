"""Command-line front end: ``lindred {model,reduce,ae,simulate,figdata,verify}``.

Exit codes: 0 when every certification passes, 1 when one fails, 2 on usage errors.
Outputs go to ``--out`` (default ``lindred_out``): JSON with sorted keys and CSV
with a header row in ``%.12e`` notation.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import pipeline
from .adiabatic import block_split, certify_first_order, first_order_AE, make_gauge
from .dynamics import propagate, time_grid
from .ingest import ConfigError, load_model, load_run_config
from .models import DephasingSpec, XXZSpec, build_dephasing, xxz_liouvillian
from .operator_core import (
    HilbertSpace, embed_site, liouvillian, random_density, SIGMA_Z,
)
from .perturbation import PerturbedGenerator, error_bounds
from .reduction import BlockLayout, ReductionMaps, lindblad_check
from .spectral import spectrum_rows

log = logging.getLogger("lindred")

MAX_SITES = 6
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
FIG_DEFAULT_N = {1: 5, 2: 4, 3: 4, 4: 5}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- output

def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, columns, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = np.real(np.asarray(rows, dtype=complex)).reshape(-1, len(columns))
    np.savetxt(path, rows, fmt="%.12e", delimiter=",", header=",".join(columns), comments="")


# ---------------------------------------------------------------- options

def _eps_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration (flags override it)")
    p.add_argument("--model", choices=["xxz", "xxz+disorder", "dephasing"])
    p.add_argument("--spec", help="JSON model document (replaces --model)")
    p.add_argument("--N", type=int)
    p.add_argument("--omega", type=float)
    p.add_argument("--A-xy", dest="A_xy", type=float)
    p.add_argument("--A-z", dest="A_z", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--jump-convention", choices=["rate", "amplitude"])
    p.add_argument("--eps", type=_eps_list)
    p.add_argument("--gauge", choices=["zero", "random", "commutant"])
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--out")
    p.add_argument("--threads", type=int)


DEFAULTS = {"model": "xxz", "N": 4, "omega": 1.2, "A_xy": 2.0, "A_z": 4.6, "gamma": 1.2,
            "jump_convention": "rate", "mode": "center", "gauge": "zero", "seed": 0,
            "tol": 1e-8, "out": "lindred_out"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lindred", description="Model reduction of Lindblad dynamics.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("model", help="build a model and report its spectrum")
    _common(p)
    p = sub.add_parser("reduce", help="center, perturbative or first-order AE reduction")
    _common(p)
    p.add_argument("--mode", choices=["center", "perturbative", "ae"])
    p = sub.add_parser("ae", help="first-order adiabatic elimination (same as reduce --mode ae)")
    _common(p)
    p = sub.add_parser("simulate", help="propagate a random initial state")
    _common(p)
    p = sub.add_parser("figdata", help="data series for figures 1-4")
    p.add_argument("figure", type=int, choices=[1, 2, 3, 4])
    _common(p)
    p = sub.add_parser("verify", help="run invariant suites")
    p.add_argument("suite", nargs="?", default="all")
    p.add_argument("--inject", choices=["non-cp"], help="add a known-bad fixture")
    _common(p)
    return ap


def resolve(args: argparse.Namespace, defaults: dict | None = None) -> dict:
    """Merge defaults, the run-config file and explicit flags (in increasing priority)."""
    cfg = dict(DEFAULTS)
    cfg.update(defaults or {})
    if getattr(args, "config", None):
        cfg.update(load_run_config(args.config))
    for k, v in vars(args).items():
        if v is not None and k not in ("command", "config", "verbose", "figure", "suite", "inject"):
            cfg[k] = v
    if cfg["N"] > MAX_SITES:
        raise UsageError(f"N = {cfg['N']} exceeds the resource guard (N <= {MAX_SITES})")
    if cfg["N"] < 2:
        raise UsageError("N must be at least 2")
    threads = cfg.get("threads") or os.environ.get("LINDRED_THREADS") or 1
    try:
        cfg["threads"] = max(1, int(threads))
    except ValueError:
        raise UsageError(f"invalid thread count {threads!r}") from None
    return cfg


def _xxz_spec(cfg: dict) -> XXZSpec:
    return XXZSpec(cfg["N"], cfg["omega"], cfg["A_xy"], cfg["A_z"], cfg["gamma"],
                   cfg["jump_convention"])


def _generator(cfg: dict) -> np.ndarray:
    if cfg.get("spec"):
        return liouvillian(load_model(cfg["spec"]))
    if cfg["model"] == "dephasing":
        dm = build_dephasing(DephasingSpec.random(cfg["N"], cfg["seed"], cfg["A_z"]))
        return dm.L0
    return xxz_liouvillian(_xxz_spec(cfg))


# ---------------------------------------------------------------- commands

def cmd_model(cfg: dict, out: Path) -> int:
    from .spectral import eig_superoperator, kernel_dim

    lv = _generator(cfg)
    rep = lindblad_check(lv)
    sd = eig_superoperator(lv)
    write_csv(out / "spectrum.csv", ["re", "im", "peripheral"], spectrum_rows(sd))
    write_json(out / "model.json", {
        "model": cfg.get("spec") or cfg["model"],
        "N": int(round(np.log2(np.sqrt(lv.shape[0])))),
        "superoperator_dim": lv.shape[0], "lindblad": rep.to_dict(),
        "gap": sd.gap, "kernel_dim": kernel_dim(sd), "center_dim": len(sd.peripheral),
    })
    return EXIT_OK if rep.ok else EXIT_FAIL


def _center(cfg: dict, out: Path) -> int:
    lv = _generator(cfg)
    cr = pipeline.center_reduction(lv, seed=cfg["seed"], tol=cfg["tol"])
    write_json(out / "wedderburn.json", cr.structure.to_dict())
    write_json(out / "reduction.json", cr.summary())
    write_csv(out / "spectrum.csv", ["re", "im", "peripheral"], spectrum_rows(cr.spectral))
    return EXIT_OK if cr.ok else EXIT_FAIL


def _perturbative(cfg: dict, out: Path) -> int:
    if cfg["model"] == "dephasing":
        return _dephasing_reduce(cfg, out, ae=False)
    spec = _xxz_spec(cfg)
    cr = pipeline.xxz_center(spec, cfg["seed"])
    gen, wbar = pipeline.disorder_family(spec, cfg["seed"])
    eps = cfg.get("eps") or [0.1, 0.3, 0.5, 0.7, 0.9]
    times = np.linspace(0.0, cfg.get("t_max") or 3.0 / spec.omega, cfg.get("points") or 31)
    certs, rows = {}, []
    for e in eps:
        red = cr.maps.R @ gen.evaluate(e) @ cr.maps.J
        certs[f"{e:g}"] = lindblad_check(red, cr.maps.layout.dims, cfg["tol"]).to_dict()
        rows += list(error_bounds(gen, cr.maps, e, times, cr.P).rows())
    write_csv(out / "error_bounds.csv", ["t", "eps", "lhs_i", "rhs_i", "lhs_ii", "rhs_ii"], rows)
    ok = all(c["ok"] for c in certs.values())
    write_json(out / "perturbative.json", {"certification": certs, "omega_bar": wbar,
                                           "structure": cr.structure.to_dict(), "ok": ok})
    return EXIT_OK if ok else EXIT_FAIL


def _dephasing_reduce(cfg: dict, out: Path, ae: bool) -> int:
    spec = DephasingSpec.random(cfg["N"], cfg["seed"], cfg["A_z"])
    dm = build_dephasing(spec)
    dim = 2 ** cfg["N"]
    maps = ReductionMaps(dm.R, dm.J, BlockLayout((1,) * dim))
    gen = PerturbedGenerator([dm.L0, dm.L1], validity=(0.0, np.inf), label="dephasing")
    eps = cfg.get("eps") or [0.1]
    report = {"alpha": spec.alpha, "beta": spec.beta, "eps": eps}
    ok = True
    if ae:
        res = first_order_AE(gen, maps, make_gauge(cfg["gauge"], cfg["seed"]))
        cert = certify_first_order(res, eps)
        report["certificate"] = cert.to_dict(res.gauge_spec)
        report["invariance_residual"] = res.invariance_residual
        ok = all(cert.passes)
        mats = [res.L_tilde(e) for e in eps]
    else:
        mats = [maps.R @ gen.evaluate(e) @ maps.J for e in eps]
    report["metzler_residual"] = [float(np.max(np.abs(M - dm.metzler(e)))) for M, e in zip(mats, eps)]
    for M, e in zip(mats, eps):
        cols = [f"s{j}" for j in range(dim)]
        write_csv(out / f"metzler_eps{e:g}.csv", cols, np.real(M))
    report["ok"] = ok
    write_json(out / "reduction.json", report)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_ae(cfg: dict, out: Path) -> int:
    if cfg["model"] == "dephasing":
        return _dephasing_reduce(cfg, out, ae=True)
    spec = _xxz_spec(cfg)
    cr = pipeline.xxz_center(spec)
    split = block_split(cr.generator, cr.maps, cr.P)
    eps = cfg.get("eps") or [0.1, -0.1, 0.5, -0.5]
    seeds = range(cfg["seed"], cfg["seed"] + (cfg.get("seeds") or 1))

    def run(s):
        gen, _ = pipeline.disorder_family(spec, s)
        res = first_order_AE(gen, cr.maps, make_gauge(cfg["gauge"], s), split)
        cert = certify_first_order(res, eps)
        d = cert.to_dict(res.gauge_spec)
        d["seed"] = s
        d["gauge_residual"] = res.gauge_residual
        return d

    with ThreadPoolExecutor(cfg["threads"]) as ex:
        results = list(ex.map(run, seeds))
    ok = all(all(r["lindblad_pass"]) for r in results)
    write_json(out / "ae.json", {"runs": results, "structure": cr.structure.to_dict(), "ok": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_reduce(cfg: dict, out: Path) -> int:
    mode = cfg["mode"]
    if mode == "center":
        return _center(cfg, out)
    if mode == "perturbative":
        return _perturbative(cfg, out)
    return cmd_ae(cfg, out)


def cmd_simulate(cfg: dict, out: Path) -> int:
    lv = _generator(cfg)
    if cfg["model"] == "xxz+disorder" and not cfg.get("spec"):
        gen, _ = pipeline.disorder_family(_xxz_spec(cfg), cfg["seed"])
        lv = gen.evaluate((cfg.get("eps") or [0.1])[0])
    elif cfg["model"] == "dephasing" and not cfg.get("spec"):
        dm = build_dephasing(DephasingSpec.random(cfg["N"], cfg["seed"], cfg["A_z"]))
        lv = dm.L0 + (cfg.get("eps") or [0.1])[0] * dm.L1
    dim = int(round(np.sqrt(lv.shape[0])))
    N = int(round(np.log2(dim)))
    rho0 = random_density(dim, np.random.default_rng(cfg["seed"]))
    times = time_grid(cfg.get("t_max") or 20.0, cfg.get("points") or 200)
    traj = propagate(lv, rho0, times)
    XN = pipeline.x_string(N)
    Z1 = embed_site(SIGMA_Z, 1, HilbertSpace.spins(N))
    rows = [(t, np.trace(r).real, np.linalg.eigvalsh(0.5 * (r + r.conj().T))[0],
             np.trace(Z1 @ r).real, np.trace(XN @ r).real) for t, r in zip(times, traj.states)]
    write_csv(out / "trajectory.csv", ["t", "trace", "min_eig", "exp_Z1", "exp_XN"], rows)
    write_json(out / "simulate.json", {"method": traj.meta["method"], "N": N, "seed": cfg["seed"]})
    return EXIT_OK


def _write_figure(fd: pipeline.FigureData, out: Path, name: str) -> None:
    for tname, (cols, rows) in fd.tables.items():
        write_csv(out / f"{tname}.csv", cols, rows)
    write_json(out / f"{name}.json", {"meta": fd.meta, "seed_dependent_columns": fd.seed_dependent})


def cmd_figdata(cfg: dict, out: Path, figure: int) -> int:
    if figure == 1:
        fd = pipeline.figure1(_xxz_spec(cfg), cfg["seed"], cfg.get("t_max") or 30.0,
                              cfg.get("points") or 200)
    elif figure == 2:
        seeds = range(cfg["seed"], cfg["seed"] + (cfg.get("seeds") or 10))
        eps = (cfg.get("eps") or [0.1])[0]
        with ThreadPoolExecutor(cfg["threads"]) as ex:
            fd = pipeline.figure2(_xxz_spec(cfg), seeds, eps, cfg.get("t_max") or 30.0,
                                  cfg.get("points") or 121, executor=ex)
    elif figure == 3:
        fd = pipeline.figure3(_xxz_spec(cfg), cfg["seed"],
                              tuple(cfg.get("eps") or (0.1, 0.3, 0.5, 0.7, 0.9)),
                              points=cfg.get("points") or 61)
    else:
        fd = pipeline.figure4(cfg["N"], cfg["seed"], tuple(cfg.get("eps") or (0.1, 0.5)),
                              cfg.get("t_max") or 10.0, cfg.get("points") or 101)
    _write_figure(fd, out, f"fig{figure}")
    return EXIT_OK


def cmd_verify(cfg: dict, out: Path, suite: str, inject: str | None) -> int:
    from .verify import SUITES, run_suites

    if suite != "all" and suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from all, {', '.join(SUITES)}")
    results = run_suites(suite, cfg, inject=inject)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'}  {r.name:<{width}}  {r.detail}")
    write_json(out / "verify.json", [r.to_dict() for r in results])
    return EXIT_OK if all(r.ok for r in results) else EXIT_FAIL


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    fig_defaults = {}
    if args.command == "figdata":
        fig_defaults["N"] = FIG_DEFAULT_N[args.figure]
        if args.figure == 1:
            fig_defaults["jump_convention"] = "amplitude"
    if args.command == "verify":
        fig_defaults["N"] = 3
    try:
        cfg = resolve(args, fig_defaults)
        out = Path(cfg["out"])
        # expm_multiply's norm estimator draws from the legacy global RNG.
        np.random.seed(cfg["seed"])
        if args.command == "model":
            code = cmd_model(cfg, out)
        elif args.command == "reduce":
            code = cmd_reduce(cfg, out)
        elif args.command == "ae":
            code = cmd_ae(cfg, out)
        elif args.command == "simulate":
            code = cmd_simulate(cfg, out)
        elif args.command == "figdata":
            code = cmd_figdata(cfg, out, args.figure)
        else:
            code = cmd_verify(cfg, out, args.suite, args.inject)
    except (UsageError, ConfigError) as exc:
        ap.print_usage(sys.stderr)
        print(f"lindred: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # certification and numerical failures
        log.debug("failure", exc_info=True)
        write_json(Path(cfg["out"]) / "failure.json", {"error": type(exc).__name__, "message": str(exc)})
        print(f"lindred: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return code


if __name__ == "__main__":
    sys.exit(main())
