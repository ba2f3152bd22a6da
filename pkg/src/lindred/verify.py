"""Invariant suites run by ``lindred verify``; each check returns a pass/fail row with a detail string."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import pipeline
from .adiabatic import certify_first_order, first_order_AE, make_gauge
from .algebra import decompose_projector, validate_structure
from .dynamics import propagate, propagator
from .models import (
    DephasingSpec, XXZSpec, build_dephasing, sector_data, sector_dim, xxz_liouvillian,
    xxz_projector,
)
from .operator_core import (
    SIGMA_MINUS, HilbertSpace, LindbladModel, cptp_report, liouvillian, random_density,
    random_lindblad_model, superop_from_map, vectorize,
)
from .perturbation import error_bounds, reduced_perturbed
from .reduction import build_reduction_maps, certify_maps, lindblad_check
from .spectral import certify_projector, eig_superoperator, kernel_dim, spectral_projector


@dataclass
class CheckResult:
    suite: str
    name: str
    ok: bool
    detail: str

    def to_dict(self) -> dict:
        return {"suite": self.suite, "name": self.name, "ok": bool(self.ok), "detail": self.detail}


def _zoo(N: int, seed: int):
    """Small models exercised by several suites."""
    rng = np.random.default_rng(seed)
    out = {"xxz": xxz_liouvillian(XXZSpec(N)),
           "dephasing": build_dephasing(DephasingSpec.random(N, seed)).L0,
           "amplitude_damping": liouvillian(LindbladModel(HilbertSpace(2), np.zeros((2, 2)), (SIGMA_MINUS,)))}
    for k in range(2):
        out[f"random{k}"] = liouvillian(random_lindblad_model(3, rng))
    return out


def suite_operator_core(cfg):
    rows = []
    for name, lv in _zoo(cfg["N"], cfg["seed"]).items():
        rep = lindblad_check(lv)
        rows.append((f"generator form [{name}]", rep.ok, f"min cond eig {rep.min_conditional_eig:.2e}"))
    ident = cptp_report(np.eye(9))
    rows.append(("identity channel CPTP", ident.ok, f"min Choi eig {ident.min_choi_eig:.2e}"))
    return rows


def suite_spectral(cfg):
    rows = []
    for name, lv in _zoo(cfg["N"], cfg["seed"]).items():
        sd = eig_superoperator(lv)
        P = spectral_projector(sd, certify=False)
        rep = certify_projector(P, lv, cfg["tol"])
        rows.append((f"center projector [{name}]", rep.ok,
                     f"idempotence {rep.idempotence:.1e}, min Choi eig {rep.min_choi_eig:.1e}"))
    N = cfg["N"]
    sd = eig_superoperator(xxz_liouvillian(XXZSpec(N)))
    rows.append(("xxz kernel dimension", kernel_dim(sd) == N + 1, f"{kernel_dim(sd)} (expect {N + 1})"))
    rows.append(("xxz center dimension", len(sd.peripheral) == N + 3,
                 f"{len(sd.peripheral)} (expect {N + 3})"))
    return rows


def suite_algebra(cfg):
    N = cfg["N"]
    P = xxz_projector(N)
    ws = decompose_projector(P, cfg["seed"])
    validate_structure(ws)
    want = [(2, 1)] + sorted(((1, sector_dim(N, m)) for m in sector_data(N).intermediate_m),
                             key=lambda d: -d[1])
    rows = [("xxz Wedderburn blocks", ws.block_dims == want, f"{ws.block_dims}")]
    rng = np.random.default_rng(cfg["seed"])
    ws2, P2 = pipeline.random_cptp_projector(5, [(2, 1), (1, 2)], 1, rng)
    got = decompose_projector(P2, cfg["seed"])
    rows.append(("random structure recovered", sorted(got.block_dims) == sorted(ws2.block_dims),
                 f"{got.block_dims} dR={got.dR}"))
    return rows


def suite_reduction(cfg):
    rows = []
    rng = np.random.default_rng(cfg["seed"])
    worst = np.inf
    for _ in range(5):
        ws, P = pipeline.random_cptp_projector(5, [(2, 1), (1, 2)], 1, rng)
        maps = build_reduction_maps(ws, P, certify=False)
        mrep = certify_maps(maps, P)
        rep = lindblad_check(maps.R @ liouvillian(random_lindblad_model(5, rng)) @ maps.J, maps.layout.dims)
        worst = min(worst, rep.min_conditional_eig if mrep.ok and rep.ok else -np.inf)
    rows.append(("reduced generators of random models", worst >= -cfg["tol"],
                 f"worst min cond eig {worst:.2e}"))
    cr = pipeline.xxz_center(XXZSpec(cfg["N"]), cfg["seed"])
    rows.append(("xxz center reduction certified", cr.ok,
                 f"kossakowski max {np.abs(cr.reduced.kossakowski).max(initial=0.0):.1e}"))
    return rows


def suite_perturbation(cfg):
    spec = XXZSpec(cfg["N"])
    cr = pipeline.xxz_center(spec)
    gen, _ = pipeline.disorder_family(spec, cfg["seed"])
    rows = []
    for e in (0.1, 0.5):
        red = reduced_perturbed(gen, cr.maps, e, certify=False)
        rep = lindblad_check(red, cr.maps.layout.dims)
        rows.append((f"fixed-manifold reduction Lindblad eps={e}", rep.ok,
                     f"min cond eig {rep.min_conditional_eig:.2e}"))
    eb = error_bounds(gen, cr.maps, 0.1, np.linspace(0.0, 0.3, 7), cr.P)
    ok = bool(np.all(eb.lhs_i <= 1.5 * eb.rhs_i + 1e-12) and np.all(eb.lhs_ii <= 1.5 * eb.rhs_ii + 1e-12))
    rows.append(("error bounds inside window", ok, f"max ratio {np.max(eb.lhs_i[1:] / eb.rhs_i[1:]):.2f}"))
    return rows


def suite_adiabatic(cfg):
    spec = XXZSpec(cfg["N"])
    cr = pipeline.xxz_center(spec)
    split = pipeline.xxz_split(spec)
    gen, _ = pipeline.disorder_family(spec, cfg["seed"])
    rows = []
    for g in ("zero", "commutant", "random"):
        ae = first_order_AE(gen, cr.maps, make_gauge(g, cfg["seed"]), split)
        rows.append((f"invariance residual [{g}]", ae.invariance_residual <= 1e-7,
                     f"{ae.invariance_residual:.1e}"))
        if g != "random":
            cert = certify_first_order(ae, [0.1, -0.1, 0.5, -0.5])
            rows.append((f"truncated generator Lindblad [{g}]", all(cert.passes),
                         f"commutator norm {ae.commutator_norm:.1e}"))
    return rows


def suite_models(cfg):
    N = cfg["N"]
    lv = xxz_liouvillian(XXZSpec(N))
    res = max(np.linalg.norm(lv @ vectorize(r)) for r in sector_data(N).steady_states.values())
    rows = [("xxz steady states", res <= 1e-9, f"max residual {res:.1e}")]
    spec = DephasingSpec.random(N, cfg["seed"])
    dm = build_dephasing(spec)
    red = dm.R @ (dm.L0 + 0.3 * dm.L1) @ dm.J
    err = float(np.max(np.abs(red - dm.metzler(0.3))))
    rows.append(("dephasing reduced generator is the Metzler matrix", err <= 1e-9, f"{err:.1e}"))
    return rows


def suite_dynamics(cfg):
    rows = []
    rng = np.random.default_rng(cfg["seed"])
    for name, lv in _zoo(cfg["N"], cfg["seed"]).items():
        d = int(round(np.sqrt(lv.shape[0])))
        worst = min(cptp_report(propagator(lv, t), d, d).min_choi_eig for t in (0.1, 1.0, 10.0))
        t, s = rng.uniform(0, 2, size=2)
        semi = float(np.max(np.abs(propagator(lv, t + s) - propagator(lv, t) @ propagator(lv, s))))
        traj = propagate(lv, random_density(d, rng), [0.0, 1.0, 5.0])
        tr = max(abs(np.trace(r) - 1) for r in traj.states)
        rows.append((f"propagator CPTP and semigroup [{name}]",
                     worst >= -1e-8 and semi <= 1e-8 and tr <= 1e-8,
                     f"min Choi {worst:.1e}, semigroup {semi:.1e}"))
    return rows


def non_cp_fixture() -> np.ndarray:
    """Projector onto symmetric qubit matrices, ``x -> (x + x^T) / 2``: positive, TP, not CP."""
    return superop_from_map(lambda x: 0.5 * (x + x.T), 2)


def suite_injected(cfg):
    rep = certify_projector(non_cp_fixture(), None, cfg["tol"])
    return [("injected non-CP projector", rep.ok,
             f"witness: Choi eigenvalue {rep.min_choi_eig:.3f} < 0")]


SUITES = {
    "operator_core": suite_operator_core,
    "spectral": suite_spectral,
    "algebra": suite_algebra,
    "reduction": suite_reduction,
    "perturbation": suite_perturbation,
    "adiabatic": suite_adiabatic,
    "models": suite_models,
    "dynamics": suite_dynamics,
}


def run_suites(suite: str, cfg: dict, inject: str | None = None) -> list[CheckResult]:
    names = list(SUITES) if suite == "all" else [suite]
    out = []
    for name in names:
        try:
            rows = SUITES[name](cfg)
        except Exception as exc:
            rows = [(f"{name} raised", False, f"{type(exc).__name__}: {exc}")]
        out += [CheckResult(name, n, bool(ok), d) for n, ok, d in rows]
    if inject == "non-cp":
        out += [CheckResult("injected", n, bool(ok), d) for n, ok, d in suite_injected(cfg)]
    return out
