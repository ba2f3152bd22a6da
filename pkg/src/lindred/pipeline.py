"""End-to-end reduction pipelines and figure-data generators shared by the CLI and tests."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .adiabatic import BlockSplit, block_split, certify_first_order, first_order_AE, make_gauge
from .algebra import WedderburnStructure, decompose_projector, random_leak, random_structure
from .dynamics import decay_fit, propagate, time_grid, trace_norm
from .models import (
    DephasingSpec, XXZSpec, build_dephasing, disorder_perturbation, logical_x_prediction,
    xxz_liouvillian,
)
from .operator_core import (
    HilbertSpace, commutator_superop, devectorize, kraus_to_superop, pauli_string, random_density, vectorize,
)
from .perturbation import (
    PerturbedGenerator, error_bounds, loglog_slope, trajectory_distances,
)
from .reduction import (
    BlockLayout, MapReport, ReducedModel, ReductionMaps, build_reduction_maps, certify_maps,
    extract_hamiltonian_jumps,
)
from .spectral import (
    ProjectorReport, SpectralData, certify_projector, eig_superoperator, kernel_dim,
    spectral_projector,
)


@dataclass
class CenterReduction:
    generator: np.ndarray
    spectral: SpectralData
    P: np.ndarray
    projector_report: ProjectorReport
    structure: WedderburnStructure
    maps: ReductionMaps
    map_report: MapReport
    reduced: ReducedModel

    @property
    def ok(self) -> bool:
        return self.projector_report.ok and self.map_report.ok and self.reduced.is_lindblad

    def summary(self) -> dict:
        sd = self.spectral
        return {
            "gap": None if sd.gap is None else float(sd.gap),
            "kernel_dim": kernel_dim(sd),
            "center_dim": int(len(sd.peripheral)),
            "structure": self.structure.to_dict(),
            "projector": {k: (bool(v) if k == "ok" else float(v))
                          for k, v in self.projector_report.__dict__.items()},
            "maps": {k: (bool(v) if k == "ok" else float(v))
                     for k, v in self.map_report.__dict__.items()},
            "reduced_model": self.reduced.to_dict(),
            "ok": bool(self.ok),
        }


def center_reduction(lv: np.ndarray, seed: int = 0, tol: float = 1e-8) -> CenterReduction:
    """Spectrum, center projector, Wedderburn structure, CPTP maps and reduced model of ``lv``."""
    sd = eig_superoperator(lv)
    P = spectral_projector(sd, certify=False)
    prep = certify_projector(P, lv, tol)
    ws = decompose_projector(P, seed=seed)
    maps = build_reduction_maps(ws, P, certify=False)
    mrep = certify_maps(maps, P, tol)
    gen = maps.R @ lv @ maps.J
    red = extract_hamiltonian_jumps(gen, maps.layout.dims, tol)
    return CenterReduction(lv, sd, P, prep, ws, maps, mrep, red)


@lru_cache(maxsize=8)
def xxz_center(spec: XXZSpec, seed: int = 0) -> CenterReduction:
    """Cached center reduction of the XXZ ring (the N = 5 case takes several seconds)."""
    return center_reduction(xxz_liouvillian(spec), seed=seed)


def x_string(N: int) -> np.ndarray:
    return pauli_string("X" * N, list(range(1, N + 1)), HilbertSpace.spins(N))


def plus_state(N: int) -> np.ndarray:
    plus = np.full((2, 2), 0.5, dtype=complex)
    out = np.ones((1, 1), dtype=complex)
    for _ in range(N):
        out = np.kron(out, plus)
    return out


def disorder_family(spec: XXZSpec, seed: int) -> tuple[PerturbedGenerator, float]:
    """``L0 + eps * (-i[H1, .])`` with a random site-dependent ``H1``."""
    H1, wbar = disorder_perturbation(spec.N, seed)
    gen = PerturbedGenerator([xxz_liouvillian(spec), commutator_superop(H1)],
                             label=f"xxz+disorder seed={seed}")
    return gen, wbar


@lru_cache(maxsize=8)
def xxz_split(spec: XXZSpec, seed: int = 0) -> BlockSplit:
    cr = xxz_center(spec, seed)
    return block_split(cr.generator, cr.maps, cr.P)


def random_cptp_projector(n: int, dims, dR: int, rng: np.random.Generator):
    """Random block structure and the CPTP projector ``J R_supp Phi`` built from it.

    ``Phi`` keeps the support fixed and empties its complement into it.
    """
    ws = random_structure(n, list(dims), dR, rng)
    supp = build_reduction_maps(ws, None, certify=False)
    P = supp.J @ supp.R @ kraus_to_superop(random_leak(ws, rng))
    return ws, P


# ---------------------------------------------------------------- figure data

@dataclass
class FigureData:
    """Named tables (column names, rows) plus metadata for one figure.

    ``seed_dependent`` lists the columns whose values change with the seeds.
    """

    tables: dict[str, tuple[list[str], np.ndarray]]
    meta: dict = field(default_factory=dict)
    seed_dependent: dict[str, list[str]] = field(default_factory=dict)


def _logical_x(v: np.ndarray, layout: BlockLayout) -> float:
    blk = layout.blocks(v)[0]
    return float(np.real(blk[0, 1] + blk[1, 0]))


def figure1(spec: XXZSpec, seed: int = 0, t_max: float = 30.0, points: int = 200) -> FigureData:
    """Full ``<X^N>`` vs reduced ``<X_L>``, its closed form, and the trace distance with its bound.

    Every column except ``t`` depends on the random initial state drawn from ``seed``.
    """
    cr = xxz_center(spec)
    dim = 2 ** spec.N
    rho0 = random_density(dim, np.random.default_rng(seed))
    times = time_grid(t_max, points)
    full = propagate(cr.generator, rho0, times)
    red_gen = cr.maps.R @ cr.generator @ cr.maps.J
    red = propagate(red_gen, cr.maps.R @ vectorize(rho0), times)
    XN = x_string(spec.N)
    exp_xn = np.array([np.real(np.trace(XN @ r)) for r in full.states])
    exp_xl = np.array([_logical_x(v, cr.maps.layout) for v in red.states])
    theory = logical_x_prediction(rho0, spec, times)
    dist = np.array([trace_norm(r - cr.maps.inject(v)) for r, v in zip(full.states, red.states)])
    gap = cr.spectral.gap
    gamma = float(np.max(dist * np.exp(gap * times)))
    bound = gamma * np.exp(-gap * times)
    rows = np.column_stack([times, exp_xn, exp_xl, theory, dist, bound])
    cols = ["t", "exp_XN", "exp_XL", "theory", "tracedist", "bound"]
    meta = {"N": spec.N, "gap": gap, "Gamma": gamma, "omega0": spec.omega0, "seed": seed,
            "fitted_rate": decay_fit(dist, times, floor=1e-12),
            "jump_convention": spec.jump_convention}
    return FigureData({"fig1": (cols, rows)}, meta, {"fig1": cols[1:]})


def _ae_errors(gen, maps0, split, gauge_name, gauge_seed, eps, rho0, times, full_states):
    ae = first_order_AE(gen, maps0, make_gauge(gauge_name, gauge_seed), split)
    red = propagate(ae.L_tilde(eps), ae.R_tilde(eps) @ vectorize(rho0), times)
    n = rho0.shape[0]
    Jt = ae.J_tilde(eps)
    errs = np.array([trace_norm(r - devectorize(Jt @ v, n)) for r, v in zip(full_states, red.states)])
    return ae, errs, red


def figure2_seed(spec: XXZSpec, seed: int, eps: float, times: np.ndarray,
                 gauges=("zero", "random", "commutant")) -> dict:
    """Trace-norm errors of first-order AE per gauge for one disorder/gauge seed."""
    cr = xxz_center(spec)
    split = xxz_split(spec)
    gen, _ = disorder_family(spec, seed)
    rho0 = plus_state(spec.N)
    full = propagate(gen.evaluate(eps), rho0, times)
    out = {"errors": {}, "lindblad_pass": {}, "commutator_norm": {}}
    for g in gauges:
        ae, errs, red = _ae_errors(gen, cr.maps, split, g, seed, eps, rho0, times, full.states)
        cert = certify_first_order(ae, [eps])
        out["errors"][g] = errs
        out["lindblad_pass"][g] = bool(cert.passes[0])
        out["commutator_norm"][g] = float(ae.commutator_norm)
        if g == gauges[0]:
            XN = x_string(spec.N)
            Jt = ae.J_tilde(eps)
            n = rho0.shape[0]
            out["sync"] = np.column_stack([
                times,
                [np.real(np.trace(XN @ r)) for r in full.states],
                [np.real(np.trace(XN @ devectorize(Jt @ v, n))) for v in red.states],
            ])
    return out


def figure2(spec: XXZSpec, seeds=range(10), eps: float = 0.1, t_max: float = 30.0,
            points: int = 121, executor=None,
            gauges=("zero", "random", "commutant")) -> FigureData:
    """AE error curves per gauge, aggregated over seeds, and one synchronization trace.

    The synchronization table uses the first gauge and the first seed.

    Seed-dependent: every error column and the sync table (disorder and gauge
    draws both use the seed).
    """
    seeds = list(seeds)
    times = np.linspace(0.0, t_max, points)
    xxz_split(spec)  # build the shared split once before fanning out
    run = lambda s: figure2_seed(spec, s, eps, times, gauges)
    results = list(executor.map(run, seeds)) if executor else [run(s) for s in seeds]
    cols, data = ["t"], [times]
    for g in gauges:
        E = np.array([r["errors"][g] for r in results])
        cols += [f"{g}_mean", f"{g}_std"]
        data += [E.mean(axis=0), E.std(axis=0)]
    late = np.array([[r["errors"][g][-1] for g in gauges] for r in results])
    late_rows = np.column_stack([np.array(seeds, dtype=float), late])
    late_cols = ["seed"] + [f"{g}_late" for g in gauges]
    cert = {g: [r["lindblad_pass"][g] for r in results] for g in gauges}
    meta = {"N": spec.N, "eps": eps, "seeds": seeds, "sync_gauge": gauges[0],
            "median_late_error": {g: float(np.median(late[:, k])) for k, g in enumerate(gauges)},
            "lindblad_pass_fraction": {g: float(np.mean(cert[g])) for g in gauges},
            "max_commutator_norm": {g: float(max(r["commutator_norm"][g] for r in results))
                                    for g in gauges}}
    tables = {"fig2_errors": (cols, np.column_stack(data)),
              "fig2_late": (late_cols, late_rows),
              "fig2_sync": (["t", "exp_XN_full", "exp_XN_reduced"], results[0]["sync"])}
    return FigureData(tables, meta, {"fig2_errors": cols[1:], "fig2_late": late_cols[1:],
                                     "fig2_sync": ["exp_XN_full", "exp_XN_reduced"]})


def figure3_inset(spec: XXZSpec, seed: int = 0, eps_grid=(0.1, 0.3, 0.5, 0.7, 0.9),
                  omega_t=(0.3, 0.9, 1.5, 2.1, 2.7)):
    """Distances at fixed ``omega t`` across the eps grid and their log-log exponents."""
    cr = xxz_center(spec)
    gen, _ = disorder_family(spec, seed)
    dim = 2 ** spec.N
    rho0 = devectorize(cr.P @ vectorize(random_density(dim, np.random.default_rng(seed))), dim)
    rows, slopes = [], []
    for wt in omega_t:
        t = wt / spec.omega
        d = [trajectory_distances(gen, cr.maps, rho0, e, [0.0, t]) for e in eps_grid]
        st = [x.state[-1] for x in d]
        pr = [x.projected[-1] for x in d]
        rows += [(wt, e, a, b) for e, a, b in zip(eps_grid, st, pr)]
        slopes.append((wt, loglog_slope(eps_grid, st), loglog_slope(eps_grid, pr)))
    return np.array(rows, dtype=float), np.array(slopes, dtype=float)


def figure3(spec: XXZSpec, seed: int = 0, eps_grid=(0.1, 0.3, 0.5, 0.7, 0.9),
            omega_t_max: float = 3.0, points: int = 61) -> FigureData:
    """Distance curves and bounds per eps, plus the fixed-time eps-scaling table.

    Seed-dependent: the disorder draw and the initial state, hence every
    distance column and the fitted exponents. The bound columns depend on the
    disorder draw only through the norm of the first-order term.
    """
    cr = xxz_center(spec)
    gen, _ = disorder_family(spec, seed)
    dim = 2 ** spec.N
    rho0 = devectorize(cr.P @ vectorize(random_density(dim, np.random.default_rng(seed))), dim)
    times = np.linspace(0.0, omega_t_max / spec.omega, points)
    rows = []
    l1 = None
    for e in eps_grid:
        td = trajectory_distances(gen, cr.maps, rho0, e, times)
        eb = error_bounds(gen, cr.maps, e, times, cr.P)
        l1 = eb.l1_norm
        for k, t in enumerate(times):
            rows.append((t, t * spec.omega, e, td.state[k], td.projected[k], eb.lhs_i[k],
                         eb.rhs_i[k], eb.lhs_ii[k], eb.rhs_ii[k], float(eb.flagged[k])))
    cols = ["t", "omega_t", "eps", "state_dist", "projected_dist", "prop_dist_i", "bound_i",
            "prop_dist_ii", "bound_ii", "outside_window"]
    inset, slopes = figure3_inset(spec, seed, eps_grid)
    meta = {"N": spec.N, "seed": seed, "l1_norm": l1,
            "exponents": {f"{r[0]:.1f}": {"state": r[1], "projected": r[2]} for r in slopes}}
    tables = {"fig3_curves": (cols, np.array(rows, dtype=float)),
              "fig3_inset": (["omega_t", "eps", "state_dist", "projected_dist"], inset),
              "fig3_exponents": (["omega_t", "slope_state", "slope_projected"], slopes)}
    return FigureData(tables, meta, {"fig3_curves": cols[3:6] + [cols[7]],
                                     "fig3_inset": ["state_dist", "projected_dist"],
                                     "fig3_exponents": ["slope_state", "slope_projected"]})


def generator_gap(gen: np.ndarray, tol: float = 1e-8) -> float:
    ev = np.linalg.eigvals(gen)
    scale = max(1.0, float(np.abs(ev).max()))
    decaying = ev.real[ev.real < -tol * scale]
    return float(-decaying.max())


def figure4(N: int = 5, seed: int = 0, eps_grid=(0.1, 0.5), t_max: float = 10.0,
            points: int = 101) -> FigureData:
    """Population of the all-up state, full vs classical reduction, and trace distance with bound.

    Seed-dependent: the rates and the initial state, hence all columns but ``t``
    and ``eps``.
    """
    spec = DephasingSpec.random(N, seed)
    dm = build_dephasing(spec)
    dim = 2 ** N
    rho0 = random_density(dim, np.random.default_rng(seed))
    times = np.linspace(0.0, t_max, points)
    rows, meta = [], {"N": N, "seed": seed, "alpha": spec.alpha.tolist(),
                      "beta": spec.beta.tolist(), "gaps": {}, "max_population_error": {}}
    for e in eps_grid:
        L = dm.L0 + e * dm.L1
        full = propagate(L, rho0, times)
        red = propagate(dm.metzler(e).astype(complex), dm.R @ vectorize(rho0), times)
        gap = generator_gap(L)
        dist = np.array([trace_norm(r - np.diag(p)) for r, p in zip(full.states, red.states)])
        pops = np.array([np.real(np.diag(r)) for r in full.states])
        pred = np.array([np.real(p) for p in red.states])
        gamma = float(np.max(dist * np.exp(gap * times)))
        for k, t in enumerate(times):
            rows.append((t, e, pops[k, 0], pred[k, 0], dist[k], gamma * np.exp(-gap * t)))
        meta["gaps"][f"{e:g}"] = gap
        meta["max_population_error"][f"{e:g}"] = float(np.max(np.abs(pops - pred)))
    cols = ["t", "eps", "p0_full", "p0_red", "tracedist", "bound"]
    return FigureData({"fig4": (cols, np.array(rows, dtype=float))}, meta, {"fig4": cols[2:]})

