"""CPTP reduction and injection maps, reduced generators and their Lindblad certification.

Reduced operators live on the block algebra ``sum_k M_{dF_k}``. A reduced vector is
the concatenation of the column-stacked blocks, so its length is ``sum_k dF_k**2``.
``lift`` and ``compress`` move between that vector and block-diagonal ``D x D``
matrices with ``D = sum_k dF_k``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .algebra import WedderburnStructure
from .dynamics import propagate, trace_norm
from .operator_core import choi_matrix, cptp_report, kraus_to_superop, vectorize, devectorize

MAP_TOL = 1e-8
CCP_TOL = 1e-8


class CertificationError(RuntimeError):
    """A map or generator expected to be CPTP/Lindblad failed its certificate."""


# ---------------------------------------------------------------- block layout

@dataclass(frozen=True)
class BlockLayout:
    dims: tuple[int, ...]

    @property
    def D(self) -> int:
        return sum(self.dims)

    @property
    def size(self) -> int:
        return sum(d * d for d in self.dims)

    def offsets(self):
        off, voff = 0, 0
        for d in self.dims:
            yield d, off, voff
            off += d
            voff += d * d

    def embedding(self) -> np.ndarray:
        """Matrix ``E`` (D^2 x size) placing a reduced vector as a block-diagonal matrix."""
        D = self.D
        E = np.zeros((D * D, self.size))
        for d, off, voff in self.offsets():
            for j in range(d):
                for i in range(d):
                    E[(off + j) * D + off + i, voff + j * d + i] = 1.0
        return E

    def lift(self, v: np.ndarray) -> np.ndarray:
        return devectorize(self.embedding() @ np.asarray(v), self.D)

    def compress(self, X: np.ndarray) -> np.ndarray:
        return self.embedding().T @ vectorize(X)

    def blocks(self, v: np.ndarray) -> list[np.ndarray]:
        v = np.asarray(v)
        return [v[voff: voff + d * d].reshape((d, d), order="F") for d, _, voff in self.offsets()]

    def from_blocks(self, xs) -> np.ndarray:
        return np.concatenate([np.asarray(x).reshape(-1, order="F") for x in xs])

    def trace_functional(self) -> np.ndarray:
        return self.from_blocks([np.eye(d) for d in self.dims]).real

    def identity_vectors(self) -> list[np.ndarray]:
        """Per-block unit vectors along ``vec(1_k)/sqrt(d_k)`` in ``D^2`` coordinates."""
        D = self.D
        out = []
        for d, off, _ in self.offsets():
            w = np.zeros(D * D, dtype=complex)
            for i in range(d):
                w[(off + i) * D + off + i] = 1.0
            out.append(w / np.sqrt(d))
        return out


def traceless_basis(layout: BlockLayout) -> np.ndarray:
    """Orthonormal basis of ``D x D`` matrices with zero trace on every diagonal block.

    Columns are vectorized generalized Gell-Mann matrices: symmetric then
    antisymmetric off-diagonal pairs in lexicographic order, then diagonal
    elements of each block.
    """
    D = layout.D
    cols = []
    for i in range(D):
        for j in range(i + 1, D):
            s = np.zeros((D, D), dtype=complex)
            s[i, j] = s[j, i] = 1 / np.sqrt(2)
            a = np.zeros((D, D), dtype=complex)
            a[i, j], a[j, i] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            cols.extend([vectorize(s), vectorize(a)])
    for d, off, _ in layout.offsets():
        for l in range(1, d):
            g = np.zeros((D, D), dtype=complex)
            for m in range(l):
                g[off + m, off + m] = 1.0
            g[off + l, off + l] = -l
            cols.append(vectorize(g / np.sqrt(l * (l + 1))))
    if not cols:
        return np.zeros((D * D, 0), dtype=complex)
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------- maps

@dataclass
class ReductionMaps:
    R: np.ndarray
    J: np.ndarray
    layout: BlockLayout
    structure: WedderburnStructure | None = field(default=None, repr=False)

    @property
    def check_dim(self) -> int:
        return self.layout.size

    def reduce(self, rho: np.ndarray) -> np.ndarray:
        return self.R @ vectorize(rho)

    def inject(self, v: np.ndarray) -> np.ndarray:
        n = int(round(np.sqrt(self.J.shape[0])))
        return devectorize(self.J @ v, n)


def _support_reduction(ws: WedderburnStructure) -> np.ndarray:
    rows = []
    for b in ws.blocks:
        kraus = []
        for g in range(b.dG):
            e = np.zeros((b.dG, 1))
            e[g, 0] = 1.0
            kraus.append(np.kron(np.eye(b.dF), e.T) @ b.W)
        rows.append(kraus_to_superop(kraus))
    return np.concatenate(rows, axis=0)


def injection_kraus(ws: WedderburnStructure) -> list[list[np.ndarray]]:
    out = []
    for b in ws.blocks:
        p, vecs = np.linalg.eigh(b.tau)
        out.append([np.sqrt(max(pa, 0.0)) * b.W.conj().T @ np.kron(np.eye(b.dF), vecs[:, [a]])
                    for a, pa in enumerate(p)])
    return out


def _injection(ws: WedderburnStructure) -> np.ndarray:
    cols = [kraus_to_superop(k) for k in injection_kraus(ws)]
    return np.concatenate(cols, axis=1)


@dataclass
class MapReport:
    rj_residual: float
    jr_residual: float
    R_min_choi: float
    R_tp: float
    J_min_choi: float
    J_tp: float
    ok: bool


def certify_maps(maps: ReductionMaps, P: np.ndarray | None = None, tol: float = MAP_TOL) -> MapReport:
    """Check ``RJ = 1``, ``JR = P`` and complete positivity of both maps."""
    E = maps.layout.embedding()
    D, n = maps.layout.D, int(round(np.sqrt(maps.R.shape[1])))
    rj = float(np.max(np.abs(maps.R @ maps.J - np.eye(maps.layout.size)), initial=0.0))
    jr = 0.0 if P is None else float(np.max(np.abs(maps.J @ maps.R - P)))
    rR = cptp_report(E @ maps.R, n, D, tol)
    rJ = cptp_report(maps.J @ E.T, D, n, tol)
    ok = rj <= tol and jr <= tol and rR.ok and rJ.ok
    return MapReport(rj, jr, rR.min_choi_eig, rR.tp_residual, rJ.min_choi_eig, rJ.tp_residual,
                     bool(ok))


def build_reduction_maps(ws: WedderburnStructure, P: np.ndarray | None = None,
                         certify: bool = True, tol: float = MAP_TOL) -> ReductionMaps:
    """Reduction ``R = R_supp o P`` and injection ``J`` for a block structure.

    ``R_supp(X) = sum_k tr_G(W_k X W_k^dag)`` and ``J(x) = sum_k W_k^dag (x_k (x) tau_k) W_k``.
    Composing with ``P`` keeps ``R`` trace preserving when the projector moves
    weight from outside the support into it; with ``P = None`` only the support
    part is used.
    """
    layout = BlockLayout(tuple(b.dF for b in ws.blocks))
    R = _support_reduction(ws)
    if P is not None:
        R = R @ P
    J = _injection(ws)
    maps = ReductionMaps(R, J, layout, ws)
    if certify:
        rep = certify_maps(maps, P, tol)
        if not rep.ok:
            raise CertificationError(f"reduction maps failed certification: {rep}")
    return maps


def reduced_generator(lv: np.ndarray, maps: ReductionMaps, certify: bool = True) -> np.ndarray:
    gen = maps.R @ lv @ maps.J
    if certify:
        rep = lindblad_check(gen, maps.layout.dims)
        if not rep.ok:
            raise CertificationError(f"reduced generator is not of Lindblad form: {rep}")
    return gen


# ---------------------------------------------------------------- Lindblad certificate

@dataclass
class LindbladReport:
    ok: bool
    min_conditional_eig: float
    tp_residual: float
    herm_residual: float
    max_real_eig: float

    def to_dict(self) -> dict:
        return {k: (bool(v) if k == "ok" else float(v)) for k, v in self.__dict__.items()}


def _layout_for(gen: np.ndarray, block_dims) -> BlockLayout:
    if block_dims is None:
        d = int(round(np.sqrt(gen.shape[0])))
        if d * d != gen.shape[0]:
            raise ValueError("generator size is not a square; pass block_dims")
        return BlockLayout((d,))
    layout = BlockLayout(tuple(int(d) for d in block_dims))
    if layout.size != gen.shape[0]:
        raise ValueError(f"block dims {layout.dims} do not match generator size {gen.shape[0]}")
    return layout


def _lifted_choi(gen: np.ndarray, layout: BlockLayout) -> np.ndarray:
    E = layout.embedding()
    return choi_matrix(E @ gen @ E.T, layout.D, layout.D)


def lindblad_check(gen: np.ndarray, block_dims=None, tol: float = CCP_TOL) -> LindbladReport:
    """Conditional complete positivity, trace annihilation and Hermiticity preservation.

    ``block_dims`` describes a block algebra ``sum_k M_{d_k}`` on which ``gen``
    acts in reduced coordinates; by default ``gen`` acts on a full matrix algebra.
    """
    gen = np.asarray(gen, dtype=complex)
    layout = _layout_for(gen, block_dims)
    C = _lifted_choi(gen, layout)
    scale = max(1.0, float(np.abs(C).max()))
    herm = float(np.max(np.abs(C - C.conj().T)))
    F = traceless_basis(layout)
    K = F.conj().T @ (0.5 * (C + C.conj().T)) @ F
    min_eig = float(np.linalg.eigvalsh(K)[0]) if K.size else 0.0
    tp = float(np.max(np.abs(layout.trace_functional() @ gen), initial=0.0))
    max_re = float(np.max(np.linalg.eigvals(gen).real)) if gen.size else 0.0
    ok = min_eig >= -tol and tp <= tol * scale and herm <= tol * scale
    return LindbladReport(bool(ok), min_eig, tp, herm, max_re)


@dataclass
class ReducedModel:
    generator: np.ndarray
    hamiltonian: np.ndarray
    jumps: list[np.ndarray]
    kossakowski: np.ndarray
    layout: BlockLayout
    report: LindbladReport
    residual: float

    @property
    def is_lindblad(self) -> bool:
        return self.report.ok

    def to_dict(self) -> dict:
        def cplx(a):
            a = np.asarray(a)
            return {"re": a.real.tolist(), "im": a.imag.tolist()}

        return {
            "dims": list(self.layout.dims),
            "H": cplx(self.hamiltonian),
            "jumps": [cplx(L) for L in self.jumps],
            "certification": self.report.to_dict(),
            "reconstruction_residual": float(self.residual),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def generator_from_hamiltonian_jumps(H: np.ndarray, jumps, layout: BlockLayout) -> np.ndarray:
    """Reduced generator ``x -> P(-i[H, x] + sum_j L x L^dag - 1/2 {L^dag L, x})`` on the block algebra."""
    E = layout.embedding()
    D = layout.D
    eye = np.eye(D)
    S = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    for L in jumps:
        LdL = L.conj().T @ L
        S = S + np.kron(L.conj(), L) - 0.5 * np.kron(eye, LdL) - 0.5 * np.kron(LdL.T, eye)
    return E.T @ S @ E


def extract_hamiltonian_jumps(gen: np.ndarray, block_dims=None, tol: float = CCP_TOL,
                              residual_tol: float = 1e-7) -> ReducedModel:
    """Hamiltonian and jump operators of a Lindblad generator on a block algebra.

    Gauge: jump operators are traceless on every block and ``H`` is traceless on
    every block. The Kossakowski matrix is expressed in the basis of
    :func:`traceless_basis`.
    """
    gen = np.asarray(gen, dtype=complex)
    layout = _layout_for(gen, block_dims)
    report = lindblad_check(gen, layout.dims, tol)
    C = _lifted_choi(gen, layout)
    C = 0.5 * (C + C.conj().T)
    F = traceless_basis(layout)
    K = F.conj().T @ C @ F
    mu, vecs = np.linalg.eigh(K) if K.size else (np.zeros(0), np.zeros((0, 0)))
    if mu.size and mu[0] < -tol:
        raise CertificationError(f"negative Kossakowski eigenvalue {mu[0]:.3e}")
    D = layout.D
    scale = max(1.0, float(np.abs(C).max()))
    jumps = []
    for a in range(mu.size):
        if mu[a] > tol * scale:
            jumps.append(np.sqrt(mu[a]) * devectorize(F @ vecs[:, a], D))

    G = np.zeros((D, D), dtype=complex)
    for (d, off, _), w in zip(layout.offsets(), layout.identity_vectors()):
        c = C @ w
        mkk = np.vdot(w, c)
        g = (c - 0.5 * mkk * w) / np.sqrt(d)
        Gk = devectorize(g, D)[off: off + d, off: off + d]
        G[off: off + d, off: off + d] = Gk
    H = 0.5j * (G - G.conj().T)
    for d, off, _ in layout.offsets():
        blk = H[off: off + d, off: off + d]
        H[off: off + d, off: off + d] = blk - np.trace(blk) / d * np.eye(d)
    H = 0.5 * (H + H.conj().T)

    rebuilt = generator_from_hamiltonian_jumps(H, jumps, layout)
    residual = float(np.linalg.norm(rebuilt - gen) / max(1.0, np.linalg.norm(gen)))
    if residual > residual_tol:
        raise CertificationError(f"GKLS reconstruction residual {residual:.2e}")
    return ReducedModel(gen, H, jumps, K, layout, report, residual)


# ---------------------------------------------------------------- asymptotic reduction

@dataclass
class AsymptoticReport:
    times: np.ndarray
    errors: np.ndarray
    gamma: float | None
    bound: np.ndarray | None
    unitarity_residual: float
    in_manifold_max_error: float | None


def verify_asymptotic_reduction(lv: np.ndarray, maps: ReductionMaps, rho0: np.ndarray, times,
                                gap: float | None = None, delta: float = 0.0,
                                P: np.ndarray | None = None) -> AsymptoticReport:
    """Compare ``exp(L t) rho0`` with ``J exp(L_red t) R rho0``.

    When ``P`` is given, also reports the error for ``P rho0``, which starts on
    the center manifold and must be tracked exactly.
    """
    times = np.asarray(times, dtype=float)
    n = rho0.shape[0]
    gen_red = maps.R @ lv @ maps.J
    full = propagate(lv, rho0, times)
    red = propagate(gen_red, maps.R @ vectorize(rho0), times)
    errs = np.array([trace_norm(rho - maps.inject(v)) for rho, v in zip(full.states, red.states)])
    gamma = bound = None
    if gap is not None:
        rate = gap - delta
        gamma = float(np.max(errs * np.exp(rate * times)))
        bound = gamma * np.exp(-rate * times)
    # HS adjoint in reduced coordinates is the conjugate transpose.
    unit = float(np.max(np.abs(gen_red + gen_red.conj().T), initial=0.0))
    in_man = None
    if P is not None:
        rc = devectorize(P @ vectorize(rho0), n)
        f2 = propagate(lv, rc, times)
        r2 = propagate(gen_red, maps.R @ vectorize(rc), times)
        in_man = max(trace_norm(a - maps.inject(b)) for a, b in zip(f2.states, r2.states))
    return AsymptoticReport(times, errs, gamma, bound, unit, in_man)
