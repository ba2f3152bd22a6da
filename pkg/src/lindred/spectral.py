"""Spectrum, center manifold and peripheral projector of a Liouvillian."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .operator_core import choi_matrix, cptp_report, devectorize, vectorize

log = logging.getLogger(__name__)

PROJECTOR_TOL = 1e-8
COND_MAX = 1e8


class NonLindbladError(ValueError):
    """Spectrum incompatible with a Lindblad generator (eigenvalue with positive real part)."""


class JordanDefectError(ValueError):
    """The peripheral sector of the generator is not diagonalizable."""


class ProjectorCertificationError(ValueError):
    """The peripheral projector failed idempotence, commutation or CPTP checks."""


@dataclass
class SpectralData:
    """Eigendecomposition of a superoperator.

    ``right[:, i]`` and ``left[:, i]`` are vectorized right and dual eigen-operators,
    normalized so that ``left^H right`` is the identity wherever the spectrum is
    semisimple. ``peripheral`` indexes the purely imaginary eigenvalues.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    peripheral: np.ndarray
    gap: float | None
    tol_peripheral: float
    generator: np.ndarray
    defective_clusters: list = field(default_factory=list)
    # orthonormal bases of the right/left peripheral invariant subspaces
    _q_right: np.ndarray | None = None
    _q_left: np.ndarray | None = None

    @property
    def no_dissipative_part(self) -> bool:
        return self.gap is None

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.generator.shape[0])))

    @property
    def right_ops(self) -> list[np.ndarray]:
        return [devectorize(self.right[:, i], self.dim) for i in range(self.right.shape[1])]

    @property
    def left_ops(self) -> list[np.ndarray]:
        return [devectorize(self.left[:, i], self.dim) for i in range(self.left.shape[1])]

    def biorthogonality_residual(self) -> float:
        """Max deviation of ``left^H right`` from the identity, ignoring defective clusters."""
        ok = np.ones(len(self.eigenvalues), dtype=bool)
        for c in self.defective_clusters:
            ok[list(c)] = False
        M = self.left[:, ok].conj().T @ self.right[:, ok]
        return float(np.max(np.abs(M - np.eye(M.shape[0])), initial=0.0))


@dataclass
class CenterManifold:
    basis: list[np.ndarray]
    frequencies: np.ndarray
    kernel_dim: int
    freq_tol: float

    @property
    def dim(self) -> int:
        return len(self.basis)


@dataclass
class ProjectorReport:
    idempotence: float
    commutator: float
    min_choi_eig: float
    tp_residual: float
    ok: bool


def _cluster(values: np.ndarray, tol: float) -> list[list[int]]:
    """Single-linkage clusters of complex numbers closer than ``tol``."""
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    order = np.argsort(values.real)
    vals = values[order]
    for a in range(n):
        b = a + 1
        while b < n and vals[b].real - vals[a].real < tol:
            if abs(vals[b] - vals[a]) < tol:
                ra, rb = find(order[a]), find(order[b])
                if ra != rb:
                    parent[ra] = rb
            b += 1
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [sorted(g) for g in groups.values()]


def check_lindblad_matrix(lv: np.ndarray, tol: float = 1e-9) -> list[str]:
    """Cheap structural checks: trace annihilation and Hermiticity preservation."""
    n = int(round(np.sqrt(lv.shape[0])))
    problems = []
    trace_row = vectorize(np.eye(n)).conj() @ lv
    if np.max(np.abs(trace_row)) > tol * max(1.0, np.abs(lv).max()):
        problems.append("not trace-annihilating")
    C = choi_matrix(lv, n, n)
    if np.max(np.abs(C - C.conj().T)) > tol * max(1.0, np.abs(lv).max()):
        problems.append("not Hermiticity-preserving")
    return problems


def _peripheral_subspaces(lv: np.ndarray, tol: float):
    sel = lambda z: z.real > -tol  # noqa: E731
    T, Q, k = sla.schur(lv, output="complex", sort=sel)
    Tl, Ql, kl = sla.schur(lv.conj().T, output="complex", sort=sel)
    if k != kl:
        raise NonLindbladError(
            f"left/right peripheral dimensions disagree ({k} vs {kl}); adjust tol_peripheral")
    return T[:k, :k], Q[:, :k], Ql[:, :k]


def eig_superoperator(lv: np.ndarray, tol_peripheral: float | None = None,
                      cluster_tol: float | None = None, check_input: bool = True) -> SpectralData:
    """Full eigendecomposition with peripheral set and spectral gap."""
    lv = np.asarray(lv, dtype=complex)
    if lv.ndim != 2 or lv.shape[0] != lv.shape[1]:
        raise ValueError(f"superoperator must be square, got {lv.shape}")
    scale = float(np.linalg.norm(lv, 2)) if lv.size else 0.0
    if tol_peripheral is None:
        tol_peripheral = 1e-7 * max(scale, 1.0)
    if cluster_tol is None:
        cluster_tol = 1e-6 * max(scale, 1.0)
    if check_input:
        for p in check_lindblad_matrix(lv):
            warnings.warn(f"input generator is {p}", RuntimeWarning, stacklevel=2)

    try:
        evals, vl, vr = sla.eig(lv, left=True, right=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise RuntimeError(f"eigensolver failed: {exc}") from exc

    worst = float(np.max(evals.real))
    if worst > tol_peripheral:
        raise NonLindbladError(f"eigenvalue with positive real part {worst:.3e}")

    peripheral = np.flatnonzero(np.abs(evals.real) < tol_peripheral)
    others = np.flatnonzero(np.abs(evals.real) >= tol_peripheral)
    right = np.array(vr, dtype=complex)
    left = np.array(vl, dtype=complex)

    # Peripheral sector from ordered Schur forms: stable bases even with degeneracy.
    T11, Qr, Ql = _peripheral_subspaces(lv, tol_peripheral)
    if T11.shape[0] != len(peripheral):
        raise NonLindbladError(
            f"Schur and eigen peripheral counts differ ({T11.shape[0]} vs {len(peripheral)})")
    if len(peripheral):
        mu, Y = np.linalg.eig(T11)
        # eig returns (nearly) parallel vectors inside a Jordan block
        if np.linalg.cond(Y) > COND_MAX:
            raise JordanDefectError("peripheral eigenvalues carry a nontrivial Jordan block")
        for c in _cluster(mu, cluster_tol):
            Y[:, c] = np.linalg.qr(Y[:, c])[0]
        S = Ql.conj().T @ Qr
        Vp = Qr @ Y
        Wp_h = np.linalg.solve(Y, np.linalg.solve(S, Ql.conj().T))
        # Match Schur eigenvalues to the eig ordering.
        order = np.argsort(evals[peripheral].imag, kind="stable")
        morder = np.argsort(mu.imag, kind="stable")
        idx = peripheral[order]
        evals[idx] = mu[morder]
        right[:, idx] = Vp[:, morder]
        left[:, idx] = Wp_h[morder, :].conj().T

    defective = []
    for c in _cluster(evals[others], cluster_tol):
        idx = others[c]
        raw_cond = np.linalg.cond(right[:, idx])
        V = np.linalg.qr(right[:, idx])[0]
        W = np.linalg.qr(left[:, idx])[0]
        S = W.conj().T @ V
        if raw_cond > COND_MAX or np.linalg.cond(S) > COND_MAX:
            defective.append([int(i) for i in idx])
            right[:, idx] = V
            left[:, idx] = W
            continue
        right[:, idx] = V
        left[:, idx] = W @ np.linalg.inv(S).conj().T

    if len(others):
        gap = float(np.min(np.abs(evals[others].real)))
    else:
        gap = None
        log.info("generator has no dissipative part")
    return SpectralData(evals, right, left, peripheral, gap, float(tol_peripheral), lv,
                        defective, Qr, Ql)


def center_manifold(sd: SpectralData, freq_tol: float | None = None) -> CenterManifold:
    """Peripheral eigen-operators and their frequencies."""
    if len(sd.peripheral) == 0:
        raise NonLindbladError("peripheral set is empty")
    freq_tol = sd.tol_peripheral if freq_tol is None else freq_tol
    freqs = sd.eigenvalues[sd.peripheral].imag
    basis = [devectorize(sd.right[:, i], sd.dim) for i in sd.peripheral]
    return CenterManifold(basis, freqs, int(np.sum(np.abs(freqs) < freq_tol)), freq_tol)


def kernel_dim(sd: SpectralData) -> int:
    return int(np.sum(np.abs(sd.eigenvalues[sd.peripheral]) < sd.tol_peripheral))


def certify_projector(P: np.ndarray, lv: np.ndarray | None = None,
                      tol: float = PROJECTOR_TOL) -> ProjectorReport:
    scale = max(1.0, float(np.abs(P).max()))
    idem = float(np.max(np.abs(P @ P - P))) / scale
    comm = 0.0
    if lv is not None:
        comm = float(np.max(np.abs(P @ lv - lv @ P))) / max(1.0, float(np.abs(lv).max()))
    rep = cptp_report(P, tol=tol)
    ok = idem <= tol and comm <= tol and rep.ok
    return ProjectorReport(idem, comm, rep.min_choi_eig, rep.tp_residual, bool(ok))


def spectral_projector(sd: SpectralData, certify: bool = True,
                       tol: float = PROJECTOR_TOL) -> np.ndarray:
    """Projector onto the center manifold along the decaying modes."""
    if sd._q_right is None or sd._q_right.shape[1] == 0:
        raise NonLindbladError("peripheral set is empty")
    Qr, Ql = sd._q_right, sd._q_left
    S = Ql.conj().T @ Qr
    cond = np.linalg.cond(S)
    if cond > COND_MAX:
        raise ProjectorCertificationError(f"peripheral overlap matrix has condition {cond:.2e}")
    P = Qr @ np.linalg.solve(S, Ql.conj().T)
    if certify:
        rep = certify_projector(P, sd.generator, tol)
        if not rep.ok:
            raise ProjectorCertificationError(
                f"projector certification failed: idempotence {rep.idempotence:.2e}, "
                f"commutator {rep.commutator:.2e}, min Choi eigenvalue {rep.min_choi_eig:.3e}, "
                f"TP residual {rep.tp_residual:.2e}")
    return P


@dataclass
class ConvergenceReport:
    times: np.ndarray
    errors: np.ndarray
    bound: np.ndarray
    gamma: float
    rate: float
    fitted_rate: float


def verify_exponential_convergence(lv: np.ndarray, P: np.ndarray, rho0: np.ndarray,
                                   times, gap: float, delta: float = 0.0,
                                   window: float = 0.3) -> ConvergenceReport:
    """Trace-norm distance to the center manifold along a trajectory.

    The bound is ``Gamma * exp(-(gap - delta) t)`` with ``Gamma`` the smallest
    constant making it hold on the sampled points.
    """
    from .dynamics import decay_fit, propagate, trace_norm

    times = np.asarray(times, dtype=float)
    traj = propagate(lv, rho0, times)
    n = rho0.shape[0]
    errs = np.array([trace_norm(r - devectorize(P @ vectorize(r), n)) for r in traj.states])
    rate = gap - delta
    gamma = float(np.max(errs * np.exp(rate * times)))
    bound = gamma * np.exp(-rate * times)
    fitted = decay_fit(errs, times, window)
    return ConvergenceReport(times, errs, bound, gamma, rate, fitted)


def spectrum_rows(sd: SpectralData):
    """Rows ``(re, im, is_peripheral)`` for CSV export."""
    per = np.zeros(len(sd.eigenvalues), dtype=bool)
    per[sd.peripheral] = True
    order = np.lexsort((sd.eigenvalues.imag, -sd.eigenvalues.real))
    return [(float(sd.eigenvalues[i].real), float(sd.eigenvalues[i].imag), int(per[i]))
            for i in order]
