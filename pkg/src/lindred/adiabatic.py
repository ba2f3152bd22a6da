"""First-order adiabatic elimination around a fixed center manifold.

Everything is written in the split basis ``T = [J0 | B]`` where ``B`` is an
orthonormal basis of the decaying sector ``range(1 - P0)``. In that basis the
unperturbed generator is block diagonal, ``L0 = Lhat0 (+) L_S``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .algebra import range_basis
from .dynamics import sop_norm
from .perturbation import PerturbedGenerator
from .reduction import LindbladReport, ReductionMaps, lindblad_check

KRON_MAX = 200
SYLVESTER_COND_MAX = 1e10


class SylvesterConditioningError(RuntimeError):
    pass


@dataclass
class BlockSplit:
    T: np.ndarray
    T_inv: np.ndarray
    L0_block: np.ndarray
    LS_block: np.ndarray
    B: np.ndarray
    J0: np.ndarray
    R0: np.ndarray
    Q0: np.ndarray
    off_diagonal: float

    @property
    def peripheral_dim(self) -> int:
        return self.L0_block.shape[0]

    @property
    def stable_dim(self) -> int:
        return self.LS_block.shape[0]

    def blocks(self, S: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """``(A, B, C, D)`` blocks of a superoperator in the split basis."""
        M = self.T_inv @ S @ self.T
        d = self.peripheral_dim
        return M[:d, :d], M[:d, d:], M[d:, :d], M[d:, d:]


def block_split(l0: np.ndarray, maps0: ReductionMaps, P0: np.ndarray | None = None,
                tol: float = 1e-8) -> BlockSplit:
    """Split basis adapted to the peripheral and decaying sectors of ``l0``."""
    J0, R0 = maps0.J, maps0.R
    if P0 is None:
        P0 = J0 @ R0
    m = l0.shape[0]
    Q0 = np.eye(m) - P0
    d = J0.shape[1]
    B = range_basis(Q0, 1e-9) if m > d else np.zeros((m, 0), dtype=complex)
    if B.shape[1] != m - d:
        raise ValueError(f"decaying sector has dimension {B.shape[1]}, expected {m - d}")
    T = np.concatenate([J0, B], axis=1)
    T_inv = np.concatenate([R0, B.conj().T @ Q0], axis=0)
    M = T_inv @ l0 @ T
    L0b, LSb = M[:d, :d], M[d:, d:]
    off = max(float(np.max(np.abs(M[:d, d:]), initial=0.0)), float(np.max(np.abs(M[d:, :d]), initial=0.0)))
    if off > tol * max(1.0, float(np.abs(l0).max())):
        raise ValueError(f"split basis does not block-diagonalize the generator (off-block {off:.2e})")
    if d and LSb.size:
        ev0 = np.linalg.eigvals(L0b)
        evS = np.linalg.eigvals(LSb)
        if np.min(np.abs(ev0[:, None] - evS[None, :])) < 1e-9 * max(1.0, np.abs(l0).max()):
            raise ValueError("peripheral and decaying blocks share an eigenvalue")
    return BlockSplit(T, T_inv, L0b, LSb, B, J0, R0, Q0, off)


@dataclass
class SylvesterSolution:
    X: np.ndarray
    residual: float
    cond_estimate: float
    method: str


def solve_sylvester(A: np.ndarray, B: np.ndarray, Q: np.ndarray,
                    cond_max: float = SYLVESTER_COND_MAX) -> SylvesterSolution:
    """Solve ``A X - X B = Q``.

    Small systems use the Kronecker-lifted dense solve, larger ones the
    Bartels-Stewart method.
    """
    p, q = A.shape[0], B.shape[0]
    if p == 0 or q == 0:
        return SylvesterSolution(np.zeros((p, q), dtype=complex), 0.0, 1.0, "empty")
    evA, evB = np.linalg.eigvals(A), np.linalg.eigvals(B)
    sep = float(np.min(np.abs(evA[:, None] - evB[None, :])))
    scale = sop_norm(A) + sop_norm(B)
    cond = scale / sep if sep > 0 else np.inf
    if cond > cond_max:
        raise SylvesterConditioningError(f"Sylvester operator condition estimate {cond:.2e}")
    if max(p, q) <= KRON_MAX:
        K = np.kron(np.eye(q), A) - np.kron(B.T, np.eye(p))
        x = np.linalg.solve(K, Q.reshape(-1, order="F"))
        X = x.reshape((p, q), order="F")
        method = "kron"
    else:
        X = sla.solve_sylvester(A, -B, Q)
        method = "bartels-stewart"
    res = float(np.max(np.abs(A @ X - X @ B - Q), initial=0.0))
    return SylvesterSolution(X, res, cond, method)


def solve_P1(split: BlockSplit, l1: np.ndarray):
    """Off-diagonal blocks ``X_B, X_C`` of the first-order projector correction."""
    _, LB, LC, _ = split.blocks(l1)
    sb = solve_sylvester(split.L0_block, split.LS_block, LB)
    sc = solve_sylvester(split.LS_block, split.L0_block, -LC)
    return sb, sc


def first_order_projector(split: BlockSplit, XB: np.ndarray, XC: np.ndarray) -> np.ndarray:
    d = split.peripheral_dim
    s = split.stable_dim
    M = np.zeros((d + s, d + s), dtype=complex)
    M[:d, d:] = XB
    M[d:, :d] = XC
    return split.T @ M @ split.T_inv


# ---------------------------------------------------------------- gauges

@dataclass(frozen=True)
class Gauge:
    kind: str = "zero"
    seed: int | None = None

    def matrix(self, Lhat0: np.ndarray) -> np.ndarray:
        d = Lhat0.shape[0]
        if self.kind == "zero":
            return np.zeros((d, d), dtype=complex)
        rng = np.random.default_rng(self.seed)
        if self.kind == "random_uniform":
            return rng.uniform(0.0, 1.0, size=(d, d)).astype(complex)
        if self.kind == "random_commutant":
            w, V = np.linalg.eig(Lhat0)
            if np.linalg.cond(V) > 1e8:
                raise ValueError("reduced generator is defective; no commutant gauge")
            diag = rng.uniform(0.0, 1.0, size=d)
            return V @ np.diag(diag) @ np.linalg.inv(V)
        raise ValueError(f"unknown gauge {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "seed": self.seed}


GAUGE_ALIASES = {"zero": "zero", "random": "random_uniform", "uniform": "random_uniform",
                 "random_uniform": "random_uniform", "commutant": "random_commutant",
                 "random_commutant": "random_commutant"}


def make_gauge(name: str, seed: int | None = None) -> Gauge:
    try:
        return Gauge(GAUGE_ALIASES[name], seed)
    except KeyError:
        raise ValueError(f"unknown gauge {name!r}") from None


# ---------------------------------------------------------------- first order

@dataclass
class AEFirstOrder:
    L_hat_0: np.ndarray
    L_hat_1: np.ndarray
    gauge: np.ndarray
    gauge_spec: Gauge
    J0: np.ndarray
    R0: np.ndarray
    J1: np.ndarray
    R1: np.ndarray
    XB: SylvesterSolution
    XC: SylvesterSolution
    split: BlockSplit = field(repr=False)
    invariance_residual: float = 0.0
    gauge_residual: float = 0.0
    block_dims: tuple = ()

    def L_tilde(self, eps: float) -> np.ndarray:
        return self.L_hat_0 + eps * self.L_hat_1

    def J_tilde(self, eps: float) -> np.ndarray:
        return self.J0 + eps * self.J1

    def R_tilde(self, eps: float) -> np.ndarray:
        return self.R0 + eps * self.R1

    @property
    def commutator_norm(self) -> float:
        return sop_norm(self.L_hat_0 @ self.gauge - self.gauge @ self.L_hat_0)

    @property
    def P1(self) -> np.ndarray:
        return first_order_projector(self.split, self.XB.X, self.XC.X)


def first_order_AE(gen: PerturbedGenerator, maps0: ReductionMaps, gauge: Gauge | str = "zero",
                   split: BlockSplit | None = None) -> AEFirstOrder:
    if gen.order < 1:
        raise ValueError("need a family with a first-order term")
    if isinstance(gauge, str):
        gauge = make_gauge(gauge)
    L0, L1 = gen.term(0), gen.term(1)
    if split is None:
        split = block_split(L0, maps0)
    J0, R0, B, Q0 = split.J0, split.R0, split.B, split.Q0
    Lhat0 = split.L0_block
    LA, _, _, _ = split.blocks(L1)
    sb, sc = solve_P1(split, L1)
    G = gauge.matrix(Lhat0)
    Lhat1 = LA + Lhat0 @ G - G @ Lhat0
    J1 = J0 @ G + B @ sc.X
    R1 = -G @ R0 + sb.X @ (B.conj().T @ Q0)
    inv = L1 @ J0 + L0 @ J1 - J1 @ Lhat0 - J0 @ Lhat1
    inv_res = sop_norm(inv)
    g_res = float(np.max(np.abs(R0 @ J1 - G), initial=0.0))
    return AEFirstOrder(Lhat0, Lhat1, G, gauge, J0, R0, J1, R1, sb, sc, split, inv_res, g_res,
                        maps0.layout.dims)


@dataclass
class AECertificate:
    eps: list[float]
    reports: list[LindbladReport]
    commutator_norm: float
    invariance_residual: float

    @property
    def passes(self) -> list[bool]:
        return [r.ok for r in self.reports]

    def to_dict(self, gauge: Gauge | None = None) -> dict:
        return {
            "gauge": gauge.to_dict() if gauge else None,
            "commutator_norm": float(self.commutator_norm),
            "lindblad_pass": [bool(p) for p in self.passes],
            "eps": [float(e) for e in self.eps],
            "min_conditional_eig": [float(r.min_conditional_eig) for r in self.reports],
            "invariance_residual": float(self.invariance_residual),
        }


def certify_first_order(ae: AEFirstOrder, eps_grid) -> AECertificate:
    """Lindblad certificate of the truncated generator on an epsilon grid.

    A vanishing commutator between the reduced generator and the gauge is
    sufficient for a pass; failures are recorded, not raised.
    """
    eps = [float(e) for e in eps_grid]
    reps = [lindblad_check(ae.L_tilde(e), ae.block_dims) for e in eps]
    return AECertificate(eps, reps, ae.commutator_norm, ae.invariance_residual)
