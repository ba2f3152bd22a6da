"""Operators, superoperators and GKLS generators.

Operators are plain complex ``numpy`` arrays. Superoperators are matrices acting
on column-stacked operators: entry ``(i, j)`` of an ``n x n`` operator ``X``
sits at index ``j * n + i`` of ``vec(X)``, so that

    vec(A X B) = (B^T kron A) vec(X).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

TOL_HERM = 1e-10

# Pauli and ladder matrices; |0> is spin up (sigma_z |0> = |0>).
SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)

PAULI = {
    "I": SIGMA_0,
    "X": SIGMA_X,
    "Y": SIGMA_Y,
    "Z": SIGMA_Z,
    "+": SIGMA_PLUS,
    "-": SIGMA_MINUS,
}


class DimensionError(ValueError):
    """Raised when operator or superoperator shapes do not fit together."""


@dataclass(frozen=True)
class HilbertSpace:
    dim: int
    site_dims: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError(f"dimension must be positive, got {self.dim}")
        if self.site_dims is not None:
            object.__setattr__(self, "site_dims", tuple(int(d) for d in self.site_dims))
            if int(np.prod(self.site_dims)) != self.dim:
                raise DimensionError(
                    f"site dims {self.site_dims} do not multiply to {self.dim}")

    @classmethod
    def spins(cls, n_sites: int, local_dim: int = 2) -> "HilbertSpace":
        return cls(local_dim ** n_sites, (local_dim,) * n_sites)

    @property
    def n_sites(self) -> int:
        return 0 if self.site_dims is None else len(self.site_dims)


@dataclass(frozen=True)
class LindbladModel:
    """A Hamiltonian and a list of jump operators on ``space``."""

    space: HilbertSpace
    hamiltonian: np.ndarray
    jumps: tuple[np.ndarray, ...] = field(default_factory=tuple)
    tol: float = TOL_HERM

    def __post_init__(self):
        n = self.space.dim
        H = np.asarray(self.hamiltonian, dtype=complex)
        if H.shape != (n, n):
            raise DimensionError(f"Hamiltonian has shape {H.shape}, expected {(n, n)}")
        if np.max(np.abs(H - H.conj().T), initial=0.0) > self.tol:
            raise ValueError("Hamiltonian is not Hermitian")
        jumps = tuple(np.asarray(L, dtype=complex) for L in self.jumps)
        for L in jumps:
            if L.shape != (n, n):
                raise DimensionError(f"jump operator has shape {L.shape}, expected {(n, n)}")
        object.__setattr__(self, "hamiltonian", H)
        object.__setattr__(self, "jumps", jumps)


def vectorize(x: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a 1-D vector."""
    x = np.asarray(x)
    if x.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {x.shape}")
    return x.reshape(-1, order="F")


def devectorize(v: np.ndarray, dim: int | HilbertSpace | None = None) -> np.ndarray:
    """Inverse of :func:`vectorize` for square operators."""
    v = np.asarray(v).reshape(-1)
    if isinstance(dim, HilbertSpace):
        dim = dim.dim
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    if dim * dim != v.size:
        raise DimensionError(f"vector of length {v.size} is not a {dim}x{dim} operator")
    return v.reshape((dim, dim), order="F")


def apply_superop(S: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Apply a square-space superoperator matrix to an operator."""
    out = S @ vectorize(x)
    return devectorize(out)


def superop_from_map(fn, dim_in: int) -> np.ndarray:
    """Matrix of a linear map given as a Python callable on ``dim_in`` operators."""
    cols = []
    for j in range(dim_in):
        for i in range(dim_in):
            e = np.zeros((dim_in, dim_in), dtype=complex)
            e[i, j] = 1.0
            cols.append(vectorize(np.asarray(fn(e), dtype=complex)))
    return np.stack(cols, axis=1)


def kraus_to_superop(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """Superoperator of X -> sum_k K X K^dag; Kraus operators may be rectangular."""
    rows, cols = np.asarray(kraus[0]).shape
    S = np.zeros((rows * rows, cols * cols), dtype=complex)
    for K in kraus:
        K = np.asarray(K, dtype=complex)
        S += np.kron(K.conj(), K)
    return S


def embed_site(local: np.ndarray, site: int, space: HilbertSpace) -> np.ndarray:
    """Tensor ``local`` into ``space`` at 1-based ``site`` with periodic wrap.

    Site ``N + 1`` is site ``1``; anything not in ``1..N`` after one wrap is an
    error.
    """
    if space.site_dims is None:
        raise DimensionError("space has no tensor factorization")
    n_sites = space.n_sites
    if site == n_sites + 1:
        site = 1
    if not 1 <= site <= n_sites:
        raise IndexError(f"site {site} out of range for {n_sites} sites")
    local = np.asarray(local, dtype=complex)
    d = space.site_dims[site - 1]
    if local.shape != (d, d):
        raise DimensionError(f"local operator shape {local.shape} does not match site dim {d}")
    left = int(np.prod(space.site_dims[: site - 1], dtype=int))
    right = int(np.prod(space.site_dims[site:], dtype=int))
    return np.kron(np.kron(np.eye(left), local), np.eye(right))


def pauli_string(letters: str, sites: Sequence[int], space: HilbertSpace) -> np.ndarray:
    """Product of single-site operators, e.g. ``pauli_string("XX", [1, 2], space)``."""
    if len(letters) != len(sites):
        raise ValueError("need one site per Pauli letter")
    op = np.eye(space.dim, dtype=complex)
    for letter, site in zip(letters, sites):
        op = op @ embed_site(PAULI[letter], site, space)
    return op


def commutator_superop(H: np.ndarray) -> np.ndarray:
    """Matrix of X -> -i[H, X]."""
    n = H.shape[0]
    eye = np.eye(n)
    return -1j * (np.kron(eye, H) - np.kron(H.T, eye))


def dissipator_superop(L: np.ndarray) -> np.ndarray:
    """Matrix of X -> L X L^dag - 1/2 {L^dag L, X}."""
    n = L.shape[0]
    eye = np.eye(n)
    LdL = L.conj().T @ L
    return np.kron(L.conj(), L) - 0.5 * np.kron(eye, LdL) - 0.5 * np.kron(LdL.T, eye)


def liouvillian(model: LindbladModel) -> np.ndarray:
    lv = commutator_superop(model.hamiltonian)
    for L in model.jumps:
        lv = lv + dissipator_superop(L)
    return lv


def heisenberg_adjoint(lv: np.ndarray) -> np.ndarray:
    """Hilbert-Schmidt adjoint of a superoperator."""
    lv = np.asarray(lv)
    if lv.ndim != 2 or lv.shape[0] != lv.shape[1]:
        raise DimensionError(f"superoperator must be square, got {lv.shape}")
    return lv.conj().T


def choi_matrix(S: np.ndarray, dim_in: int | None = None, dim_out: int | None = None) -> np.ndarray:
    """Choi matrix ``C[(i,k),(j,l)] = S(|i><j|)[k,l]`` of a (possibly rectangular) map.

    Row index ``(i, k)`` is flattened as ``i * dim_out + k``. The map is CP iff
    ``C >= 0`` and TP iff tracing out the output factor leaves the identity.
    """
    S = np.asarray(S)
    if dim_in is None:
        dim_in = int(round(np.sqrt(S.shape[1])))
    if dim_out is None:
        dim_out = int(round(np.sqrt(S.shape[0])))
    if S.shape != (dim_out ** 2, dim_in ** 2):
        raise DimensionError(
            f"superoperator shape {S.shape} does not act {dim_in}^2 -> {dim_out}^2")
    # S[(l*do + k), (j*di + i)] = S(|i><j|)[k, l]
    T = S.reshape(dim_out, dim_out, dim_in, dim_in)  # [l, k, j, i]
    C = T.transpose(3, 1, 2, 0)  # [i, k, j, l]
    return C.reshape(dim_in * dim_out, dim_in * dim_out)


def choi_partial_trace_output(C: np.ndarray, dim_in: int, dim_out: int) -> np.ndarray:
    return np.trace(C.reshape(dim_in, dim_out, dim_in, dim_out), axis1=1, axis2=3)


@dataclass
class CPTPReport:
    min_choi_eig: float
    tp_residual: float
    herm_residual: float
    ok: bool


def cptp_report(S: np.ndarray, dim_in: int | None = None, dim_out: int | None = None,
                tol: float = 1e-8) -> CPTPReport:
    """Complete positivity and trace preservation via the Choi matrix."""
    S = np.asarray(S)
    if dim_in is None:
        dim_in = int(round(np.sqrt(S.shape[1])))
    if dim_out is None:
        dim_out = int(round(np.sqrt(S.shape[0])))
    C = choi_matrix(S, dim_in, dim_out)
    herm = float(np.max(np.abs(C - C.conj().T)))
    evals = np.linalg.eigvalsh(0.5 * (C + C.conj().T))
    tp = float(np.max(np.abs(choi_partial_trace_output(C, dim_in, dim_out) - np.eye(dim_in))))
    ok = bool(evals[0] >= -tol and tp <= tol and herm <= tol)
    return CPTPReport(float(evals[0]), tp, herm, ok)


def is_hermitian(x: np.ndarray, tol: float = TOL_HERM) -> bool:
    return float(np.max(np.abs(x - x.conj().T), initial=0.0)) <= tol


def check_density(rho: np.ndarray, tol: float = TOL_HERM) -> np.ndarray:
    """Validate and return ``rho`` as a density operator, raising on failure."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density operator must be square, got {rho.shape}")
    if not is_hermitian(rho, tol):
        raise ValueError("density operator is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError(f"density operator has trace {np.trace(rho).real:.3e}")
    lmin = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lmin < -tol:
        raise ValueError(f"density operator has negative eigenvalue {lmin:.3e}")
    return rho


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random mixed state from the Ginibre ensemble."""
    rank = dim if rank is None else rank
    G = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (G + G.conj().T)


def random_lindblad_model(dim: int, rng: np.random.Generator, n_jumps: int = 2) -> LindbladModel:
    jumps = [(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(dim)
             for _ in range(n_jumps)]
    return LindbladModel(HilbertSpace(dim), random_hermitian(dim, rng), tuple(jumps))
