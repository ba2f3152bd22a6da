"""Dissipative XXZ ring, its disordered perturbation, and the dephasing chain."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .operator_core import (
    SIGMA_MINUS, SIGMA_PLUS, SIGMA_X, SIGMA_Z, HilbertSpace, LindbladModel,
    commutator_superop, dissipator_superop, embed_site, liouvillian, pauli_string,
)


@dataclass(frozen=True)
class XXZSpec:
    """Parameters of the dissipative XXZ ring.

    ``jump_convention="rate"`` gives jump operators ``sqrt(gamma) s+ s-`` (hopping
    rate ``gamma``); ``"amplitude"`` gives ``gamma s+ s-`` (rate ``gamma**2``).
    """

    N: int
    omega: float = 1.2
    A_xy: float = 2.0
    A_z: float = 4.6
    gamma: float = 1.2
    jump_convention: str = "rate"

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("need at least two spins")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.A_xy < 0:
            raise ValueError("A_xy must be non-negative")
        if self.jump_convention not in ("rate", "amplitude"):
            raise ValueError(f"unknown jump convention {self.jump_convention!r}")

    @property
    def hop_rate(self) -> float:
        return self.gamma if self.jump_convention == "rate" else self.gamma ** 2

    @property
    def omega0(self) -> float:
        return self.omega * self.N


def xxz_hamiltonian(N, omega, A_xy, A_z, space: HilbertSpace | None = None) -> np.ndarray:
    space = HilbertSpace.spins(N) if space is None else space
    H = np.zeros((space.dim, space.dim), dtype=complex)
    for j in range(1, N + 1):
        H += 0.5 * omega * embed_site(SIGMA_Z, j, space)
        H += 0.5 * A_xy * (pauli_string("XX", [j, j + 1], space)
                           + pauli_string("YY", [j, j + 1], space))
        H += A_z * pauli_string("ZZ", [j, j + 1], space)
    return H


def build_xxz(spec: XXZSpec) -> LindbladModel:
    space = HilbertSpace.spins(spec.N)
    H = xxz_hamiltonian(spec.N, spec.omega, spec.A_xy, spec.A_z, space)
    amp = np.sqrt(spec.hop_rate)
    jumps = tuple(amp * pauli_string("+-", [j, j + 1], space) for j in range(1, spec.N + 1))
    return LindbladModel(space, H, jumps)


def total_z(N: int) -> np.ndarray:
    """Collective spin ``J_z = (1/2) sum_j sigma_z^(j)``."""
    space = HilbertSpace.spins(N)
    return 0.5 * sum(embed_site(SIGMA_Z, j, space) for j in range(1, N + 1))


def _bits(index: int, N: int) -> tuple[int, ...]:
    return tuple((index >> (N - 1 - k)) & 1 for k in range(N))


@dataclass
class SectorData:
    """Magnetization sectors of the XXZ ring.

    ``order`` lists computational indices in the order used by ``U``: |0..0>,
    |1..1>, then each intermediate sector with fewer ones first.
    """

    N: int
    m_values: list
    dims: list
    sector_states: dict
    order: list
    U: np.ndarray
    steady_states: dict
    X_L: np.ndarray
    Y_L: np.ndarray
    Z_L: np.ndarray

    @property
    def intermediate_m(self) -> list:
        return [m for m in self.m_values if abs(abs(m) - self.N / 2) > 1e-12]


def sector_data(N: int) -> SectorData:
    dim = 2 ** N
    by_ones: dict[int, list[int]] = {}
    for s in range(dim):
        by_ones.setdefault(sum(_bits(s, N)), []).append(s)
    # m = N/2 - (number of ones), sigma_z|0> = |0>
    m_values = [N / 2 - k for k in range(N + 1)]
    dims = [comb(N, k) for k in range(N + 1)]
    sector_states = {N / 2 - k: by_ones[k] for k in range(N + 1)}

    order = [0, dim - 1]
    for k in range(1, N):
        order.extend(by_ones[k])
    U = np.zeros((dim, dim), dtype=complex)
    for col, s in enumerate(order):
        U[s, col] = 1.0

    steady = {}
    for m, states in sector_states.items():
        rho = np.zeros((dim, dim), dtype=complex)
        rho[states, states] = 1.0 / len(states)
        steady[m] = rho

    X_L = np.zeros((dim, dim), dtype=complex)
    X_L[0, dim - 1] = X_L[dim - 1, 0] = 1.0
    Z_L = np.zeros((dim, dim), dtype=complex)
    Z_L[0, 0], Z_L[dim - 1, dim - 1] = 1.0, -1.0
    Y_L = 1j * X_L @ Z_L
    return SectorData(N, m_values, dims, sector_states, order, U, steady, X_L, Y_L, Z_L)


def sector_dim(N: int, m: float) -> int:
    k = N / 2 - m
    if abs(k - round(k)) > 1e-9:
        raise ValueError(f"m = {m} is not a valid magnetization for N = {N}")
    return comb(N, int(round(k)))


def logical_x_prediction(rho0: np.ndarray, spec: XXZSpec, times) -> np.ndarray:
    """Asymptotic ``<X_L(t)> = a_x cos(w0 t) - a_y sin(w0 t)``.

    ``a_x, a_y`` are the logical Bloch components of ``rho0``, which the
    projector onto the center manifold leaves untouched.
    """
    sd = sector_data(spec.N)
    a_x = float(np.real(np.trace(sd.X_L @ rho0)))
    a_y = float(np.real(np.trace(sd.Y_L @ rho0)))
    t = np.asarray(times, dtype=float)
    return a_x * np.cos(spec.omega0 * t) - a_y * np.sin(spec.omega0 * t)


def xxz_projector(N: int) -> np.ndarray:
    """Closed-form projector onto the XXZ center manifold.

    Keeps the logical 2x2 block and replaces each intermediate sector by its
    population times the maximally mixed state.
    """
    sd = sector_data(N)
    dim = 2 ** N
    cols = []
    for j in range(dim):
        for i in range(dim):
            out = np.zeros((dim, dim), dtype=complex)
            logical = (0, dim - 1)
            if i in logical and j in logical:
                out[i, j] = 1.0
            elif i == j:
                for m in sd.intermediate_m:
                    states = sd.sector_states[m]
                    if i in states:
                        out[states, states] = 1.0 / len(states)
            cols.append(out.reshape(-1, order="F"))
    return np.stack(cols, axis=1)


@dataclass
class Disorder:
    omega: np.ndarray
    A_x: np.ndarray
    A_y: np.ndarray
    A_z: np.ndarray

    @property
    def omega_bar(self) -> float:
        return float(np.sum(self.omega))


def draw_disorder(N: int, seed: int | None = 0) -> Disorder:
    rng = np.random.default_rng(seed)
    w, ax, ay, az = rng.uniform(0.0, 2.0, size=(4, N))
    return Disorder(w, ax, ay, az)


def disorder_hamiltonian(N: int, dis: Disorder) -> np.ndarray:
    space = HilbertSpace.spins(N)
    H = np.zeros((space.dim, space.dim), dtype=complex)
    for j in range(1, N + 1):
        k = j - 1
        H += 0.5 * dis.omega[k] * embed_site(SIGMA_Z, j, space)
        H += dis.A_x[k] * pauli_string("XX", [j, j + 1], space)
        H += dis.A_y[k] * pauli_string("YY", [j, j + 1], space)
        H += dis.A_z[k] * pauli_string("ZZ", [j, j + 1], space)
    return H


def disorder_perturbation(N: int, seed: int | None = 0) -> tuple[np.ndarray, float]:
    """Random site-dependent Hamiltonian and the summed on-site frequency."""
    dis = draw_disorder(N, seed)
    return disorder_hamiltonian(N, dis), dis.omega_bar


@dataclass(frozen=True)
class DephasingSpec:
    N: int
    A_z: float = 4.6
    mu_x: tuple = ()
    mu_plus: tuple = ()
    mu_minus: tuple = ()
    dephasing: float = 1.0

    def __post_init__(self):
        for name in ("mu_x", "mu_plus", "mu_minus"):
            vals = tuple(float(v) for v in getattr(self, name)) or (0.0,) * self.N
            if len(vals) != self.N:
                raise ValueError(f"{name} needs {self.N} entries")
            if min(vals) < 0:
                raise ValueError(f"{name} must be non-negative")
            object.__setattr__(self, name, vals)

    @classmethod
    def random(cls, N: int, seed: int | None = 0, A_z: float = 4.6) -> "DephasingSpec":
        rng = np.random.default_rng(seed)
        mx, mp, mm = rng.uniform(0.0, 1.0, size=(3, N))
        return cls(N, A_z, tuple(mx), tuple(mp), tuple(mm))

    @property
    def alpha(self) -> np.ndarray:
        return np.square(self.mu_x) + np.square(self.mu_minus)

    @property
    def beta(self) -> np.ndarray:
        return np.square(self.mu_x) + np.square(self.mu_plus)


@dataclass
class DephasingModel:
    spec: DephasingSpec
    L0: np.ndarray
    L1: np.ndarray
    R: np.ndarray
    J: np.ndarray
    metzler_unit: np.ndarray = field(repr=False)

    def metzler(self, eps: float) -> np.ndarray:
        return eps * self.metzler_unit


def dephasing_terms(spec: DephasingSpec) -> tuple[np.ndarray, np.ndarray]:
    space = HilbertSpace.spins(spec.N)
    H0 = np.zeros((space.dim, space.dim), dtype=complex)
    for j in range(1, spec.N + 1):
        H0 += spec.A_z * pauli_string("ZZ", [j, j + 1], space)
    L0 = commutator_superop(H0)
    L1 = np.zeros_like(L0)
    for j in range(1, spec.N + 1):
        k = j - 1
        L0 = L0 + dissipator_superop(np.sqrt(spec.dephasing) * embed_site(SIGMA_Z, j, space))
        L1 = L1 + dissipator_superop(spec.mu_x[k] * embed_site(SIGMA_X, j, space))
        L1 = L1 + dissipator_superop(spec.mu_plus[k] * embed_site(SIGMA_PLUS, j, space))
        L1 = L1 + dissipator_superop(spec.mu_minus[k] * embed_site(SIGMA_MINUS, j, space))
    return L0, L1


def metzler_matrix(spec: DephasingSpec) -> np.ndarray:
    """Classical generator ``sum_j 1 (x) [[-a_j, b_j], [a_j, -b_j]] (x) 1`` at unit strength."""
    N = spec.N
    M = np.zeros((2 ** N, 2 ** N))
    for k in range(N):
        local = np.array([[-spec.alpha[k], spec.beta[k]], [spec.alpha[k], -spec.beta[k]]])
        M += np.kron(np.kron(np.eye(2 ** k), local), np.eye(2 ** (N - k - 1)))
    return M


def diagonal_maps(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal extraction ``R`` (dim^2 -> dim) and diagonal embedding ``J``."""
    J = np.zeros((dim * dim, dim), dtype=complex)
    for s in range(dim):
        J[s * dim + s, s] = 1.0
    return J.T.copy(), J


def build_dephasing(spec: DephasingSpec) -> DephasingModel:
    L0, L1 = dephasing_terms(spec)
    R, J = diagonal_maps(2 ** spec.N)
    return DephasingModel(spec, L0, L1, R, J, metzler_matrix(spec))


def xxz_liouvillian(spec: XXZSpec) -> np.ndarray:
    return liouvillian(build_xxz(spec))

