"""Polynomial generator families, fixed-manifold perturbative reduction and its error bounds."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.sparse.linalg import expm_multiply

from .dynamics import hs_norm, propagate, sop_norm
from .operator_core import devectorize, vectorize
from .reduction import CertificationError, LindbladReport, ReductionMaps, lindblad_check

VALIDITY_FLAG = 0.5


@dataclass
class PerturbedGenerator:
    """``L(eps) = sum_k eps**k terms[k]``.

    Individual terms need not be generators; only ``evaluate(eps)`` for ``eps``
    in the declared validity set is expected to be of Lindblad form.
    """

    terms: list[np.ndarray]
    validity: tuple[float, float] = (-np.inf, np.inf)
    eps0: float | None = None
    label: str = ""

    def __post_init__(self):
        self.terms = [np.asarray(t, dtype=complex) for t in self.terms]
        if not self.terms:
            raise ValueError("need at least one term")
        shape = self.terms[0].shape
        if any(t.shape != shape for t in self.terms):
            raise ValueError("all terms must have the same shape")

    @property
    def order(self) -> int:
        return len(self.terms) - 1

    def in_validity(self, eps: float) -> bool:
        lo, hi = self.validity
        return lo <= eps <= hi

    def evaluate(self, eps: float) -> np.ndarray:
        out = np.zeros_like(self.terms[0])
        for k, t in enumerate(self.terms):
            out = out + (eps ** k) * t
        return out

    def term(self, k: int) -> np.ndarray:
        return self.terms[k] if k < len(self.terms) else np.zeros_like(self.terms[0])

    def check_validity(self, grid: Sequence[float]) -> dict[float, LindbladReport]:
        """Lindblad certificate of ``evaluate(eps)`` on the part of ``grid`` inside the validity set."""
        return {float(e): lindblad_check(self.evaluate(e)) for e in grid if self.in_validity(e)}


def from_additive(l0: np.ndarray, delta: np.ndarray,
                  validity: tuple[float, float] = (-np.inf, np.inf)) -> PerturbedGenerator:
    """Linear family through ``l0`` and ``l0 + delta`` with unit-norm first-order term."""
    eps0 = sop_norm(delta)
    if eps0 == 0.0:
        return PerturbedGenerator([l0], validity, 0.0)
    return PerturbedGenerator([l0, np.asarray(delta) / eps0], validity, eps0)


def perturbed_dissipator_terms(L: np.ndarray, K: np.ndarray) -> list[np.ndarray]:
    """Orders 0, 1, 2 of the dissipator of ``L + eps K``.

    The first-order term ``x -> L x K^dag + K x L^dag - 1/2 {K^dag L + L^dag K, x}``
    is generally not a generator on its own.
    """
    n = L.shape[0]
    eye = np.eye(n)

    def sandwich(A, B):  # x -> A x B^dag - 1/2 {B^dag A, x}
        BA = B.conj().T @ A
        return np.kron(B.conj(), A) - 0.5 * np.kron(eye, BA) - 0.5 * np.kron(BA.T, eye)

    return [sandwich(L, L), sandwich(L, K) + sandwich(K, L), sandwich(K, K)]


def reduced_perturbed(gen: PerturbedGenerator, maps0: ReductionMaps, eps: float,
                      certify: bool = True) -> np.ndarray:
    """``R0 L(eps) J0`` on the fixed unperturbed reduced space."""
    red = maps0.R @ gen.evaluate(eps) @ maps0.J
    if certify:
        rep = lindblad_check(red, maps0.layout.dims)
        if not rep.ok:
            raise CertificationError(f"reduced generator at eps={eps} is not of Lindblad form: {rep}")
    return red


@dataclass
class ErrorBoundReport:
    eps: float
    times: np.ndarray
    lhs_i: np.ndarray
    lhs_ii: np.ndarray
    rhs_i: np.ndarray
    rhs_ii: np.ndarray
    norm_kind: str = "hs-induced spectral norm"
    l1_norm: float = 0.0
    flagged: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def rows(self):
        for k in range(len(self.times)):
            yield (float(self.times[k]), float(self.eps), float(self.lhs_i[k]),
                   float(self.rhs_i[k]), float(self.lhs_ii[k]), float(self.rhs_ii[k]))


def _right_norm_factor(R: np.ndarray) -> np.ndarray:
    """``S`` with ``||X R||_2 = ||X S||_2``: the square root of ``R R^dag``."""
    w, V = np.linalg.eigh(R @ R.conj().T)
    return V @ np.diag(np.sqrt(np.clip(w, 0.0, None)))


def error_bounds(gen: PerturbedGenerator, maps0: ReductionMaps, eps: float, times,
                 P0: np.ndarray | None = None) -> ErrorBoundReport:
    """Distances between exact and reduced propagators and their first/second-order bounds.

    ``lhs_i = ||exp(t L) P0 - J0 exp(t L_red) R0||`` and
    ``lhs_ii = ||P0 exp(t L) P0 - J0 exp(t L_red) R0||``.
    """
    times = np.asarray(times, dtype=float)
    L = gen.evaluate(eps)
    red = maps0.R @ L @ maps0.J
    J0, R0 = maps0.J, maps0.R
    if P0 is None:
        P0 = J0 @ R0
    S = _right_norm_factor(R0)
    l1 = sop_norm(gen.term(1))
    lhs_i, lhs_ii = [], []
    for t in times:
        full = expm_multiply(L * t, J0) if t else J0.astype(complex)
        redt = J0 @ expm_multiply(red * t, np.eye(red.shape[0], dtype=complex)) if t else J0
        d1 = full - redt
        d2 = P0 @ full - redt
        lhs_i.append(sop_norm(d1 @ S))
        lhs_ii.append(sop_norm(d2 @ S))
    rhs_i = times * abs(eps) * l1
    rhs_ii = 0.5 * (times * eps * l1) ** 2
    flagged = (rhs_i > VALIDITY_FLAG) | (rhs_ii > VALIDITY_FLAG)
    return ErrorBoundReport(float(eps), times, np.array(lhs_i), np.array(lhs_ii), rhs_i, rhs_ii,
                            l1_norm=l1, flagged=flagged)


def propagator_distance_bruteforce(gen: PerturbedGenerator, maps0: ReductionMaps, eps: float,
                                   t: float, n_samples: int = 200, seed: int = 0) -> float:
    """Lower estimate of ``lhs_i`` from random unit-norm inputs (test oracle)."""
    from scipy.linalg import expm

    L = gen.evaluate(eps)
    red = maps0.R @ L @ maps0.J
    P0 = maps0.J @ maps0.R
    M = expm(L * t) @ P0 - maps0.J @ expm(red * t) @ maps0.R
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(n_samples):
        v = rng.normal(size=M.shape[1]) + 1j * rng.normal(size=M.shape[1])
        v /= np.linalg.norm(v)
        best = max(best, float(np.linalg.norm(M @ v)))
    # a few power iterations sharpen the estimate
    v = rng.normal(size=M.shape[1]) + 1j * rng.normal(size=M.shape[1])
    for _ in range(50):
        v = M.conj().T @ (M @ v)
        v /= np.linalg.norm(v)
    return max(best, float(np.linalg.norm(M @ v)))


@dataclass
class TrajectoryDistances:
    eps: float
    times: np.ndarray
    state: np.ndarray      # ||rho(t) - J0 rho_red(t)||_HS
    projected: np.ndarray  # ||P0 rho(t) - J0 rho_red(t)||_HS


def trajectory_distances(gen: PerturbedGenerator, maps0: ReductionMaps, rho0: np.ndarray,
                         eps: float, times, norm: Callable = hs_norm) -> TrajectoryDistances:
    times = np.asarray(times, dtype=float)
    n = rho0.shape[0]
    L = gen.evaluate(eps)
    red = maps0.R @ L @ maps0.J
    P0 = maps0.J @ maps0.R
    full = propagate(L, rho0, times)
    rt = propagate(red, maps0.R @ vectorize(rho0), times)
    st, pr = [], []
    for rho, v in zip(full.states, rt.states):
        inj = devectorize(maps0.J @ v, n)
        st.append(norm(rho - inj))
        pr.append(norm(devectorize(P0 @ vectorize(rho), n) - inj))
    return TrajectoryDistances(float(eps), times, np.array(st), np.array(pr))


def loglog_slope(x, y) -> float:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
