"""Propagation, norms, observables and decay fits."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import expm_multiply

from .operator_core import devectorize, vectorize

log = logging.getLogger(__name__)

EIG_COND_MAX = 1e8


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)


def trace_norm(x: np.ndarray) -> float:
    x = np.asarray(x)
    if np.allclose(x, x.conj().T, atol=1e-13, rtol=0):
        return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (x + x.conj().T)))))
    return float(np.sum(np.linalg.svd(x, compute_uv=False)))


def hs_norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x))


def sop_norm(S: np.ndarray) -> float:
    """Largest singular value of a superoperator matrix (HS-induced norm)."""
    return float(np.linalg.norm(S, 2))


def time_grid(t_max: float, n: int = 200, t_min: float | None = None) -> np.ndarray:
    """Hybrid grid: geometric spacing over the first decade, linear afterwards.

    Starts at 0 and ends at ``t_max``; the first quarter of the points resolve
    the transient on a log scale.
    """
    if n < 4:
        return np.linspace(0.0, t_max, n)
    t_min = t_max * 1e-3 if t_min is None else t_min
    n_geo = n // 4
    t_switch = t_max / 10
    geo = np.geomspace(t_min, t_switch, n_geo, endpoint=False)
    lin = np.linspace(t_switch, t_max, n - n_geo - 1)
    return np.concatenate([[0.0], geo, lin])


def _as_vector(state):
    state = np.asarray(state, dtype=complex)
    if state.ndim == 2:
        return vectorize(state), state.shape[0]
    return state.reshape(-1), None


def propagate(gen: np.ndarray, rho0, times, method: str = "auto",
              spectral=None) -> Trajectory:
    """States ``exp(gen t) rho0`` on the sampled times.

    ``rho0`` may be a matrix (returns matrices) or a vector in the space ``gen``
    acts on (returns vectors). ``method`` is ``"eig"``, ``"expm"`` or ``"auto"``;
    auto uses the eigendecomposition unless its eigenvector matrix is badly
    conditioned, in which case it steps between consecutive times with
    ``scipy.sparse.linalg.expm_multiply``.
    """
    gen = np.asarray(gen, dtype=complex)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) < 0):
        raise ValueError("times must be a non-decreasing 1-D sequence")
    if times.size and times[0] < 0:
        raise ValueError("times must be non-negative")
    v0, n = _as_vector(rho0)
    if gen.shape != (v0.size, v0.size):
        raise ValueError(f"generator of shape {gen.shape} does not act on a vector of size {v0.size}")

    use = method
    coeffs = None
    if method in ("auto", "eig"):
        if spectral is not None:
            evals, V = spectral.eigenvalues, spectral.right
        else:
            evals, V = np.linalg.eig(gen)
        cond = np.linalg.cond(V)
        if cond > EIG_COND_MAX:
            if method == "eig":
                raise np.linalg.LinAlgError(f"eigenvector matrix condition {cond:.2e}")
            log.info("eigenbasis condition %.2e, falling back to expm stepping", cond)
            use = "expm"
        else:
            use = "eig"
            coeffs = np.linalg.solve(V, v0)
    elif method != "expm":
        raise ValueError(f"unknown propagation method {method!r}")

    out = []
    if use == "eig":
        for t in times:
            out.append(V @ (np.exp(evals * t) * coeffs))
    else:
        v = v0.copy()
        t_prev = 0.0
        for t in times:
            dt = t - t_prev
            if dt != 0.0:
                v = expm_multiply(gen * dt, v)
            out.append(v.copy())
            t_prev = t
    states = [devectorize(v, n) for v in out] if n is not None else out
    return Trajectory(times, states, {"method": use})


def propagator(gen: np.ndarray, t: float) -> np.ndarray:
    return sla.expm(np.asarray(gen) * t)


def expectation(obs: np.ndarray, traj: Trajectory) -> np.ndarray:
    obs = np.asarray(obs)
    vals = np.array([np.trace(obs @ rho) for rho in traj.states])
    return vals.real


def decay_fit(errors, times, window: float = 0.3, floor: float = 0.0) -> float:
    """Decay rate from a least-squares fit of ``log(error)`` on the trailing window.

    ``window`` is the fraction of trailing samples used. Samples at or below
    ``floor`` end the usable window early (with a warning). Oscillating errors
    are fitted through their local maxima, i.e. along the upper envelope.
    """
    errors = np.asarray(errors, dtype=float)
    times = np.asarray(times, dtype=float)
    k = max(2, int(np.ceil(window * len(times))))
    e, t = errors[-k:], times[-k:]
    bad = np.flatnonzero(e <= floor)
    if bad.size:
        warnings.warn("non-positive errors in fit window; shrinking it", RuntimeWarning,
                      stacklevel=2)
        e, t = e[: bad[0]], t[: bad[0]]
        if e.size < 2:
            raise ValueError("no usable points left in the fit window")
    inner = np.flatnonzero((e[1:-1] >= e[:-2]) & (e[1:-1] >= e[2:])) + 1
    if inner.size >= 3:
        e, t = e[inner], t[inner]
    slope = np.polyfit(t, np.log(e), 1)[0]
    return float(-slope)
