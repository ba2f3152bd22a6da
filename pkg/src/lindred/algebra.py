"""Block structure of the image of a CPTP projector.

The image of a CPTP projector is a distorted algebra
``U (0_R + sum_k M_{F,k} (x) tau_k) U^dag``. We undistort it with the fixed state,
split it by its center, and factor every central block as ``F (x) G``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .operator_core import devectorize, vectorize

CLOSURE_TOL = 1e-7
CLUSTER_REL = 1e-6
MAX_RETRIES = 5


class AlgebraError(ValueError):
    """The supplied operator space is not (a distortion of) a *-algebra."""


@dataclass
class Block:
    dF: int
    dG: int
    tau: np.ndarray
    W: np.ndarray  # (dF*dG) x n isometry onto the block, row (i, j) -> i*dG + j

    @property
    def tau_spectrum(self) -> list[float]:
        return sorted(np.linalg.eigvalsh(self.tau).real.tolist(), reverse=True)


@dataclass
class WedderburnStructure:
    U: np.ndarray
    blocks: list[Block]
    dR: int
    support_dim: int
    seed: int = 0
    rho_bar: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.U.shape[0]

    @property
    def block_dims(self) -> list[tuple[int, int]]:
        return [(b.dF, b.dG) for b in self.blocks]

    @property
    def reduced_dim(self) -> int:
        return sum(b.dF ** 2 for b in self.blocks)

    @property
    def tau_R(self) -> np.ndarray:
        return np.eye(self.dR) / self.dR if self.dR else np.zeros((0, 0))

    def to_dict(self) -> dict:
        return {
            "blocks": [{"dF": b.dF, "dG": b.dG, "tau_spectrum": b.tau_spectrum}
                       for b in self.blocks],
            "dR": self.dR,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def embed(self, xs: list[np.ndarray]) -> np.ndarray:
        """``U (sum_k X_k (x) tau_k + 0_R) U^dag`` written directly with the block isometries."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for b, x in zip(self.blocks, xs):
            out += b.W.conj().T @ np.kron(x, b.tau) @ b.W
        return out


def fixed_state(P: np.ndarray) -> np.ndarray:
    """``P(1/n)``; its support is the support of the image of ``P``."""
    n = int(round(np.sqrt(P.shape[0])))
    rho = devectorize(P @ vectorize(np.eye(n) / n), n)
    return 0.5 * (rho + rho.conj().T)


def range_basis(S: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal columns spanning the range of a matrix."""
    if S.shape[1] == 0:
        return np.zeros((S.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(S, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return u[:, :0]
    return u[:, s > tol * s[0]]


def image_basis(P: np.ndarray, tol: float = 1e-9) -> list[np.ndarray]:
    n = int(round(np.sqrt(P.shape[0])))
    Q = range_basis(P, tol)
    return [devectorize(Q[:, i], n) for i in range(Q.shape[1])]


def support(rho: np.ndarray, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Isometries onto the support of ``rho`` and its complement.

    Full-rank states keep the computational basis.
    """
    n = rho.shape[0]
    w, V = np.linalg.eigh(rho)
    keep = w > tol * max(1.0, w[-1])
    if keep.all():
        return np.eye(n, dtype=complex), np.zeros((n, 0), dtype=complex)
    Vs, Vc = V[:, keep], V[:, ~keep]
    # Canonical column order: by leading computational index.
    return _sort_columns(Vs), _sort_columns(Vc)


def _sort_columns(V: np.ndarray) -> np.ndarray:
    if V.shape[1] == 0:
        return V
    lead = [int(np.argmax(np.abs(V[:, i]) > 1e-8)) for i in range(V.shape[1])]
    return V[:, np.argsort(lead, kind="stable")]


def _orthonormal_span(mats: list[np.ndarray], tol: float = 1e-9) -> list[np.ndarray]:
    if not mats:
        return []
    d = mats[0].shape[0]
    M = np.stack([vectorize(m) for m in mats], axis=1)
    Q = range_basis(M, tol)
    return [devectorize(Q[:, i], d) for i in range(Q.shape[1])]


def _span_residual(x: np.ndarray, basis_mat: np.ndarray) -> float:
    v = vectorize(x)
    return float(np.linalg.norm(v - basis_mat @ (basis_mat.conj().T @ v)))


def check_star_algebra(basis: list[np.ndarray], tol: float = CLOSURE_TOL) -> float:
    """Largest relative residual of products and adjoints outside the span."""
    if not basis:
        return 0.0
    Q = np.stack([vectorize(b) for b in basis], axis=1)
    worst = 0.0
    for a in basis:
        worst = max(worst, _span_residual(a.conj().T, Q) / max(np.linalg.norm(a), 1e-300))
        for b in basis:
            p = a @ b
            scale = np.linalg.norm(a) * np.linalg.norm(b)
            worst = max(worst, _span_residual(p, Q) / max(scale, 1e-300))
    return worst


def undistort(A_basis: list[np.ndarray], rho_bar: np.ndarray, tol: float = CLOSURE_TOL,
              support_tol: float = 1e-10) -> list[np.ndarray]:
    """Basis of the ordinary *-algebra ``{V_s^dag X V_s rho_s^{-1}}`` on the support.

    Raises if the result is not closed under products and adjoints.
    """
    Vs, _ = support(rho_bar, support_tol)
    rho_s = Vs.conj().T @ rho_bar @ Vs
    rho_s_inv = np.linalg.inv(rho_s)
    B = [Vs.conj().T @ X @ Vs @ rho_s_inv for X in A_basis]
    B = _hermitian_basis(B)
    res = check_star_algebra(B, tol)
    if res > tol:
        raise AlgebraError(f"undistorted space is not a *-algebra (closure residual {res:.2e})")
    return B


def _hermitian_basis(mats: list[np.ndarray], tol: float = 1e-9) -> list[np.ndarray]:
    """Real-orthonormal Hermitian matrices whose complex span contains ``mats`` and their adjoints."""
    herm = []
    for m in mats:
        herm.append(0.5 * (m + m.conj().T))
        herm.append(0.5j * (m - m.conj().T))
    if not herm:
        return []
    d = herm[0].shape[0]
    R = np.stack([np.concatenate([vectorize(h).real, vectorize(h).imag]) for h in herm], axis=1)
    Q = range_basis(R, tol).real
    out = []
    for i in range(Q.shape[1]):
        v = Q[: d * d, i] + 1j * Q[d * d:, i]
        h = devectorize(v, d)
        out.append(0.5 * (h + h.conj().T))
    return out


def commutant(basis: list[np.ndarray], tol: float = 1e-9) -> list[np.ndarray]:
    """Orthonormal basis of all matrices commuting with every element of ``basis``."""
    d = basis[0].shape[0]
    eye = np.eye(d)
    M = np.zeros((d * d, d * d), dtype=complex)
    for b in basis:
        A = np.kron(b.T, eye) - np.kron(eye, b)
        M += A.conj().T @ A
    w, V = np.linalg.eigh(M)
    scale = max(1.0, w[-1]) if w.size else 1.0
    null = V[:, w < tol * scale]
    return [devectorize(null[:, i], d) for i in range(null.shape[1])]


def center(basis: list[np.ndarray], tol: float = 1e-9) -> list[np.ndarray]:
    """Hermitian basis of ``B`` intersected with its commutant."""
    k = len(basis)
    cols = []
    for i in range(k):
        cols.append(np.concatenate([vectorize(basis[i] @ b - b @ basis[i]) for b in basis]))
    K = np.stack(cols, axis=1)
    _, s, vh = np.linalg.svd(K)
    scale = max(1.0, s[0]) if s.size else 1.0
    rank = int(np.sum(s > tol * scale))
    null = vh[rank:].conj().T
    elems = [sum(c * b for c, b in zip(null[:, j], basis)) for j in range(null.shape[1])]
    return _hermitian_basis(elems)


def _eig_clusters(w: np.ndarray, rel: float = CLUSTER_REL) -> list[np.ndarray]:
    """Group sorted real eigenvalues whose neighbours differ by at most ``rel`` times their scale."""
    spread = max(float(np.max(np.abs(w))), float(w[-1] - w[0]), 1e-300) if w.size else 1.0
    groups, cur = [], [0]
    for i in range(1, len(w)):
        if w[i] - w[i - 1] <= rel * spread:
            cur.append(i)
        else:
            groups.append(np.array(cur))
            cur = [i]
    groups.append(np.array(cur))
    return groups


def _project_onto(x: np.ndarray, onb: list[np.ndarray]) -> np.ndarray:
    out = np.zeros_like(x, dtype=complex)
    for b in onb:
        out += np.vdot(b, x) * b
    return out


def _probes(Ek: np.ndarray, rng: np.random.Generator, attempt: int):
    """Probe operators compressed to a central block.

    The first attempt uses a graded diagonal and the all-ones matrix in the
    support basis, which keeps computational basis states and real phases when
    the algebra allows it. Later attempts are random.
    """
    ds, r = Ek.shape
    if attempt == 0:
        diag = np.diag(np.arange(1, ds + 1, dtype=float) + 0.1 * np.linspace(0, 1, ds) ** 2)
        mix = np.ones((ds, ds))
        return Ek.conj().T @ diag @ Ek, Ek.conj().T @ mix @ Ek
    h = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
    g = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
    return 0.5 * (h + h.conj().T), g


def _factor_block(Ek: np.ndarray, Bk: list[np.ndarray], Ck: list[np.ndarray], dF: int,
                  dG: int, rng: np.random.Generator) -> np.ndarray:
    """Orthonormal basis ``v_{ij}`` of a central block in which ``Bk = M_dF (x) 1_dG``."""
    r = dF * dG
    for attempt in range(MAX_RETRIES + 1):
        probe_h, probe_x = _probes(Ek, rng, attempt)
        a = _project_onto(probe_h, Bk)
        b = _project_onto(probe_h, Ck)
        x = _project_onto(probe_x, Bk)
        y = _project_onto(probe_x, Ck)
        a, b = 0.5 * (a + a.conj().T), 0.5 * (b + b.conj().T)
        wa, Va = np.linalg.eigh(a)
        wb, Vb = np.linalg.eigh(b)
        ga, gb = _eig_clusters(wa), _eig_clusters(wb)
        if len(ga) != dF or any(len(g) != dG for g in ga):
            continue
        if len(gb) != dG or any(len(g) != dF for g in gb):
            continue
        E = [Va[:, g] @ Va[:, g].conj().T for g in ga]
        F = [Vb[:, g] @ Vb[:, g].conj().T for g in gb]
        v00 = E[0] @ F[0]
        u, s, _ = np.linalg.svd(v00)
        if s[0] < 0.5:
            continue
        seed_vec = u[:, 0]
        V = np.zeros((r, r), dtype=complex)
        ok = True
        for i in range(dF):
            vi0 = E[i] @ x @ seed_vec if i else seed_vec
            if np.linalg.norm(vi0) < 1e-6:
                ok = False
                break
            vi0 = vi0 / np.linalg.norm(vi0)
            for j in range(dG):
                vij = F[j] @ y @ vi0 if j else vi0
                nrm = np.linalg.norm(vij)
                if nrm < 1e-6:
                    ok = False
                    break
                V[:, i * dG + j] = vij / nrm
            if not ok:
                break
        if not ok:
            continue
        if np.max(np.abs(V.conj().T @ V - np.eye(r))) > 1e-8:
            continue
        # Every element of Bk must read X (x) 1 in the new basis.
        good = True
        for bk in Bk:
            m = V.conj().T @ bk @ V
            xf = np.trace(m.reshape(dF, dG, dF, dG), axis1=1, axis2=3) / dG
            if np.max(np.abs(m - np.kron(xf, np.eye(dG)))) > 1e-7 * max(1.0, np.abs(m).max()):
                good = False
                break
        if good:
            return V
    raise AlgebraError("could not factor a central block into F (x) G")


def wedderburn_decompose(B_basis: list[np.ndarray], rho_bar: np.ndarray, seed: int = 0,
                         support_tol: float = 1e-10) -> WedderburnStructure:
    """Block decomposition of an undistorted algebra living on the support of ``rho_bar``."""
    rng = np.random.default_rng(seed)
    n = rho_bar.shape[0]
    Vs, Vc = support(rho_bar, support_tol)
    ds = Vs.shape[1]
    if not B_basis:
        raise AlgebraError("empty algebra")
    if B_basis[0].shape != (ds, ds):
        raise AlgebraError("algebra basis does not live on the support of rho_bar")

    Z = center(B_basis)
    # Minimal central projections from a generic central element.
    projections = None
    for attempt in range(MAX_RETRIES + 1):
        coef = rng.normal(size=len(Z))
        z = sum(c * m for c, m in zip(coef, Z)) if Z else np.eye(ds)
        w, V = np.linalg.eigh(0.5 * (z + z.conj().T))
        groups = _eig_clusters(w)
        if len(groups) == len(Z):
            projections = [V[:, g] for g in groups]
            break
    if projections is None:
        raise AlgebraError("could not separate central projections")

    blocks = []
    for Ek in projections:
        r = Ek.shape[1]
        Bk = _orthonormal_span([Ek.conj().T @ b @ Ek for b in B_basis])
        dF = int(round(np.sqrt(len(Bk))))
        if dF * dF != len(Bk) or r % dF:
            raise AlgebraError(f"central block of dim {r} carries a {len(Bk)}-dim algebra")
        dG = r // dF
        Ck = commutant(Bk)
        if len(Ck) != dG * dG:
            raise AlgebraError("commutant dimension does not match the block factorization")
        Vk = _factor_block(Ek, Bk, Ck, dF, dG, rng)
        Wk = (Vs @ Ek @ Vk).conj().T
        blk_rho = Wk @ rho_bar @ Wk.conj().T
        tau = np.trace(blk_rho.reshape(dF, dG, dF, dG), axis1=0, axis2=2)
        tau = 0.5 * (tau + tau.conj().T)
        tau = tau / np.trace(tau).real
        blocks.append(Block(dF, dG, tau, Wk))

    def key(b: Block):
        lead = int(np.min(np.flatnonzero(np.max(np.abs(b.W), axis=0) > 1e-8)))
        return (-b.dF, -b.dG, tuple(-v for v in b.tau_spectrum), lead)

    blocks.sort(key=key)
    cols = [b.W.conj().T for b in blocks] + [Vc]
    U = np.concatenate(cols, axis=1)
    ws = WedderburnStructure(U, blocks, Vc.shape[1], ds, seed, rho_bar)
    validate_structure(ws)
    return ws


def validate_structure(ws: WedderburnStructure, tol: float = 1e-9) -> None:
    n = ws.dim
    if np.max(np.abs(ws.U.conj().T @ ws.U - np.eye(n))) > tol:
        raise AlgebraError("U is not unitary")
    if ws.support_dim + ws.dR != n:
        raise AlgebraError("support and remainder dimensions do not add up")
    if sum(b.dF * b.dG for b in ws.blocks) != ws.support_dim:
        raise AlgebraError("block dimensions do not fill the support")
    for b in ws.blocks:
        if np.linalg.eigvalsh(b.tau)[0] <= 1e-10:
            raise AlgebraError("factor state is not full rank")


def decompose_projector(P: np.ndarray, seed: int = 0, tol: float = CLOSURE_TOL) -> WedderburnStructure:
    """Fixed state, undistortion and block decomposition in one call."""
    rho_bar = fixed_state(P)
    A = image_basis(P)
    B = undistort(A, rho_bar, tol)
    return wedderburn_decompose(B, rho_bar, seed)


def image_residual(ws: WedderburnStructure, A_basis: list[np.ndarray]) -> float:
    """Max relative distance of elements of ``A_basis`` from the block-structured span."""
    mats = []
    for b in ws.blocks:
        for i in range(b.dF):
            for j in range(b.dF):
                e = np.zeros((b.dF, b.dF), dtype=complex)
                e[i, j] = 1.0
                mats.append(b.W.conj().T @ np.kron(e, b.tau) @ b.W)
    Q = range_basis(np.stack([vectorize(m) for m in mats], axis=1))
    return max(_span_residual(a, Q) / np.linalg.norm(a) for a in A_basis)


def random_structure(n: int, dims: list[tuple[int, int]], dR: int,
                     rng: np.random.Generator) -> WedderburnStructure:
    """Random unitary, block layout and full-rank factor states."""
    if sum(f * g for f, g in dims) + dR != n:
        raise ValueError("block layout does not fill the space")
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    U = np.linalg.qr(G)[0]
    blocks, col = [], 0
    for dF, dG in dims:
        r = dF * dG
        W = U[:, col: col + r].conj().T
        g = rng.normal(size=(dG, dG)) + 1j * rng.normal(size=(dG, dG))
        tau = g @ g.conj().T + 0.1 * np.eye(dG)
        blocks.append(Block(dF, dG, tau / np.trace(tau).real, W))
        col += r
    return WedderburnStructure(U, blocks, dR, n - dR, -1, None)


def random_leak(ws: WedderburnStructure, rng: np.random.Generator, n_kraus: int = 2):
    """Kraus operators of a channel fixing the support and emptying the remainder into it."""
    n = ws.dim
    Vs = ws.U[:, : ws.support_dim]
    Vc = ws.U[:, ws.support_dim:]
    kraus = [Vs @ Vs.conj().T]
    if ws.dR:
        M = rng.normal(size=(n_kraus * ws.support_dim, ws.dR)) \
            + 1j * rng.normal(size=(n_kraus * ws.support_dim, ws.dR))
        Q = np.linalg.qr(M)[0]  # isometry, columns orthonormal
        for a in range(n_kraus):
            blk = Q[a * ws.support_dim:(a + 1) * ws.support_dim, :]
            kraus.append(Vs @ blk @ Vc.conj().T)
    return kraus
