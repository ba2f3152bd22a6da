import numpy as np
import pytest
from hypothesis import given, strategies as st

from lindred.algebra import (
    AlgebraError, center, check_star_algebra, commutant, decompose_projector, fixed_state,
    image_basis, image_residual, range_basis, support, undistort, wedderburn_decompose,
)
from lindred.models import xxz_projector
from lindred.operator_core import SIGMA_MINUS, SIGMA_X, HilbertSpace, LindbladModel, liouvillian
from lindred.pipeline import random_cptp_projector
from lindred.spectral import eig_superoperator, spectral_projector

LAYOUTS = [
    ([(1, 1), (1, 1)], 0),
    ([(2, 1)], 1),
    ([(2, 1), (1, 2)], 0),
    ([(2, 2)], 1),
    ([(1, 3), (1, 1)], 1),
    ([(2, 1), (1, 2)], 1),
]


def matrix_units(d):
    out = []
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            out.append(e)
    return out


def test_range_basis_rank():
    M = np.array([[1, 2], [2, 4], [0, 0]], dtype=complex)
    assert range_basis(M).shape == (3, 1)
    assert range_basis(np.zeros((3, 0))).shape == (3, 0)


def test_support_full_rank_keeps_basis():
    Vs, Vc = support(np.eye(3) / 3)
    assert np.allclose(Vs, np.eye(3)) and Vc.shape == (3, 0)
    Vs, Vc = support(np.diag([0.5, 0.0, 0.5]))
    assert Vs.shape == (3, 2) and Vc.shape == (3, 1)


def test_star_algebra_closure():
    diag = [np.diag(v).astype(complex) for v in np.eye(3)]
    assert check_star_algebra(diag) < 1e-12
    assert check_star_algebra([SIGMA_X]) > 0.5


def test_commutant_and_center():
    assert len(commutant(matrix_units(2))) == 1
    diag = [np.diag(v).astype(complex) for v in np.eye(3)]
    assert len(commutant(diag)) == 3
    # M_2 (+) M_1 on C^3
    blocks = [np.pad(e, ((0, 1), (0, 1))) for e in matrix_units(2)]
    blocks.append(np.diag([0, 0, 1]).astype(complex))
    assert len(center(blocks)) == 2


def test_undistort_rejects_non_algebra():
    with pytest.raises(AlgebraError):
        undistort([SIGMA_X], np.eye(2) / 2)


def test_matrix_algebra_tensor_identity():
    B = [np.kron(e, np.eye(2)) for e in matrix_units(2)]
    ws = wedderburn_decompose(B, np.eye(4) / 4)
    assert ws.block_dims == [(2, 2)]
    assert np.allclose(ws.blocks[0].tau, np.eye(2) / 2)


def test_xxz_structure_and_logical_basis():
    ws = decompose_projector(xxz_projector(3))
    assert ws.block_dims == [(2, 1), (1, 3), (1, 3)]
    assert ws.dR == 0
    W0 = ws.blocks[0].W
    want = np.zeros((2, 8))
    want[0, 0] = want[1, 7] = 1.0
    assert np.allclose(np.abs(W0), want)
    for b in ws.blocks[1:]:
        assert np.allclose(b.tau, np.eye(3) / 3)


def test_amplitude_damping_structure():
    lv = liouvillian(LindbladModel(HilbertSpace(2), np.zeros((2, 2)), (SIGMA_MINUS,)))
    ws = decompose_projector(spectral_projector(eig_superoperator(lv)))
    assert ws.block_dims == [(1, 1)] and ws.dR == 1


def test_decomposition_is_deterministic():
    P = xxz_projector(3)
    a, b = decompose_projector(P, seed=0), decompose_projector(P, seed=0)
    assert np.array_equal(a.U, b.U)
    assert a.to_json() == b.to_json()


def test_to_dict_schema():
    d = decompose_projector(xxz_projector(3)).to_dict()
    assert set(d) == {"blocks", "dR", "seed"}
    assert set(d["blocks"][0]) == {"dF", "dG", "tau_spectrum"}


@given(st.integers(0, len(LAYOUTS) - 1), st.integers(0, 2 ** 32 - 1))
def test_random_structures_recovered(which, seed):
    dims, dR = LAYOUTS[which]
    n = sum(f * g for f, g in dims) + dR
    ws0, P = random_cptp_projector(n, dims, dR, np.random.default_rng(seed))
    ws = decompose_projector(P, seed=seed % 7)
    assert sorted(ws.block_dims) == sorted(ws0.block_dims)
    assert ws.dR == dR
    assert image_residual(ws, image_basis(P)) < 1e-7
    rho = fixed_state(P)
    assert np.allclose(P @ rho.reshape(-1, order="F"), rho.reshape(-1, order="F"))
    for b in ws.blocks:
        assert np.trace(b.tau).real == pytest.approx(1.0)
        assert np.linalg.eigvalsh(b.tau)[0] > 0


def test_embed_round_trip():
    ws = decompose_projector(xxz_projector(3))
    xs = [np.array([[0.5, 0.1], [0.1, 0.1]]), np.array([[0.2]]), np.array([[0.2]])]
    X = ws.embed(xs)
    assert np.trace(X).real == pytest.approx(1.0)
    assert np.allclose(xxz_projector(3) @ X.reshape(-1, order="F"), X.reshape(-1, order="F"))
