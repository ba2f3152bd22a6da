import numpy as np
import pytest
from hypothesis import given, strategies as st

from lindred.dynamics import propagate
from lindred.models import XXZSpec, xxz_liouvillian
from lindred.operator_core import (
    SIGMA_MINUS, SIGMA_X, SIGMA_Z, HilbertSpace, LindbladModel, commutator_superop,
    liouvillian, random_density, random_lindblad_model, vectorize,
)
from lindred.spectral import (
    JordanDefectError, NonLindbladError, center_manifold, certify_projector, eig_superoperator,
    kernel_dim, spectral_projector, spectrum_rows, verify_exponential_convergence,
)


def amplitude_damping(gamma=1.0):
    return liouvillian(LindbladModel(HilbertSpace(2), np.zeros((2, 2)), (np.sqrt(gamma) * SIGMA_MINUS,)))


@pytest.mark.parametrize("N", [3, 4])
def test_xxz_peripheral_spectrum(N):
    spec = XXZSpec(N)
    sd = eig_superoperator(xxz_liouvillian(spec))
    per = sd.eigenvalues[sd.peripheral]
    assert kernel_dim(sd) == N + 1
    osc = sorted(per.imag[np.abs(per) > 1e-6])
    assert np.allclose(osc, [-spec.omega0, spec.omega0], atol=1e-6 * spec.omega0)
    cm = center_manifold(sd)
    assert cm.dim == N + 3 and cm.kernel_dim == N + 1


def test_center_basis_are_eigenoperators():
    lv = xxz_liouvillian(XXZSpec(3))
    sd = eig_superoperator(lv)
    cm = center_manifold(sd)
    for X, f in zip(cm.basis, cm.frequencies):
        assert np.allclose(lv @ vectorize(X), 1j * f * vectorize(X), atol=1e-9)


def test_amplitude_damping_spectrum():
    sd = eig_superoperator(amplitude_damping(1.0))
    assert sorted(np.round(sd.eigenvalues.real, 10)) == [-1.0, -0.5, -0.5, 0.0]
    assert sd.gap == pytest.approx(0.5)
    assert kernel_dim(sd) == 1


def test_unitary_generator_has_no_gap():
    sd = eig_superoperator(commutator_superop(SIGMA_Z))
    assert sd.no_dissipative_part
    assert len(sd.peripheral) == 4


def test_growing_mode_rejected():
    with pytest.raises(NonLindbladError):
        eig_superoperator(np.diag([0.0, 1.0, -1.0, -1.0]).astype(complex), check_input=False)


def test_non_lindblad_input_warns():
    with pytest.warns(RuntimeWarning):
        eig_superoperator(-np.eye(4, dtype=complex))


def test_peripheral_jordan_block_rejected():
    J = np.zeros((4, 4), dtype=complex)
    J[0, 1] = 1.0
    J[2, 2] = J[3, 3] = -1.0
    with pytest.raises(JordanDefectError):
        eig_superoperator(J, check_input=False)


def test_defective_decaying_cluster_flagged():
    J = np.diag([0.0, -1.0, -1.0, -2.0]).astype(complex)
    J[1, 2] = 1.0
    sd = eig_superoperator(J, check_input=False)
    assert sd.defective_clusters == [[1, 2]]


@given(st.integers(0, 2 ** 32 - 1))
def test_projector_certified_on_random_models(seed):
    rng = np.random.default_rng(seed)
    lv = liouvillian(random_lindblad_model(3, rng))
    sd = eig_superoperator(lv)
    P = spectral_projector(sd)
    rep = certify_projector(P, lv)
    assert rep.ok
    assert sd.biorthogonality_residual() < 1e-8


def test_projector_of_xxz_is_cptp_and_commutes():
    lv = xxz_liouvillian(XXZSpec(3))
    P = spectral_projector(eig_superoperator(lv))
    rep = certify_projector(P, lv)
    assert rep.idempotence < 1e-10 and rep.commutator < 1e-10
    assert rep.min_choi_eig > -1e-10 and rep.tp_residual < 1e-10


def test_projector_fixes_center_and_kills_decay():
    lv = amplitude_damping()
    sd = eig_superoperator(lv)
    P = spectral_projector(sd)
    rho = random_density(2, np.random.default_rng(0))
    out = P @ vectorize(rho)
    # only the ground state |1><1| survives
    assert np.allclose(out, vectorize(np.diag([0.0, 1.0])))


def test_exponential_convergence_rate():
    lv = xxz_liouvillian(XXZSpec(3))
    sd = eig_superoperator(lv)
    P = spectral_projector(sd)
    rho0 = random_density(8, np.random.default_rng(1))
    times = np.linspace(0, 30, 151)
    rep = verify_exponential_convergence(lv, P, rho0, times, sd.gap)
    assert np.all(rep.errors <= rep.bound + 1e-12)
    assert rep.fitted_rate == pytest.approx(sd.gap, rel=0.1)


def test_spectrum_rows():
    rows = spectrum_rows(eig_superoperator(amplitude_damping()))
    assert len(rows) == 4
    assert rows[0][2] == 1 and rows[0][0] == pytest.approx(0.0)
    assert sum(r[2] for r in rows) == 1


def test_dephasing_qubit_center_is_diagonal():
    lv = liouvillian(LindbladModel(HilbertSpace(2), SIGMA_X * 0, (SIGMA_Z,)))
    sd = eig_superoperator(lv)
    assert kernel_dim(sd) == 2 and sd.gap == pytest.approx(2.0)
    tr = propagate(lv, np.full((2, 2), 0.5, dtype=complex), [10.0])
    assert abs(tr.states[0][0, 1]) < 1e-8
