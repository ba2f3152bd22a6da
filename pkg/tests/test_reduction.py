import numpy as np
import pytest
from hypothesis import given, strategies as st

from lindred.models import XXZSpec, xxz_liouvillian, xxz_projector
from lindred.operator_core import (
    SIGMA_MINUS, SIGMA_X, SIGMA_Z, HilbertSpace, LindbladModel, commutator_superop,
    dissipator_superop, liouvillian, random_density, random_hermitian, random_lindblad_model,
    vectorize,
)
from lindred.algebra import decompose_projector
from lindred.perturbation import perturbed_dissipator_terms
from lindred.pipeline import random_cptp_projector
from lindred.reduction import (
    BlockLayout, CertificationError, ReductionMaps, build_reduction_maps, certify_maps,
    extract_hamiltonian_jumps, generator_from_hamiltonian_jumps, lindblad_check,
    reduced_generator, traceless_basis, verify_asymptotic_reduction,
)
from lindred.spectral import eig_superoperator, spectral_projector
from test_algebra import LAYOUTS


def test_block_layout():
    lay = BlockLayout((2, 1))
    assert lay.D == 3 and lay.size == 5
    v = np.arange(5, dtype=complex)
    X = lay.lift(v)
    assert X[2, 0] == 0 and X[2, 2] == 4
    assert np.allclose(lay.compress(X), v)
    assert [b.shape for b in lay.blocks(v)] == [(2, 2), (1, 1)]
    assert np.allclose(lay.trace_functional(), [1, 0, 0, 1, 1])


@pytest.mark.parametrize("dims", [(2,), (2, 1), (1, 1, 1), (3, 2)])
def test_traceless_basis(dims):
    lay = BlockLayout(dims)
    F = traceless_basis(lay)
    assert F.shape[1] == lay.D ** 2 - len(dims)
    assert np.allclose(F.conj().T @ F, np.eye(F.shape[1]))
    for w in lay.identity_vectors():
        assert np.allclose(w.conj() @ F, 0)


def test_xxz_maps_certified():
    P = xxz_projector(3)
    maps = build_reduction_maps(decompose_projector(P), P)
    rep = certify_maps(maps, P)
    assert rep.ok
    assert rep.rj_residual < 1e-12 and rep.jr_residual < 1e-12


@given(st.integers(0, len(LAYOUTS) - 1), st.integers(0, 2 ** 32 - 1))
def test_reduced_generator_is_lindblad(which, seed):
    rng = np.random.default_rng(seed)
    dims, dR = LAYOUTS[which]
    n = sum(f * g for f, g in dims) + dR
    ws, P = random_cptp_projector(n, dims, dR, rng)
    maps = build_reduction_maps(ws, P)
    lv = liouvillian(random_lindblad_model(n, rng))
    rep = lindblad_check(reduced_generator(lv, maps), maps.layout.dims)
    assert rep.ok and rep.min_conditional_eig >= -1e-8


def test_first_order_term_is_not_a_generator():
    # first-order term of the dissipator of sigma_z + eps sigma_x
    S = perturbed_dissipator_terms(SIGMA_Z, SIGMA_X)[1]
    rep = lindblad_check(S)
    assert not rep.ok
    assert rep.min_conditional_eig == pytest.approx(-2.0)
    assert rep.max_real_eig == pytest.approx(2.0)


def test_reduced_generator_raises_on_non_lindblad():
    S = perturbed_dissipator_terms(SIGMA_Z, SIGMA_X)[1]
    ident = ReductionMaps(np.eye(4), np.eye(4), BlockLayout((2,)))
    with pytest.raises(CertificationError):
        reduced_generator(S, ident)


def test_extract_single_jump():
    rm = extract_hamiltonian_jumps(dissipator_superop(SIGMA_MINUS))
    assert len(rm.jumps) == 1
    L = rm.jumps[0]
    phase = L[1, 0] / abs(L[1, 0])
    assert np.allclose(L / phase, SIGMA_MINUS, atol=1e-10)
    assert np.allclose(rm.hamiltonian, 0, atol=1e-12)


def test_extract_hamiltonian():
    rm = extract_hamiltonian_jumps(commutator_superop(SIGMA_Z))
    assert rm.jumps == []
    assert np.allclose(rm.hamiltonian, SIGMA_Z)


@given(st.integers(0, 2 ** 32 - 1))
def test_extract_round_trip_on_blocks(seed):
    rng = np.random.default_rng(seed)
    lay = BlockLayout((2, 1))
    H = np.zeros((3, 3), dtype=complex)
    H[:2, :2] = random_hermitian(2, rng)
    jumps = [rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(2)]
    gen = generator_from_hamiltonian_jumps(H, jumps, lay)
    rm = extract_hamiltonian_jumps(gen, lay.dims)
    assert rm.is_lindblad and rm.residual < 1e-9
    assert np.allclose(generator_from_hamiltonian_jumps(rm.hamiltonian, rm.jumps, lay), gen)


def test_xxz_reduced_model():
    spec = XXZSpec(3)
    lv = xxz_liouvillian(spec)
    P = spectral_projector(eig_superoperator(lv))
    maps = build_reduction_maps(decompose_projector(P), P)
    rm = extract_hamiltonian_jumps(reduced_generator(lv, maps), maps.layout.dims)
    assert np.max(np.abs(rm.kossakowski)) < 1e-8
    assert rm.jumps == []
    blk = rm.hamiltonian[:2, :2]
    assert np.allclose(np.sort(np.linalg.eigvalsh(blk)), [-spec.omega0 / 2, spec.omega0 / 2])
    assert set(rm.to_dict()) == {"dims", "H", "jumps", "certification", "reconstruction_residual"}


def test_amplitude_damping_reduces_to_zero():
    lv = liouvillian(LindbladModel(HilbertSpace(2), np.zeros((2, 2)), (SIGMA_MINUS,)))
    P = spectral_projector(eig_superoperator(lv))
    maps = build_reduction_maps(decompose_projector(P), P)
    assert maps.layout.dims == (1,)
    assert np.allclose(reduced_generator(lv, maps), [[0]])


def test_asymptotic_reduction_errors():
    spec = XXZSpec(3)
    lv = xxz_liouvillian(spec)
    sd = eig_superoperator(lv)
    P = spectral_projector(sd)
    maps = build_reduction_maps(decompose_projector(P), P)
    rho0 = random_density(8, np.random.default_rng(0))
    times = np.linspace(0, 20, 41)
    rep = verify_asymptotic_reduction(lv, maps, rho0, times, sd.gap, P=P)
    assert np.all(rep.errors <= rep.bound + 1e-12)
    assert rep.errors[-1] < 1e-4
    assert rep.unitarity_residual < 1e-10
    assert rep.in_manifold_max_error < 1e-8


def test_reduce_and_inject():
    P = xxz_projector(3)
    maps = build_reduction_maps(decompose_projector(P), P)
    rho = random_density(8, np.random.default_rng(1))
    x = maps.reduce(rho)
    assert np.allclose(maps.inject(x), (P @ vectorize(rho)).reshape(8, 8, order="F"))
