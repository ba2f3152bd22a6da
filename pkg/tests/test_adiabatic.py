import numpy as np
import pytest
from hypothesis import given, strategies as st

from lindred.adiabatic import (
    Gauge, SylvesterConditioningError, block_split, certify_first_order, first_order_AE,
    make_gauge, solve_sylvester,
)
from lindred.models import DephasingSpec, XXZSpec, build_dephasing
from lindred.perturbation import PerturbedGenerator, reduced_perturbed
from lindred.pipeline import disorder_family, xxz_center, xxz_split
from lindred.reduction import BlockLayout, ReductionMaps

SPEC = XXZSpec(3)


@given(st.integers(0, 2 ** 32 - 1))
def test_sylvester_solvers_agree(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(4, 4)) - 6 * np.eye(4)
    B = rng.normal(size=(3, 3)) + 6 * np.eye(3)
    Q = rng.normal(size=(4, 3))
    sol = solve_sylvester(A, B, Q)
    assert sol.method == "kron" and sol.residual < 1e-10
    from scipy.linalg import solve_sylvester as scipy_sylvester
    assert np.allclose(sol.X, scipy_sylvester(A, -B, Q))


def test_sylvester_large_uses_bartels_stewart():
    rng = np.random.default_rng(0)
    A = -np.diag(rng.uniform(1, 2, 210))
    B = np.diag(rng.uniform(1, 2, 3))
    sol = solve_sylvester(A, B, rng.normal(size=(210, 3)))
    assert sol.method == "bartels-stewart" and sol.residual < 1e-10


def test_sylvester_rejects_shared_eigenvalue():
    with pytest.raises(SylvesterConditioningError):
        solve_sylvester(np.eye(2), np.eye(2), np.ones((2, 2)))


def test_block_split_is_block_diagonal():
    split = xxz_split(SPEC)
    assert split.off_diagonal < 1e-10
    assert np.allclose(split.T_inv @ split.T, np.eye(split.T.shape[0]))
    assert split.peripheral_dim == 6 and split.stable_dim == 64 - 6


def test_gauges():
    assert make_gauge("random").kind == "random_uniform"
    assert make_gauge("commutant", 3) == Gauge("random_commutant", 3)
    with pytest.raises(ValueError):
        make_gauge("other")
    L = np.diag([0.0, 1j, -1j])
    G = make_gauge("commutant", 1).matrix(L)
    assert np.allclose(G @ L, L @ G)
    assert np.allclose(make_gauge("zero").matrix(L), 0)


@pytest.mark.parametrize("gauge", ["zero", "commutant"])
def test_first_order_matches_fixed_manifold_reduction(gauge):
    cr = xxz_center(SPEC)
    gen, _ = disorder_family(SPEC, 0)
    ae = first_order_AE(gen, cr.maps, make_gauge(gauge, 5), xxz_split(SPEC))
    for eps in (0.1, -0.3):
        diff = np.max(np.abs(ae.L_tilde(eps) - reduced_perturbed(gen, cr.maps, eps, certify=False)))
        assert diff <= 1e-9
    assert ae.invariance_residual <= 1e-7
    assert ae.gauge_residual <= 1e-12
    cert = certify_first_order(ae, [0.1, -0.1, 0.5, -0.5])
    assert all(cert.passes)
    assert set(cert.to_dict(ae.gauge_spec)) == {
        "gauge", "commutator_norm", "lindblad_pass", "eps", "min_conditional_eig",
        "invariance_residual"}


def test_random_gauge_breaks_lindblad_form():
    cr = xxz_center(SPEC)
    gen, _ = disorder_family(SPEC, 0)
    ae = first_order_AE(gen, cr.maps, make_gauge("random", 0), xxz_split(SPEC))
    assert ae.invariance_residual <= 1e-7
    assert ae.commutator_norm > 1.0
    assert not any(certify_first_order(ae, [0.1, 0.5]).passes)


def test_first_order_projector_identities():
    cr = xxz_center(SPEC)
    gen, _ = disorder_family(SPEC, 0)
    ae = first_order_AE(gen, cr.maps, "zero", xxz_split(SPEC))
    P0, P1 = cr.P, ae.P1
    L0, L1 = gen.term(0), gen.term(1)
    assert np.allclose(P0 @ P1 + P1 @ P0, P1, atol=1e-9)
    assert np.allclose(L0 @ P1 - P1 @ L0 + L1 @ P0 - P0 @ L1, 0, atol=1e-8)


def test_needs_first_order_term():
    cr = xxz_center(SPEC)
    with pytest.raises(ValueError):
        first_order_AE(PerturbedGenerator([cr.generator]), cr.maps)


def test_dephasing_ae_gives_metzler():
    dm = build_dephasing(DephasingSpec.random(2, 3))
    maps = ReductionMaps(dm.R, dm.J, BlockLayout((1,) * 4))
    gen = PerturbedGenerator([dm.L0, dm.L1], validity=(0.0, np.inf))
    split = block_split(dm.L0, maps)
    ae = first_order_AE(gen, maps, "zero", split)
    assert np.allclose(ae.L_hat_0, 0, atol=1e-12)
    assert np.max(np.abs(ae.L_tilde(0.3) - dm.metzler(0.3))) <= 1e-9
