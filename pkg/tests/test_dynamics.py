import numpy as np
import pytest
from hypothesis import given, strategies as st

from lindred.dynamics import (
    decay_fit, expectation, hs_norm, propagate, propagator, sop_norm, time_grid, trace_norm,
)
from lindred.models import XXZSpec, sector_data, xxz_liouvillian
from lindred.operator_core import (
    SIGMA_MINUS, SIGMA_Z, HilbertSpace, LindbladModel, cptp_report, liouvillian,
    random_density, random_lindblad_model, vectorize,
)


def amplitude_damping(gamma=0.7):
    return liouvillian(LindbladModel(HilbertSpace(2), np.zeros((2, 2)), (np.sqrt(gamma) * SIGMA_MINUS,)))


def test_norms():
    assert trace_norm(SIGMA_Z) == pytest.approx(2.0)
    assert hs_norm(SIGMA_Z) == pytest.approx(np.sqrt(2.0))
    assert sop_norm(np.eye(4)) == pytest.approx(1.0)


def test_trace_norm_matches_eigenvalue_sum(rng):
    d = random_density(2, rng) - random_density(2, rng)
    assert trace_norm(d) == pytest.approx(np.abs(np.linalg.eigvalsh(d)).sum())


def test_propagate_at_zero_is_identity(rng):
    rho = random_density(3, rng)
    tr = propagate(liouvillian(random_lindblad_model(3, rng)), rho, [0.0])
    assert np.allclose(tr.states[0], rho)


def test_amplitude_damping_population():
    # sigma_- lowers |0> (spin up) to |1>
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    times = np.linspace(0, 5, 11)
    tr = propagate(amplitude_damping(0.7), rho0, times)
    assert np.allclose([r[0, 0].real for r in tr.states], np.exp(-0.7 * times), atol=1e-12)


def test_steady_state_constant_trajectory():
    N = 3
    lv = xxz_liouvillian(XXZSpec(N))
    for rho in sector_data(N).steady_states.values():
        tr = propagate(lv, rho, [0.0, 1.0, 10.0])
        assert max(hs_norm(r - rho) for r in tr.states) < 1e-9


def test_methods_agree(rng):
    lv = liouvillian(random_lindblad_model(3, rng))
    rho = random_density(3, rng)
    times = [0.0, 0.3, 2.0]
    a = propagate(lv, rho, times, method="eig")
    b = propagate(lv, rho, times, method="expm")
    assert max(hs_norm(x - y) for x, y in zip(a.states, b.states)) < 1e-10


def test_defective_generator_falls_back():
    # Jordan block: x' = y, y' = 0
    gen = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    tr = propagate(gen, np.array([0.0, 1.0]), [0.0, 2.0])
    assert tr.meta["method"] == "expm"
    assert np.allclose(tr.states[1], [2.0, 1.0])
    with pytest.raises(np.linalg.LinAlgError):
        propagate(gen, np.array([0.0, 1.0]), [1.0], method="eig")


def test_propagate_rejects_bad_times(rng):
    lv = amplitude_damping()
    with pytest.raises(ValueError):
        propagate(lv, np.eye(2) / 2, [1.0, 0.5])
    with pytest.raises(ValueError):
        propagate(lv, np.eye(2) / 2, [-1.0])


@given(st.integers(0, 2 ** 32 - 1))
def test_semigroup_property(seed):
    rng = np.random.default_rng(seed)
    lv = liouvillian(random_lindblad_model(2, rng))
    t, s = rng.uniform(0, 2, size=2)
    assert np.allclose(propagator(lv, t + s), propagator(lv, t) @ propagator(lv, s), atol=1e-8)


@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
def test_propagator_is_cptp(t, rng):
    for _ in range(3):
        lv = liouvillian(random_lindblad_model(3, rng))
        rep = cptp_report(propagator(lv, t))
        assert rep.min_choi_eig >= -1e-8 and rep.tp_residual <= 1e-8


def test_positivity_along_trajectory(rng):
    lv = liouvillian(random_lindblad_model(3, rng))
    tr = propagate(lv, random_density(3, rng, rank=1), time_grid(5.0, 40))
    assert min(np.linalg.eigvalsh(r)[0] for r in tr.states) >= -1e-8
    assert np.allclose(expectation(np.eye(3), tr), 1.0)


def test_vector_input_returns_vectors(rng):
    lv = amplitude_damping()
    tr = propagate(lv, vectorize(np.eye(2) / 2), [0.0, 1.0])
    assert tr.states[1].shape == (4,)


def test_time_grid_shape():
    g = time_grid(10.0, 200)
    assert len(g) == 200 and g[0] == 0 and g[-1] == pytest.approx(10.0)
    assert np.all(np.diff(g) > 0)


def test_decay_fit_synthetic():
    t = np.linspace(0, 20, 400)
    osc = np.exp(-0.72 * t) * np.abs(np.cos(6 * t))
    assert decay_fit(osc, t) == pytest.approx(0.72, abs=0.02)
    assert decay_fit(np.exp(-0.72 * t), t) == pytest.approx(0.72, abs=1e-9)


def test_decay_fit_shrinks_window_on_zeros():
    t = np.linspace(0, 10, 101)
    e = np.exp(-t)
    e[-5:] = 0.0
    with pytest.warns(RuntimeWarning):
        rate = decay_fit(e, t)
    assert rate == pytest.approx(1.0, abs=1e-6)
