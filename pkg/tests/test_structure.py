import numpy as np
import pytest

from dlr.linalg import qr_orth
from dlr.matrix_dlr import LowRankFactor, TruncationPolicy, adaptive_matrix_step, integrate, reconstruct
from dlr.problems import Sec51Problem
from dlr.problems.hamiltonian import HarmonicChainProblem
from dlr.rk import SubstepMethod
from dlr.structure import (
    ConfigError, Monitor, check_gradient_decrease, combine, complexify, energy_gamma,
    finite_difference_gradient, harmonic_chain, harmonic_oscillator, hamiltonian_energy_monitor,
    monitor_step, norm_monitor, schroedinger_energy, schroedinger_energy_monitor, split,
    stiffness_matrix, symmetry_defect_monitor,
)


def test_norm_monitor_example(rng):
    U, V = qr_orth(rng.standard_normal((6, 2))), qr_orth(rng.standard_normal((5, 2)))
    mon = norm_monitor()
    assert monitor_step(mon, 0.1, LowRankFactor(U, np.diag([3.0, 4.0]), V)) == pytest.approx(5.0)


def test_norm_monitor_matches_dense(rng):
    Y = LowRankFactor(qr_orth(rng.standard_normal((8, 3))), rng.standard_normal((3, 3)),
                      qr_orth(rng.standard_normal((7, 3))))
    assert monitor_step(norm_monitor(), 0.0, Y) == pytest.approx(np.linalg.norm(reconstruct(Y)), abs=1e-12)


def test_symmetry_defect_zero(rng):
    U = qr_orth(rng.standard_normal((6, 3)))
    S = rng.standard_normal((3, 3))
    Y = LowRankFactor(U, S + S.T, U.copy())
    assert monitor_step(symmetry_defect_monitor(), 0.0, Y) == pytest.approx(0.0, abs=1e-14)


def test_times_must_increase():
    mon = norm_monitor()
    Y = LowRankFactor(np.eye(2), np.eye(2), np.eye(2))
    monitor_step(mon, 0.1, Y)
    with pytest.raises(ValueError, match="increase"):
        monitor_step(mon, 0.1, Y)
    assert list(mon.times) == [0.1]


def test_complex_monitor_rejects_real_state():
    sec = Sec51Problem(n=6)
    mon = schroedinger_energy_monitor(sec.hamiltonian)
    with pytest.raises(ConfigError):
        monitor_step(mon, 0.0, sec.initial_factor(2))


def test_unknown_monitor_kind():
    with pytest.raises(ConfigError):
        Monitor("x", "entropy", lambda Y: 0.0)


def test_schroedinger_energy_matches_dense(rng):
    sec = Sec51Problem(n=10)
    Y = sec.initial_factor(3).astype(complex)
    dense = reconstruct(Y)
    expected = np.real(np.vdot(dense, sec.hamiltonian(dense)))
    assert schroedinger_energy(sec.hamiltonian, Y) == pytest.approx(expected, rel=1e-12)


def test_energy_gamma_bounds(rng):
    sec = Sec51Problem(n=10)
    Y1 = sec.initial_factor(3).astype(complex)
    Y2 = sec.initial_factor(5).astype(complex)
    sharp, total = energy_gamma(sec.hamiltonian, Y1, Y2)
    H = sec.hamiltonian
    assert sharp == pytest.approx(np.linalg.norm(H(reconstruct(Y1)) + H(reconstruct(Y2))), rel=1e-12)
    assert sharp <= total + 1e-15


def test_gradient_check_examples():
    assert check_gradient_decrease([1.0, 1.0, 1.0], 0.1, 1e-8, 1.0).passed
    assert check_gradient_decrease([3.0, 2.0, 1.0], 0.1, 0.0, 1.0).passed
    res = check_gradient_decrease([3.0, 2.0, 2.5], 0.1, 1e-8, 1.0)
    assert not res.passed and res.first_violation == 1


def test_gradient_flow_theta_zero_strictly_decreases():
    from dlr.problems.synthetic import gradient_flow_problem
    gf = gradient_flow_problem(n=20, rank=3)
    rng = np.random.default_rng(0)
    Y = LowRankFactor.from_dense(rng.standard_normal((20, 20)) / 20, 2)
    values = [gf.value(reconstruct(Y))]
    for k in range(10):
        Y, _ = adaptive_matrix_step(Y, gf.problem(), 0.1 * k, 0.1, SubstepMethod("rk4", 8),
                                    TruncationPolicy(0.0, r_max=10))
        values.append(gf.value(reconstruct(Y)))
    assert np.all(np.diff(values) < 0)


def test_harmonic_oscillator_rotation(rng):
    shape = (5, 4)
    prob = complexify(harmonic_oscillator(shape))
    Q0, P0 = rng.standard_normal(shape), rng.standard_normal(shape)
    Z0 = combine(Q0, P0)
    np.testing.assert_allclose(prob.rhs(0.0, Z0), -1j * Z0, atol=1e-15)
    Y0 = LowRankFactor.from_dense(Z0, 4)
    t = 0.5
    Y, _ = integrate(Y0, prob, 0.0, t / 10, 10, SubstepMethod("rk4", 4), TruncationPolicy(1e-12, r_max=4))
    Q, P = split(reconstruct(Y))
    np.testing.assert_allclose(Q, np.cos(t) * Q0 + np.sin(t) * P0, atol=1e-9)
    np.testing.assert_allclose(P, -np.sin(t) * Q0 + np.cos(t) * P0, atol=1e-9)


def test_chain_gradients_match_finite_differences(rng):
    sys = harmonic_chain((6, 3))
    Q, P = rng.standard_normal((6, 3)), rng.standard_normal((6, 3))
    gQ, gP = finite_difference_gradient(sys.H, Q, P)
    np.testing.assert_allclose(sys.grad_Q(Q, P), gQ, rtol=1e-6, atol=1e-5)
    np.testing.assert_allclose(sys.grad_P(Q, P), gP, rtol=1e-6, atol=1e-6)
    A = stiffness_matrix(6)
    Z = combine(Q, P)
    np.testing.assert_allclose(complexify(sys).rhs(0.0, Z), -1j * (A @ Q + 1j * P), atol=1e-12)


def test_chain_energy_monitor_conserved():
    chain = HarmonicChainProblem(m=12, n=10)
    Y0 = chain.initial_factor(3)
    mon = hamiltonian_energy_monitor(chain.system)
    Y, _ = integrate(Y0, chain.problem(), 0.0, 1e-3, 20, SubstepMethod("rk4", 8), TruncationPolicy(1e-10))
    Z0 = reconstruct(Y0)
    e0 = chain.system.H(Z0.real, Z0.imag)
    assert monitor_step(mon, 0.02, Y) == pytest.approx(e0, rel=1e-6)


def test_chain_exact_flow_solves_ode():
    chain = HarmonicChainProblem(m=10, n=8)
    Z0 = chain.initial_state()
    dt = 1e-5
    dZ = (chain.exact(0.3 + dt, Z0) - chain.exact(0.3 - dt, Z0)) / (2 * dt)
    F = chain.problem().rhs(0.3, chain.exact(0.3, Z0))
    assert np.linalg.norm(dZ - F) <= 1e-5 * np.linalg.norm(F)
