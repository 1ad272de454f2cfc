import numpy as np
import pytest
from scipy.special import erf

from dlr.matrix_dlr import reconstruct
from dlr.problems import Sec51Problem, synthetic_rank_r_path
from dlr.problems.burgers import (
    BurgersUQProblem, TensorLegendreBasis, characteristic_solution, load_triple_tensor, ramp,
    save_triple_tensor,
)
from dlr.problems.sec51 import cosine_potential, operator_matrix, second_difference, sec51_rhs
from dlr.problems.transport import TransportProblem, legendre_flux_matrix
from dlr.rk import SubstepMethod, rk_integrate


# sec51 -----------------------------------------------------------------------

def test_sec51_zero():
    sec = Sec51Problem(n=5)
    assert np.array_equal(sec.rhs(0.0, np.zeros((5, 5))), np.zeros((5, 5)))


def test_sec51_identity_hand_expansion():
    n = 4
    B = operator_matrix(n)
    D = second_difference(n)
    V = cosine_potential(n)
    np.testing.assert_allclose(B, V - 0.5 * D, atol=0)
    # hand expansion: D = tridiag(-1, 2, -1), V = diag(1 - cos(2 pi j / n)), j = -2..1
    expected_B = np.array([
        [1.0, 0.5, 0.0, 0.0],
        [0.5, 0.0, 0.5, 0.0],
        [0.0, 0.5, -1.0, 0.5],
        [0.0, 0.0, 0.5, 0.0],
    ])
    np.testing.assert_allclose(B, expected_B, atol=1e-15)
    np.testing.assert_allclose(sec51_rhs(0.0, np.eye(n), B), -2 * expected_B, atol=1e-15)


def test_sec51_symmetry(rng):
    sec = Sec51Problem(n=12)
    Y = rng.standard_normal((12, 12))
    np.testing.assert_allclose(sec.rhs(0.0, Y).T, sec.rhs(0.0, Y.T), atol=1e-13)


def test_sec51_reference_examples(rng):
    sec = Sec51Problem(n=8)
    np.testing.assert_allclose(sec.reference(0.0), sec.Y0, atol=1e-15)
    sec.B = np.zeros((8, 8))
    sec._eig = np.linalg.eigh(sec.B)
    np.testing.assert_allclose(sec.reference(0.7), sec.Y0, atol=1e-15)


def test_sec51_reference_diagonal_closed_form(rng):
    sec = Sec51Problem(n=2)
    b = np.array([0.3, 1.7])
    sec.B = np.diag(b)
    sec._eig = np.linalg.eigh(sec.B)
    Y0 = rng.standard_normal((2, 2))
    t = 0.4
    closed = np.exp(-(b[:, None] + b[None, :]) * t) * Y0
    np.testing.assert_allclose(sec.reference(t, Y0), closed, atol=1e-14)
    rk = rk_integrate(sec.rhs, Y0, 0.0, t, SubstepMethod("rk4", 200))
    np.testing.assert_allclose(rk, closed, atol=1e-12)


def test_sec51_reference_solves_ode():
    sec = Sec51Problem(n=20)
    dt = 1e-6
    dY = (sec.reference(0.05 + dt) - sec.reference(0.05 - dt)) / (2 * dt)
    F = sec.rhs(0.0, sec.reference(0.05))
    assert np.linalg.norm(dY - F) <= 1e-6 * np.linalg.norm(F)


def test_sec51_initial_singular_values():
    sec = Sec51Problem(n=30)
    s = np.linalg.svd(sec.Y0, compute_uv=False)
    np.testing.assert_allclose(s[:8], 10.0 ** -np.arange(1, 9), rtol=0, atol=1e-16)
    Ys = sec.Y0_symmetric
    np.testing.assert_allclose(Ys, Ys.T, atol=1e-16)


# transport -------------------------------------------------------------------

def test_flux_matrix_by_quadrature():
    n = 6
    x, w = np.polynomial.legendre.leggauss(20)
    P = np.polynomial.legendre.legvander(x, n - 1) * np.sqrt((2 * np.arange(n) + 1) / 2)
    A = np.einsum("q,q,qk,ql->kl", w, x, P, P)
    np.testing.assert_allclose(legendre_flux_matrix(n), A, atol=1e-14)


@pytest.mark.parametrize("viscosity", ["matrix", "scalar"])
def test_transport_constant_isotropic_periodic(viscosity):
    p = TransportProblem(nx=30, n_moments=6, periodic=True, viscosity=viscosity)
    Y = np.zeros((30, 6))
    Y[:, 0] = 2.5
    assert np.abs(p.rhs(0.0, Y)).max() <= 1e-13


@pytest.mark.parametrize("viscosity", ["matrix", "scalar"])
def test_transport_constant_isotropic_interior(viscosity):
    p = TransportProblem(nx=30, n_moments=6, viscosity=viscosity)
    Y = np.zeros((30, 6))
    Y[:, 0] = 2.5
    # zero-inflow ghost cells only act on the two boundary cells
    assert np.abs(p.rhs(0.0, Y)[1:-1]).max() <= 1e-13


def test_transport_single_bump_two_moments():
    p = TransportProblem(nx=9, n_moments=2, a=0.0, b=9.0, sigma_s=0.7, viscosity="scalar", T=1.0)
    dx, dt, g = p.dx, p.dt, 1 / np.sqrt(3)
    Y = np.zeros((9, 2))
    Y[4, 0] = 1.0
    F = p.rhs(0.0, Y)
    expected = np.zeros((9, 2))
    expected[3] = [1 / (2 * dt), -g / (2 * dx)]
    expected[4] = [-1 / dt, 0.0]
    expected[5] = [1 / (2 * dt), g / (2 * dx)]
    np.testing.assert_allclose(F, expected, atol=1e-13)
    Y = np.zeros((9, 2))
    Y[4, 1] = 1.0
    F = p.rhs(0.0, Y)
    expected = np.zeros((9, 2))
    expected[3] = [-g / (2 * dx), 1 / (2 * dt)]
    expected[4] = [0.0, -1 / dt - 0.7]
    expected[5] = [g / (2 * dx), 1 / (2 * dt)]
    np.testing.assert_allclose(F, expected, atol=1e-13)


def test_transport_single_bump_matrix_viscosity():
    p = TransportProblem(nx=9, n_moments=2, a=0.0, b=9.0, sigma_s=0.0, T=1.0)
    g = 1 / np.sqrt(3)
    # |A| for A = [[0, g], [g, 0]] is g * I
    np.testing.assert_allclose(p.M_visc, g * np.eye(2), atol=1e-15)
    Y = np.zeros((9, 2))
    Y[4, 0] = 1.0
    F = p.rhs(0.0, Y)
    c = g / (2 * p.dx)
    np.testing.assert_allclose(F[3], [c, -c], atol=1e-13)
    np.testing.assert_allclose(F[4], [-2 * c, 0.0], atol=1e-13)
    np.testing.assert_allclose(F[5], [c, c], atol=1e-13)


def test_transport_initial_rank_one():
    p = TransportProblem()
    assert np.linalg.matrix_rank(p.initial_state()) == 1
    np.testing.assert_allclose(reconstruct(p.initial_factor()), p.initial_state(), atol=1e-14)
    # cell averages of a unit-mass Gaussian
    assert np.sum(p.initial_density()) * p.dx == pytest.approx(1.0, abs=1e-12)


def test_transport_oracle_identity_at_zero():
    p = TransportProblem(nx=20, n_moments=4)
    assert np.array_equal(p.oracle(0.0), p.initial_state())


def test_transport_periodic_mass_conservation(rng):
    p = TransportProblem(nx=25, n_moments=5, periodic=True)
    Y = rng.standard_normal((25, 5))
    assert abs(np.sum(p.rhs(0.0, Y)[:, 0])) <= 1e-10


def test_transport_pure_advection_characteristics():
    # sigma_s = 0: Phi(t, x) = int_{x-t}^{x+t} rho(y) dy / t for isotropic data
    p = TransportProblem(nx=200, n_moments=32, a=-3.0, b=3.0, sigma_s=0.0, width=0.3, T=1.0)
    phi = p.scalar_flux(p.oracle(1.0))
    s = np.sqrt(2) * p.width
    exact = 0.5 * (erf((p.x + 1) / s) - erf((p.x - 1) / s))
    j = int(np.argmin(np.abs(p.x)))
    assert phi[j] == pytest.approx(exact[j], rel=0.02)


@pytest.mark.parametrize("viscosity", ["matrix", "scalar"])
def test_transport_norm_non_increasing(viscosity):
    p = TransportProblem(nx=60, n_moments=8, a=-2.0, b=2.0, width=0.2, T=1.0, viscosity=viscosity)
    Y = p.initial_state()
    norms = [np.linalg.norm(Y)]
    for _ in range(p.steps):
        Y = Y + p.dt * p.rhs(0.0, Y)
        norms.append(np.linalg.norm(Y))
    assert np.all(np.diff(norms) <= 1e-12)


def test_transport_scalar_flux_factored():
    p = TransportProblem(nx=40, n_moments=6)
    Y = p.initial_factor()
    np.testing.assert_allclose(p.scalar_flux_factored(Y), p.scalar_flux(reconstruct(Y)), atol=1e-14)


# burgers ---------------------------------------------------------------------

def test_basis_orthonormal():
    basis = TensorLegendreBasis(4, 3)
    x1, x2, w = basis.quadrature(12)
    Phi = basis.evaluate(x1, x2)
    np.testing.assert_allclose((Phi * w[:, None]).T @ Phi, np.eye(basis.size), atol=1e-12)
    assert w.sum() == pytest.approx(1.0)


def test_triple_tensor():
    basis = TensorLegendreBasis(3, 2)
    C = basis.triple_tensor()
    assert C[0, 0, 0] == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(C, C.transpose(0, 2, 1), atol=1e-14)
    np.testing.assert_allclose(C[0], np.eye(basis.size), atol=1e-13)
    # independent oracle: a much finer rule gives the same numbers
    x1, x2, w = basis.quadrature(20)
    Phi = basis.evaluate(x1, x2)
    np.testing.assert_allclose(C, np.einsum("q,qk,ql,qm->klm", w, Phi, Phi, Phi), atol=1e-12)


def test_modal_flux_matches_triple_tensor(rng):
    p = BurgersUQProblem(nx=5, p1=3, p2=2)
    C = p.basis.triple_tensor()
    Y = rng.standard_normal((5, p.basis.size))
    np.testing.assert_allclose(p.modal_flux(Y), 0.5 * np.einsum("klm,jl,jm->jk", C, Y, Y), atol=1e-12)


def test_cache_round_trip(tmp_path):
    basis = TensorLegendreBasis(2, 1)
    C = basis.triple_tensor()
    path = tmp_path / "c.bin"
    save_triple_tensor(path, C, 2, 1)
    C2, p1, p2 = load_triple_tensor(path)
    assert (p1, p2) == (2, 1) and np.array_equal(C, C2)
    raw = path.read_bytes()
    assert raw[:4] == b"DLRC" and len(raw) == 12 + 8 * 6**3


def test_cache_rejects_bad_files(tmp_path):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"XXXX" + bytes(20))
    with pytest.raises(ValueError, match="magic"):
        load_triple_tensor(bad)
    short = tmp_path / "short.bin"
    short.write_bytes(b"DLRC" + (1).to_bytes(4, "little") * 2 + bytes(16))
    with pytest.raises(ValueError, match="truncated"):
        load_triple_tensor(short)


def test_burgers_deterministic_constant():
    p = BurgersUQProblem(nx=20, p1=2, p2=2)
    Y = np.zeros((20, p.basis.size))
    Y[:, 0] = 3.0
    assert np.abs(p.rhs(0.0, Y)).max() <= 1e-12


def test_burgers_scalar_lax_friedrichs(rng):
    p = BurgersUQProblem(nx=15, p1=2, p2=1)
    u = rng.uniform(1, 5, 15)
    Y = np.zeros((15, p.basis.size))
    Y[:, 0] = u
    F = p.rhs(0.0, Y)
    c = p.dx / (2 * p.dt)
    ug = np.concatenate([[u[0]], u, [u[-1]]])
    scalar = np.empty(15)
    for j in range(15):
        fr = 0.25 * (ug[j + 1] ** 2 + ug[j + 2] ** 2) - c * (ug[j + 2] - ug[j + 1])
        fl = 0.25 * (ug[j] ** 2 + ug[j + 1] ** 2) - c * (ug[j + 1] - ug[j])
        scalar[j] = -(fr - fl) / p.dx
    np.testing.assert_allclose(F[:, 0], scalar, atol=1e-10)
    assert np.abs(F[:, 1:]).max() <= 1e-10


def test_burgers_time_step():
    p = BurgersUQProblem()
    assert p.u_max == 17.0
    assert p.dt * p.u_max / p.dx <= p.cfl + 1e-12
    assert p.steps * p.dt == pytest.approx(p.T)


def _ramp_mean_closed_form(x, x0=0.3, x1=0.4, uL=12.0, uR=1.0, s1=0.2, s2=5.0):
    # u is affine in ur, so averaging over xi2 replaces ur by its mean; then
    # average over the shift a = x0 + s1 xi1 via an antiderivative in s = x - a
    ur = uR + s2 / 2
    d = x1 - x0

    def G(s):
        return np.where(s < 0, uL * s,
                        np.where(s <= d, uL * s + (ur - uL) * s**2 / (2 * d),
                                 uL * d + (ur - uL) * d / 2 + ur * (s - d)))

    return (G(x - x0 + s1) - G(x - x0 - s1)) / (2 * s1)


def test_burgers_oracle_at_zero_closed_form():
    p = BurgersUQProblem(nx=50)
    mean, std = p.oracle(0.0, n_quad=200)
    np.testing.assert_allclose(mean, _ramp_mean_closed_form(p.x), atol=2e-3)


def test_burgers_oracle_deterministic_std_zero():
    p = BurgersUQProblem(nx=40, sigma1=0.0, sigma2=0.0)
    mean, std = p.oracle(0.01)
    # zero up to the roundoff of the weighted sums
    assert std.max() <= 1e-14 * mean.max()


def test_burgers_initial_projection_mean():
    p = BurgersUQProblem(nx=50)
    Y = p.initial_state()
    np.testing.assert_allclose(p.expectation(Y), _ramp_mean_closed_form(p.x), atol=5e-3)


def test_characteristics_conserve_mass():
    # d/dt int_0^1 u dx = (uL^2 - ur^2) / 2 while the profile stays inside the domain
    x = (np.arange(200000) + 0.5) / 200000
    for xi1, xi2 in [(0.3, 0.2), (-0.5, 0.9)]:
        m0 = np.mean(characteristic_solution(0.0, x, xi1, xi2))
        ur = 1.0 + 5.0 * xi2
        for t in (0.005, 0.03):
            mt = np.mean(characteristic_solution(t, x, xi1, xi2))
            assert mt - m0 == pytest.approx(0.5 * (144 - ur**2) * t, abs=1e-3)


def test_characteristics_initial_ramp():
    x = np.linspace(0, 1, 101)
    np.testing.assert_allclose(characteristic_solution(0.0, x, 0.1, 0.4), ramp(x, 0.1, 0.4), atol=1e-14)


def test_characteristics_after_shock_two_states():
    x = np.linspace(0, 1, 1001)
    u = characteristic_solution(0.03, x, 0.0, 0.5)
    assert set(np.unique(u)) == {12.0, 3.5}
    assert np.count_nonzero(np.diff(u)) == 1


# synthetic -------------------------------------------------------------------

def test_synthetic_path():
    path = synthetic_rank_r_path(12, 10, 3, seed=2)
    np.testing.assert_allclose(path.A(0.0), path.L[0] @ path.R[0].T, atol=0)
    for t in (0.0, 0.3, 1.1):
        dt = 1e-6
        fd = (path.A(t + dt) - path.A(t - dt)) / (2 * dt)
        np.testing.assert_allclose(path.Adot(t), fd, atol=1e-8)
        s = np.linalg.svd(path.A(t), compute_uv=False)
        assert s[2] > 1e-6 * s[0] and s[3] < 1e-12 * s[0]
