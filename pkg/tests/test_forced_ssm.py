import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from ssm_beam import forced_ssm as F
from ssm_beam import model
from ssm_beam import ssm_unforced as U
from ssm_beam.errors import ResonanceError
from ssm_beam.model import BeamParameters, ForcingSpec


def modal_block(p, n):
    return np.array([[0, 1], [-model.stiffness(p, n), -model.damping(p, n)]], dtype=complex)


def oracle_first_order(p, forcing, mass_normalized, n_modes=6):
    """Harmonic balance of the order-eps, order-|z|^2 invariance equation, solved mode by mode."""
    table, _ = U.build_ssm(p, mass_normalized=mass_normalized)
    X0 = table.modal_polynomial(n_modes)
    l1 = model.eigenvalues(p, 1).lambda_plus
    w1 = 1 / (1 + p.mu) if mass_normalized else 1.0
    V1 = np.array([[1, 1], [l1, l1.conjugate()]])
    rho = np.linalg.solve(V1, [0, w1 * forcing.modal_amplitudes[1]])[0]
    out = {}
    for n1, n2 in ((2, 0), (1, 1), (0, 2)):
        s = n1 * l1 + n2 * l1.conjugate()
        drive = 0.5 * (rho * (n1 + 1) * X0[(n1 + 1, n2)] + np.conj(rho) * (n2 + 1) * X0[(n1, n2 + 1)])
        for m in (1, -1):
            X = np.array([
                np.linalg.solve(modal_block(p, j) - (s + 1j * m * forcing.omega) * np.eye(2), drive[j - 1])
                for j in range(1, n_modes + 1)
            ])
            out[(n1, n2, m)] = X
    return rho, out


@pytest.fixture(params=[True, False], ids=["mass", "bare"])
def normalization(request):
    return request.param


class TestLinearResponse:
    def test_static(self, beam):
        coeffs = F.linear_response_coefficients(beam, {(2, 0): 0.7}, 1.3, 1e-2)
        assert coeffs[(2, 0)] == pytest.approx(1e-2 * 0.7 / (16 + 1))

    def test_undamped_resonance(self):
        p = BeamParameters(alpha=1, beta=0, gamma=1, delta=0, mu=1)
        omega = math.sqrt(2 / 2)
        with pytest.raises(ResonanceError, match=r"linear resonance at \(n, m\) = \(1, 1\)"):
            F.linear_periodic_response(p, ForcingSpec.first_mode(omega), 1e-3)

    def test_first_harmonic_value(self, beam, forcing):
        orbit = F.linear_periodic_response(beam, forcing, 1e-3)
        expected = 1e-3 * 0.5 / (1.3j * 1.1 + 2 - 1.69 * 2)
        assert orbit.coefficients[(1, 1)] == pytest.approx(expected, abs=1e-18)
        assert orbit.coefficients[(1, -1)] == np.conj(orbit.coefficients[(1, 1)])

    def test_real_signal(self, beam, forcing):
        orbit = F.linear_periodic_response(beam, forcing, 1e-3)
        assert orbit.imaginary_residue(np.linspace(0, 10, 101), 4) < 1e-12

    def test_against_steady_state(self, linear_beam, forcing):
        # integrate the forced linear mode-1 equation until transients are gone, then Fourier-analyse
        p = linear_beam.replace(epsilon=1e-3, omega=1.3)
        m = 1 + p.mu

        def rhs(t, y):
            return [y[1], (-(p.alpha + p.gamma) * y[0] - (p.beta + p.delta) * y[1] + p.epsilon * math.cos(1.3 * t)) / m]

        T = 2 * math.pi / 1.3
        t_end = 40 * T
        t = t_end + T * np.arange(256) / 256
        sol = solve_ivp(rhs, (0, t[-1]), [0, 0], method="DOP853", t_eval=t, rtol=1e-12, atol=1e-16)
        w11 = np.mean(sol.y[0] * np.exp(-1j * 1.3 * t))
        orbit = F.linear_periodic_response(p, forcing, p.epsilon)
        assert abs(w11 - orbit.coefficients[(1, 1)]) < 1e-8 * abs(w11)


class TestFirstOrder:
    def test_constant_term(self, beam, forcing):
        fmodel, _ = F.first_order_coefficients(beam, forcing, U.build_ssm(beam, mass_normalized=False)[0])
        l1 = model.eigenvalues(beam, 1).lambda_plus
        assert np.allclose(fmodel.R1_0(0.3), math.cos(0.3) / (l1.conjugate() - l1) * np.array([-1, 1]))

    def test_conjugate_pair(self, beam, forcing):
        fmodel, _ = F.first_order_coefficients(beam, forcing)
        r = fmodel.R1_0(1.1)
        assert r[1] == np.conj(r[0])

    def test_linear_terms_vanish(self, beam, forcing):
        _, first = F.first_order_coefficients(beam, forcing)
        assert first.entries[(1, 0)] == {} and first.entries[(0, 1)] == {}

    def test_support(self, beam, forcing):
        _, first = F.first_order_coefficients(beam, forcing)
        assert set(first.entries[(2, 0)]) == {(1, 1), (1, -1), (3, 1), (3, -1)}

    def test_linear_beam_has_no_correction(self, linear_beam, forcing):
        _, first = F.first_order_coefficients(linear_beam, forcing)
        assert all(not per for per in first.entries.values())

    def test_matches_oracle(self, beam, forcing, normalization):
        table, _ = U.build_ssm(beam, mass_normalized=normalization)
        fmodel, first = F.first_order_coefficients(beam, forcing, table)
        rho, ref = oracle_first_order(beam, forcing, normalization)
        assert fmodel.rho == pytest.approx(rho, abs=1e-15)
        for (n1, n2, m), X in ref.items():
            got = np.zeros_like(X)
            for mode in (1, 3):
                V = model.basis_matrices(beam, [mode])[0]
                got[mode - 1] = V @ first.coefficient(n1, n2, mode, m)
            assert np.max(np.abs(got - X)) < 1e-14

    def test_K20_mode_one_closed_form(self, beam, forcing):
        # bare normalization: 9 kappa / (8 (conj l - l)^2) / (2 l (l + i omega))
        _, first = F.first_order_coefficients(beam, forcing, U.build_ssm(beam, mass_normalized=False)[0])
        l1 = model.eigenvalues(beam, 1).lambda_plus
        expected = 9 / (8 * (l1.conjugate() - l1) ** 2) / (2 * l1 * (l1 + 1.3j))
        assert first.coefficient(2, 0, 1, 1)[0] == pytest.approx(expected, abs=1e-16)
        assert first.coefficient(2, 0, 1, 1)[0] == pytest.approx(0.061518090600378286 - 0.02598037750957517j, abs=1e-15)

    def test_epsilon_residual_order(self, forced_beam, forcing, normalization):
        table, _ = U.build_ssm(forced_beam, mass_normalized=normalization)
        fmodel, first = F.first_order_coefficients(forced_beam, forcing, table)
        eps = np.logspace(-4, -2, 5)
        res = [F.epsilon_residual(forced_beam, table, fmodel, first, 0.01 * np.exp(0.3j), e) for e in eps]
        assert np.polyfit(np.log(eps), np.log(res), 1)[0] >= 1.9

    def test_zero_order_is_autonomous(self, forced_beam, forcing):
        # at eps = 0 the forced defect reduces to the unforced one for every phase
        table, red = U.build_ssm(forced_beam)
        fmodel, first = F.first_order_coefficients(forced_beam, forcing, table)
        z = 0.02 * np.exp(0.9j)
        ref = U.invariance_defect(forced_beam, table, red, z, 8)
        for theta in (0.0, 1.0, 2.5):
            d = F.forced_invariance_defect(forced_beam, table, fmodel, first, z, theta, 0.0, 8)
            assert np.allclose(d, ref, atol=1e-18)

    def test_higher_mode_forcing_rejected(self, beam):
        with pytest.raises(ValueError, match="mode 1 only"):
            F.first_order_coefficients(beam, ForcingSpec({1: 1.0, 2: 0.5}, 1.3))


class TestForcedReducedFlow:
    def test_unforced_limit(self, beam, forcing):
        fmodel, _ = F.first_order_coefficients(beam.replace(epsilon=0.0), forcing)
        z = 0.1 + 0.05j
        assert F.forced_reduced_vector_field(fmodel, z, 0.4) == U.reduced_vector_field(fmodel.base, z)

    def test_polar_matches_cartesian(self, forced_beam, forcing, rng):
        fmodel, _ = F.first_order_coefficients(forced_beam, forcing)
        for _ in range(20):
            r, phi, theta = rng.uniform(1e-3, 0.5), rng.uniform(0, 2 * np.pi), rng.uniform(0, 2 * np.pi)
            z = r * np.exp(1j * phi)
            dz = F.forced_reduced_vector_field(fmodel, z, theta)
            r_dot, phi_dot = F.forced_reduced_polar(fmodel, r, phi, theta)
            assert abs((r_dot + 1j * r * phi_dot) * np.exp(1j * phi) - dz) < 1e-12

    def test_polar_sign_and_scale(self, beam, forcing):
        # r_dot = A r - (eps w1 / (2B)) cos(theta) sin(phi) in the bare convention w1 = 1
        table = U.build_ssm(beam, mass_normalized=False)[0]
        fmodel, _ = F.first_order_coefficients(beam.replace(epsilon=1e-2), forcing, table)
        A, B = fmodel.base.A_real, fmodel.base.B_imag
        r_dot, _ = F.forced_reduced_polar(fmodel, 0.1, 0.8, 0.3)
        assert r_dot == pytest.approx(A * 0.1 - 1e-2 / (2 * B) * math.cos(0.3) * math.sin(0.8), rel=1e-13)

    def test_polar_origin_rejected(self, forced_beam, forcing):
        fmodel, _ = F.first_order_coefficients(forced_beam, forcing)
        with pytest.raises(ValueError, match="Cartesian"):
            F.forced_reduced_polar(fmodel, 0.0, 0.0, 0.0)

    def test_period_average(self, forced_beam, forcing):
        fmodel, _ = F.first_order_coefficients(forced_beam, forcing)
        theta = 2 * np.pi * np.arange(512) / 512
        r_dot = [F.forced_reduced_polar(fmodel, 0.1, 0.7 + 0.0 * t, t)[0] for t in theta]
        assert np.mean(r_dot) == pytest.approx(fmodel.base.A_real * 0.1, abs=1e-15)


class TestStroboscopic:
    def test_unforced_modulus(self, beam, forcing):
        fmodel, _ = F.first_order_coefficients(beam, forcing)
        z0 = 0.2 * np.exp(0.3j)
        z1 = F.stroboscopic_map(fmodel.with_epsilon(0.0), z0)
        T = 2 * np.pi / 1.3
        assert abs(z1) == pytest.approx(np.exp(fmodel.base.A_real * T) * 0.2, rel=1e-10)

    def test_fixed_point_newton(self, forced_beam, forcing):
        fmodel, _ = F.first_order_coefficients(forced_beam, forcing)
        z, iterations = F.reduced_fixed_point(fmodel)
        assert iterations <= 5
        assert abs(F.stroboscopic_map(fmodel, z) - z) < 1e-12
        assert abs(z) < 10 * forced_beam.epsilon

    def test_fixed_point_matches_linear_response(self, beam, forcing):
        """Reduced fixed point vs the slow eigen-coordinate of the linear periodic orbit."""
        mismatch = []
        for eps in (4e-3, 2e-3, 1e-3):
            p = beam.replace(epsilon=eps, omega=1.3)
            fmodel, _ = F.first_order_coefficients(p, forcing)
            z, _ = F.reduced_fixed_point(fmodel, theta0=0.0, tol=1e-16)
            orbit = F.linear_periodic_response(p, forcing, eps)
            state = orbit.state_at_phase(0.0, 1)
            z_lin = model.modal_to_eigen(p, np.array([[state[0], state[1]]]))[0, 0]
            mismatch.append(abs(z - z_lin))
        assert mismatch[0] / mismatch[1] >= 4 and mismatch[1] / mismatch[2] >= 4

    def test_samples(self, forced_beam, forcing):
        fmodel, _ = F.first_order_coefficients(forced_beam, forcing)
        s = F.stroboscopic_samples(fmodel, 0.1, 0.0, 5)
        assert s.shape == (6,) and s[0] == 0.1
        assert abs(s[-1]) < abs(s[0])
