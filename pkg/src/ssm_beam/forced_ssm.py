"""First order in the forcing amplitude: linear periodic response, forced SSM, stroboscopic map.

The forcing is ``eps cos(omega t) sum_n c_n sin(n x)``; the phase ``theta = omega t``
is carried along as an exact circle variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import model
from .errors import IntegrationError, ResonanceError
from .model import ForcingSpec
from .ssm_unforced import (
    ReducedModel,
    build_ssm,
    modal_nonlinearity,
    modal_operator_apply,
    nonlinear_weight,
    reduced_vector_field,
)

__all__ = [
    "ForcingSpec",
    "PeriodicOrbit",
    "ForcedReducedModel",
    "FirstOrderTable",
    "linear_response_coefficients",
    "linear_periodic_response",
    "first_order_coefficients",
    "forced_reduced_vector_field",
    "forced_reduced_polar",
    "stroboscopic_map",
    "stroboscopic_samples",
    "reduced_fixed_point",
    "forced_invariance_defect",
    "epsilon_residual",
]

POLAR_MIN_RADIUS = 1e-6


@dataclass
class PeriodicOrbit:
    """``w(x, t) = sum_{n,m} w_hat[n, m] e^{i m omega t} sin(n x)``."""

    coefficients: dict
    omega: float

    @property
    def period(self):
        return 2 * math.pi / self.omega

    def _series(self, t, n_modes, order):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (n_modes,), dtype=complex)
        for (n, m), w in self.coefficients.items():
            if n <= n_modes:
                out[..., n - 1] += (1j * m * self.omega) ** order * w * np.exp(1j * m * self.omega * t)
        return out

    def displacement(self, t, n_modes):
        return self._series(t, n_modes, 0).real

    def velocity(self, t, n_modes):
        return self._series(t, n_modes, 1).real

    def imaginary_residue(self, t, n_modes):
        return float(np.max(np.abs(self._series(t, n_modes, 0).imag)))

    def state_at_phase(self, theta, n_modes):
        """Flat ``(a_1..a_N, b_1..b_N)`` at the time where ``omega t = theta``."""
        t = theta / self.omega
        return np.concatenate([self.displacement(t, n_modes), self.velocity(t, n_modes)])


def linear_response_coefficients(params, h_hat, omega, eps, *, tol=1e-10):
    """Fourier coefficients of the periodic solution of the forced linear beam.

    ``h_hat`` maps ``(n, m)`` to the coefficient of ``e^{i m omega t} sin(n x)``.
    """
    out = {}
    for (n, m), h in h_hat.items():
        mt = m * omega
        k = params.alpha * n**4 + params.gamma
        den = 1j * mt * (params.delta + params.beta * n**2) + k - mt**2 * (params.mu * n**2 + 1)
        if abs(den) <= tol * k:
            raise ResonanceError(f"linear resonance at (n, m) = ({n}, {m})", combination=(n, m))
        out[(n, m)] = eps * h / den
    return out


def linear_periodic_response(params, forcing, eps, *, tol=1e-10):
    h_hat = {}
    for n, c in forcing.modal_amplitudes.items():
        h_hat[(n, 1)] = c / 2
        h_hat[(n, -1)] = c / 2
    return PeriodicOrbit(linear_response_coefficients(params, h_hat, forcing.omega, eps, tol=tol), forcing.omega)


@dataclass(frozen=True)
class ForcedReducedModel:
    """``zdot = lambda1 z + R0 z^2 zbar + eps rho cos(theta)``, ``theta_dot = omega``.

    ``rho`` is the first eigen-component of the mode-1 forcing; the conjugate
    equation carries ``conj(rho)``.
    """

    base: ReducedModel
    rho: complex
    epsilon: float
    omega: float

    def R1_0(self, theta):
        c = np.cos(theta)
        return np.array([self.rho * c, np.conj(self.rho) * c])

    def with_epsilon(self, eps):
        return ForcedReducedModel(self.base, self.rho, eps, self.omega)


@dataclass
class FirstOrderTable:
    """``K^1_(n1,n2)(theta)``: per index, ``{(mode, harmonic): eigenbasis 2-vector}``."""

    params: model.BeamParameters
    forcing: ForcingSpec
    entries: dict = field(default_factory=dict)

    def coefficient(self, n1, n2, mode, harmonic):
        return self.entries.get((n1, n2), {}).get((mode, harmonic), np.zeros(2, dtype=complex))

    def modal_polynomial(self, theta, n_modes):
        """``V K^1_n(theta)`` and ``d/dtheta`` of it, each ``{index: (n_modes, 2)}``."""
        value, dtheta = {}, {}
        for idx, per in self.entries.items():
            arr = np.zeros((n_modes, 2), dtype=complex)
            darr = np.zeros((n_modes, 2), dtype=complex)
            for (mode, m), vec in per.items():
                if mode > n_modes:
                    continue
                V = model.basis_matrices(self.params, [mode])[0]
                e = np.exp(1j * m * theta)
                arr[mode - 1] += V @ vec * e
                darr[mode - 1] += 1j * m * (V @ vec) * e
            value[idx] = arr
            dtheta[idx] = darr
        return value, dtheta


def _mode_one_only(forcing):
    extra = [n for n, c in forcing.modal_amplitudes.items() if n != 1 and c != 0]
    if extra:
        raise ValueError(f"explicit first-order coefficients support forcing on sine mode 1 only, got modes {extra}")
    return forcing.modal_amplitudes.get(1, 0.0)


def first_order_coefficients(params, forcing, table=None, *, tol=1e-8):
    """Order-``eps`` reduced dynamics and SSM coefficients for mode-1 forcing.

    ``R^1`` is the z-independent term absorbing the mode-1 forcing;
    ``K^1_(1,0) = K^1_(0,1) = 0`` and the quadratic ``K^1`` solve the
    harmonic-balance equations
    ``(mu_j - n1 lambda1 - n2 conj(lambda1) - i m omega) k = [DK^0 . R^1]_(n, m, j)``.
    """
    amplitude = _mode_one_only(forcing)
    if table is None:
        table, reduced = build_ssm(params)
    else:
        reduced = build_ssm(params, mass_normalized=table.mass_normalized)[1]
    l1 = reduced.lambda1
    c1 = l1.conjugate()
    w1 = float(nonlinear_weight(params, 1, table.mass_normalized))
    rho = -w1 * amplitude / (c1 - l1)
    forced = ForcedReducedModel(reduced, complex(rho), params.epsilon, forcing.omega)

    omega = forcing.omega
    first = FirstOrderTable(params, forcing)
    first.entries[(1, 0)] = {}
    first.entries[(0, 1)] = {}
    lam = {n: model.eigenvalues(params, n).lambda_plus for n in table.modes}
    for n1, n2 in ((2, 0), (1, 1), (0, 2)):
        s = n1 * l1 + n2 * c1
        per = {}
        for mode in table.modes:
            # cos(theta) = (e^{i theta} + e^{-i theta}) / 2
            drive = 0.5 * (
                rho * (n1 + 1) * table.coefficient(n1 + 1, n2, mode)
                + np.conj(rho) * (n2 + 1) * table.coefficient(n1, n2 + 1, mode)
            )
            if not np.any(drive):
                continue
            mus = np.array([lam[mode], lam[mode].conjugate()])
            for m in (1, -1):
                den = mus - s - 1j * m * omega
                small = np.abs(den) < tol * abs(l1)
                if np.any(small & (drive != 0)):
                    raise ResonanceError(
                        f"small denominator for K1_({n1},{n2}) on mode {mode}, harmonic {m}",
                        combination=(n1, n2, mode, m),
                    )
                per[(mode, m)] = np.where(drive != 0, drive / np.where(small, 1, den), 0)
        first.entries[(n1, n2)] = per
    return forced, first


def forced_reduced_vector_field(forced, z, theta):
    return reduced_vector_field(forced.base, z) + forced.epsilon * forced.rho * np.cos(theta)


def forced_reduced_polar(forced, r, phi, theta):
    """``(r_dot, phi_dot)`` of the forced reduced flow for ``z = r e^{i phi}``.

    The phase equation has a ``1/r`` term; below ``r = 1e-6`` use the Cartesian form.
    """
    if r < POLAR_MIN_RADIUS:
        raise ValueError("polar form is singular near r = 0; use the Cartesian forced_reduced_vector_field")
    A, B = forced.base.A_real, forced.base.B_imag
    push = forced.epsilon * forced.rho * np.exp(-1j * phi) * np.cos(theta)
    r_dot = A * r + push.real
    phi_dot = B + forced.base.R0.imag * r**2 + push.imag / r
    return r_dot, phi_dot


def _real_rhs(forced, theta0):
    def rhs(t, y):
        z = y[0] + 1j * y[1]
        dz = forced_reduced_vector_field(forced, z, theta0 + forced.omega * t)
        return [dz.real, dz.imag]

    return rhs


def _flow(forced, z0, theta0, duration, rtol, atol):
    sol = solve_ivp(
        _real_rhs(forced, theta0),
        (0.0, duration),
        [z0.real, z0.imag],
        method="DOP853",
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise IntegrationError(f"reduced-flow integration failed: {sol.message}")
    return complex(sol.y[0, -1], sol.y[1, -1])


def stroboscopic_map(forced, z0, theta0=0.0, *, rtol=1e-12, atol=1e-15):
    """Flow of the forced reduced model over one forcing period ``2 pi / omega``."""
    return _flow(forced, complex(z0), theta0, 2 * math.pi / forced.omega, rtol, atol)


def stroboscopic_samples(forced, z0, theta0, n_iter, **kw):
    out = [complex(z0)]
    for _ in range(n_iter):
        out.append(stroboscopic_map(forced, out[-1], theta0, **kw))
    return np.array(out)


def reduced_fixed_point(forced, theta0=0.0, z_init=0.0, *, tol=1e-12, max_iter=25, fd_step=1e-7, **kw):
    """Damped Newton on ``P(z) - z`` with a finite-difference Jacobian.

    Returns ``(z_star, iterations)``.
    """
    def residual(v):
        z = complex(v[0], v[1])
        pz = stroboscopic_map(forced, z, theta0, **kw) - z
        return np.array([pz.real, pz.imag])

    v = np.array([complex(z_init).real, complex(z_init).imag])
    F = residual(v)
    for it in range(1, max_iter + 1):
        J = np.empty((2, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = fd_step
            J[:, k] = (residual(v + e) - F) / fd_step
        step = np.linalg.solve(J, -F)
        lam = 1.0
        while True:
            trial = v + lam * step
            F_trial = residual(trial)
            if np.linalg.norm(F_trial) < np.linalg.norm(F) or lam < 1e-3:
                break
            lam /= 2
        v, F = trial, F_trial
        if np.linalg.norm(lam * step) < tol or np.linalg.norm(F) < tol:
            return complex(v[0], v[1]), it
    raise IntegrationError(f"reduced fixed point: Newton stalled, residual {np.linalg.norm(F):.3e}")


def forced_invariance_defect(params, table, forced, first, z, theta, eps, n_modes=16):
    """Modal defect of ``A K + G(K) + eps h - DK . R - omega d_theta K`` with ``K = K^0 + eps K^1``."""
    poly0 = table.modal_polynomial(n_modes)
    poly1, dpoly1 = first.modal_polynomial(theta, n_modes)
    zc = np.conj(z)
    X = np.zeros((n_modes, 2), dtype=complex)
    dz = np.zeros_like(X)
    dzc = np.zeros_like(X)
    dth = np.zeros_like(X)
    for scale, poly in ((1.0, poly0), (eps, poly1)):
        for (n1, n2), coef in poly.items():
            X += scale * coef * z**n1 * zc**n2
            if n1:
                dz += scale * n1 * coef * z ** (n1 - 1) * zc**n2
            if n2:
                dzc += scale * n2 * coef * z**n1 * zc ** (n2 - 1)
    for (n1, n2), coef in dpoly1.items():
        dth += eps * coef * z**n1 * zc**n2

    zdot = reduced_vector_field(forced.base, z) + eps * forced.rho * np.cos(theta)
    lhs = modal_operator_apply(params, X)
    lhs[:, 1] += modal_nonlinearity(params, X[:, 0].real, table.mass_normalized)
    modes = np.arange(1, n_modes + 1)
    h = first.forcing.amplitude_vector(n_modes)
    lhs[:, 1] += eps * nonlinear_weight(params, modes, table.mass_normalized) * h * np.cos(theta)
    rhs = dz * zdot + dzc * np.conj(zdot) + forced.omega * dth
    return lhs - rhs


def epsilon_residual(params, table, forced, first, z, eps, *, n_theta=16, n_modes=16):
    """Max over the phase of ``|defect(eps) - defect(0)|``: the eps-dependent part of the defect.

    Subtracting the unforced defect removes the ``O(|z|^5)`` truncation error of
    ``K^0``, which does not depend on ``eps``.
    """
    worst = 0.0
    for theta in 2 * np.pi * np.arange(n_theta) / n_theta:
        d_eps = forced_invariance_defect(params, table, forced, first, z, theta, eps, n_modes)
        d_0 = forced_invariance_defect(params, table, forced, first, z, theta, 0.0, n_modes)
        worst = max(worst, float(np.linalg.norm(d_eps - d_0)))
    return worst
