"""Sine-Galerkin truncation of the beam used as the reference model.

The state is stored flat as ``y = (a_1..a_N, b_1..b_N)`` with
``u = sum a_n sin(n x)`` and ``u_t = sum b_n sin(n x)``.  Leading axes are
batch axes, so a whole Jacobian stencil can be integrated in one sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import model
from .errors import ConfigError, IntegrationError
from .forced_ssm import linear_periodic_response
from .projection import CubicProjector, quartic_integral

INTEGRATORS = ("rk4", "adaptive")

# Energy is measured with the inner product (2/pi) int_0^pi, under which sin(n x) has unit norm.
NORMALIZATION = 2 / math.pi


@dataclass(frozen=True)
class GalerkinConfig:
    n_modes: int = 16
    dt: float = 1e-3
    integrator: str = "rk4"
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes < 3:
            raise ConfigError(f"n_modes must be an integer >= 3, got {self.n_modes}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ConfigError("abs_tol and rel_tol must be positive")


@dataclass
class GalerkinState:
    a: np.ndarray
    b: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.a.shape != self.b.shape or self.a.ndim != 1:
            raise ValueError("a and b must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.b))):
            raise ValueError("state entries must be finite")

    @property
    def n_modes(self):
        return self.a.size

    def vector(self):
        return np.concatenate([self.a, self.b])

    @classmethod
    def from_vector(cls, y, t=0.0):
        y = np.asarray(y, dtype=float)
        n = y.size // 2
        return cls(y[:n].copy(), y[n:].copy(), t)

    @classmethod
    def zeros(cls, n_modes, t=0.0):
        return cls(np.zeros(n_modes), np.zeros(n_modes), t)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (..., n_samples, 2N)

    @property
    def n_modes(self):
        return self.states.shape[-1] // 2

    @property
    def a(self):
        return self.states[..., : self.n_modes]

    @property
    def b(self):
        return self.states[..., self.n_modes :]

    def state(self, i):
        return GalerkinState.from_vector(self.states[i], self.times[i])


@dataclass(frozen=True)
class EnergyReport:
    total: float
    kinetic: float
    bending: float
    foundation: float
    rotary: float
    potential_f: float

    def as_row(self):
        return [self.total, self.kinetic, self.bending, self.foundation, self.rotary, self.potential_f]


def _vector_field(params, forcing, n_modes):
    n = np.arange(1, n_modes + 1, dtype=float)
    k = params.alpha * n**4 + params.gamma
    c = params.beta * n**2 + params.delta
    m = 1 + params.mu * n**2
    amp = None
    if forcing is not None and params.epsilon != 0:
        amp = params.epsilon * forcing.amplitude_vector(n_modes)
        if not np.any(amp):
            amp = None
    omega = forcing.omega if forcing is not None else params.omega
    kappa = params.kappa
    cube = CubicProjector(n_modes)

    def f(t, y):
        a = y[..., :n_modes]
        b = y[..., n_modes:]
        acc = -k * a - c * b
        if kappa:
            acc = acc + cube(a, kappa)
        if amp is not None:
            acc = acc + math.cos(omega * t) * amp
        return np.concatenate([b, acc / m], axis=-1)

    return f


def rhs(params, forcing, state):
    """Time derivative of ``state`` as a ``GalerkinState`` (same ``t``)."""
    dy = _vector_field(params, forcing, state.n_modes)(state.t, state.vector())
    return GalerkinState.from_vector(dy, state.t)


def _rk4_segment(f, y, t0, t1, dt):
    steps = max(1, math.ceil((t1 - t0) / dt - 1e-9))
    h = (t1 - t0) / steps
    # overflow is caught by the finiteness check, not reported as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(steps):
            t = t0 + i * h
            k1 = f(t, y)
            k2 = f(t + h / 2, y + h / 2 * k1)
            k3 = f(t + h / 2, y + h / 2 * k2)
            k4 = f(t + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(y)):
                raise IntegrationError(f"blow-up detected at t = {t + h:.6g}")
    return y


def _sample_grid(t0, t_final, sample_times, sample_dt):
    if sample_times is None:
        if sample_dt is None:
            return np.array([t0, t_final], dtype=float)
        count = max(1, round((t_final - t0) / sample_dt))
        return t0 + (t_final - t0) * np.arange(count + 1) / count
    times = np.asarray(sample_times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) < 0) or times[0] < t0:
        raise ValueError("sample_times must be a non-empty increasing array starting at or after t0")
    return times


def integrate(params, forcing, config, state0, t_final, *, sample_times=None, sample_dt=None):
    """Integrate from ``state0`` (a ``GalerkinState`` or a batch of flat vectors) to ``t_final``.

    Output is sampled at ``sample_times`` (or on a uniform ``sample_dt`` grid,
    or just the two endpoints).
    """
    if isinstance(state0, GalerkinState):
        y0, t0 = state0.vector(), state0.t
    else:
        y0, t0 = np.asarray(state0, dtype=float), 0.0
    if y0.shape[-1] != 2 * config.n_modes:
        raise ValueError(f"state has {y0.shape[-1] // 2} modes, config expects {config.n_modes}")
    times = _sample_grid(t0, t_final, sample_times, sample_dt)
    f = _vector_field(params, forcing, config.n_modes)

    if config.integrator == "adaptive":
        if y0.ndim != 1:
            raise ValueError("adaptive integration takes a single state")
        sol = solve_ivp(
            f, (t0, times[-1]), y0, method="DOP853", t_eval=times,
            rtol=config.rel_tol, atol=config.abs_tol,
        )
        if not sol.success:
            raise IntegrationError(f"adaptive integration failed: {sol.message}")
        if not np.all(np.isfinite(sol.y)):
            raise IntegrationError("blow-up detected during adaptive integration")
        return Trajectory(times, sol.y.T.copy())

    out = np.empty(y0.shape[:-1] + (times.size, y0.shape[-1]))
    y, t = y0, t0
    for i, ts in enumerate(times):
        if ts > t:
            y = _rk4_segment(f, y, t, ts, config.dt)
            t = ts
        out[..., i, :] = y
    return Trajectory(times, out)


def linear_flow_exact(params, state0, t):
    """Closed-form linear flow ``(a, b)(t) = c+ e^{l+ t} (1, l+) + c- e^{l- t} (1, l-)`` per mode."""
    n = np.arange(1, state0.n_modes + 1)
    lp, lm = model.eigenvalues_array(params, n)
    gap = lp - lm
    if np.any(np.abs(gap) <= 1e-12 * np.maximum(np.abs(lp), 1)):
        raise ArithmeticError("defective mode (repeated eigenvalue): closed form does not apply")
    a0, b0 = state0.a, state0.b
    cp = (b0 - lm * a0) / gap
    cm = (lp * a0 - b0) / gap
    ep = np.exp(lp * t)
    em = np.exp(lm * t)
    a = (cp * ep + cm * em).real
    b = (cp * lp * ep + cm * lm * em).real
    return GalerkinState(a, b, state0.t + t)


def energy(params, state):
    """Energy ``(1/2)(2/pi) int (u_t^2 + mu u_tx^2 + alpha u_xx^2 + gamma u^2) + (kappa/4)(2/pi) int u^4``."""
    n = np.arange(1, state.n_modes + 1, dtype=float)
    a2, b2 = state.a**2, state.b**2
    kinetic = 0.5 * float(np.sum(b2))
    rotary = 0.5 * params.mu * float(np.sum(n**2 * b2))
    bending = 0.5 * params.alpha * float(np.sum(n**4 * a2))
    foundation = 0.5 * params.gamma * float(np.sum(a2))
    quartic = 0.25 * params.kappa * NORMALIZATION * float(quartic_integral(state.a)) if params.kappa else 0.0
    total = kinetic + rotary + bending + foundation + quartic
    return EnergyReport(total, kinetic, bending, foundation, rotary, quartic)


def state_norm_squared(params, state):
    """``sum k_n a_n^2 + b_n^2`` with ``k_n = (alpha n^4 + gamma)/(1 + mu n^2)``."""
    n = np.arange(1, state.n_modes + 1)
    return float(np.sum(model.stiffness(params, n) * state.a**2 + state.b**2))


def energy_trace(params, trajectory):
    return [energy(params, trajectory.state(i)) for i in range(trajectory.times.size)]


# Poincare map


def _forcing_omega(params, forcing):
    return forcing.omega if forcing is not None else params.omega


def poincare_map(params, forcing, config, y, theta0=0.0):
    """Advance flat state(s) ``y`` over one forcing period starting at phase ``theta0``."""
    omega = _forcing_omega(params, forcing)
    t0 = theta0 / omega
    t1 = t0 + 2 * math.pi / omega
    y = np.asarray(y, dtype=float)
    f = _vector_field(params, forcing, config.n_modes)
    if config.integrator == "rk4":
        return _rk4_segment(f, y, t0, t1, config.dt)
    flat = y.reshape(-1, y.shape[-1])
    out = np.empty_like(flat)
    for i, yi in enumerate(flat):
        sol = solve_ivp(f, (t0, t1), yi, method="DOP853", rtol=config.rel_tol, atol=config.abs_tol)
        if not sol.success:
            raise IntegrationError(f"adaptive integration failed: {sol.message}")
        out[i] = sol.y[:, -1]
    return out.reshape(y.shape)


@dataclass
class FixedPointResult:
    state: GalerkinState
    iterations: int
    residual: float
    theta0: float


def linear_response_state(params, forcing, n_modes, theta0=0.0):
    """Linear periodic response at phase ``theta0`` as a flat state vector."""
    if forcing is None or params.epsilon == 0:
        return np.zeros(2 * n_modes)
    orbit = linear_periodic_response(params, forcing, params.epsilon)
    return orbit.state_at_phase(theta0, n_modes)


def poincare_fixed_point(params, forcing, config, theta0=0.0, *, tol=1e-10, max_iter=25, fd_step=1e-7, seed=None):
    """Newton on ``P(U) - U`` with a finite-difference Jacobian, seeded at the linear response.

    All ``2N + 1`` stencil states are pushed through the period map together.
    """
    n2 = 2 * config.n_modes
    y = linear_response_state(params, forcing, config.n_modes, theta0) if seed is None else np.array(seed, dtype=float)
    eye = np.eye(n2)
    residual = poincare_map(params, forcing, config, y, theta0) - y
    norm = float(np.linalg.norm(residual))
    iterations = 0
    while norm >= tol:
        if iterations == max_iter:
            raise IntegrationError(f"Newton stagnation after {max_iter} iterations, last residual {norm:.3e}")
        stencil = np.vstack([y, y + fd_step * eye])
        images = poincare_map(params, forcing, config, stencil, theta0)
        jac = (images[1:] - images[0]).T / fd_step - eye
        y = y - np.linalg.solve(jac, images[0] - y)
        iterations += 1
        residual = poincare_map(params, forcing, config, y, theta0) - y
        norm = float(np.linalg.norm(residual))
    t0 = theta0 / _forcing_omega(params, forcing)
    return FixedPointResult(GalerkinState.from_vector(y, t0), iterations, norm, theta0)


# Comparison with the reduced model


@dataclass
class ValidationReport:
    times: np.ndarray
    z_hat: np.ndarray
    distance: np.ndarray
    radius_error: np.ndarray
    phase_rate: np.ndarray
    omega_predicted: np.ndarray
    decay_slope: float
    decay_rate: float
    phase_window: tuple
    phase_error: float

    @property
    def decay_error(self):
        return abs(self.decay_slope - self.decay_rate) / abs(self.decay_rate)

    def summary_lines(self):
        lo, hi = self.phase_window
        return [
            f"decay_slope = {self.decay_slope:.10g}",
            f"re_lambda1 = {self.decay_rate:.10g}",
            f"decay_relative_error = {self.decay_error:.3e}",
            f"phase_rate_max_relative_error[r in {lo:g}..{hi:g}] = {self.phase_error:.3e}",
            f"max_manifold_distance = {float(np.max(self.distance)):.3e}",
            f"max_radius_relative_error = {float(np.max(self.radius_error)):.3e}",
        ]


def slow_coordinate(params, states):
    """First eigen-component of mode 1: ``z = (conj(l) a_1 - b_1) / (conj(l) - l)``."""
    lam = model.eigenvalues(params, 1).lambda_plus
    a1 = states[..., 0]
    b1 = states[..., states.shape[-1] // 2]
    return (lam.conjugate() * a1 - b1) / (lam.conjugate() - lam)


def validate_ssm(params, table, reduced, config, z0, t_final=20.0, *, sample_dt=0.01,
                 fit_window=20.0, phase_window=(0.01, 0.05)):
    """Run the Galerkin model from ``K(z0)`` and compare with the reduced flow.

    The slow coordinate is read off by projecting mode 1 onto its first
    eigendirection, which inverts ``K`` up to ``O(|z|^3)``.
    """
    from .ssm_unforced import evaluate_complex

    n = config.n_modes
    u, v = (np.asarray(x) for x in _real_pair(evaluate_complex(table, z0, n)))
    traj = integrate(params, None, config, GalerkinState(u, v), t_final, sample_dt=sample_dt)
    times = traj.times
    z_hat = slow_coordinate(params, traj.states)

    on_manifold = np.array([np.concatenate(_real_pair(evaluate_complex(table, z, n))) for z in z_hat])
    distance = np.linalg.norm(traj.states - on_manifold, axis=-1)

    A = reduced.A_real
    r = np.abs(z_hat)
    radius_error = np.abs(r - abs(z0) * np.exp(A * times)) / (abs(z0) * np.exp(A * times))

    fit = times <= fit_window
    decay_slope = float(np.polyfit(times[fit], np.log(r[fit]), 1)[0])

    phase_rate = np.gradient(np.unwrap(np.angle(z_hat)), times)
    omega_pred = reduced.omega_inst(r)
    lo, hi = phase_window
    window = (r >= lo) & (r <= hi)
    window[[0, -1]] = False  # one-sided differences at the ends
    if not np.any(window):
        raise ValueError("trajectory never enters the phase-rate amplitude window")
    phase_error = float(np.max(np.abs(phase_rate[window] - omega_pred[window]) / np.abs(omega_pred[window])))
    return ValidationReport(times, z_hat, distance, radius_error, phase_rate, omega_pred,
                            decay_slope, A, (lo, hi), phase_error)


def _real_pair(X):
    return X[:, 0].real.copy(), X[:, 1].real.copy()
