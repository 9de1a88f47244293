"""Cubic-order slow spectral submanifold of the unforced beam with ``f(u) = -kappa u^3``.

Coefficients ``K_(n1,n2)`` of the parametrization ``K(z) = sum K_n z^n1 zbar^n2``
are stored per sine mode in the eigenbasis ``(1, lambda_n)``, ``(1, conj lambda_n)``
and only converted to modal coordinates when evaluated.

``mass_normalized`` selects how the nonlinearity enters the first-order
system.  The beam equation has ``(1 - mu d_xx) u_tt`` on the left, so the
force on mode ``n`` is divided by ``1 + mu n^2`` (``True``, consistent with
the Galerkin model).  ``False`` keeps the bare force ``(0, f(u))``, which
gives the simpler closed forms, e.g.
``R0 = 9 i kappa / (8 Im lambda_1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import model
from .errors import ResonanceError, SingularBasisError
from .projection import cubic_projection

SLOW_MODES = (1, 3)
SMALL_DENOMINATOR = 1e-8


def nonlinear_weight(params, n, mass_normalized=True):
    """Factor multiplying the modal force of sine mode ``n`` in the velocity equation."""
    return 1 / model.mass(params, n) if mass_normalized else np.ones_like(np.asarray(n, float))


@dataclass
class CoefficientTable:
    """Taylor coefficients keyed by ``(n1, n2)`` then sine mode, eigenbasis 2-vectors."""

    params: model.BeamParameters
    entries: dict = field(default_factory=dict)
    mass_normalized: bool = True

    def entry(self, n1, n2):
        return self.entries.get((n1, n2), {})

    def coefficient(self, n1, n2, mode):
        return self.entries.get((n1, n2), {}).get(mode, np.zeros(2, dtype=complex))

    @property
    def modes(self):
        return sorted({m for per_mode in self.entries.values() for m in per_mode})

    @property
    def max_mode(self):
        return max(self.modes)

    def modal_polynomial(self, n_modes=None):
        """Per index, the ``(n_modes, 2)`` modal coefficients ``V_n K_n``."""
        n_modes = self.max_mode if n_modes is None else n_modes
        out = {}
        for idx, per_mode in self.entries.items():
            arr = np.zeros((n_modes, 2), dtype=complex)
            for mode, vec in per_mode.items():
                if mode <= n_modes:
                    V = model.basis_matrices(self.params, [mode])[0]
                    arr[mode - 1] = V @ vec
            out[idx] = arr
        return out

    def as_serializable(self):
        """Nested dict ``{"n1,n2": {"mode": [[re, im], [re, im]]}}``."""
        return {
            f"{n1},{n2}": {
                str(mode): [[float(c.real), float(c.imag)] for c in vec]
                for mode, vec in sorted(per_mode.items())
            }
            for (n1, n2), per_mode in sorted(self.entries.items())
        }


@dataclass(frozen=True)
class ReducedModel:
    """Reduced flow ``zdot = lambda1 z + R0 z^2 zbar`` on the slow SSM."""

    lambda1: complex
    R0: complex

    @property
    def A_real(self):
        return self.lambda1.real

    @property
    def B_imag(self):
        return self.lambda1.imag

    def omega_inst(self, r):
        """Instantaneous frequency ``B + Im(R0) r^2``."""
        return self.B_imag + self.R0.imag * np.asarray(r, dtype=float) ** 2


@dataclass(frozen=True)
class BackbonePoint:
    r: float
    omega_inst: float
    amplitude: float


def _divide(rhs, denominator, label, scale):
    if abs(denominator) < SMALL_DENOMINATOR * scale:
        raise ResonanceError(f"small denominator {label} = {denominator:.3e}", combination=label)
    return rhs / denominator


def build_ssm(params, *, mass_normalized=True):
    """Order-3 coefficients of the slow SSM tangent to the mode-1 eigenspace.

    Returns ``(CoefficientTable, ReducedModel)``.  ``R0`` is chosen to cancel the
    near-resonant ``z^2 zbar`` component along ``K_(1,0)`` (its denominator is
    ``-(lambda1 + conj lambda1) = -2 Re lambda1``, small for light damping).
    """
    l1 = model.eigenvalues(params, 1).lambda_plus
    l3 = model.eigenvalues(params, 3).lambda_plus
    if l1.imag == 0 or l3.imag == 0:
        raise SingularBasisError("overdamped slow mode: modes 1 and 3 must be underdamped")
    c1, c3 = l1.conjugate(), l3.conjugate()
    scale = abs(l1)
    w1, w3 = (float(nonlinear_weight(params, n, mass_normalized)) for n in (1, 3))
    kappa = params.kappa

    # G(K(z)) = (z + zbar)^3 [g1 sin x - g3 sin 3x] (1, -1) at leading order
    g1 = 3 * kappa * w1 / (4 * (c1 - l1))
    g3 = kappa * w3 / (4 * (c3 - l3))
    R0 = 3 * g1

    def solve(mu_j, s, rhs, label):
        return _divide(rhs, mu_j - s, label, scale)

    entries = {
        (1, 0): {1: np.array([1, 0], dtype=complex)},
        (0, 1): {1: np.array([0, 1], dtype=complex)},
        (2, 0): {},
        (1, 1): {},
        (0, 2): {},
    }
    entries[(3, 0)] = {
        1: np.array([
            solve(l1, 3 * l1, -g1, "2 lambda1"),
            solve(c1, 3 * l1, g1, "conj(lambda1) - 3 lambda1"),
        ]),
        3: np.array([
            solve(l3, 3 * l1, g3, "lambda3 - 3 lambda1"),
            solve(c3, 3 * l1, -g3, "3 lambda1 - conj(lambda3)"),
        ]),
    }
    s21 = 2 * l1 + c1
    entries[(2, 1)] = {
        # first component: (-2 Re lambda1) k = -3 g1 + R0 = 0
        1: np.array([0, solve(c1, s21, 3 * g1, "2 lambda1")]),
        3: np.array([
            solve(l3, s21, 3 * g3, "lambda3 - 2 lambda1 - conj(lambda1)"),
            solve(c3, s21, -3 * g3, "conj(lambda1) + 2 lambda1 - conj(lambda3)"),
        ]),
    }
    s12 = l1 + 2 * c1
    entries[(1, 2)] = {
        1: np.array([solve(l1, s12, -3 * g1, "2 conj(lambda1)"), 0]),
        3: np.array([
            solve(l3, s12, 3 * g3, "lambda3 - 2 conj(lambda1) - lambda1"),
            solve(c3, s12, -3 * g3, "lambda1 + 2 conj(lambda1) - conj(lambda3)"),
        ]),
    }
    s03 = 3 * c1
    entries[(0, 3)] = {
        1: np.array([
            solve(l1, s03, -g1, "3 conj(lambda1) - lambda1"),
            solve(c1, s03, g1, "2 conj(lambda1)"),
        ]),
        3: np.array([
            solve(l3, s03, g3, "lambda3 - 3 conj(lambda1)"),
            solve(c3, s03, -g3, "3 conj(lambda1) - conj(lambda3)"),
        ]),
    }
    table = CoefficientTable(params, entries, mass_normalized)
    return table, ReducedModel(l1, complex(R0))


def cubic_eigenbasis_projection(params, z, *, mass_normalized=True):
    """Leading cubic term of ``G(K(z))`` in the eigenbasis, ``{mode: 2-vector}``."""
    l1 = model.eigenvalues(params, 1).lambda_plus
    l3 = model.eigenvalues(params, 3).lambda_plus
    w1, w3 = (float(nonlinear_weight(params, n, mass_normalized)) for n in (1, 3))
    cube = (z + np.conj(z)) ** 3
    factor = params.kappa / 4 * cube
    sign = np.array([1, -1])
    return {
        1: factor * 3 * w1 / (l1.conjugate() - l1) * sign,
        3: -factor * w3 / (l3.conjugate() - l3) * sign,
    }


def _monomials(z, indices):
    zc = np.conj(z)
    return {idx: z ** idx[0] * zc ** idx[1] for idx in indices}


def evaluate_complex(table, z, n_modes=None):
    """Modal state ``V K(z)`` as complex ``(n_modes, 2)`` rows ``(u_n, v_n)``."""
    poly = table.modal_polynomial(n_modes)
    mono = _monomials(z, poly)
    return sum(poly[idx] * mono[idx] for idx in poly)


def evaluate_parametrization(table, z, n_modes=None):
    """Sine coefficients ``(u_n, v_n)`` of the state on the SSM at reduced coordinate ``z``.

    Returns two real arrays of length ``n_modes`` (default: highest stored mode).
    """
    X = evaluate_complex(table, z, n_modes)
    return X[:, 0].real.copy(), X[:, 1].real.copy()


def _derivatives(poly, z):
    """``d/dz`` and ``d/dzbar`` of the modal polynomial at ``z``."""
    zc = np.conj(z)
    dz = 0
    dzc = 0
    for (n1, n2), coef in poly.items():
        if n1:
            dz = dz + n1 * coef * z ** (n1 - 1) * zc**n2
        if n2:
            dzc = dzc + n2 * coef * z**n1 * zc ** (n2 - 1)
    return dz, dzc


def modal_operator_apply(params, X):
    """Apply the linear operator blockwise to modal rows ``(u_n, v_n)``."""
    n = np.arange(1, X.shape[0] + 1)
    k = model.stiffness(params, n)
    c = model.damping(params, n)
    out = np.empty_like(X)
    out[:, 0] = X[:, 1]
    out[:, 1] = -k * X[:, 0] - c * X[:, 1]
    return out


def modal_nonlinearity(params, u, mass_normalized=True):
    """Velocity-equation force ``w_n f_n(u)`` for real displacement coefficients ``u``."""
    n = np.arange(1, len(u) + 1)
    return nonlinear_weight(params, n, mass_normalized) * cubic_projection(u, params.kappa)


def invariance_defect(params, table, reduced, z, n_modes):
    """Modal vector ``A K(z) + G(K(z)) - DK(z) R(z)`` over ``n_modes`` sine modes."""
    poly = table.modal_polynomial(n_modes)
    mono = _monomials(z, poly)
    X = sum(poly[idx] * mono[idx] for idx in poly)
    dz, dzc = _derivatives(poly, z)
    zdot = reduced_vector_field(reduced, z)
    lhs = modal_operator_apply(params, X)
    lhs[:, 1] += modal_nonlinearity(params, X[:, 0].real, table.mass_normalized)
    return lhs - (dz * zdot + dzc * np.conj(zdot))


def invariance_residual(params, table, reduced, z, n_modes=16):
    if n_modes < 3:
        raise ValueError("need at least 3 sine modes (mode 1 cubed excites mode 3)")
    return float(np.linalg.norm(invariance_defect(params, table, reduced, z, n_modes)))


def reduced_vector_field(reduced, z):
    return reduced.lambda1 * z + reduced.R0 * z * z * np.conj(z)


def reduced_flow_closed_form(reduced, r0, theta0, t):
    """Exact polar flow of the reduced model.

    ``r(t) = r0 e^{At}`` and ``theta(t) = theta0 + B t + Im(R0) r0^2 (e^{2At} - 1) / (2A)``;
    with ``Im R0 = 9 kappa / (8 B)`` the last term is ``9 kappa r0^2 (e^{2At}-1) / (16 B A)``.
    """
    A, B = reduced.A_real, reduced.B_imag
    if A >= 0:
        raise ValueError(f"closed form requires Re lambda1 < 0, got {A}")
    t = np.asarray(t, dtype=float)
    decay = np.exp(A * t)
    r = r0 * decay
    theta = theta0 + B * t + reduced.R0.imag * r0**2 * (decay**2 - 1) / (2 * A)
    return r, theta


AMP_NORMS = ("state", "displacement")


def nominal_amplitude(table, r, *, n_theta=256, amp_norm="state", n_modes=None):
    """RMS over the phase of ``|V K(r e^{i theta})|``.

    ``amp_norm="state"`` uses the Euclidean norm of all ``(u_n, v_n)`` sine
    coefficients; ``"displacement"`` keeps only the ``u_n``.
    """
    if amp_norm not in AMP_NORMS:
        raise ValueError(f"amp_norm must be one of {AMP_NORMS}")
    if n_theta < 256:
        raise ValueError("use at least 256 phase samples")
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    z = r * np.exp(1j * theta)
    poly = table.modal_polynomial(n_modes)
    zc = np.conj(z)
    X = sum(np.multiply.outer(z ** i * zc ** j, coef) for (i, j), coef in poly.items())
    X = X.real
    if amp_norm == "displacement":
        X = X[..., 0]
    sq = np.sum(X**2, axis=tuple(range(1, X.ndim)))
    # periodic trapezoid rule on a uniform grid is the plain mean
    return math.sqrt(sq.mean())


def backbone(reduced, table, r_grid, *, n_theta=256, amp_norm="state"):
    points = []
    for r in r_grid:
        if r < 0:
            raise ValueError("backbone radii must be non-negative")
        amp = nominal_amplitude(table, r, n_theta=n_theta, amp_norm=amp_norm)
        points.append(BackbonePoint(float(r), float(reduced.omega_inst(r)), amp))
    return points
