"""Beam parameters, linear spectrum and the checks built on it.

The linearization of the damped Rayleigh beam on a hinged interval decouples
into 2x2 blocks, one per sine mode ``sin(n x)``::

    d/dt (a_n, b_n) = [[0, 1], [-k_n, -c_n]] (a_n, b_n)

with ``k_n = (alpha n^4 + gamma) / (1 + mu n^2)`` and
``c_n = (beta n^2 + delta) / (1 + mu n^2)``.  Everything in this module is a
closed-form consequence of that block structure.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .errors import ConfigError, SingularBasisError

DEFAULT_TOL = 1e-9

# Upper bound on adaptive mode scans; a scan hitting it is reported, not truncated.
_MAX_SCAN = 2_000_000


@dataclass(frozen=True)
class BeamParameters:
    """Constants of the beam equation and its forcing.

    ``mu = 0`` (Euler-Bernoulli) is representable so that callers get a clear
    error from the operations that need rotary inertia, but every SSM
    construction assumes ``mu > 0``.
    """

    alpha: float
    beta: float
    gamma: float
    delta: float
    mu: float
    kappa: float = 0.0
    epsilon: float = 0.0
    omega: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(f"parameter {f.name} must be a finite real, got {value!r}")
            object.__setattr__(self, f.name, float(value))
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        for name in ("beta", "gamma", "delta", "mu", "kappa", "epsilon"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.omega <= 0:
            raise ConfigError(f"omega must be positive, got {self.omega}")

    @classmethod
    def from_mapping(cls, mapping):
        known = {f.name for f in fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ConfigError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        missing = {"alpha", "beta", "gamma", "delta", "mu"} - set(mapping)
        if missing:
            raise ConfigError(f"missing parameter(s): {', '.join(sorted(missing))}")
        return cls(**{k: mapping[k] for k in mapping})

    @classmethod
    def with_quotient_damping(cls, delta, mu, **kwargs):
        """Preset tying internal damping to the others, ``beta = 4 delta mu / (1 - 3 mu)``.

        With this choice the relative spectral quotient of the first mode is 4.
        """
        if not 0 < mu < 1 / 3:
            raise ConfigError("beta = 4 delta mu / (1 - 3 mu) needs 0 < mu < 1/3")
        return cls(beta=4 * delta * mu / (1 - 3 * mu), delta=delta, mu=mu, **kwargs)

    def replace(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class EigenPair:
    lambda_plus: complex
    lambda_minus: complex
    n: int

    @property
    def underdamped(self):
        return self.lambda_plus.imag != 0.0


def _check_mode(n):
    if int(n) != n or n < 1:
        raise ValueError(f"sine mode index must be a positive integer, got {n!r}")
    return int(n)


def stiffness(params, n):
    """Mass-normalized stiffness ``k_n``; works on scalars and arrays."""
    n2 = np.asarray(n, dtype=float) ** 2
    return (params.alpha * n2**2 + params.gamma) / (1 + params.mu * n2)


def damping(params, n):
    """Mass-normalized damping ``c_n``."""
    n2 = np.asarray(n, dtype=float) ** 2
    return (params.beta * n2 + params.delta) / (1 + params.mu * n2)


def mass(params, n):
    """Diagonal of ``1 - mu d^2/dx^2`` on ``sin(n x)``."""
    return 1 + params.mu * np.asarray(n, dtype=float) ** 2


def eigenvalues_array(params, n):
    """Vectorized spectrum: returns ``(lambda_plus, lambda_minus)`` for mode numbers ``n``.

    For underdamped modes ``lambda_plus`` carries the positive imaginary part.
    Overdamped modes return two distinct reals (``lambda_plus`` the larger).
    """
    half = damping(params, n) / 2
    radicand = half**2 - stiffness(params, n)
    root = np.where(radicand < 0, 1j * np.sqrt(np.abs(radicand)), np.sqrt(np.abs(radicand)) + 0j)
    return -half + root, -half - root


def eigenvalues(params, n):
    n = _check_mode(n)
    lp, lm = eigenvalues_array(params, n)
    return EigenPair(complex(lp), complex(lm), n)


def slow_eigenvalue(params):
    """``lambda_1`` with positive imaginary part."""
    return eigenvalues(params, 1).lambda_plus


def real_part_limit(params):
    if params.mu == 0:
        raise ValueError("limit undefined (Euler-Bernoulli regime excluded): mu = 0")
    return -params.beta / (2 * params.mu)


# ---------------------------------------------------------------------------
# assumptions


@dataclass
class AssumptionReport:
    ineq1: bool
    ineq2: bool
    ineq3: bool
    ineq4: bool
    underdamped_up_to: int
    monotone_real_parts: bool
    inner_nonresonant: bool
    forcing_nonresonant: bool
    spectral_quotient: int | None
    n_max: int

    @property
    def parameter_inequalities(self):
        return self.ineq1 and self.ineq2 and self.ineq3 and self.ineq4

    @property
    def all_hold(self):
        return (
            self.parameter_inequalities
            and self.underdamped_up_to == self.n_max
            and self.monotone_real_parts
            and self.inner_nonresonant
            and self.forcing_nonresonant
            and self.spectral_quotient is not None
        )

    def as_record(self):
        """Flat key/value record (booleans, plus the two integer diagnostics)."""
        return {
            "ineq1": self.ineq1,
            "ineq2": self.ineq2,
            "ineq3": self.ineq3,
            "ineq4": self.ineq4,
            "underdamped_up_to": self.underdamped_up_to,
            "monotone_real_parts": self.monotone_real_parts,
            "inner_nonresonant": self.inner_nonresonant,
            "forcing_nonresonant": self.forcing_nonresonant,
            "spectral_quotient": self.spectral_quotient,
            "all_hold": self.all_hold,
        }


def check_assumptions(params, n_max, *, tol=DEFAULT_TOL, m_max=100):
    n_max = _check_mode(n_max)
    p = params
    ineq1 = p.beta**2 < 4 * p.alpha
    ineq2 = 2 * p.beta * p.delta < 4 * p.gamma * p.mu
    ineq3 = p.delta**2 < 4 * p.gamma
    ineq4 = p.delta * p.mu < p.beta

    ns = np.arange(1, n_max + 1)
    lp, _ = eigenvalues_array(p, ns)
    under = lp.imag != 0
    underdamped_up_to = n_max if under.all() else int(np.argmin(under))
    re = lp.real
    monotone = bool(np.all(np.diff(re) < 0)) if n_max > 1 else p.delta * p.mu < p.beta

    try:
        q = spectral_quotient(p, 1)
    except ValueError:
        q = None
    inner = False
    if q is not None and under[0]:
        inner = check_inner_nonresonance(p, 1, q, tol)
    forcing = check_forcing_nonresonance(p, n_max, m_max, tol) if p.epsilon > 0 else True
    return AssumptionReport(
        ineq1=bool(ineq1),
        ineq2=bool(ineq2),
        ineq3=bool(ineq3),
        ineq4=bool(ineq4),
        underdamped_up_to=underdamped_up_to,
        monotone_real_parts=monotone,
        inner_nonresonant=bool(inner),
        forcing_nonresonant=bool(forcing),
        spectral_quotient=q,
        n_max=n_max,
    )


def _outer_real_infimum(params, n_slow, scan=1000):
    ns = np.arange(n_slow + 1, n_slow + 1 + scan)
    lp, lm = eigenvalues_array(params, ns)
    finite_min = min(lp.real.min(), lm.real.min())
    return min(finite_min, real_part_limit(params))


def _spectral_ratio(params, n_slow):
    ns = np.arange(1, n_slow + 1)
    lp, _ = eigenvalues_array(params, ns)
    sup_inner = lp.real.max()
    if sup_inner == 0:
        raise ValueError("undamped slow mode: Re lambda_1 = 0")
    ratio = _outer_real_infimum(params, n_slow) / sup_inner
    if ratio <= 0:
        raise ValueError(f"spectral ratio must be positive, got {ratio}")
    return ratio


def spectral_quotient(params, n_slow):
    """Integer part of ``inf_{j>N} Re lambda_j / Re lambda_1``."""
    n_slow = _check_mode(n_slow)
    ratio = _spectral_ratio(params, n_slow)
    # Ratios that are integers in exact arithmetic (the beta preset) land a few ulps low.
    q = math.floor(ratio * (1 + 1e-12))
    if q < 1:
        raise ValueError(f"modes 1..{n_slow} are not the slowest (ratio {ratio:.6g} < 1)")
    return q


def check_ratio_condition(params, n_slow, order):
    """Whether ``order >= inf_{j>N} Re lambda_j / sup_{j<=N} Re lambda_j - 1``."""
    ratio = _spectral_ratio(params, _check_mode(n_slow))
    return order >= ratio - 1 - 1e-12 * ratio


def _inner_combinations(params, n_slow, q):
    ns = np.arange(1, n_slow + 1)
    lp, lm = eigenvalues_array(params, ns)
    inner = np.concatenate([lp, lm])
    combos = []
    for order in range(2, q + 1):
        for idx in itertools.combinations_with_replacement(range(inner.size), order):
            combos.append(inner[list(idx)].sum())
    return np.unique(np.array(combos, dtype=complex))


def _scan_horizon(params, values, tol, start):
    """First mode index beyond which no outer eigenvalue can come within ``tol`` of ``values``."""
    limit = real_part_limit(params)
    horizon = start
    for c in values:
        gap = abs(c.real - limit) - tol
        j = start
        # Re lambda_j approaches the limit monotonically; |lambda_j| grows like j.
        while True:
            lp, lm = eigenvalues_array(params, j)
            far_real = gap > 0 and abs(lp.real - limit) < gap and abs(lm.real - limit) < gap
            far_abs = min(abs(lp), abs(lm)) > abs(c) + tol and j > 2 * start + 2
            if far_real or far_abs:
                break
            j = j * 2 if j > 16 else j + 1
            if j > _MAX_SCAN:
                raise RuntimeError("non-resonance scan horizon exceeded")
        horizon = max(horizon, j)
    return horizon


def check_inner_nonresonance(params, n_slow, q, tol=DEFAULT_TOL):
    """No ``s . lambda`` with ``2 <= |s| <= q`` hits an outer eigenvalue ``lambda_j``, ``j > N``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    n_slow = _check_mode(n_slow)
    if q < 2:
        return True
    combos = _inner_combinations(params, n_slow, q)
    j_max = _scan_horizon(params, combos, tol, n_slow + 1)
    ns = np.arange(n_slow + 1, j_max + 1)
    lp, lm = eigenvalues_array(params, ns)
    outer = np.concatenate([lp, lm])
    for chunk in np.array_split(outer, max(1, outer.size // 20000)):
        if np.any(np.abs(combos[:, None] - chunk[None, :]) <= tol):
            return False
    return True


def _floquet_scan(params, n_max, m_max, tol):
    ns = np.arange(1, n_max + 1)
    lp, lm = eigenvalues_array(params, ns)
    harmonics = 1j * params.omega * np.arange(-m_max, m_max + 1)
    lam = np.concatenate([lp, lm])
    return bool(np.all(np.abs(harmonics[:, None] - lam[None, :]) > tol))


def check_forcing_nonresonance(params, n_max, m_max=100, tol=DEFAULT_TOL):
    """Forcing frequency versus the spectrum.

    (a) ``Im lambda_n / omega`` stays ``tol`` away from the integers;
    (b) no ``i l omega`` (``|l| <= m_max``) lies within ``tol`` of an eigenvalue.
    Condition (b) is automatic once every eigenvalue has negative real part.
    """
    n_max = _check_mode(n_max)
    ns = np.arange(1, n_max + 1)
    lp, _ = eigenvalues_array(params, ns)
    ratio = lp.imag / params.omega
    cond_a = bool(np.all(np.abs(ratio - np.round(ratio)) > tol))
    if params.beta > 0 or params.delta > 0:
        cond_b = True
    else:
        cond_b = _floquet_scan(params, n_max, m_max, tol)
    return cond_a and cond_b


# ---------------------------------------------------------------------------
# basis change


def _mode_numbers(count, modes):
    return np.arange(1, count + 1) if modes is None else np.asarray(modes)


def basis_matrices(params, modes):
    """Per-mode ``V_n = [[1, 1], [lambda_n, conj(lambda_n)]]``, shape ``(len(modes), 2, 2)``."""
    lp, _ = eigenvalues_array(params, np.asarray(modes))
    lp = np.atleast_1d(lp)
    if np.any(lp.imag == 0):
        bad = np.asarray(modes).ravel()[lp.imag == 0]
        raise SingularBasisError(
            f"defective/overdamped mode: basis change singular for n = {bad.tolist()}"
        )
    V = np.empty(lp.shape + (2, 2), dtype=complex)
    V[..., 0, 0] = 1
    V[..., 0, 1] = 1
    V[..., 1, 0] = lp
    V[..., 1, 1] = lp.conj()
    return V


def inverse_basis_matrices(params, modes):
    """Explicit ``V_n^{-1} = [[conj(l), -1], [-l, 1]] / (conj(l) - l)``."""
    V = basis_matrices(params, modes)
    lam = V[..., 1, 0]
    det = lam.conj() - lam
    Vi = np.empty_like(V)
    Vi[..., 0, 0] = lam.conj() / det
    Vi[..., 0, 1] = -1 / det
    Vi[..., 1, 0] = -lam / det
    Vi[..., 1, 1] = 1 / det
    return Vi


def eigen_to_modal(params, eigen, modes=None):
    """Map eigen coordinates ``(p_n, q_n)`` to modal ``(u_n, v_n)``; rows are modes."""
    eigen = np.asarray(eigen, dtype=complex)
    V = basis_matrices(params, _mode_numbers(eigen.shape[0], modes))
    return np.einsum("nij,nj->ni", V, eigen)


def modal_to_eigen(params, modal, modes=None):
    modal = np.asarray(modal, dtype=complex)
    Vi = inverse_basis_matrices(params, _mode_numbers(modal.shape[0], modes))
    return np.einsum("nij,nj->ni", Vi, modal)


@dataclass(frozen=True)
class ForcingSpec:
    """Forcing ``h(x, t) = cos(omega t) sum_n amplitude_n sin(n x)``."""

    modal_amplitudes: dict
    omega: float

    def __post_init__(self):
        amps = {}
        for n, value in dict(self.modal_amplitudes).items():
            n = _check_mode(n)
            if not math.isfinite(value):
                raise ConfigError(f"forcing amplitude on mode {n} must be finite")
            amps[n] = float(value)
        object.__setattr__(self, "modal_amplitudes", amps)
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise ConfigError(f"forcing omega must be positive, got {self.omega}")

    @classmethod
    def first_mode(cls, omega, amplitude=1.0):
        return cls({1: amplitude}, omega)

    @property
    def period(self):
        return 2 * math.pi / self.omega

    def amplitude_vector(self, n_modes):
        out = np.zeros(n_modes)
        for n, value in self.modal_amplitudes.items():
            if n <= n_modes:
                out[n - 1] = value
        return out
