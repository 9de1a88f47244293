"""Exact sine-basis projection of polynomial nonlinearities.

A sine series ``u = sum_{n=1}^N a_n sin(n x)`` is written as
``u = (1/2i) sum_{k=-N}^{N} s_k e^{ikx}`` with the odd extension
``s_{-k} = -s_k = -a_k``.  Powers of ``u`` are then discrete convolutions of
``s`` with itself, which is the triple-product index folding
``sin i sin j sin k -> sin(i +- j +- k)`` written compactly.  The convolution is
done with a zero-padded FFT, long enough that nothing wraps around, so the
result is exact up to rounding.
"""

import numpy as np


def _odd_extension(a, length):
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    s = np.zeros(a.shape[:-1] + (length,))
    s[..., 1 : n + 1] = a
    s[..., length - n :] = -a[..., ::-1]
    return s


def _fft_length(n, power):
    need = 2 * power * n + 1
    return 1 << (need - 1).bit_length()


def cube_coefficients(a, n_out=None):
    """Sine coefficients of ``u**3`` for modes ``1..n_out`` (default: same as input)."""
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    n_out = n if n_out is None else n_out
    length = _fft_length(n, 3)
    s = _odd_extension(a, length)
    t = np.fft.irfft(np.fft.rfft(s) ** 3, length)
    # u^3 = (1/2i)^3 sum t_k e^{ikx} = -(1/4) sum_{k>0} t_k sin(kx)
    out = np.zeros(a.shape[:-1] + (n_out,))
    top = min(n_out, 3 * n)
    out[..., :top] = -0.25 * t[..., 1 : top + 1]
    return out


def cubic_projection(a, kappa):
    """Sine coefficients of ``-kappa u^3``, truncated to the modes of ``a``."""
    if kappa == 0:
        return np.zeros(np.shape(a))
    return -kappa * cube_coefficients(a)


def quartic_integral(a):
    """``int_0^pi u^4 dx`` for ``u = sum a_n sin(n x)``, exactly.

    ``u^2`` is a cosine polynomial ``c_0 + sum c_k cos(kx)``; orthogonality on
    ``(0, pi)`` gives ``pi c_0^2 + (pi/2) sum c_k^2``.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    length = _fft_length(n, 2)
    s = _odd_extension(a, length)
    p = np.fft.irfft(np.fft.rfft(s) ** 2, length)
    c0 = -p[..., 0] / 4
    ck = -p[..., 1 : 2 * n + 1] / 2
    return np.pi * c0**2 + 0.5 * np.pi * np.sum(ck**2, axis=-1)


class CubicProjector:
    """Matrix form of :func:`cubic_projection` for a fixed number of modes.

    Samples ``u`` at the ``4N - 1`` interior points ``j pi / 4N`` and projects
    ``u^3`` back with the discrete sine transform.  Frequencies of ``u^3`` reach
    ``3N`` and alias to ``8N - k > N``, so the result matches the convolution
    exactly.  Cheaper than the FFT route for the small ``N`` used in time stepping.
    """

    def __init__(self, n_modes):
        m = 4 * n_modes
        x = np.pi * np.arange(1, m) / m
        self.n_modes = n_modes
        self.sample = np.sin(np.outer(np.arange(1, n_modes + 1), x))  # (N, M)
        self.project = (2 / m) * self.sample.T  # (M, N)

    def __call__(self, a, kappa):
        u = np.asarray(a) @ self.sample
        return -kappa * ((u * u * u) @ self.project)
