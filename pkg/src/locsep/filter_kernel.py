"""Smooth low-pass filter and the localized trigonometric kernel it generates.

The kernel of degree ``n`` is

    Phi_n(x) = hbar_n * sum_{|l| < n} H(|l| / n) exp(i l x),
    hbar_n   = 1 / sum_{|l| < n} H(|l| / n),

so that ``Phi_n(0) = max |Phi_n| = 1``. Everything here is evaluated by direct
summation; FFT-based grid evaluation lives in :mod:`locsep.spectrum`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import erf

# Base steepness of the transition profile (transition_sharpness = 1).
_BASE_STEEPNESS = 2.25
# Exponent of the endpoint singularity; any positive value keeps H in C-infinity.
_ENDPOINT_POWER = 0.125
# Max number of (x, l) pairs materialized at once by direct summation.
_CHUNK = 1 << 22


@dataclass(frozen=True)
class LowPassFilter:
    """Even C-infinity filter: 1 on [0, 1/2], 0 on [1, inf), smooth in between.

    On ``1/2 < |t| < 1`` put ``u = 2|t| - 1`` and

        H(t) = 1 - s(u),  s(u) = (1 + erf(k * (2u - 1) / (u (1 - u))**(1/8))) / 2,

    with ``k = 2.25 * transition_sharpness``. ``s`` rises from 0 to 1 with all
    derivatives vanishing at both ends, and ``s(u) + s(1 - u) = 1``.
    """

    transition_sharpness: float = 1.0

    def __post_init__(self):
        if not self.transition_sharpness > 0:
            raise ValueError("transition_sharpness must be positive")

    def __call__(self, t):
        return evaluate_filter(self, t)


def _transition(u: np.ndarray, steepness: float) -> np.ndarray:
    """Smooth step on (0, 1)."""
    g = (2.0 * u - 1.0) / (u * (1.0 - u)) ** _ENDPOINT_POWER
    return 0.5 * (1.0 + erf(steepness * g))


def evaluate_filter(filt: LowPassFilter, t):
    """Evaluate ``H(t)``; scalar in, float out, array in, array out."""
    scalar = np.ndim(t) == 0
    a = np.abs(np.asarray(t, dtype=float))
    out = np.zeros_like(a)
    out[a <= 0.5] = 1.0
    mid = (a > 0.5) & (a < 1.0)
    if np.any(mid):
        u = 2.0 * a[mid] - 1.0
        out[mid] = 1.0 - _transition(u, _BASE_STEEPNESS * filt.transition_sharpness)
    return float(out) if scalar else out


def filter_integral(filt: LowPassFilter) -> float:
    """``int_{-1}^{1} H(t) dt`` by adaptive quadrature on the transition band."""
    band, _ = integrate.quad(lambda t: evaluate_filter(filt, t), 0.5, 1.0,
                             epsabs=1e-13, epsrel=1e-13, limit=200)
    return 2.0 * (0.5 + band)


@dataclass(frozen=True)
class KernelWeights:
    """Filter samples ``H(|l|/n)`` for ``l = -(n-1)..(n-1)`` and ``hbar_n``."""

    n: int
    weights: np.ndarray = field(repr=False)
    hbar: float

    @property
    def ell(self) -> np.ndarray:
        return np.arange(-(self.n - 1), self.n)

    @property
    def coefficients(self) -> np.ndarray:
        """``hbar_n * H(|l|/n)``, the Fourier coefficients of ``Phi_n``."""
        return self.hbar * self.weights


def make_kernel_weights(filt: LowPassFilter, n: int) -> KernelWeights:
    if int(n) != n or n < 1:
        raise ValueError(f"kernel degree must be a positive integer, got {n!r}")
    n = int(n)
    ell = np.arange(-(n - 1), n)
    w = evaluate_filter(filt, np.abs(ell) / n)
    w.setflags(write=False)
    return KernelWeights(n=n, weights=w, hbar=1.0 / float(np.sum(w)))


def trig_sum(coeffs: np.ndarray, x) -> np.ndarray:
    """Direct evaluation of ``sum_{|l|<n} c_l exp(i l x)`` (``len(coeffs) == 2n-1``).

    Accepts scalar or array ``x`` and returns the same shape.
    """
    coeffs = np.asarray(coeffs)
    m = coeffs.shape[0]
    if m % 2 != 1:
        raise ValueError("coefficient vector must have odd length 2n-1")
    ell = np.arange(m) - (m - 1) // 2
    xs = np.asarray(x, dtype=float)
    flat = xs.reshape(-1)
    out = np.empty(flat.shape, dtype=complex)
    step = max(1, _CHUNK // m)
    for lo in range(0, flat.size, step):
        xc = flat[lo:lo + step]
        out[lo:lo + step] = np.exp(1j * np.outer(xc, ell)) @ coeffs
    return out.reshape(xs.shape) if xs.ndim else out[0]


def eval_phi(weights: KernelWeights, x):
    """Localized kernel ``Phi_n(x)`` by direct summation."""
    return trig_sum(weights.coefficients.astype(complex), x)


def eval_phi_derivative(weights: KernelWeights, x):
    """``Phi_n'(x) = hbar_n sum i l H(|l|/n) exp(i l x)``."""
    return trig_sum(1j * weights.ell * weights.coefficients, x)


def empirical_localization_constant(weights: KernelWeights, power: float = 4.0,
                                    grid_size: int | None = None) -> float:
    """Smallest ``L`` with ``|Phi_n(x)| <= L / max(1, (n|x|)**power)`` on a dense grid.

    The kernel is sampled on ``grid_size`` equispaced nodes (default ``64 n``,
    rounded up to a power of two) via one FFT.
    """
    from .spectrum import trig_poly_grid, uniform_grid

    n = weights.n
    if grid_size is None:
        grid_size = 1 << int(np.ceil(np.log2(64 * n)))
    x = uniform_grid(grid_size)
    phi = np.abs(trig_poly_grid(weights.coefficients.astype(complex), grid_size))
    envelope = np.maximum(1.0, (n * np.abs(x)) ** power)
    return float(np.max(phi * envelope))
