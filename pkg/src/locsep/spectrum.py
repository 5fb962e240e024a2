"""Reconstruction operator sigma_n on a uniform grid and pointwise.

    sigma_n(x) = hbar_n * sum_{|l| < n} H(|l|/n) mu(l) exp(i l x)

Grid nodes are ``x_j = -pi + 2 pi j / N``, ``j = 0..N-1``.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .filter_kernel import KernelWeights, trig_sum
from .model_synth import SampleLine, draw_noise, trial_seed


def uniform_grid(grid_size: int) -> np.ndarray:
    return -np.pi + 2 * np.pi * np.arange(grid_size) / grid_size


def min_grid_size(n: int) -> int:
    """``ceil(4 pi n)``: the mesh bound for degree-``n`` trigonometric polynomials."""
    return int(np.ceil(4 * np.pi * n))


def default_grid_size(n: int) -> int:
    """Smallest power of two ``>= 16 n``."""
    return 1 << int(np.ceil(np.log2(16 * n)))


def trig_poly_grid(coeffs: np.ndarray, grid_size: int) -> np.ndarray:
    """``sum_{|l|<n} c_l exp(i l x_j)`` on the ``[-pi, pi)`` grid via one inverse FFT.

    Coefficient ``l`` goes to bin ``l mod N``; the result is rotated by ``N/2``
    so that index 0 corresponds to ``x = -pi``.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    m = coeffs.shape[0]
    n = (m + 1) // 2
    if m != 2 * n - 1:
        raise ValueError("coefficient vector must have odd length 2n-1")
    if grid_size < m or grid_size % 2:
        raise ValueError("grid_size must be even and at least 2n-1")
    ell = np.arange(-(n - 1), n)
    padded = np.zeros(grid_size, dtype=complex)
    padded[ell % grid_size] = coeffs
    return np.fft.fftshift(np.fft.ifft(padded) * grid_size)


@dataclass(frozen=True)
class SpectrumGrid:
    n: int
    grid_size: int
    values: np.ndarray = field(repr=False)
    weights: KernelWeights = field(repr=False)
    samples: SampleLine | None = field(default=None, repr=False)

    @property
    def x(self) -> np.ndarray:
        return uniform_grid(self.grid_size)

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def step(self) -> float:
        return 2 * np.pi / self.grid_size


def _check(samples: SampleLine, weights: KernelWeights) -> None:
    if samples.n != weights.n:
        raise ValueError(f"samples have degree {samples.n}, kernel has degree {weights.n}")


def eval_sigma_grid(samples: SampleLine, weights: KernelWeights,
                    grid_size: int | None = None) -> SpectrumGrid:
    _check(samples, weights)
    n = weights.n
    if grid_size is None:
        grid_size = default_grid_size(n)
    if grid_size & (grid_size - 1) or grid_size < 2:
        raise ValueError(f"grid_size must be a power of two, got {grid_size}")
    if grid_size < min_grid_size(n):
        raise ValueError(f"grid_size {grid_size} below mesh bound ceil(4 pi n) = {min_grid_size(n)}")
    values = trig_poly_grid(weights.coefficients * samples.values, grid_size)
    return SpectrumGrid(n=n, grid_size=grid_size, values=values, weights=weights, samples=samples)


def eval_sigma_point(samples: SampleLine, weights: KernelWeights, x):
    """Direct ``O(n)`` evaluation of ``sigma_n`` at scalar or array ``x``."""
    _check(samples, weights)
    return trig_sum(weights.coefficients * samples.values, x)


def noise_spectrum_max(weights: KernelWeights, noise_sigma: float, seed: int, trials: int,
                       grid_size: int | None = None, family: str = "complex-gaussian",
                       threads: int = 1) -> np.ndarray:
    """Per-trial ``max_j |E_n(x_j)|`` for pure-noise samples of level ``noise_sigma``.

    Trial ``t`` draws from ``trial_seed(seed, t)`` so results do not depend on
    ``threads``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = weights.n
    if grid_size is None:
        grid_size = default_grid_size(n)

    def one(t: int) -> float:
        if noise_sigma == 0:
            return 0.0
        rng = np.random.default_rng(trial_seed(seed, t))
        eps = draw_noise(2 * n - 1, noise_sigma, family, rng)
        return float(np.max(np.abs(trig_poly_grid(weights.coefficients * eps, grid_size))))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            out = list(pool.map(one, range(trials)))
    else:
        out = [one(t) for t in range(trials)]
    return np.array(out)


def write_spectrum_csv(grid: SpectrumGrid, path, threshold: float | None = None) -> None:
    """Columns ``x, re, im, abs`` (plus ``threshold`` if given)."""
    header = ["x", "re", "im", "abs"] + (["threshold"] if threshold is not None else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for x, v in zip(grid.x, grid.values):
            row = [repr(float(x)), repr(float(v.real)), repr(float(v.imag)), repr(float(abs(v)))]
            if threshold is not None:
                row.append(repr(float(threshold)))
            w.writerow(row)
