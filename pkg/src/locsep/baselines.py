"""Hankel-matrix subspace baselines (ESPRIT, MUSIC) for univariate samples.

Both methods take the model order ``K`` as input. Samples ``mu(l)``,
``|l| < n``, are re-indexed ``y_m = mu(m - n + 1)``, ``m = 0..2n-2``, so a
source at ``lambda`` contributes the geometric sequence ``z^m``,
``z = exp(-i lambda)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.optimize import linear_sum_assignment, minimize_scalar
from scipy.signal import fftconvolve
from scipy.sparse.linalg import LinearOperator, svds

from .model_synth import SampleLine, wrap_angle

# Below this size a dense SVD is cheaper than ARPACK.
_DENSE_LIMIT = 300


class DegenerateSubspaceError(RuntimeError):
    """The Hankel matrix has numerical rank below the requested model order."""


@dataclass(frozen=True)
class SubspaceConfig:
    model_order: int
    hankel_rows: int | None = None
    music_grid: int = 8192
    min_separation: float = 0.0
    refine: bool = True

    def rows_for(self, num_samples: int) -> int:
        p = self.hankel_rows if self.hankel_rows is not None else num_samples // 2
        cols = num_samples - p + 1
        if not 1 <= self.model_order < p <= cols:
            raise ValueError(f"need 1 <= K < p <= {num_samples} - p + 1; "
                             f"got K={self.model_order}, p={p}")
        return p


def hankel_matrix(values: np.ndarray, p: int) -> np.ndarray:
    """``p x (L - p + 1)`` Hankel matrix with entries ``y[i + j]``."""
    values = np.asarray(values)
    return linalg.hankel(values[:p], values[p - 1:])


def _hankel_operator(values: np.ndarray, p: int) -> LinearOperator:
    q = values.size - p + 1

    def matvec(v):
        return fftconvolve(values, np.ravel(v)[::-1], mode="valid")

    def rmatvec(u):
        # (H^* u)_j = conj(sum_i y_{i+j} conj(u_i))
        return np.conj(fftconvolve(values, np.conj(np.ravel(u))[::-1], mode="valid"))

    return LinearOperator((p, q), matvec=matvec, rmatvec=rmatvec, dtype=complex)


def signal_subspace(values: np.ndarray, p: int, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Leading ``K`` left singular vectors and singular values of the Hankel matrix."""
    values = np.asarray(values, dtype=complex)
    q = values.size - p + 1
    if min(p, q) <= _DENSE_LIMIT or K >= min(p, q) - 1:
        U, s, _ = linalg.svd(hankel_matrix(values, p), full_matrices=False)
        U, s = U[:, :K], s[:K]
    else:
        op = _hankel_operator(values, p)
        v0 = np.ones(min(p, q), dtype=complex) / np.sqrt(min(p, q))
        U, s, _ = svds(op, k=K, v0=v0, tol=0)
        order = np.argsort(s)[::-1]
        U, s = U[:, order], s[order]
    if s[0] == 0 or s[-1] <= 1e-12 * s[0]:
        raise DegenerateSubspaceError(f"Hankel rank below model order {K}")
    return U, s


def fit_amplitudes(values: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    """Least-squares ``A`` in ``mu(l) = sum_k A_k exp(-i l lambda_k)``."""
    values = np.asarray(values, dtype=complex)
    n = (values.size + 1) // 2
    ell = np.arange(-(n - 1), n)
    V = np.exp(-1j * np.outer(ell, freqs))
    return linalg.lstsq(V, values)[0]


def esprit_1d(samples: SampleLine, cfg: SubspaceConfig) -> tuple[np.ndarray, np.ndarray]:
    """Frequencies (sorted, in (-pi, pi]) and complex amplitudes."""
    y = samples.values
    p = cfg.rows_for(y.size)
    U, _ = signal_subspace(y, p, cfg.model_order)
    # shift invariance: U[1:] ~ U[:-1] @ Psi, eig(Psi) = z_k
    psi = linalg.lstsq(U[:-1], U[1:])[0]
    z = linalg.eigvals(psi)
    freqs = np.sort(wrap_angle(-np.angle(z)))
    return freqs, fit_amplitudes(y, freqs)


def music_pseudospectrum(samples: SampleLine, cfg: SubspaceConfig) -> tuple[np.ndarray, np.ndarray]:
    """``(x, P(x))`` on ``music_grid`` nodes of ``[-pi, pi)``.

    ``P(x) = 1 / ||(I - U U^*) a(x)||^2`` with ``a(x)_m = exp(-i x m) / sqrt(p)``;
    the noise-subspace projector is written through the signal subspace ``U``
    so only ``K`` singular vectors are needed.
    """
    x, P, _ = _pseudospectrum(samples, cfg)
    return x, P


def _pseudospectrum(samples: SampleLine, cfg: SubspaceConfig):
    y = samples.values
    p = cfg.rows_for(y.size)
    G = cfg.music_grid
    if G < p:
        raise ValueError("music_grid must be at least the Hankel row count")
    U, _ = signal_subspace(y, p, cfg.model_order)
    x = -np.pi + 2 * np.pi * np.arange(G) / G
    # (U^* a(x_j))_k = sum_m conj(U_mk) exp(i pi m) exp(-2 pi i j m / G) / sqrt(p)
    sign = np.where(np.arange(p) % 2, -1.0, 1.0)
    proj = np.fft.fft(np.conj(U) * sign[:, None], n=G, axis=0) / np.sqrt(p)
    residual = 1.0 - np.sum(np.abs(proj) ** 2, axis=1)
    return x, 1.0 / np.maximum(residual, 1e-15), U


def _music_residual(U: np.ndarray, x: float) -> float:
    """``||(I - U U^*) a(x)||^2`` for the unit steering vector ``a(x)``."""
    p = U.shape[0]
    a = np.exp(-1j * x * np.arange(p)) / np.sqrt(p)
    return float(1.0 - np.sum(np.abs(U.conj().T @ a) ** 2))


def music_1d(samples: SampleLine, cfg: SubspaceConfig) -> np.ndarray:
    """The ``K`` highest pseudospectrum peaks, separated by more than ``min_separation``.

    With ``cfg.refine`` each grid peak is polished by a bounded scalar
    minimization of the noise-subspace residual within one grid step.
    """
    x, P, U = _pseudospectrum(samples, cfg)
    left, right = np.roll(P, 1), np.roll(P, -1)
    cand = np.flatnonzero((P > left) & (P > right))
    cand = cand[np.lexsort((cand, -P[cand]))]
    picked: list[int] = []
    for j in cand:
        if len(picked) == cfg.model_order:
            break
        if all(abs(wrap_angle(x[j] - x[k])) > cfg.min_separation for k in picked):
            picked.append(int(j))
    est = x[picked]
    if cfg.refine and picked:
        step = 2 * np.pi / cfg.music_grid
        est = np.array([
            minimize_scalar(lambda t: _music_residual(U, t), bounds=(x0 - step, x0 + step),
                            method="bounded", options={"xatol": 1e-12}).x
            for x0 in est
        ])
    return np.sort(wrap_angle(est))


def hankel_eigen_histogram(samples: SampleLine, cfg: SubspaceConfig) -> np.ndarray:
    """All singular values of the Hankel matrix, descending."""
    y = samples.values
    p = cfg.rows_for(y.size)
    return linalg.svdvals(hankel_matrix(y, p))


def frequency_rmse(estimates, truth) -> float:
    """RMSE of circular errors under the optimal one-to-one assignment.

    Unassigned truth values (fewer estimates than sources) count with error pi.
    """
    est = np.atleast_1d(np.asarray(estimates, dtype=float))
    tru = np.atleast_1d(np.asarray(truth, dtype=float))
    if est.size == 0:
        return float(np.pi)
    cost = np.abs(wrap_angle(tru[:, None] - est[None, :]))
    rows, cols = linear_sum_assignment(cost ** 2)
    err = np.full(tru.size, np.pi)
    err[rows] = cost[rows, cols]
    return float(np.sqrt(np.mean(err ** 2)))
