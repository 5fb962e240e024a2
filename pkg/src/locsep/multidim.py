"""Multivariate recovery from samples along a few lines in frequency space.

A line ``offset = Delta_c, direction = Delta_a`` gives, through the univariate
recovery, accurate values of ``<Delta_a, w_k>`` (peak locations) and coarse
values of ``<Delta_c, w_k>`` (minus the phase of ``sigma_n`` at the peak, for
real positive amplitudes). Lines are paired through a shared coordinate, and
the vectors of accurate inner products are solved against the basis.

Directions are indexed from 0 here; ``Delta_1`` of the anchored scheme is
direction 0.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import SubspaceConfig, esprit_1d, fit_amplitudes, music_1d
from .model_synth import NoiseSpec, PointSourceModel, SampleLine, SamplingLine, sample_line, wrap_angle
from .source_recovery import RecoveryParams, circular_distance, recover_1d

SCHEMES = ("anchored", "full")


class WrapAroundError(ValueError):
    """Some ``<Delta_d, w_k>`` falls outside (-pi, pi]; the scene is not identifiable."""


@dataclass(frozen=True)
class DirectionBasis:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("basis must be a square matrix with one direction per row")
        s = np.linalg.svd(m, compute_uv=False)
        if s[-1] <= 1e-10 * s[0]:
            raise ValueError("basis directions are numerically linearly dependent")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def q(self) -> int:
        return self.matrix.shape[0]

    @property
    def cond(self) -> float:
        return float(np.linalg.cond(self.matrix))

    def solve(self, coords: np.ndarray) -> np.ndarray:
        """``w`` from ``(<Delta_1, w>, ..., <Delta_q, w>)``; rows of ``coords`` are sources."""
        coords = np.atleast_2d(coords)
        return np.linalg.solve(self.matrix, coords.T).T

    def coordinates(self, model: PointSourceModel) -> np.ndarray:
        """Unwrapped inner products, shape ``(K, q)``."""
        return model.frequencies @ self.matrix.T


def line_plan(q: int, scheme: str = "anchored") -> list[tuple[int, int]]:
    """``(accurate_dir, coarse_dir)`` for every sampled line.

    ``anchored``: ``(0,1), (1,0), (2,0), ..., (q-1,0)``, i.e. ``q`` lines.
    ``full``: both orientations of every pair ``d1 < d2``.
    """
    if q < 2:
        raise ValueError("multivariate recovery needs q >= 2")
    if scheme == "anchored":
        return [(0, 1)] + [(d, 0) for d in range(1, q)]
    if scheme == "full":
        return [p for d1 in range(q) for d2 in range(d1 + 1, q) for p in ((d1, d2), (d2, d1))]
    raise ValueError(f"unknown scheme {scheme!r}")


def plan_line(basis: DirectionBasis, accurate: int, coarse: int, n: int) -> SamplingLine:
    return SamplingLine(basis.matrix[coarse], basis.matrix[accurate], n)


def check_wrap(model: PointSourceModel, basis: DirectionBasis) -> None:
    c = basis.coordinates(model)
    bad = np.argwhere((c <= -np.pi) | (c > np.pi))
    if bad.size:
        k, d = bad[0]
        raise WrapAroundError(
            f"{len(bad)} inner products outside (-pi, pi], e.g. source {k} direction {d}: "
            f"{c[k, d]:.4f}; recovered points would be aliases")


def synthesize(model: PointSourceModel, basis: DirectionBasis, n: int,
               noise: NoiseSpec | None = None, scheme: str = "anchored",
               check_range: bool = True) -> dict[tuple[int, int], SampleLine]:
    """Samples for every line of the plan.

    Noise for all lines is drawn from one generator seeded by ``noise.seed``,
    in plan order.
    """
    if model.q != basis.q:
        raise ValueError(f"model has q={model.q}, basis has q={basis.q}")
    if check_range:
        check_wrap(model, basis)
    rng = np.random.default_rng(noise.seed) if noise is not None else None
    return {(a, c): sample_line(model, plan_line(basis, a, c, n), noise, rng)
            for a, c in line_plan(basis.q, scheme)}


def sample_budget(lines: dict[tuple[int, int], SampleLine]) -> int:
    return sum(s.line.num_samples for s in lines.values())


@dataclass(frozen=True)
class DirectionalEstimate:
    accurate_dir: int
    coarse_dir: int
    accurate: np.ndarray
    coarse: np.ndarray
    amp: np.ndarray

    def __len__(self) -> int:
        return self.accurate.shape[0]


def recover_direction_pair(samples: SampleLine, weights, params: RecoveryParams,
                           accurate_dir: int, coarse_dir: int,
                           grid_size: int | None = None) -> DirectionalEstimate:
    srcs = recover_1d(samples, weights, params, grid_size)
    return DirectionalEstimate(
        accurate_dir=accurate_dir,
        coarse_dir=coarse_dir,
        accurate=np.array([s.lambda_hat for s in srcs]),
        coarse=wrap_angle(np.array([-s.phase_hat for s in srcs])),
        amp=np.array([s.amp_hat for s in srcs]),
    )


def baseline_direction_pair(samples: SampleLine, cfg: SubspaceConfig, accurate_dir: int,
                            coarse_dir: int, method: str = "esprit") -> DirectionalEstimate:
    """Directional estimate from a subspace method; the coarse coordinate is
    read from the phase of the least-squares amplitude."""
    if method == "esprit":
        freqs, amps = esprit_1d(samples, cfg)
    elif method == "music":
        freqs = music_1d(samples, cfg)
        amps = fit_amplitudes(samples.values, freqs)
    else:
        raise ValueError(f"unknown baseline {method!r}")
    return DirectionalEstimate(accurate_dir, coarse_dir, np.asarray(freqs),
                               wrap_angle(-np.angle(amps)), np.abs(amps))


@dataclass
class Pairing:
    pairs: list[tuple[int, int, float]]
    unpaired_a: list[int]
    unpaired_b: list[int]


def pair_estimates(est_a: DirectionalEstimate, est_b: DirectionalEstimate) -> Pairing:
    """Greedy nearest-neighbour pairing on the shared coordinate.

    ``est_a`` is accurate in direction ``d``; ``est_b`` must be coarse in ``d``.
    Repeatedly takes the globally closest free pair (circular distance, ties by
    index).
    """
    if est_b.coarse_dir != est_a.accurate_dir:
        raise ValueError("est_b must carry a coarse reading of est_a's accurate direction")
    if len(est_a) == 0 or len(est_b) == 0:
        raise ValueError("cannot pair an empty estimate")
    dist = circular_distance(est_a.accurate[:, None], est_b.coarse[None, :])
    ia, ib = np.unravel_index(np.argsort(dist, axis=None, kind="stable"), dist.shape)
    used_a = np.zeros(len(est_a), dtype=bool)
    used_b = np.zeros(len(est_b), dtype=bool)
    pairs = []
    for i, j in zip(ia, ib):
        if used_a[i] or used_b[j]:
            continue
        used_a[i] = used_b[j] = True
        pairs.append((int(i), int(j), float(dist[i, j])))
        if used_a.all() or used_b.all():
            break
    return Pairing(pairs, np.flatnonzero(~used_a).tolist(), np.flatnonzero(~used_b).tolist())


@dataclass
class AssembledSources:
    points: np.ndarray
    amplitudes: np.ndarray
    pair_distances: np.ndarray
    unpaired: dict = field(default_factory=dict)
    consistent: int | None = None

    @property
    def K_hat(self) -> int:
        return self.points.shape[0]

    def to_list(self) -> list[dict]:
        return [{"w": [float(v) for v in w], "amp": float(a)}
                for w, a in zip(self.points, self.amplitudes)]


def assemble_full(estimates: dict[tuple[int, int], DirectionalEstimate], basis: DirectionBasis,
                  consistency_tol: float = 1e-2) -> AssembledSources:
    """Solve the paired accurate coordinates against the basis.

    Uses the anchor line ``(0, 1)`` and the lines ``(d, 0)``. With the full
    scheme, the remaining pairs ``(d1, d2)`` are paired too and the number of
    assembled sources they confirm is reported as ``consistent``.
    """
    q = basis.q
    anchor = estimates[(0, 1)]
    if len(anchor) == 0:
        return AssembledSources(np.zeros((0, q)), np.zeros(0), np.zeros((0, q - 1)),
                                {"anchor": [], **{d: [] for d in range(1, q)}})
    coords = np.full((len(anchor), q), np.nan)
    coords[:, 0] = anchor.accurate
    dists = np.full((len(anchor), q - 1), np.nan)
    unpaired: dict = {}
    for d in range(1, q):
        partner = estimates[(d, 0)]
        if len(partner) == 0:
            unpaired[d] = []
            continue
        pr = pair_estimates(anchor, partner)
        for i, j, dd in pr.pairs:
            coords[i, d] = partner.accurate[j]
            dists[i, d - 1] = dd
        unpaired[d] = pr.unpaired_b
    complete = ~np.isnan(coords).any(axis=1)
    unpaired["anchor"] = np.flatnonzero(~complete).tolist()
    b = coords[complete]
    points = basis.solve(b) if b.size else np.zeros((0, q))

    consistent = None
    extra = [(d1, d2) for (d1, d2) in estimates if 1 <= d1 < d2]
    if extra:
        consistent = 0
        confirmed = np.ones(b.shape[0], dtype=bool)
        for d1, d2 in extra:
            e1, e2 = estimates[(d1, d2)], estimates[(d2, d1)]
            if len(e1) == 0 or len(e2) == 0:
                confirmed[:] = False
                continue
            pr = pair_estimates(e1, e2)
            got = np.array([[e1.accurate[i], e2.accurate[j]] for i, j, _ in pr.pairs]).reshape(-1, 2)
            for k in range(b.shape[0]):
                err = np.max(circular_distance(got, b[k, [d1, d2]]), axis=1) if got.size else [np.inf]
                confirmed[k] &= bool(np.min(err) <= consistency_tol)
        consistent = int(confirmed.sum())

    return AssembledSources(points=points, amplitudes=anchor.amp[complete],
                            pair_distances=dists[complete], unpaired=unpaired,
                            consistent=consistent)


def recover_multidim(lines: dict[tuple[int, int], SampleLine], basis: DirectionBasis, weights,
                     params: RecoveryParams | dict, grid_size: int | None = None,
                     threads: int = 1) -> tuple[AssembledSources, dict]:
    """Per-line recovery (optionally threaded), then pairing and assembly.

    ``params`` may be a dict keyed like ``lines`` to use a different
    separation per line.
    """
    def run(key):
        a, c = key
        p = params[key] if isinstance(params, dict) else params
        return key, recover_direction_pair(lines[key], weights, p, a, c, grid_size)

    keys = sorted(lines)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            ests = dict(pool.map(run, keys))
    else:
        ests = dict(map(run, keys))
    return assemble_full(ests, basis), ests


# -- scoring -----------------------------------------------------------------

@dataclass
class MatchReport:
    r: float
    matched: int
    rmse: float
    pairs: list[tuple[int, int, float]]
    unmatched_truth: list[int]
    unmatched_est: list[int]

    def to_dict(self) -> dict:
        return {"r": self.r, "matched": self.matched, "rmse": self.rmse,
                "unmatched_truth": self.unmatched_truth, "unmatched_est": self.unmatched_est}


def match_points(truth: PointSourceModel | np.ndarray, est, r: float,
                 circular: bool = False) -> MatchReport:
    """Greedy closest-pair matching; a pair counts iff its distance is below ``r``.

    ``circular`` measures per-coordinate differences modulo 2 pi (for
    univariate frequencies).
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    T = truth.frequencies if isinstance(truth, PointSourceModel) else np.atleast_2d(truth)
    E = est.points if isinstance(est, AssembledSources) else np.asarray(est, dtype=float)
    E = E.reshape(-1, T.shape[1])
    if E.shape[0] == 0:
        return MatchReport(r, 0, float("nan"), [], list(range(T.shape[0])), [])
    diff = T[:, None, :] - E[None, :, :]
    if circular:
        diff = wrap_angle(diff)
    dist = np.sqrt(np.sum(diff ** 2, axis=-1))
    ti, ei = np.nonzero(dist < r)
    order = np.lexsort((ei, ti, dist[ti, ei]))
    used_t = np.zeros(T.shape[0], dtype=bool)
    used_e = np.zeros(E.shape[0], dtype=bool)
    pairs = []
    for t, e in zip(ti[order], ei[order]):
        if used_t[t] or used_e[e]:
            continue
        used_t[t] = used_e[e] = True
        pairs.append((int(t), int(e), float(dist[t, e])))
    rmse = float(np.sqrt(np.mean([d ** 2 for *_, d in pairs]))) if pairs else float("nan")
    return MatchReport(r, len(pairs), rmse, pairs,
                       np.flatnonzero(~used_t).tolist(), np.flatnonzero(~used_e).tolist())


def random_scene(basis: DirectionBasis, K: int, rng: np.random.Generator,
                 floor: float = 0.0, margin: float = 0.1,
                 amp_range: tuple[float, float] = (1.0, 1.0),
                 max_tries: int = 100_000) -> PointSourceModel:
    """``K`` sources with every ``<Delta_d, w_k>`` in ``(-pi + margin, pi - margin)``.

    Coordinates are drawn uniformly and rejected unless they keep circular
    distance ``>= floor`` from every accepted source in every direction.
    Amplitudes are real, uniform on ``amp_range``.
    """
    lo, hi = -np.pi + margin, np.pi - margin
    coords = np.empty((0, basis.q))
    tries = 0
    while coords.shape[0] < K:
        tries += 1
        if tries > max_tries:
            raise RuntimeError(f"could not place {K} sources with separation floor {floor}")
        c = rng.uniform(lo, hi, basis.q)
        if coords.size and np.any(np.min(circular_distance(coords, c), axis=0) < floor):
            continue
        coords = np.vstack([coords, c])
    amps = rng.uniform(amp_range[0], amp_range[1], K)
    return PointSourceModel(amps, basis.solve(coords))
