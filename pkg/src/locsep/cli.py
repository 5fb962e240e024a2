"""Command-line harness: synthesize datasets, run recoveries, sweep SNRs, dump plot data.

Every command reads one INI-style config file. Outputs are deterministic
given the config and ``--seed``; the only wall-clock quantity is the bench
``runtime_s`` column, which can be zeroed with ``[bench] timing = false``.

Exit codes: 0 success, 2 configuration error, 3 pipeline degeneracy.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import (DegenerateSubspaceError, SubspaceConfig, esprit_1d, frequency_rmse,
                        hankel_eigen_histogram, music_1d)
from .filter_kernel import LowPassFilter, make_kernel_weights
from .model_synth import (NOISE_FAMILIES, NoiseSpec, PointSourceModel, SampleLine, SamplingLine,
                          directions_3d, load_dataset, sample_line, table1_model, trial_seed,
                          twelve_points_2d)
from .multidim import (SCHEMES, DirectionBasis, WrapAroundError, assemble_full,
                       baseline_direction_pair, check_wrap, line_plan, match_points, plan_line,
                       random_scene, recover_direction_pair)
from .source_recovery import RecoveryParams, recover_1d
from .spectrum import eval_sigma_grid, trig_poly_grid, uniform_grid, write_spectrum_csv

EXIT_CONFIG = 2
EXIT_DEGENERATE = 3

BENCH_HEADER = ["snr_db", "method", "samples", "total_points", "recuperated_mean",
                "rmse_mean", "rmse_std", "runtime_s"]
METHODS = ("localized", "esprit", "music")
BUILTIN_MODELS = ("table1", "twelve_points_2d", "random")

# Random scenes draw from a stream disjoint from the per-trial noise seeds.
_SCENE_STREAM = 1 << 62


class ConfigError(ValueError):
    pass


class Degenerate(RuntimeError):
    pass


# -- configuration -----------------------------------------------------------

@dataclass
class ExperimentConfig:
    model_source: str = "table1"
    q: int = 1
    K: int = 1
    amp_range: tuple[float, float] = (1.0, 1.0)
    floor: float | None = None
    margin: float = 0.1
    scene_per_trial: bool = False
    check_range: bool = True
    n: int = 1024
    scheme: str = "anchored"
    directions: str = "default"
    grid_size: int | None = None
    family: str = "complex-gaussian"
    snr_db: list[float] = field(default_factory=lambda: [math.inf])
    trials: int = 1
    seed: int = 0
    reference: str = "weakest"
    m_min: float | None = None
    eta: float | None = None
    refine: bool = False
    radii: list[float] = field(default_factory=lambda: [0.05])
    methods: list[str] = field(default_factory=lambda: ["localized"])
    timing: bool = True
    kernel_n: list[int] = field(default_factory=lambda: [64, 128, 256, 512])
    profile_rows: int = 8192
    out: Path = Path("out")
    base_dir: Path = Path(".")

    def to_dict(self) -> dict:
        # paths are left out so manifests do not depend on where a run was started
        d = asdict(self)
        del d["out"], d["base_dir"]
        d["snr_db"] = [_fmt_snr(s) for s in self.snr_db]
        return d


def _fmt_snr(s: float):
    return "inf" if math.isinf(s) else s


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _auto_float(text: str | None) -> float | None:
    if text is None or text.strip().lower() in ("", "auto"):
        return None
    return float(text)


def load_config(path, seed: int | None = None, out: str | None = None) -> ExperimentConfig:
    """Parse an INI config; raises :class:`ConfigError` on any invalid entry."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read(path)
        cfg = ExperimentConfig(base_dir=path.parent)
        g = lambda sec, key, fb=None: cp.get(sec, key, fallback=fb)  # noqa: E731

        cfg.model_source = g("model", "source", "table1")
        cfg.q = cp.getint("model", "q", fallback=None) or 0
        cfg.K = cp.getint("model", "K", fallback=1)
        cfg.amp_range = (cp.getfloat("model", "amp_min", fallback=1.0),
                         cp.getfloat("model", "amp_max", fallback=1.0))
        cfg.floor = _auto_float(g("model", "floor"))
        cfg.margin = cp.getfloat("model", "margin", fallback=0.1)
        cfg.scene_per_trial = cp.getboolean("model", "scene_per_trial", fallback=False)
        cfg.check_range = cp.getboolean("model", "check_range", fallback=True)

        cfg.n = cp.getint("sampling", "n", fallback=1024)
        cfg.scheme = g("sampling", "scheme", "anchored")
        cfg.directions = g("sampling", "directions", "default")
        gs = g("sampling", "grid_size")
        cfg.grid_size = int(gs) if gs not in (None, "", "auto") else None

        cfg.family = g("noise", "family", "complex-gaussian")
        cfg.snr_db = _floats(g("noise", "snr_db", "inf"))
        cfg.trials = cp.getint("noise", "trials", fallback=1)
        cfg.seed = cp.getint("noise", "seed", fallback=0)
        cfg.reference = g("noise", "reference", "weakest").strip()

        cfg.m_min = _auto_float(g("recovery", "m_min"))
        cfg.eta = _auto_float(g("recovery", "eta"))
        cfg.refine = cp.getboolean("recovery", "refine", fallback=False)

        cfg.radii = _floats(g("match", "radii", "0.05"))
        cfg.methods = [m.strip() for m in g("bench", "methods", "localized").split(",") if m.strip()]
        cfg.timing = cp.getboolean("bench", "timing", fallback=True)
        cfg.kernel_n = [int(v) for v in _floats(g("plotdata", "kernel_n", "64, 128, 256, 512"))]
        cfg.profile_rows = cp.getint("plotdata", "profile_rows", fallback=8192)
        cfg.out = Path(out) if out is not None else path.parent / g("output", "dir", "out")
    except (configparser.Error, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if seed is not None:
        cfg.seed = seed
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.model_source not in BUILTIN_MODELS and not _resolve(cfg, cfg.model_source).is_file():
        raise ConfigError(f"model file not found: {cfg.model_source}")
    if cfg.model_source == "random" and (cfg.q < 1 or cfg.K < 1):
        raise ConfigError("random scenes need q >= 1 and K >= 1")
    if cfg.amp_range[0] <= 0 or cfg.amp_range[1] < cfg.amp_range[0]:
        raise ConfigError("amplitude range must satisfy 0 < amp_min <= amp_max")
    if cfg.n < 1:
        raise ConfigError("n must be >= 1")
    if cfg.scheme not in SCHEMES:
        raise ConfigError(f"scheme must be one of {SCHEMES}")
    if cfg.family not in NOISE_FAMILIES:
        raise ConfigError(f"noise family must be one of {NOISE_FAMILIES}")
    if not cfg.snr_db:
        raise ConfigError("snr_db list is empty")
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    if not 0 <= cfg.seed < 1 << 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg.reference not in ("weakest", "mean"):
        try:
            if float(cfg.reference) <= 0:
                raise ValueError
        except ValueError:
            raise ConfigError("noise reference must be weakest, mean, or a positive power") from None
    if not cfg.radii or min(cfg.radii) <= 0:
        raise ConfigError("match radii must be positive")
    bad = [m for m in cfg.methods if m not in METHODS]
    if bad or not cfg.methods:
        raise ConfigError(f"unknown methods {bad}; choose from {METHODS}")
    if cfg.directions not in ("default", "identity") and not _resolve(cfg, cfg.directions).is_file():
        raise ConfigError(f"directions file not found: {cfg.directions}")
    if cfg.m_min is not None and cfg.m_min <= 0:
        raise ConfigError("m_min must be positive")
    if cfg.eta is not None and not 0 < cfg.eta <= 2 * math.pi:
        raise ConfigError("eta must lie in (0, 2 pi]")


def _resolve(cfg: ExperimentConfig, name: str) -> Path:
    p = Path(name)
    return p if p.is_absolute() else cfg.base_dir / p


# -- scene and sampling --------------------------------------------------------

def _basis(cfg: ExperimentConfig, q: int, bundled: np.ndarray | None = None) -> DirectionBasis | None:
    if q == 1:
        return None
    if cfg.directions == "identity":
        return DirectionBasis(np.eye(q))
    if cfg.directions != "default":
        doc = json.loads(_resolve(cfg, cfg.directions).read_text())
        rows = doc["lines"] if "lines" in doc else doc
        return DirectionBasis(np.array([rows[f"delta_{d}"] for d in range(1, q + 1)], dtype=float))
    if bundled is not None:
        return DirectionBasis(bundled)
    if q == 3:
        return DirectionBasis(directions_3d())
    return DirectionBasis(np.eye(q))


def build_scene(cfg: ExperimentConfig, trial: int = 0) -> tuple[PointSourceModel, DirectionBasis | None]:
    src = cfg.model_source
    if src == "table1":
        return table1_model(), None
    if src == "twelve_points_2d":
        model, delta = twelve_points_2d()
        return model, _basis(cfg, 2, delta)
    if src == "random":
        basis = _basis(cfg, cfg.q) if cfg.q > 1 else None
        scene_basis = basis if basis is not None else DirectionBasis(np.eye(1))
        floor = cfg.floor if cfg.floor is not None else 8 * math.pi / cfg.n
        stream = trial if cfg.scene_per_trial else 0
        rng = np.random.default_rng(trial_seed(cfg.seed ^ _SCENE_STREAM, stream))
        model = random_scene(scene_basis, cfg.K, rng, floor=floor, margin=cfg.margin,
                             amp_range=cfg.amp_range)
        return model, basis
    model, lines = load_dataset(_resolve(cfg, src))
    bundled = None
    if model.q > 1 and all(f"delta_{d}" in lines for d in range(1, model.q + 1)):
        bundled = np.array([lines[f"delta_{d}"] for d in range(1, model.q + 1)])
    return model, _basis(cfg, model.q, bundled)


def _plan(basis: DirectionBasis | None, scheme: str) -> list[tuple[int, int]]:
    return [(0, 0)] if basis is None else line_plan(basis.q, scheme)


def _line(basis: DirectionBasis | None, key: tuple[int, int], n: int) -> SamplingLine:
    return SamplingLine.univariate(n) if basis is None else plan_line(basis, key[0], key[1], n)


def noise_spec(cfg: ExperimentConfig, model: PointSourceModel, snr_db: float, trial: int) -> NoiseSpec | None:
    if math.isinf(snr_db) and snr_db > 0:
        return None
    if cfg.reference == "weakest":
        ref = model.min_amplitude ** 2
    elif cfg.reference == "mean":
        ref = None
    else:
        ref = float(cfg.reference)
    return NoiseSpec(family=cfg.family, snr_db=snr_db, seed=trial_seed(cfg.seed, trial),
                     reference_power=ref)


def synth_lines(cfg: ExperimentConfig, model: PointSourceModel, basis: DirectionBasis | None,
                snr_db: float, trial: int) -> dict[tuple[int, int], SampleLine]:
    if basis is not None and cfg.check_range:
        check_wrap(model, basis)
    noise = noise_spec(cfg, model, snr_db, trial)
    rng = np.random.default_rng(noise.seed) if noise is not None else None
    return {key: sample_line(model, _line(basis, key, cfg.n), noise, rng)
            for key in _plan(basis, cfg.scheme)}


def recovery_params(cfg: ExperimentConfig, model: PointSourceModel,
                    basis: DirectionBasis | None, key: tuple[int, int]) -> RecoveryParams:
    """Explicit ``m_min``/``eta`` from the config, else the true model values."""
    m = cfg.m_min if cfg.m_min is not None else model.min_amplitude
    if cfg.eta is not None:
        eta = cfg.eta
    else:
        direction = [1.0] if basis is None else basis.matrix[key[0]]
        eta = model.min_separation(direction)
    return RecoveryParams(m, min(eta, 2 * math.pi), cfg.refine)


# -- running methods ---------------------------------------------------------

@dataclass
class MethodResult:
    method: str
    points: np.ndarray
    amplitudes: np.ndarray
    detail: dict


def run_method(cfg: ExperimentConfig, model: PointSourceModel, basis: DirectionBasis | None,
               lines: dict, method: str, weights=None) -> MethodResult:
    if method == "localized" and weights is None:
        weights = make_kernel_weights(LowPassFilter(), cfg.n)
    sub = SubspaceConfig(model_order=model.K)
    if basis is None:
        s = lines[(0, 0)]
        if method == "localized":
            srcs = recover_1d(s, weights, recovery_params(cfg, model, None, (0, 0)), cfg.grid_size)
            pts = np.array([r.lambda_hat for r in srcs])
            amps = np.array([r.amp_hat for r in srcs])
            detail = {"sources": [r.to_dict() for r in srcs]}
        elif method == "esprit":
            pts, a = esprit_1d(s, sub)
            amps = np.abs(a)
            detail = {"sources": [{"lambda_hat": float(p), "re": float(z.real), "im": float(z.imag)}
                                  for p, z in zip(pts, a)]}
        else:
            pts = music_1d(s, sub)
            amps = np.full(pts.size, np.nan)
            detail = {"sources": [{"lambda_hat": float(p)} for p in pts]}
        return MethodResult(method, pts.reshape(-1, 1), amps, detail)

    ests = {}
    for key, s in sorted(lines.items()):
        if method == "localized":
            ests[key] = recover_direction_pair(s, weights, recovery_params(cfg, model, basis, key),
                                               key[0], key[1], cfg.grid_size)
        else:
            ests[key] = baseline_direction_pair(s, sub, key[0], key[1], method)
    asm = assemble_full(ests, basis)
    detail = {
        "sources": asm.to_list(),
        "pair_distances": asm.pair_distances.tolist(),
        "unpaired": {str(k): v for k, v in asm.unpaired.items()},
        "directional": {f"{a}_{c}": {"accurate": e.accurate.tolist(), "coarse": e.coarse.tolist(),
                                     "amp": e.amp.tolist()} for (a, c), e in ests.items()},
    }
    if asm.consistent is not None:
        detail["consistent"] = asm.consistent
    return MethodResult(method, asm.points, asm.amplitudes, detail)


def score(model: PointSourceModel, result: MethodResult, r: float) -> tuple[int, float]:
    """``(matched, rmse)``; univariate RMSE is over all true sources (missing ones count pi)."""
    univariate = model.q == 1
    rep = match_points(model.frequencies, result.points, r, circular=univariate)
    if univariate:
        return rep.matched, frequency_rmse(result.points[:, 0], model.frequencies[:, 0])
    return rep.matched, rep.rmse


# -- output helpers ------------------------------------------------------------

def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _line_name(key: tuple[int, int]) -> str:
    return f"{key[0]}_{key[1]}"


def write_samples_csv(samples: SampleLine, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ell", "re", "im"])
        for l, v in zip(samples.line.ell, samples.values):
            w.writerow([int(l), repr(float(v.real)), repr(float(v.imag))])


def read_samples_csv(path: Path, line: SamplingLine, noise_sigma: float = 0.0) -> SampleLine:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if not np.array_equal(data[:, 0].astype(int), line.ell):
        raise ConfigError(f"{path}: ell column does not match degree n={line.n}")
    return SampleLine(line, data[:, 1] + 1j * data[:, 2], noise_sigma)


# -- commands ----------------------------------------------------------------

def cmd_synth(cfg: ExperimentConfig, threads: int = 1) -> dict:
    """Write ``model.json``, one ``samples_<a>_<c>.csv`` per line and ``manifest.json``.

    Uses the first SNR of the list and trial 0.
    """
    model, basis = build_scene(cfg)
    snr = cfg.snr_db[0]
    try:
        lines = synth_lines(cfg, model, basis, snr, 0)
    except WrapAroundError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.out.mkdir(parents=True, exist_ok=True)
    doc = model.to_dict()
    if basis is not None:
        doc["lines"] = {f"delta_{d + 1}": basis.matrix[d].tolist() for d in range(basis.q)}
    _write_json(cfg.out / "model.json", doc)
    files = {}
    for key, s in lines.items():
        name = f"samples_{_line_name(key)}.csv"
        write_samples_csv(s, cfg.out / name)
        files[name] = {"accurate_dir": key[0], "coarse_dir": key[1], "rows": s.line.num_samples,
                       "offset": s.line.offset.tolist(), "direction": s.line.direction.tolist(),
                       "noise_sigma": s.noise_sigma}
    noise = noise_spec(cfg, model, snr, 0)
    manifest = {"command": "synth", "base_seed": cfg.seed, "trial": 0, "snr_db": _fmt_snr(snr),
                "noise_seed": None if noise is None else noise.seed, "n": cfg.n,
                "scheme": cfg.scheme, "q": model.q, "K": model.K,
                "total_samples": sum(f["rows"] for f in files.values()), "files": files,
                "config": cfg.to_dict()}
    _write_json(cfg.out / "manifest.json", manifest)
    return manifest


def _load_synth(cfg: ExperimentConfig):
    man_path = cfg.out / "manifest.json"
    if not man_path.is_file() or not (cfg.out / "model.json").is_file():
        raise ConfigError(f"no dataset in {cfg.out}; run synth first")
    manifest = json.loads(man_path.read_text())
    model, named = load_dataset(cfg.out / "model.json")
    basis = None
    if model.q > 1:
        basis = DirectionBasis(np.array([named[f"delta_{d}"] for d in range(1, model.q + 1)]))
    n = int(manifest["n"])
    lines = {}
    for name, meta in manifest["files"].items():
        key = (meta["accurate_dir"], meta["coarse_dir"])
        line = SamplingLine(meta["offset"], meta["direction"], n)
        lines[key] = read_samples_csv(cfg.out / name, line, meta.get("noise_sigma", 0.0))
    return model, basis, lines, n


def cmd_recover(cfg: ExperimentConfig, threads: int = 1, methods=("localized",)) -> dict:
    """Recover from the dataset in the output directory; writes recovery, match and spectrum files."""
    model, basis, lines, n = _load_synth(cfg)
    cfg.n = n
    weights = make_kernel_weights(LowPassFilter(), n)
    out = {}
    for method in methods:
        try:
            res = run_method(cfg, model, basis, lines, method, weights)
        except DegenerateSubspaceError as exc:
            raise Degenerate(f"{method}: {exc}") from exc
        if res.points.shape[0] == 0:
            raise Degenerate(f"{method}: no sources recovered")
        prefix = "recovery" if method == "localized" else f"baseline_{method}"
        _write_json(cfg.out / f"{prefix}.json",
                    {"method": method, "K_hat": int(res.points.shape[0]), **res.detail})
        reports = []
        for r in cfg.radii:
            rep = match_points(model.frequencies, res.points, r, circular=model.q == 1)
            d = rep.to_dict()
            if model.q == 1:
                d["frequency_rmse"] = frequency_rmse(res.points[:, 0], model.frequencies[:, 0])
            reports.append(d)
        _write_json(cfg.out / ("match.json" if method == "localized" else f"match_{method}.json"), reports)
        out[method] = {"K_hat": int(res.points.shape[0]), "match": reports}
    if "localized" in methods:
        for key, s in lines.items():
            p = recovery_params(cfg, model, basis, key)
            grid = eval_sigma_grid(s, weights, cfg.grid_size)
            write_spectrum_csv(grid, cfg.out / f"spectrum_{_line_name(key)}.csv", p.m_min / 2)
    return out


def cmd_baseline(cfg: ExperimentConfig, threads: int = 1) -> dict:
    methods = [m for m in cfg.methods if m != "localized"] or ["esprit", "music"]
    return cmd_recover(cfg, threads, methods)


def _trial_rows(cfg: ExperimentConfig, snr: float, trial: int, weights):
    model, basis = build_scene(cfg, trial)
    lines = synth_lines(cfg, model, basis, snr, trial)
    samples = sum(s.line.num_samples for s in lines.values())
    rows = {}
    for method in cfg.methods:
        t0 = time.perf_counter()
        try:
            res = run_method(cfg, model, basis, lines, method, weights)
        except DegenerateSubspaceError:
            res = MethodResult(method, np.zeros((0, model.q)), np.zeros(0), {})
        dt = time.perf_counter() - t0
        rows[method] = [score(model, res, r) for r in cfg.radii], dt
    return model.K, samples, rows


def cmd_bench(cfg: ExperimentConfig, threads: int = 1) -> list[list]:
    """SNR sweep; writes ``bench.csv`` for the first radius and ``bench_r<r>.csv`` for the others."""
    try:
        model0, basis0 = build_scene(cfg)
        if basis0 is not None and cfg.check_range:
            check_wrap(model0, basis0)
    except WrapAroundError as exc:
        raise ConfigError(str(exc)) from exc
    weights = make_kernel_weights(LowPassFilter(), cfg.n)
    jobs = [(snr, t) for snr in cfg.snr_db for t in range(cfg.trials)]

    def one(job):
        return _trial_rows(cfg, job[0], job[1], weights)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(j) for j in jobs]

    tables = {r: [] for r in cfg.radii}
    for snr in cfg.snr_db:
        chunk = [res for (s, _), res in zip(jobs, results) if s == snr]
        K, samples = chunk[0][0], chunk[0][1]
        for method in cfg.methods:
            per_trial = [c[2][method] for c in chunk]
            runtime = float(np.mean([dt for _, dt in per_trial])) if cfg.timing else 0.0
            for ri, r in enumerate(cfg.radii):
                matched = np.array([sc[ri][0] for sc, _ in per_trial], dtype=float)
                rmse = np.array([sc[ri][1] for sc, _ in per_trial], dtype=float)
                ok = rmse[~np.isnan(rmse)]
                tables[r].append([_fmt_snr(snr), method, samples, K, float(matched.mean()),
                                  float(ok.mean()) if ok.size else float("nan"),
                                  float(ok.std()) if ok.size else float("nan"), runtime])
    cfg.out.mkdir(parents=True, exist_ok=True)
    for i, r in enumerate(cfg.radii):
        name = "bench.csv" if i == 0 else f"bench_r{r:g}.csv"
        with open(cfg.out / name, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(BENCH_HEADER)
            for row in tables[r]:
                w.writerow([row[0], row[1], row[2], row[3]] + [repr(v) for v in row[4:]])
    _write_json(cfg.out / "manifest.json", {"command": "bench", "base_seed": cfg.seed,
                                             "radii": cfg.radii, "config": cfg.to_dict()})
    return tables[cfg.radii[0]]


def cmd_plotdata(cfg: ExperimentConfig, threads: int = 1) -> list[str]:
    """Kernel profiles, one sigma grid with its threshold, Hankel singular values."""
    cfg.out.mkdir(parents=True, exist_ok=True)
    written = []
    G = cfg.profile_rows
    x = uniform_grid(G)
    filt = LowPassFilter()
    for n in cfg.kernel_n:
        if 2 * n - 1 > G:
            raise ConfigError(f"profile_rows={G} too small for n={n}")
        phi = trig_poly_grid(make_kernel_weights(filt, n).coefficients, G).real
        name = f"kernel_phi_{n}.csv"
        with open(cfg.out / name, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "phi", "abs"])
            for xi, v in zip(x, phi):
                w.writerow([repr(float(xi)), repr(float(v)), repr(float(abs(v)))])
        written.append(name)

    model, basis = build_scene(cfg)
    try:
        lines = synth_lines(cfg, model, basis, cfg.snr_db[0], 0)
    except WrapAroundError as exc:
        raise ConfigError(str(exc)) from exc
    key = _plan(basis, cfg.scheme)[0]
    s = lines[key]
    p = recovery_params(cfg, model, basis, key)
    grid = eval_sigma_grid(s, make_kernel_weights(filt, cfg.n), cfg.grid_size)
    write_spectrum_csv(grid, cfg.out / "sigma_grid.csv", p.m_min / 2)
    written.append("sigma_grid.csv")
    sv = hankel_eigen_histogram(s, SubspaceConfig(model_order=model.K))
    with open(cfg.out / "hankel_singular_values.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["singular_value"])
        w.writerows([[repr(float(v))] for v in sv])
    written.append("hankel_singular_values.csv")
    _write_json(cfg.out / "manifest.json", {"command": "plotdata", "base_seed": cfg.seed,
                                             "files": written, "config": cfg.to_dict()})
    return written


COMMANDS = {"synth": cmd_synth, "recover": cmd_recover, "bench": cmd_bench,
            "plotdata": cmd_plotdata, "baseline": cmd_baseline}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="locsep", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI experiment config")
        p.add_argument("--seed", type=int, default=None, help="base seed (overrides [noise] seed)")
        p.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
        p.add_argument("--threads", type=int, default=1)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(args.config, seed=args.seed, out=args.out)
        result = COMMANDS[args.command](cfg, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Degenerate as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    if args.command == "bench":
        for row in result:
            print(",".join(str(v) for v in row))
    elif args.command in ("recover", "baseline"):
        for method, info in result.items():
            m = info["match"][0]
            print(f"{method}: K_hat={info['K_hat']} matched={m['matched']} rmse={m['rmse']:.3e}")
    else:
        print(f"wrote {cfg.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
