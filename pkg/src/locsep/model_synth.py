"""Ground-truth exponential sums, exact samples along lines, calibrated noise."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

NOISE_FAMILIES = ("complex-gaussian", "bounded-uniform")

_MASK64 = (1 << 64) - 1


def mix64(x: int) -> int:
    """SplitMix64 finalizer: a bijective scramble of a 64-bit integer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def trial_seed(base_seed: int, trial_index: int) -> int:
    """Per-trial seed: ``mix64(base_seed XOR trial_index)``."""
    return mix64((int(base_seed) ^ int(trial_index)) & _MASK64)


@dataclass(frozen=True)
class PointSourceModel:
    """``K`` point sources: complex amplitudes and frequency vectors in R^q."""

    amplitudes: np.ndarray
    frequencies: np.ndarray

    def __post_init__(self):
        amps = np.atleast_1d(np.asarray(self.amplitudes, dtype=complex))
        freqs = np.asarray(self.frequencies, dtype=float)
        if freqs.ndim == 1:
            freqs = freqs[:, None]
        if amps.ndim != 1 or freqs.ndim != 2 or freqs.shape[0] != amps.shape[0]:
            raise ValueError("need one frequency vector per amplitude")
        if amps.size < 1:
            raise ValueError("model needs at least one source")
        if np.any(np.abs(amps) == 0):
            raise ValueError("all amplitudes must be nonzero")
        amps.setflags(write=False)
        freqs.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "frequencies", freqs)

    @property
    def q(self) -> int:
        return self.frequencies.shape[1]

    @property
    def K(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def total_mass(self) -> float:
        """``M = sum |A_k|``."""
        return float(np.sum(np.abs(self.amplitudes)))

    @property
    def min_amplitude(self) -> float:
        """``m = min |A_k|``."""
        return float(np.min(np.abs(self.amplitudes)))

    def union(self, other: "PointSourceModel") -> "PointSourceModel":
        return PointSourceModel(np.concatenate([self.amplitudes, other.amplitudes]),
                                np.vstack([self.frequencies, other.frequencies]))

    def projected(self, direction) -> np.ndarray:
        """``<direction, w_k>`` for every source (not wrapped)."""
        direction = np.atleast_1d(np.asarray(direction, dtype=float))
        if direction.shape != (self.q,):
            raise ValueError(f"direction has dimension {direction.shape}, model has q={self.q}")
        return self.frequencies @ direction

    def min_separation(self, direction=None) -> float:
        """Minimal circular distance between projected frequencies (``eta``).

        Returns ``2 pi`` for a single source.
        """
        if direction is None:
            if self.q != 1:
                raise ValueError("direction required for q > 1")
            direction = [1.0]
        lam = self.projected(direction)
        if lam.size < 2:
            return 2 * np.pi
        d = np.abs(wrap_angle(lam[:, None] - lam[None, :]))
        d[np.diag_indices_from(d)] = np.inf
        return float(d.min())

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "sources": [
                {"re": float(a.real), "im": float(a.imag), "w": [float(v) for v in w]}
                for a, w in zip(self.amplitudes, self.frequencies)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PointSourceModel":
        try:
            sources = doc["sources"]
            amps = [complex(s["re"], s.get("im", 0.0)) for s in sources]
            freqs = [list(map(float, s["w"])) for s in sources]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed model document: {exc}") from exc
        model = cls(np.array(amps), np.array(freqs, dtype=float).reshape(len(amps), -1))
        if "q" in doc and int(doc["q"]) != model.q:
            raise ValueError(f"declared q={doc['q']} but frequencies have dimension {model.q}")
        return model


def wrap_angle(x):
    """Reduce angles to (-pi, pi]."""
    y = np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2 * np.pi)
    return float(y) if np.ndim(x) == 0 else y


@dataclass(frozen=True)
class SamplingLine:
    """Sample locations ``offset + l * direction`` for ``|l| < n``."""

    offset: np.ndarray
    direction: np.ndarray
    n: int

    def __post_init__(self):
        off = np.atleast_1d(np.asarray(self.offset, dtype=float))
        dirn = np.atleast_1d(np.asarray(self.direction, dtype=float))
        if off.shape != dirn.shape or off.ndim != 1:
            raise ValueError("offset and direction must be vectors of equal length")
        if not np.any(dirn):
            raise ValueError("direction must be nonzero")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        object.__setattr__(self, "offset", off)
        object.__setattr__(self, "direction", dirn)
        object.__setattr__(self, "n", int(self.n))

    @property
    def q(self) -> int:
        return self.offset.shape[0]

    @property
    def ell(self) -> np.ndarray:
        return np.arange(-(self.n - 1), self.n)

    @property
    def num_samples(self) -> int:
        return 2 * self.n - 1

    @classmethod
    def univariate(cls, n: int) -> "SamplingLine":
        return cls([0.0], [1.0], n)


@dataclass(frozen=True)
class SampleLine:
    """The ``2n - 1`` noisy samples collected along one line."""

    line: SamplingLine
    values: np.ndarray = field(repr=False)
    noise_sigma: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.line.num_samples,):
            raise ValueError(f"expected {self.line.num_samples} samples, got {vals.shape}")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.line.n


@dataclass(frozen=True)
class NoiseSpec:
    """Noise family and level; give exactly one of ``snr_db`` and ``sigma``.

    ``reference_power`` fixes the signal power the SNR refers to. ``None`` uses
    the mean power of the exact samples on the line being corrupted.
    """

    family: str = "complex-gaussian"
    snr_db: float | None = None
    sigma: float | None = None
    seed: int = 0
    reference_power: float | None = None

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}")
        if (self.snr_db is None) == (self.sigma is None):
            raise ValueError("give exactly one of snr_db and sigma")
        if self.sigma is not None and self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.reference_power is not None and not self.reference_power > 0:
            raise ValueError("reference_power must be positive")


def exact_moments(model: PointSourceModel, line: SamplingLine) -> np.ndarray:
    """``sum_k A_k exp(-i <offset, w_k>) exp(-i l <direction, w_k>)`` for ``|l| < n``."""
    if model.q != line.q:
        raise ValueError(f"model has q={model.q}, line has q={line.q}")
    coarse = model.projected(line.offset)
    fine = model.projected(line.direction)
    coeff = model.amplitudes * np.exp(-1j * coarse)
    out = np.zeros(line.num_samples, dtype=complex)
    ell = line.ell.astype(float)
    # chunk over sources to bound memory for large scenes
    step = max(1, (1 << 22) // ell.size)
    for lo in range(0, model.K, step):
        out += np.exp(-1j * np.outer(ell, fine[lo:lo + step])) @ coeff[lo:lo + step]
    return out


def calibrate_sigma(moments: np.ndarray, snr_db: float,
                    reference_power: float | None = None) -> float:
    """Per-component noise level ``V`` for a target SNR.

    ``V = sqrt(P / (2 * 10**(snr_db/10)))`` where ``P`` is ``reference_power``
    or, by default, the mean of ``|moments|**2``. Complex noise with
    independent N(0, V^2) parts then has ``E|eps|^2 = P * 10**(-snr_db/10)``.
    """
    if reference_power is None:
        moments = np.asarray(moments)
        if moments.size == 0:
            raise ValueError("no samples to calibrate against")
        power = float(np.mean(np.abs(moments) ** 2))
        if power == 0:
            raise ValueError("cannot calibrate SNR against all-zero samples")
    else:
        power = float(reference_power)
    if np.isposinf(snr_db):
        return 0.0
    return float(np.sqrt(power / (2.0 * 10.0 ** (snr_db / 10.0))))


def draw_noise(size: int, sigma: float, family: str, rng: np.random.Generator) -> np.ndarray:
    """``size`` complex noise draws with per-component second moment ``sigma**2``."""
    if family == "complex-gaussian":
        z = rng.standard_normal((2, size))
    elif family == "bounded-uniform":
        z = rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), (2, size))
    else:
        raise ValueError(f"unknown noise family {family!r}")
    return sigma * (z[0] + 1j * z[1])


def add_noise(moments: np.ndarray, spec: NoiseSpec,
              rng: np.random.Generator | None = None) -> tuple[np.ndarray, float]:
    """Return ``(moments + eps, V)``.

    Draws from ``rng`` if given (lets several lines share one stream),
    otherwise from a fresh generator seeded with ``spec.seed``.
    """
    moments = np.asarray(moments, dtype=complex)
    if spec.sigma is not None:
        sigma = float(spec.sigma)
    else:
        sigma = calibrate_sigma(moments, spec.snr_db, spec.reference_power)
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    if sigma == 0:
        return moments.copy(), 0.0
    return moments + draw_noise(moments.size, sigma, spec.family, rng), sigma


def sample_line(model: PointSourceModel, line: SamplingLine,
                noise: NoiseSpec | None = None,
                rng: np.random.Generator | None = None) -> SampleLine:
    moments = exact_moments(model, line)
    if noise is None:
        return SampleLine(line, moments, 0.0)
    values, sigma = add_noise(moments, noise, rng)
    return SampleLine(line, values, sigma)


# -- dataset files -----------------------------------------------------------

def save_dataset(path, model: PointSourceModel, lines: dict | None = None) -> None:
    doc = model.to_dict()
    if lines:
        doc["lines"] = {name: [float(v) for v in np.asarray(vec, dtype=float)]
                        for name, vec in lines.items()}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_dataset(path) -> tuple[PointSourceModel, dict]:
    """Read a model document; returns ``(model, named_lines)``."""
    doc = json.loads(Path(path).read_text())
    lines = {k: np.asarray(v, dtype=float) for k, v in doc.get("lines", {}).items()}
    return PointSourceModel.from_dict(doc), lines


def _bundled(name: str) -> dict:
    return json.loads(resources.files("locsep").joinpath("data", name).read_text())


def twelve_points_2d() -> tuple[PointSourceModel, np.ndarray]:
    """The 12-point planar scene and its two sampling directions (rows)."""
    doc = _bundled("twelve_points_2d.json")
    lines = doc["lines"]
    return PointSourceModel.from_dict(doc), np.array([lines["delta_1"], lines["delta_2"]])


def directions_3d() -> np.ndarray:
    """The three spatial sampling directions, one per row."""
    doc = _bundled("directions_3d.json")
    return np.array([doc["lines"][f"delta_{d}"] for d in (1, 2, 3)], dtype=float)


def table1_model() -> PointSourceModel:
    """``exp(3il) - 2 exp(il) + 3 exp(-2il)``: A = (1, -2, 3), lambda = (-3, -1, 2)."""
    return PointSourceModel(np.array([1.0, -2.0, 3.0]), np.array([-3.0, -1.0, 2.0]))
