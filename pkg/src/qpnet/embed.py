"""Separating sequences and the truncated Hilbert-cube embedding.

An encoder turns an input (usually a sampled function) into the first ``N``
coordinates of a point of the Hilbert cube ``{a : 0 <= a_i <= 1/i}``.  Every
encoder is an ordered list of raw real functionals ``hbar_i``; coordinate
``i`` (1-based) is ``(phi(hbar_i(x)) + 1) / (2 i)`` with ``phi`` a strictly
increasing squashing map onto ``[-1, 1]``.  The convexity-preserving encoder
replaces ``phi`` by an affine rescaling followed by ``chi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

CUBE_NORM_BOUND = math.pi / math.sqrt(6.0)


class EncodingError(ValueError):
    """Raised when an input cannot be encoded to the requested depth."""


@dataclass(frozen=True, eq=False)
class FunctionSample:
    """A real function known through its values on a strictly increasing grid."""

    grid: np.ndarray
    values: np.ndarray
    id: str | None = None

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if grid.ndim != 1 or values.ndim != 1:
            raise ValueError("grid and values must be one dimensional")
        if len(grid) < 1 or len(grid) != len(values):
            raise ValueError(
                f"grid and values must have equal nonzero length, got {len(grid)} and {len(values)}"
            )
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __call__(self, t):
        """Evaluate by linear interpolation (constant extension outside the grid)."""
        return np.interp(t, self.grid, self.values)

    def to_record(self) -> dict:
        return {"id": self.id, "grid": self.grid.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_record(cls, rec: dict) -> "FunctionSample":
        return cls(np.array(rec["grid"], dtype=np.float64), np.array(rec["values"], dtype=np.float64), rec.get("id"))


Element = Union[FunctionSample, np.ndarray, Sequence[float]]


# ---------------------------------------------------------------------------
# scalar maps


def _arctan_normalizer(t):
    return np.clip((2.0 / np.pi) * np.arctan(t), -1.0, 1.0)


def _tanh_normalizer(t):
    return np.tanh(t)


NORMALIZERS = {"arctan": _arctan_normalizer, "tanh": _tanh_normalizer}


@dataclass(frozen=True)
class Normalizer:
    """Named strictly increasing map from the reals onto ``[-1, 1]``."""

    name: str = "arctan"

    def __post_init__(self):
        if self.name not in NORMALIZERS:
            raise ValueError(f"unknown normalizer {self.name!r}; choose from {sorted(NORMALIZERS)}")

    def __call__(self, t):
        return NORMALIZERS[self.name](np.asarray(t, dtype=np.float64))


def default_chi(t):
    """Identity on [-1/2, 1/2], tanh-saturated outside; strictly increasing, bounded by 1."""
    t = np.asarray(t, dtype=np.float64)
    a = np.abs(t)
    outer = np.sign(t) * (0.5 + 0.5 * np.tanh(2.0 * (a - 0.5)))
    return np.where(a <= 0.5, t, outer)


CHIS = {"tanh_saturated": default_chi}


@dataclass(frozen=True)
class ChiSpec:
    name: str = "tanh_saturated"

    def __post_init__(self):
        if self.name not in CHIS:
            raise ValueError(f"unknown chi {self.name!r}")

    def __call__(self, t):
        return CHIS[self.name](t)


# ---------------------------------------------------------------------------
# encoders


def _sites_values(x: Element, sites: np.ndarray) -> np.ndarray:
    if not isinstance(x, FunctionSample):
        raise EncodingError("point evaluation needs a FunctionSample input")
    return np.interp(sites, x.grid, x.values)


def _check_depth(n: int, available: int):
    if n < 1:
        raise EncodingError(f"truncation must be >= 1, got {n}")
    if n > available:
        raise EncodingError(f"encoder provides {available} functionals, requested {n}")


def _linear_values(weights: np.ndarray, x: Element, n: int) -> np.ndarray:
    vals = x.values if isinstance(x, FunctionSample) else np.asarray(x, dtype=np.float64)
    if weights.shape[1] != vals.shape[0]:
        raise EncodingError(
            f"weight vectors have length {weights.shape[1]} but the sample has {vals.shape[0]} grid points"
        )
    # row-wise sequential sums keep each functional independent of the others
    return np.cumsum(weights[:n] * vals[None, :], axis=1)[:, -1]


def _cube_coords(h: np.ndarray) -> np.ndarray:
    i = np.arange(1, len(h) + 1, dtype=np.float64)
    return (1.0 / (2.0 * i)) * (h + 1.0)


@dataclass(frozen=True, eq=False)
class PointEval:
    """``hbar_i(x) = x(s_i)``; prefer a coarse-to-fine site order such as :func:`dyadic_sites`."""

    sites: np.ndarray
    normalizer: Normalizer = field(default_factory=Normalizer)
    kind = "point_eval"

    def __post_init__(self):
        object.__setattr__(self, "sites", np.asarray(self.sites, dtype=np.float64).ravel())

    def __len__(self):
        return len(self.sites)

    def raw(self, x: Element, n: int) -> np.ndarray:
        _check_depth(n, len(self))
        return _sites_values(x, self.sites[:n])

    def to_json(self) -> dict:
        return {"kind": self.kind, "sites": self.sites.tolist(), "normalizer": self.normalizer.name}


def _distance(metric: str, x: Element, d: Element) -> float:
    if isinstance(x, FunctionSample):
        if not isinstance(d, FunctionSample):
            raise EncodingError("landmark and input must both be FunctionSamples")
        diff = x.values - np.interp(x.grid, d.grid, d.values)
        if metric == "sup":
            return float(np.max(np.abs(diff)))
        if metric == "l2":
            if len(x.grid) == 1:
                return float(abs(diff[0]))
            return float(math.sqrt(np.trapezoid(diff**2, x.grid)))
        if metric == "l1":
            if len(x.grid) == 1:
                return float(abs(diff[0]))
            return float(np.trapezoid(np.abs(diff), x.grid))
        raise EncodingError(f"unknown metric {metric!r}")
    x, d = np.asarray(x, dtype=np.float64), np.asarray(d, dtype=np.float64)
    if x.shape != d.shape:
        raise EncodingError("element and landmark dimensions differ")
    diff = x - d
    if metric in ("l2", "euclidean"):
        return float(np.linalg.norm(diff))
    if metric == "sup":
        return float(np.max(np.abs(diff)))
    if metric == "l1":
        return float(np.sum(np.abs(diff)))
    raise EncodingError(f"unknown metric {metric!r}")


@dataclass(frozen=True, eq=False)
class MetricLandmark:
    """``hbar_i(x) = rho(x, d_i)`` for a dense sequence of landmarks ``d_i``.

    Landmarks are FunctionSamples (interpolated onto the input's grid) or plain
    vectors.  ``metric`` is one of ``"l2"``, ``"l1"``, ``"sup"``.
    """

    landmarks: tuple
    metric: str = "l2"
    normalizer: Normalizer = field(default_factory=Normalizer)
    kind = "metric_landmark"

    def __post_init__(self):
        object.__setattr__(self, "landmarks", tuple(self.landmarks))
        if self.metric not in ("l2", "l1", "sup", "euclidean"):
            raise ValueError(f"unknown metric {self.metric!r}")

    def __len__(self):
        return len(self.landmarks)

    def raw(self, x: Element, n: int) -> np.ndarray:
        _check_depth(n, len(self))
        return np.array([_distance(self.metric, x, d) for d in self.landmarks[:n]])

    def to_json(self) -> dict:
        marks = [
            {"grid": d.grid.tolist(), "values": d.values.tolist()}
            if isinstance(d, FunctionSample)
            else {"vector": np.asarray(d, dtype=np.float64).tolist()}
            for d in self.landmarks
        ]
        return {"kind": self.kind, "landmarks": marks, "metric": self.metric, "normalizer": self.normalizer.name}


@dataclass(frozen=True, eq=False)
class LinearFunctional:
    """``hbar_i(x) = sum_k w_ik x(grid_k)``: quadrature weights for coefficients or integrals."""

    weights: np.ndarray
    normalizer: Normalizer = field(default_factory=Normalizer)
    kind = "linear_functional"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError("weights must be a 2-D array (functional x grid)")
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.shape[0]

    def raw(self, x: Element, n: int) -> np.ndarray:
        _check_depth(n, len(self))
        return _linear_values(self.weights, x, n)

    def to_json(self) -> dict:
        return {"kind": self.kind, "weights": self.weights.tolist(), "normalizer": self.normalizer.name}


@dataclass(frozen=True, eq=False)
class ConvexPreserving:
    """Encoder that maps convex compacts to convex subsets of the cube.

    Needs the exact image interval ``[alpha_n, beta_n]`` of each linear
    functional over the compact set.  ``ranges_estimated`` records that the
    ranges came from a finite sample (see :meth:`from_samples`), in which case
    exact convexity is only guaranteed on the hull of those samples.
    """

    functionals: np.ndarray
    ranges: np.ndarray
    chi: ChiSpec = field(default_factory=ChiSpec)
    ranges_estimated: bool = False
    kind = "convex_preserving"

    def __post_init__(self):
        w = np.asarray(self.functionals, dtype=np.float64)
        r = np.asarray(self.ranges, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError("functionals must be a 2-D array")
        if r.shape != (w.shape[0], 2):
            raise ValueError("need one (alpha, beta) pair per functional")
        if np.any(r[:, 0] >= r[:, 1]):
            raise ValueError("every range must satisfy alpha < beta")
        object.__setattr__(self, "functionals", w)
        object.__setattr__(self, "ranges", r)

    @classmethod
    def from_samples(cls, functionals, samples: Sequence[Element], chi: ChiSpec | None = None):
        w = np.asarray(functionals, dtype=np.float64)
        vals = np.array([_linear_values(w, s, len(w)) for s in samples])
        ranges = np.stack([vals.min(axis=0), vals.max(axis=0)], axis=1)
        return cls(w, ranges, chi or ChiSpec(), ranges_estimated=True)

    def __len__(self):
        return self.functionals.shape[0]

    def raw(self, x: Element, n: int) -> np.ndarray:
        _check_depth(n, len(self))
        return _linear_values(self.functionals, x, n)

    def rescale(self, t: np.ndarray) -> np.ndarray:
        a, b = self.ranges[: len(t), 0], self.ranges[: len(t), 1]
        return (t - b) / (b - a) + 0.5

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "functionals": self.functionals.tolist(),
            "ranges": self.ranges.tolist(),
            "chi": self.chi.name,
            "ranges_estimated": self.ranges_estimated,
        }


EncoderSpec = Union[PointEval, MetricLandmark, LinearFunctional, ConvexPreserving]


def encode(spec: EncoderSpec, x: Element, n: int) -> np.ndarray:
    """First ``n`` cube coordinates of ``x``."""
    h = spec.raw(x, n)
    if isinstance(spec, ConvexPreserving):
        return _cube_coords(spec.chi(spec.rescale(h)))
    return _cube_coords(spec.normalizer(h))


def encode_many(spec: EncoderSpec, xs: Sequence[Element], n: int) -> np.ndarray:
    return np.array([encode(spec, x, n) for x in xs]).reshape(len(xs), n)


def pseudometric(spec: EncoderSpec, x: Element, y: Element, n: int) -> float:
    """Euclidean distance between the depth-``n`` encodings of ``x`` and ``y``."""
    d = encode(spec, x, n) - encode(spec, y, n)
    # fsum is correctly rounded, so the value is monotone in n
    return math.sqrt(math.fsum((d * d).tolist()))


def tail_bound(n: int) -> float:
    """Worst-case l2 contribution of all cube coordinates beyond ``n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.sqrt(1.0 / n)


@dataclass
class CubeReport:
    ok: bool
    violations: list  # 1-based indices
    norm: float

    def __bool__(self):
        return self.ok


def verify_cube(z) -> CubeReport:
    z = np.asarray(z, dtype=np.float64).ravel()
    upper = 1.0 / np.arange(1, len(z) + 1, dtype=np.float64)
    bad = np.flatnonzero(~((z >= 0.0) & (z <= upper))) + 1
    norm = float(np.linalg.norm(z))
    ok = len(bad) == 0 and norm <= CUBE_NORM_BOUND + 1e-12
    return CubeReport(ok, bad.tolist(), norm)


# ---------------------------------------------------------------------------
# constructors for common separating sequences


def dyadic_sites(n: int, a: float = 0.0, b: float = 1.0) -> np.ndarray:
    """``a, b, midpoint, quarter points, ...``: each level refines the previous one."""
    out = [a, b]
    level = 1
    while len(out) < n:
        k = 2**level
        out.extend(a + (b - a) * j / k for j in range(1, k, 2))
        level += 1
    return np.array(out[:n])


def trapezoid_weights(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64)
    w = np.zeros_like(grid)
    if len(grid) == 1:
        return w
    dx = np.diff(grid)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


def fourier_functionals(grid, n: int) -> np.ndarray:
    """Quadrature weights for the mean, then cos/sin coefficients ``2 int x(t) cos(2 pi k t) dt``, ... on [0, 1]."""
    grid = np.asarray(grid, dtype=np.float64)
    tw = trapezoid_weights(grid)
    rows = [tw]
    k = 1
    while len(rows) < n:
        rows.append(2.0 * tw * np.cos(2 * np.pi * k * grid))
        if len(rows) < n:
            rows.append(2.0 * tw * np.sin(2 * np.pi * k * grid))
        k += 1
    return np.array(rows[:n])


def interval_integral_functionals(grid, intervals) -> np.ndarray:
    """Integrals of ``x`` over each ``(lo, hi)`` interval (a pi-system of indicators).

    Each row integrates the linear interpolant of the samples exactly over the
    interval, so it agrees with the trapezoid rule when the endpoints are grid
    sites.
    """
    grid = np.asarray(grid, dtype=np.float64)
    left, right = grid[:-1], grid[1:]
    dx = right - left
    rows = []
    for lo, hi in intervals:
        a, b = np.clip(lo, left, right), np.clip(hi, left, right)
        # int_a^b of the hat pieces (right - t)/dx and (t - left)/dx
        wl = ((right - a) ** 2 - (right - b) ** 2) / (2 * dx)
        wr = ((b - left) ** 2 - (a - left) ** 2) / (2 * dx)
        w = np.zeros_like(grid)
        w[:-1] += wl
        w[1:] += wr
        rows.append(w)
    return np.array(rows)


def dyadic_intervals(n: int, a: float = 0.0, b: float = 1.0) -> list:
    out = []
    level = 0
    while len(out) < n:
        k = 2**level
        out.extend((a + (b - a) * j / k, a + (b - a) * (j + 1) / k) for j in range(k))
        level += 1
    return out[:n]


# ---------------------------------------------------------------------------
# serialization


def encoder_to_json(spec: EncoderSpec) -> dict:
    return spec.to_json()


def encoder_from_json(obj: dict) -> EncoderSpec:
    kind = obj["kind"]
    if kind == "point_eval":
        return PointEval(np.array(obj["sites"], dtype=np.float64), Normalizer(obj.get("normalizer", "arctan")))
    if kind == "metric_landmark":
        marks = tuple(
            FunctionSample(np.array(m["grid"]), np.array(m["values"])) if "grid" in m else np.array(m["vector"])
            for m in obj["landmarks"]
        )
        return MetricLandmark(marks, obj.get("metric", "l2"), Normalizer(obj.get("normalizer", "arctan")))
    if kind == "linear_functional":
        return LinearFunctional(np.array(obj["weights"], dtype=np.float64), Normalizer(obj.get("normalizer", "arctan")))
    if kind == "convex_preserving":
        return ConvexPreserving(
            np.array(obj["functionals"], dtype=np.float64),
            np.array(obj["ranges"], dtype=np.float64),
            ChiSpec(obj.get("chi", "tanh_saturated")),
            bool(obj.get("ranges_estimated", False)),
        )
    raise ValueError(f"unknown encoder kind {kind!r}")


def builtin_encoder(name: str, grid, n: int) -> EncoderSpec:
    """Encoders that depend only on the data grid, used by the CLI config."""
    if name == "fourier":
        return LinearFunctional(fourier_functionals(grid, n))
    if name == "dyadic":
        return PointEval(dyadic_sites(n, float(grid[0]), float(grid[-1])))
    if name == "intervals":
        return LinearFunctional(interval_integral_functionals(grid, dyadic_intervals(n, float(grid[0]), float(grid[-1]))))
    raise ValueError(f"unknown builtin encoder {name!r}")
