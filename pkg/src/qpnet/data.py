"""Synthetic functional data: Fourier families on [0, 1], targets, JSONL I/O.

A family draws ``x(t) = a0 + sum_k (a_k cos 2 pi k t + b_k sin 2 pi k t)`` with
``a0 ~ U[-c, c]`` and ``a_k, b_k ~ U[-c/k^2, c/k^2]``, which gives a uniformly
bounded, equicontinuous (hence compact) input class.  Every record gets its
own generator spawned from the master seed, so records do not depend on
``count`` or on generation order.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .embed import FunctionSample

TARGET_KINDS = ("integral", "point_eval", "square_integral", "square_operator")


@dataclass(frozen=True)
class FamilySpec:
    modes: int = 3
    bound: float = 1.0
    grid: int = 1001
    count: int = 2048
    seed: int = 42

    def __post_init__(self):
        if self.modes < 0:
            raise ValueError("modes must be >= 0")
        if not self.bound > 0:
            raise ValueError("bound must be positive")
        if self.grid < 2:
            raise ValueError("grid needs at least 2 points")
        if self.count < 0:
            raise ValueError("count must be >= 0")


@dataclass(eq=False)
class Record:
    id: str
    sample: FunctionSample
    target: object = None
    coefficients: np.ndarray | None = None

    def to_json(self) -> dict:
        rec = {"id": self.id, "grid": self.sample.grid.tolist(), "values": self.sample.values.tolist()}
        rec["target"] = _target_to_json(self.target)
        return rec

    @classmethod
    def from_json(cls, obj: dict) -> "Record":
        sample = FunctionSample(np.array(obj["grid"], dtype=np.float64), np.array(obj["values"], dtype=np.float64), obj["id"])
        return cls(obj["id"], sample, _target_from_json(obj.get("target")))


@dataclass(eq=False)
class Dataset:
    records: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("record ids must be unique")
        kinds = {_target_kind(r.target) for r in self.records}
        if len(kinds) > 1:
            raise ValueError(f"mixed target kinds {sorted(kinds)}")

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def samples(self) -> list:
        return [r.sample for r in self.records]

    @property
    def ids(self) -> list:
        return [r.id for r in self.records]

    def by_id(self) -> dict:
        return {r.id: r for r in self.records}

    def scalar_targets(self) -> np.ndarray:
        return np.array([float(r.target) for r in self.records])

    def target_values(self) -> np.ndarray:
        """Function-valued targets as a (count, G) array of grid values."""
        return np.stack([r.target.values for r in self.records])


def _target_kind(t) -> str:
    if t is None:
        return "none"
    if isinstance(t, FunctionSample):
        return "function"
    if np.ndim(t) == 0:
        return "scalar"
    return "vector"


def _target_to_json(t):
    if t is None:
        return None
    if isinstance(t, FunctionSample):
        return {"grid": t.grid.tolist(), "values": t.values.tolist()}
    if np.ndim(t) == 0:
        return float(t)
    return np.asarray(t, dtype=np.float64).tolist()


def _target_from_json(t):
    if t is None:
        return None
    if isinstance(t, dict):
        return FunctionSample(np.array(t["grid"], dtype=np.float64), np.array(t["values"], dtype=np.float64))
    if isinstance(t, list):
        return np.array(t, dtype=np.float64)
    return float(t)


# ---------------------------------------------------------------------------
# generation


def draw_coefficients(rng: np.random.Generator, modes: int, bound: float) -> np.ndarray:
    """``[a0, a1, b1, a2, b2, ...]`` with the 1/k^2 envelope."""
    out = [rng.uniform(-bound, bound)]
    for k in range(1, modes + 1):
        lim = bound / k**2
        out.extend(rng.uniform(-lim, lim, 2))
    return np.array(out)


def fourier_values(coeffs, t) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    x = np.full_like(t, coeffs[0])
    for k in range(1, (len(coeffs) - 1) // 2 + 1):
        x = x + coeffs[2 * k - 1] * np.cos(2 * np.pi * k * t) + coeffs[2 * k] * np.sin(2 * np.pi * k * t)
    return x


def uniform_grid(g: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, g)


def gen_fourier_family(spec: FamilySpec) -> Dataset:
    grid = uniform_grid(spec.grid)
    children = np.random.SeedSequence(spec.seed).spawn(spec.count)
    records = []
    for i, ss in enumerate(children):
        coeffs = draw_coefficients(np.random.default_rng(ss), spec.modes, spec.bound)
        rid = f"fourier-{i:06d}"
        records.append(Record(rid, FunctionSample(grid, fourier_values(coeffs, grid), rid), None, coeffs))
    meta = {"family": "fourier", **asdict(spec), "split": "all", "target": None}
    return Dataset(records, meta)


# ---------------------------------------------------------------------------
# targets


def target_of(kind: str, x: FunctionSample, t0: float | None = None):
    if kind == "integral":
        return float(np.trapezoid(x.values, x.grid))
    if kind == "point_eval":
        if t0 is None or not 0.0 <= t0 <= 1.0:
            raise ValueError(f"point evaluation needs t0 in [0, 1], got {t0!r}")
        return float(x(t0))
    if kind == "square_integral":
        return float(np.trapezoid(x.values**2, x.grid))
    if kind == "square_operator":
        return FunctionSample(x.grid, x.values**2)
    raise ValueError(f"unknown target kind {kind!r}; choose from {TARGET_KINDS}")


def attach_target(dataset: Dataset, kind: str, t0: float | None = None) -> Dataset:
    """A copy of ``dataset`` whose records carry ``g(x)`` for the named target."""
    if kind not in TARGET_KINDS:
        raise ValueError(f"unknown target kind {kind!r}; choose from {TARGET_KINDS}")
    if kind == "point_eval" and (t0 is None or not 0.0 <= t0 <= 1.0):
        raise ValueError(f"point evaluation needs t0 in [0, 1], got {t0!r}")
    records = [replace(r, target=target_of(kind, r.sample, t0)) for r in dataset.records]
    meta = dict(dataset.metadata, target=kind)
    if kind == "point_eval":
        meta["t0"] = t0
    return Dataset(records, meta)


def split(dataset: Dataset, test_fraction: float = 0.2, seed: int = 0) -> tuple:
    """Disjoint (train, test) by id, chosen by a seeded permutation."""
    if not 0.0 <= test_fraction <= 1.0:
        raise ValueError("test_fraction must lie in [0, 1]")
    n_test = int(round(test_fraction * len(dataset)))
    perm = np.random.default_rng(seed).permutation(len(dataset))
    test_idx = set(perm[:n_test].tolist())
    train = [r for i, r in enumerate(dataset.records) if i not in test_idx]
    test = [r for i, r in enumerate(dataset.records) if i in test_idx]
    meta = dict(dataset.metadata, split_seed=seed, test_fraction=test_fraction)
    return Dataset(train, dict(meta, split="train")), Dataset(test, dict(meta, split="test"))


# ---------------------------------------------------------------------------
# I/O


def meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def dumps_jsonl(dataset: Dataset) -> str:
    return "".join(json.dumps(r.to_json()) + "\n" for r in dataset.records)


def save_jsonl(dataset: Dataset, path):
    Path(path).write_text(dumps_jsonl(dataset))
    meta_path(path).write_text(json.dumps(dataset.metadata, sort_keys=True) + "\n")


def load_jsonl(path) -> Dataset:
    path = Path(path)
    records = [Record.from_json(json.loads(line)) for line in path.read_text().splitlines() if line.strip()]
    mp = meta_path(path)
    meta = json.loads(mp.read_text()) if mp.exists() else {}
    return Dataset(records, meta)
