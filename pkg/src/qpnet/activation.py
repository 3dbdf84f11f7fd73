"""Separating activations ``sigma(w) = beta(psi . w) u_plus`` on R^N."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _relu_tanh(xi):
    return np.maximum(np.tanh(xi), 0.0)


def _relu_tanh_grad(xi):
    # subgradient 0 at the kink
    return np.where(xi > 0, 1.0 - np.tanh(xi) ** 2, 0.0)


def _sigmoid(xi):
    return 0.5 * (1.0 + np.tanh(0.5 * xi))


def _gated_tanh(xi):
    return np.tanh(xi) * _sigmoid(xi)


def _gated_tanh_grad(xi):
    t, s = np.tanh(xi), _sigmoid(xi)
    return (1.0 - t * t) * s + t * s * (1.0 - s)


# Lipschitz constants: ReluTanh inherits tanh's 1.  For GatedTanh, max |beta'|
# is about 0.6036 (at xi ~ 0.403, dense scan of [-50, 50]); 1.25 is the
# published rounded-up certificate.
GATES = {
    "relu_tanh": (_relu_tanh, _relu_tanh_grad, 1.0),
    "gated_tanh": (_gated_tanh, _gated_tanh_grad, 1.25),
}


def _floating(xi):
    # keeps extended precision when the caller asks for it
    xi = np.asarray(xi)
    return xi if xi.dtype.kind == "f" else xi.astype(np.float64)


@dataclass(frozen=True)
class GateSpec:
    """Scalar gate with ``beta(0) = 0``, ``beta(+inf) = 1``, ``beta(-inf) = 0``."""

    name: str = "gated_tanh"

    def __post_init__(self):
        if self.name not in GATES:
            raise ValueError(f"unknown gate {self.name!r}; choose from {sorted(GATES)}")

    def __call__(self, xi):
        return GATES[self.name][0](_floating(xi))

    def grad(self, xi):
        return GATES[self.name][1](_floating(xi))

    @property
    def lipschitz(self) -> float:
        return GATES[self.name][2]

    @property
    def has_kink(self) -> bool:
        return self.name == "relu_tanh"


def seq_dot(a, b):
    """Dot product summed strictly left to right over the last axis.

    Trailing zero terms leave the result bit-identical, which is what makes
    zero-padded and truncated networks agree exactly.
    """
    prod = np.asarray(a) * np.asarray(b)
    if prod.shape[-1] == 0:
        return np.zeros(prod.shape[:-1])
    return np.cumsum(prod, axis=-1)[..., -1]


@dataclass(frozen=True, eq=False)
class RankOne:
    psi: np.ndarray
    u_plus: np.ndarray
    gate: GateSpec = field(default_factory=GateSpec)
    kind = "rank_one"

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=np.float64).ravel()
        u = np.asarray(self.u_plus, dtype=np.float64).ravel()
        if psi.shape != u.shape:
            raise ValueError("psi and u_plus must have the same length")
        if not (np.linalg.norm(psi) > 0 and np.linalg.norm(u) > 0):
            raise ValueError("psi and u_plus must be nonzero")
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "u_plus", u)

    @property
    def dim(self) -> int:
        return len(self.psi)

    def to_json(self) -> dict:
        return {"kind": self.kind, "psi": self.psi.tolist(), "u_plus": self.u_plus.tolist(), "gate": self.gate.name}


@dataclass(frozen=True)
class Componentwise:
    """Elementwise gate.  No separating-property guarantee; for experiments only."""

    gate: GateSpec = field(default_factory=GateSpec)
    kind = "componentwise"

    @property
    def dim(self):
        return None

    def to_json(self) -> dict:
        return {"kind": self.kind, "gate": self.gate.name}


ActivationSpec = RankOne | Componentwise


def rank_one(n: int, gate: str = "gated_tanh", psi=None, u_plus=None) -> RankOne:
    """Rank-one activation with unit-norm ``psi`` and ``u_plus`` (uniform direction by default)."""
    uniform = np.full(n, 1.0 / np.sqrt(n))
    return RankOne(uniform if psi is None else psi, uniform if u_plus is None else u_plus, GateSpec(gate))


def _check_dim(act, w):
    if isinstance(act, RankOne) and w.shape[-1] != act.dim:
        raise ValueError(f"activation has dimension {act.dim}, input has {w.shape[-1]}")


def apply(act: ActivationSpec, w) -> np.ndarray:
    """``sigma(w)``; ``w`` may carry leading batch axes."""
    w = np.asarray(w, dtype=np.float64)
    _check_dim(act, w)
    if isinstance(act, RankOne):
        s = seq_dot(w, act.psi)
        return act.gate(s)[..., None] * act.u_plus
    return act.gate(w)


def lipschitz_bound(act: ActivationSpec) -> float:
    if isinstance(act, RankOne):
        return float(np.linalg.norm(act.psi) * np.linalg.norm(act.u_plus) * act.gate.lipschitz)
    return act.gate.lipschitz


def truncate(act: ActivationSpec, n: int) -> ActivationSpec:
    if isinstance(act, RankOne):
        if not 1 <= n <= act.dim:
            raise ValueError(f"cannot truncate a dimension-{act.dim} activation to {n}")
        return RankOne(act.psi[:n], act.u_plus[:n], act.gate)
    return act


def pad(act: ActivationSpec, m: int) -> ActivationSpec:
    if isinstance(act, RankOne):
        if m < act.dim:
            raise ValueError("padding target is smaller than the activation dimension")
        extra = np.zeros(m - act.dim)
        return RankOne(np.concatenate([act.psi, extra]), np.concatenate([act.u_plus, extra]), act.gate)
    return act


def activation_to_json(act: ActivationSpec) -> dict:
    return act.to_json()


def activation_from_json(obj: dict) -> ActivationSpec:
    if obj["kind"] == "rank_one":
        return RankOne(np.array(obj["psi"], dtype=np.float64), np.array(obj["u_plus"], dtype=np.float64), GateSpec(obj["gate"]))
    if obj["kind"] == "componentwise":
        return Componentwise(GateSpec(obj["gate"]))
    raise ValueError(f"unknown activation kind {obj['kind']!r}")


@dataclass
class SeparatingReport:
    ok: bool
    trials: int
    counts: dict
    max_positive_gap: float
    max_negative_norm: float
    max_kernel_norm: float
    first_violation: dict | None = None

    def __bool__(self):
        return self.ok


def check_separating(act: RankOne, lam: float = 100.0, trials: int = 1000, tol: float = 1e-6, seed=0) -> SeparatingReport:
    """Probe the directional limits of ``sigma(lam * x)`` on random directions.

    Directions with ``psi.x > 0.1`` must land within ``tol`` of ``u_plus``,
    those with ``psi.x < -0.1`` within ``tol`` of 0 (exactly 0 for ReluTanh),
    and projections onto ``ker psi`` must give 0 (exactly for ReluTanh).
    Exact kernel zeros need ``psi . x`` to vanish in floating point, which the
    projection delivers when ``psi`` is supported on one coordinate.
    """
    if not isinstance(act, RankOne):
        raise TypeError("separating check needs a RankOne activation")
    rng = np.random.default_rng(seed)
    exact = act.gate.has_kink
    psi = act.psi
    counts = {"positive": 0, "negative": 0, "kernel": 0, "skipped": 0}
    pos_gap = neg_norm = ker_norm = 0.0
    first = None

    def fail(kind, x, value):
        nonlocal first
        if first is None:
            first = {"side": kind, "direction": x.tolist(), "value": float(value)}

    for _ in range(trials):
        x = rng.standard_normal(act.dim)
        x /= np.linalg.norm(x)
        p = float(seq_dot(psi, x))
        if p > 0.1:
            counts["positive"] += 1
            gap = float(np.linalg.norm(apply(act, lam * x) - act.u_plus))
            pos_gap = max(pos_gap, gap)
            if not gap < tol:
                fail("positive", x, gap)
        elif p < -0.1:
            counts["negative"] += 1
            out = apply(act, lam * x)
            nrm = float(np.linalg.norm(out))
            neg_norm = max(neg_norm, nrm)
            if (exact and np.any(out != 0.0)) or not nrm < tol:
                fail("negative", x, nrm)
        else:
            counts["skipped"] += 1
        xk = x - (seq_dot(psi, x) / seq_dot(psi, psi)) * psi
        counts["kernel"] += 1
        out = apply(act, lam * xk)
        nrm = float(np.linalg.norm(out))
        ker_norm = max(ker_norm, nrm)
        if (exact and np.any(out != 0.0)) or not nrm < tol:
            fail("kernel", xk, nrm)
    return SeparatingReport(first is None, trials, counts, pos_gap, neg_norm, ker_norm, first)
