"""MSE loss, closed-form gradients, finite-difference checks, and SGD/Adam fitting.

Scalar and vector networks share one code path: parameters are stacked with a
leading component axis (``M = 1`` for a scalar net), i.e. ``h (M, J, N)``,
``B (M, J, N, N)``, ``y (M, J, N)`` and, for vector nets, ``v (M, K)``.
The activation vectors ``psi`` and ``u_plus`` are fixed, not trained.
"""

from __future__ import annotations

import logging
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from .activation import RankOne
from .net import NeuronParams, ScalarNet, VectorNet

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

log = logging.getLogger(__name__)

KINK_MARGIN = 1e-3


class DivergenceError(RuntimeError):
    def __init__(self, step: int, what: str):
        super().__init__(f"non-finite {what} at step {step}")
        self.step = step


class KinkError(ValueError):
    """Finite differences are meaningless this close to the ReluTanh kink."""


@dataclass
class TrainConfig:
    optimizer: str = "adam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    steps: int = 2000
    batch_size: int = 64
    seed: int = 42
    loss: str = "mse"

    def __post_init__(self):
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.loss != "mse":
            raise ValueError("only the mse loss is supported")
        if not self.lr >= 0:
            raise ValueError("lr must be nonnegative")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def load_toml(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def config_from_toml(doc: dict) -> TrainConfig:
    """Build a TrainConfig from the ``[optimizer]`` section (``kind`` names the method)."""
    opt = dict(doc.get("optimizer", {}))
    if "kind" in opt:
        opt["optimizer"] = opt.pop("kind")
    known = set(TrainConfig.__dataclass_fields__)
    extra = set(opt) - known
    if extra:
        raise ValueError(f"unknown optimizer keys {sorted(extra)}")
    return TrainConfig(**opt)


# ---------------------------------------------------------------------------
# parameter packing


@dataclass
class Params:
    h: np.ndarray
    B: np.ndarray
    y: np.ndarray
    v: np.ndarray | None = None
    kink: bool = False

    def arrays(self):
        return [a for a in (self.h, self.B, self.y, self.v) if a is not None]

    def copy(self) -> "Params":
        return Params(*(None if a is None else a.copy() for a in (self.h, self.B, self.y, self.v)))


GradPacket = Params


def params_of(model) -> Params:
    if isinstance(model, VectorNet):
        st = [c.stacked() for c in model.components]
        return Params(*(np.stack([s[i] for s in st]) for i in range(3)), model.out_vectors.copy())
    h, B, y = model.stacked()
    return Params(h[None], B[None], y[None])


def with_params(model, p: Params):
    def scalar(base: ScalarNet, m: int) -> ScalarNet:
        nrs = [NeuronParams(p.h[m, j].copy(), p.B[m, j].copy(), p.y[m, j].copy()) for j in range(p.h.shape[1])]
        return ScalarNet(base.truncation, nrs, base.activation, base.encoder)

    if isinstance(model, VectorNet):
        return VectorNet([scalar(c, m) for m, c in enumerate(model.components)], p.v.copy())
    return scalar(model, 0)


# ---------------------------------------------------------------------------
# forward / backward


def _forward(act, p: Params, Z):
    pre = np.einsum("mjkl,bl->bmjk", p.B, Z) + p.y  # (b, M, J, N)
    if isinstance(act, RankOne):
        s = pre @ act.psi  # (b, M, J)
        g = act.gate(s)
        c = p.h @ act.u_plus  # (M, J)
        scal = np.einsum("bmj,mj->bm", g, c)
        cache = (pre, s, g, c)
    else:
        a = act.gate(pre)
        scal = np.einsum("bmjk,mjk->bm", a, p.h)
        cache = (pre, None, a, None)
    out = scal @ p.v if p.v is not None else scal[:, 0]
    return out, scal, cache


def predict(model, Z) -> np.ndarray:
    """Batched predictions (same values as the net's forward up to summation order)."""
    return _forward(model.activation, params_of(model), np.atleast_2d(np.asarray(Z, dtype=np.float64)))[0]


def _targets(model, T):
    T = np.asarray(T, dtype=np.float64)
    return T.reshape(len(T), -1) if isinstance(model, VectorNet) else T.reshape(-1)


def _loss(pred, T) -> float:
    if len(T) == 0:
        raise ValueError("empty batch")
    return float(np.mean((pred - T) ** 2))


def loss_mse(model, batch) -> float:
    """Mean squared error over every sample (and every output coordinate)."""
    Z, T = batch
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    T = _targets(model, T)
    if len(Z) == 0:
        raise ValueError("empty batch")
    return _loss(predict(model, Z), T)


def _loss_and_grad(act, p: Params, Z, T):
    out, scal, (pre, s, g, c) = _forward(act, p, Z)
    loss = _loss(out, T)
    dout = 2.0 * (out - T) / out.size
    if p.v is not None:
        dv = scal.T @ dout  # (M, K)
        dscal = dout @ p.v.T  # (b, M)
    else:
        dv = None
        dscal = dout[:, None]
    if isinstance(act, RankOne):
        dh = np.einsum("bm,bmj,k->mjk", dscal, g, act.u_plus)
        dsj = dscal[:, :, None] * c[None] * act.gate.grad(s)  # (b, M, J)
        dpre = dsj[..., None] * act.psi
        near = np.abs(s)
    else:
        dh = np.einsum("bm,bmjk->mjk", dscal, g)
        dpre = dscal[:, :, None, None] * p.h[None] * act.gate.grad(pre)
        near = np.abs(pre)
    dy = dpre.sum(axis=0)
    dB = np.einsum("bmjk,bl->mjkl", dpre, Z)
    kink = bool(act.gate.has_kink and near.size and near.min() < KINK_MARGIN)
    return loss, Params(dh, dB, dy, dv), kink


def grad(model, batch) -> GradPacket:
    """Exact gradient of :func:`loss_mse` with respect to ``h``, ``B``, ``y`` (and ``v``).

    The packet carries ``kink`` set when a ReluTanh pre-activation lies within
    1e-3 of 0, where the subgradient 0 is used.
    """
    Z, T = batch
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    _, g, kink = _loss_and_grad(model.activation, params_of(model), Z, _targets(model, T))
    g.kink = kink
    return g


@dataclass
class FDReport:
    max_rel_error: float
    worst: tuple
    n_params: int

    def ok(self, tol: float = 1e-4) -> bool:
        return self.max_rel_error < tol


def fd_check(model, batch, step: float = 1e-5, floor: float = 1e-8, dtype=np.longdouble) -> FDReport:
    """Central differences on every parameter component against :func:`grad`.

    Relative error is ``|g - fd| / max(|g|, |fd|, floor)``.  The perturbed
    losses are evaluated in ``dtype`` (extended precision by default) so that
    rounding in the difference quotient stays far below the tolerance even
    for gradient components near the floor.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    Z, T = batch
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    T = _targets(model, T)
    act = model.activation
    p = params_of(model)
    _, g, kink = _loss_and_grad(act, p, Z, T)
    if kink:
        raise KinkError("batch has ReluTanh pre-activations within 1e-3 of the kink")
    q = Params(*(None if a is None else a.astype(dtype) for a in (p.h, p.B, p.y, p.v)))
    Zq, Tq = Z.astype(dtype), T.astype(dtype)
    hstep = dtype(step)
    worst_err, worst = 0.0, None
    count = 0
    for name in ("h", "B", "y", "v"):
        arr = getattr(q, name)
        if arr is None:
            continue
        ga = getattr(g, name)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + hstep
            up = np.mean((_forward(act, q, Zq)[0] - Tq) ** 2)
            arr[idx] = orig - hstep
            dn = np.mean((_forward(act, q, Zq)[0] - Tq) ** 2)
            arr[idx] = orig
            fd = float((up - dn) / (2 * hstep))
            err = abs(ga[idx] - fd) / max(abs(ga[idx]), abs(fd), floor)
            count += 1
            if worst is None or err > worst_err:
                worst_err, worst = float(err), (name, idx, float(ga[idx]), fd)
    return FDReport(worst_err, worst, count)


# ---------------------------------------------------------------------------
# optimizers


class SGD:
    def __init__(self, cfg: TrainConfig):
        self.lr = cfg.lr

    def step(self, params: list, grads: list):
        for a, g in zip(params, grads):
            a -= self.lr * g


class Adam:
    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params: list, grads: list):
        c = self.cfg
        if self.m is None:
            self.m = [np.zeros_like(g) for g in grads]
            self.v = [np.zeros_like(g) for g in grads]
        self.t += 1
        corr1 = 1.0 - c.beta1**self.t
        corr2 = 1.0 - c.beta2**self.t
        for a, g, m, v in zip(params, grads, self.m, self.v):
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * g * g
            a -= c.lr * (m / corr1) / (np.sqrt(v / corr2) + c.eps)


@dataclass
class FitResult:
    model: object
    history: list = field(default_factory=list)
    config: TrainConfig | None = None

    def history_csv(self) -> str:
        lines = ["step,loss"]
        lines += [f"{i},{loss!r}" for i, loss in enumerate(self.history)]
        return "\n".join(lines) + "\n"


def fit(model, dataset, config: TrainConfig, train_out_vectors: bool = True) -> FitResult:
    """Minibatch training; deterministic given ``config.seed``.

    ``dataset`` is a pair ``(Z, T)`` of encoded inputs and targets.  The
    recorded loss at each step is the minibatch loss before that step's update.
    """
    Z, T = dataset
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    T = _targets(model, T)
    if len(Z) == 0:
        raise ValueError("empty dataset")
    if len(Z) != len(T):
        raise ValueError("inputs and targets differ in length")
    rng = np.random.default_rng(config.seed)
    act = model.activation
    p = params_of(model)
    opt = Adam(config) if config.optimizer == "adam" else SGD(config)
    bs = min(config.batch_size, len(Z))
    order = rng.permutation(len(Z))
    pos = 0
    history = []
    for step in range(config.steps):
        if pos + bs > len(Z):
            order = rng.permutation(len(Z))
            pos = 0
        idx = order[pos : pos + bs]
        pos += bs
        with np.errstate(over="ignore", invalid="ignore"):  # divergence is caught below
            loss, g, _ = _loss_and_grad(act, p, Z[idx], T[idx])
        if not np.isfinite(loss):
            raise DivergenceError(step, "loss")
        history.append(loss)
        params, grads = [p.h, p.B, p.y], [g.h, g.B, g.y]
        if p.v is not None and train_out_vectors:
            params.append(p.v)
            grads.append(g.v)
        with np.errstate(over="ignore", invalid="ignore"):
            opt.step(params, grads)
        if not all(np.all(np.isfinite(a)) for a in params):
            raise DivergenceError(step, "parameters")
        if step % 500 == 0:
            log.debug("step %d loss %.6g", step, loss)
    return FitResult(with_params(model, p), history, config)


def config_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)
