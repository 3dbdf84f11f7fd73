"""End-to-end tasks: scalar functional regression, projection curves, and the
codebook pipeline for function-valued targets.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import data
from .activation import GateSpec, RankOne, seq_dot
from .embed import PointEval, builtin_encoder, dyadic_sites, encode_many
from .net import NeuronParams, ScalarNet, forward_scalar, forward_vector, init_scalar, init_vector, project_params
from .quantize import BorelNet, build_codebook, metric_project, sq_distances
from .train import TrainConfig, fit, loss_mse, predict


def scaled_rank_one(n: int, scale: float = 8.0, gate: str = "gated_tanh") -> RankOne:
    """``psi = u_plus = (scale / sqrt(n)) * ones``, so both have norm ``scale``."""
    v = np.full(n, scale / math.sqrt(n))
    return RankOne(v, v.copy(), GateSpec(gate))


# ---------------------------------------------------------------------------
# scalar regression


@dataclass
class ScalarTask:
    family: data.FamilySpec = field(default_factory=data.FamilySpec)
    target: str = "integral"
    encoder: str = "fourier"
    n: int = 16
    j: int = 32
    psi_scale: float = 8.0
    test_fraction: float = 0.2
    split_seed: int = 0
    train: TrainConfig = field(default_factory=lambda: TrainConfig("adam", 1e-3, steps=2000, batch_size=256, seed=42))


def run_scalar_task(task: ScalarTask) -> dict:
    """Generate, encode, fit, and score on the held-out split."""
    t0 = time.perf_counter()
    ds = data.attach_target(data.gen_fourier_family(task.family), task.target)
    train_ds, test_ds = data.split(ds, task.test_fraction, task.split_seed)
    enc = builtin_encoder(task.encoder, ds.records[0].sample.grid, task.n)
    z_train, z_test = encode_many(enc, train_ds.samples, task.n), encode_many(enc, test_ds.samples, task.n)
    t_train, t_test = train_ds.scalar_targets(), test_ds.scalar_targets()
    act = scaled_rank_one(task.n, task.psi_scale)
    model = init_scalar(task.n, task.j, act, np.random.default_rng(task.train.seed), enc)
    res = fit(model, (z_train, t_train), task.train)
    pred = predict(res.model, z_test)
    return {
        "model": res.model,
        "history": res.history,
        "train_loss": loss_mse(res.model, (z_train, t_train)),
        "test_max_abs_error": float(np.max(np.abs(pred - t_test))),
        "test_mse": float(np.mean((pred - t_test) ** 2)),
        "n_train": len(train_ds),
        "n_test": len(test_ds),
        "seconds": time.perf_counter() - t0,
    }


# ---------------------------------------------------------------------------
# projection error over truncation levels


def reference_net(n: int, j: int, rng: np.random.Generator, decay: float = 2.0, gate: str = "gated_tanh") -> ScalarNet:
    """A net whose parameters fall off like ``i^-decay`` in every coordinate index.

    This mimics a net obtained by truncating an infinite-dimensional one, so
    coarser projections are genuinely close to it.
    """
    idx = np.arange(1, n + 1, dtype=np.float64)
    w = idx**-decay
    psi = w / np.linalg.norm(w)
    act = RankOne(psi, psi.copy(), GateSpec(gate))
    neurons = [
        NeuronParams(rng.normal(0, 1, n) * w, rng.normal(0, 1, (n, n)) * np.outer(w, w), rng.normal(0, 1, n) * w)
        for _ in range(j)
    ]
    return ScalarNet(n, neurons, act)


def projection_curve(net: ScalarNet, z_full) -> list:
    """``max |net_N'(z[:N']) - net(z)|`` for N' = 1..N over the rows of ``z_full``."""
    z_full = np.atleast_2d(np.asarray(z_full, dtype=np.float64))
    ref = np.atleast_1d(forward_scalar(net, z_full))
    curve = []
    for k in range(1, net.truncation + 1):
        out = np.atleast_1d(forward_scalar(project_params(net, k), z_full[:, :k]))
        curve.append(float(np.max(np.abs(out - ref))))
    return curve


def fourier_inputs(count: int, n: int, seed: int = 0, grid: int = 1001) -> np.ndarray:
    ds = data.gen_fourier_family(data.FamilySpec(3, 1.0, grid, count, seed))
    return encode_many(builtin_encoder("fourier", ds.records[0].sample.grid, n), ds.samples, n)


# ---------------------------------------------------------------------------
# function-valued targets through a codebook


@dataclass
class BorelTask:
    family: data.FamilySpec = field(default_factory=lambda: data.FamilySpec(3, 1.0, 101, 512, 7))
    n: int = 16
    k: int = 16
    m: int = 8
    j: int = 8
    epsilon: float = 0.1
    psi_scale: float = 8.0
    test_fraction: float = 0.25
    split_seed: int = 0
    train: TrainConfig = field(default_factory=lambda: TrainConfig("adam", 3e-3, steps=1500, batch_size=128, seed=42))


def target_encoder(grid, k: int) -> PointEval:
    """Point evaluations of the target at coarse-to-fine dyadic sites of its grid."""
    return PointEval(dyadic_sites(k, float(grid[0]), float(grid[-1])))


def run_borel_task(task: BorelTask, project=metric_project) -> dict:
    """Train a vector net on encoded ``x -> x^2`` targets and check the codebook bound per test point.

    The codebook is built from the encoded targets of every sample (train and
    test), so the evaluation points lie in the compact set it covers and
    ``covering_radius`` applies to them.  The bound checked for each test
    point ``x`` with ``a = H(g(x))`` and net output ``w`` is
    ``|a - a_r| <= 2 |a - w| + covering_radius`` where ``r`` is the chosen
    center.
    """
    t0 = time.perf_counter()
    ds = data.attach_target(data.gen_fourier_family(task.family), "square_operator")
    train_ds, test_ds = data.split(ds, task.test_fraction, task.split_seed)
    grid = ds.records[0].sample.grid
    enc = builtin_encoder("fourier", grid, task.n)
    henc = target_encoder(grid, task.k)
    a_all = encode_many(henc, [r.target for r in ds.records], task.k)
    cb = build_codebook(a_all, task.epsilon, payloads=ds.ids)
    cb.payload_refs = list(cb.payloads)  # payloads are record ids in the dataset file

    z_train = encode_many(enc, train_ds.samples, task.n)
    a_train = encode_many(henc, [r.target for r in train_ds.records], task.k)
    act = scaled_rank_one(task.n, task.psi_scale)
    vnet = init_vector(task.n, task.j, task.m, task.k, act, np.random.default_rng(task.train.seed), enc)
    res = fit(vnet, (z_train, a_train), task.train)
    bnet = BorelNet(res.model, cb, henc)

    rows = []
    for rec in test_ds.records:
        z = encode_many(enc, [rec.sample], task.n)[0]
        a = encode_many(henc, [rec.target], task.k)[0]
        w = forward_vector(bnet.vnet, z)
        r = project(cb, w)
        net_err = math.sqrt(seq_dot(a - w, a - w))
        enc_err = math.sqrt(seq_dot(a - cb.centers[r], a - cb.centers[r]))
        nearest = math.sqrt(float(np.min(sq_distances(cb.centers, a))))
        rows.append(
            {
                "id": rec.id,
                "index": int(r),
                "encoded_error": enc_err,
                "net_error": net_err,
                "nearest_center": nearest,
                "bound": 2 * net_err + cb.covering_radius,
                "ok": enc_err <= 2 * net_err + cb.covering_radius,
                "ok_nearest": enc_err <= 2 * net_err + nearest,
            }
        )
    return {
        "rows": rows,
        "codebook": cb,
        "bnet": bnet,
        "covering_radius": cb.covering_radius,
        "train_loss": loss_mse(res.model, (z_train, a_train)),
        "mean_net_error": float(np.mean([r["net_error"] for r in rows])),
        "all_ok": all(r["ok"] and r["ok_nearest"] for r in rows),
        "seconds": time.perf_counter() - t0,
    }
