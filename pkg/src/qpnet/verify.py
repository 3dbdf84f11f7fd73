"""Invariant suites with a machine-readable report.

Each suite returns a list of checks ``{"name", "ok", ...details}``.  Suites are
run sequentially from fixed seeds so reports are reproducible.
"""

from __future__ import annotations

import math
import time

import numpy as np

from . import data, tasks
from .activation import Componentwise, GateSpec, RankOne, apply, check_separating, lipschitz_bound
from .embed import (
    CUBE_NORM_BOUND,
    ConvexPreserving,
    LinearFunctional,
    MetricLandmark,
    PointEval,
    dyadic_sites,
    encode,
    encode_many,
    fourier_functionals,
    pseudometric,
    verify_cube,
)
from .net import NeuronParams, forward_scalar, init_scalar, init_vector, project_params
from .quantize import Codebook, build_codebook, metric_project, sq_distances, voronoi_preimage_check
from .realize import ext1, ext2, ext3, flatten, pad_net, realize, stability_check
from .train import TrainConfig, fd_check, fit, params_of

SUITES = ("embed", "activation", "net", "quantize", "realize", "train", "uap")


def _check(name, ok, **detail):
    return {"name": name, "ok": bool(ok), **detail}


def _family(seed, count, grid=201, modes=3):
    return data.gen_fourier_family(data.FamilySpec(modes, 1.0, grid, count, seed))


def _encoders(grid, n, samples):
    g = np.asarray(grid)
    f = fourier_functionals(g, n)
    return {
        "point_eval": PointEval(dyadic_sites(n)),
        "metric_landmark": MetricLandmark(tuple(samples[:n])),
        "linear_functional": LinearFunctional(f),
        "convex_preserving": ConvexPreserving.from_samples(f, samples),
    }


# ---------------------------------------------------------------------------


def suite_embed(seed: int) -> list:
    n = 12
    ds = _family(seed, 300)
    xs = ds.samples
    encs = _encoders(xs[0].grid, n, xs)
    out = []
    for name, enc in encs.items():
        bad = [r.id for r, z in zip(ds.records, encode_many(enc, xs, n)) if not verify_cube(z)]
        out.append(_check(f"cube[{name}]", not bad, failures=len(bad)))
    rng = np.random.default_rng(seed)
    worst = 0.0
    ok = True
    for _ in range(100):
        a, b = rng.choice(len(xs), 2, replace=False)
        d = [pseudometric(encs["point_eval"], xs[a], xs[b], k) for k in range(1, n + 1)]
        ok &= all(d[i] <= d[i + 1] for i in range(n - 1))
        for i in range(n):
            gap = d[-1] ** 2 - d[i] ** 2
            worst = max(worst, gap - 1.0 / (i + 1))
    out.append(_check("pseudometric monotone with tail gap", ok and worst <= 1e-12, worst_excess=worst))
    # convexity: linear functionals attain their extremes over a simplex at its
    # vertices, so vertex min/max are the exact image ranges.  Only the 2m+1
    # functionals that see the 3-mode family have a nondegenerate range.
    f = fourier_functionals(xs[0].grid, 7)
    verts = np.stack([x.values for x in xs[:3]])
    cp = ConvexPreserving.from_samples(f, verts)
    err = 0.0
    for _ in range(200):
        w = rng.dirichlet(np.ones(3), 2)
        t = rng.uniform()
        a, b = w[0] @ verts, w[1] @ verts
        lhs = encode(cp, t * a + (1 - t) * b, 7)
        rhs = t * encode(cp, a, 7) + (1 - t) * encode(cp, b, 7)
        err = max(err, float(np.max(np.abs(lhs - rhs))))
    out.append(_check("convexity preservation", err <= 1e-12, max_error=err))
    return out


def suite_activation(seed: int) -> list:
    out = []
    for n in (2, 8):
        e1 = np.eye(n)[0]
        rep = check_separating(RankOne(e1, e1, GateSpec("relu_tanh")), 100.0, 1000, 1e-6, seed)
        out.append(_check(f"separating limits relu_tanh N={n}", rep.ok, counts=rep.counts, first=rep.first_violation))
    xi = np.linspace(20, 60, 401)
    lim = all(bool(np.all(1 - GateSpec(g)(xi) < 1e-8) and np.all(np.abs(GateSpec(g)(-xi)) < 1e-8)) for g in ("relu_tanh", "gated_tanh"))
    out.append(_check("gate limits beyond |xi| >= 20", lim))
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for gate in ("relu_tanh", "gated_tanh"):
        for act in (RankOne(rng.normal(size=6), rng.normal(size=6), GateSpec(gate)), Componentwise(GateSpec(gate))):
            w1, w2 = rng.normal(0, 3, (2, 2000, 6))
            lhs = np.linalg.norm(apply(act, w1) - apply(act, w2), axis=1)
            rhs = lipschitz_bound(act) * np.linalg.norm(w1 - w2, axis=1)
            worst = max(worst, float(np.max(lhs - rhs)))
    out.append(_check("empirical Lipschitz", worst <= 0.0, worst_excess=worst))
    return out


def suite_net(seed: int) -> list:
    rng = np.random.default_rng(seed)
    out = []
    exact = True
    for _ in range(20):
        n = int(rng.integers(1, 10))
        nt = init_scalar(n, int(rng.integers(1, 5)), tasks.scaled_rank_one(n, 1.0), rng)
        z = rng.uniform(0, 1, (5, n)) / np.arange(1, n + 1)
        exact &= bool(np.array_equal(forward_scalar(project_params(nt, n), z), forward_scalar(nt, z)))
    out.append(_check("projection at full truncation is bit-exact", exact))
    ref = tasks.reference_net(32, 8, rng)
    curve = tasks.projection_curve(ref, tasks.fourier_inputs(100, 32, seed))
    first = next((k + 1 for k, v in enumerate(curve) if v < 1e-3), None)
    out.append(_check("projection error curve reaches 1e-3", first is not None and curve[-1] == 0.0, first_level=first, curve=curve))
    return out


def brute_force_index(centers, w) -> int:
    """Independent double loop: first strict improvement wins."""
    best, best_d = 0, None
    for r, c in enumerate(centers):
        d = 0.0
        for a, b in zip(c, w):
            d += (a - b) * (a - b)
        if best_d is None or d < best_d:
            best, best_d = r, d
    return best


def suite_quantize(seed: int, project=metric_project) -> list:
    rng = np.random.default_rng(seed)
    out = []
    mism = 0
    pre_ok = True
    for size in (1, 2, 3, 5, 8, 16, 32, 64):
        centers = rng.integers(-3, 4, (size, 2)).astype(np.float64) / 2
        centers = np.unique(centers, axis=0)
        rng.shuffle(centers)
        cb = Codebook(centers, list(range(len(centers))))
        # lattice queries include many exact equidistant points
        qs = np.concatenate([rng.integers(-8, 9, (150, 2)) / 4.0, rng.normal(0, 1.5, (150, 2))])
        for q in qs:
            if project(cb, q) != brute_force_index(cb.centers, q):
                mism += 1
        pre_ok &= bool(voronoi_preimage_check(cb, qs, project))
    out.append(_check("projection matches brute-force min-index scan", mism == 0, mismatches=mism))
    out.append(_check("Voronoi preimage structure", pre_ok))
    cb = build_codebook(np.linspace(0, 1, 11), 0.15)
    out.append(
        _check(
            "greedy cover example",
            np.allclose(cb.centers.ravel(), [0, 0.2, 0.4, 0.6, 0.8, 1.0]) and abs(cb.covering_radius - 0.1) < 1e-12,
        )
    )
    pts = rng.normal(size=(400, 3))
    cb = build_codebook(pts, 0.7)
    near = np.sqrt([np.min(sq_distances(cb.centers, p)) for p in pts])
    out.append(_check("covering radius <= epsilon", cb.covering_radius <= 0.7 and np.all(near <= cb.covering_radius)))
    return out


def suite_realize(seed: int) -> list:
    rng = np.random.default_rng(seed)
    out = []
    exact = True
    for _ in range(30):
        n = int(rng.integers(1, 8))
        m = int(rng.integers(n, 12))
        nt = init_scalar(n, int(rng.integers(1, 4)), RankOne(rng.normal(size=n), rng.normal(size=n)), rng)
        z = rng.uniform(0, 1, m) / np.arange(1, m + 1)
        exact &= forward_scalar(pad_net(nt, m), z) == realize(flatten(nt), n, nt.J, nt.activation)(z[:n])
    out.append(_check("padded forward equals truncated forward", exact))
    worst = 0.0
    for _ in range(200):
        n, m = int(rng.integers(1, 8)), 12
        h, beta, y, v = rng.normal(size=n), rng.normal(size=(n, n)), rng.normal(size=n), rng.normal(size=m)
        worst = max(worst, abs(np.linalg.norm(ext1(h, m)) - np.linalg.norm(h)) / max(np.linalg.norm(h), 1e-300))
        worst = max(worst, abs(np.linalg.norm(ext3(y, m)) - np.linalg.norm(y)) / max(np.linalg.norm(y), 1e-300))
        ratio = np.linalg.norm(ext2(beta, m) @ v) / (np.linalg.norm(beta) * np.linalg.norm(v))
        worst = max(worst, ratio - 1.0)
    out.append(_check("ext norm bounds", worst <= 1e-12, worst=worst))
    ds = _family(seed, 50)
    n = 8
    zs = encode_many(LinearFunctional(fourier_functionals(ds.samples[0].grid, n)), ds.samples, n)
    act = RankOne(rng.normal(size=n), rng.normal(size=n))
    ok = bool(np.all(np.linalg.norm(zs, axis=1) <= CUBE_NORM_BOUND + 1e-12))
    for _ in range(100):
        p = NeuronParams(rng.normal(size=n), rng.normal(size=(n, n)), rng.normal(size=n))
        s = 10.0 ** rng.uniform(-6, 0)
        q = NeuronParams(p.h + s * rng.normal(size=n), p.B + s * rng.normal(size=(n, n)), p.y + s * rng.normal(size=n))
        ok &= all(row.ok for row in stability_check(p, q, zs, act))
    out.append(_check("realization stability bound", ok))
    return out


def suite_train(seed: int) -> list:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(20):
        n, j = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        act = RankOne(rng.normal(size=n), rng.normal(size=n)) if i % 2 else Componentwise()
        model = init_vector(n, j, 2, 3, act, rng) if i % 3 == 0 else init_scalar(n, j, act, rng)
        z = rng.uniform(0, 1, (5, n)) / np.arange(1, n + 1)
        t = rng.normal(size=(5, 3)) if i % 3 == 0 else rng.normal(size=5)
        worst = max(worst, fd_check(model, (z, t)).max_rel_error)
    out = [_check("gradient matches central differences", worst < 1e-4, max_rel_error=worst)]
    model = init_scalar(3, 2, Componentwise(), rng)
    z, t = rng.uniform(0, 0.3, (8, 3)), rng.normal(size=8)
    res = fit(model, (z, t), TrainConfig("sgd", 0.0, steps=5, batch_size=4, seed=seed))
    same = all(np.array_equal(a, b) for a, b in zip(params_of(model).arrays(), params_of(res.model).arrays()))
    out.append(_check("lr=0 leaves the model unchanged", same))
    return out


def suite_uap(seed: int) -> list:
    task = tasks.ScalarTask(train=TrainConfig("adam", 1e-3, steps=2000, batch_size=256, seed=seed))
    res = tasks.run_scalar_task(task)
    out = [
        _check(
            "integral functional regression",
            res["test_max_abs_error"] < 0.05,
            test_max_abs_error=res["test_max_abs_error"],
            train_loss=res["train_loss"],
            seconds=res["seconds"],
        )
    ]
    b = tasks.run_borel_task(tasks.BorelTask())
    out.append(
        _check(
            "codebook pipeline bound",
            b["all_ok"] and b["covering_radius"] <= 0.1,
            covering_radius=b["covering_radius"],
            centers=b["codebook"].R,
            mean_net_error=b["mean_net_error"],
        )
    )
    return out


RUNNERS = {
    "embed": suite_embed,
    "activation": suite_activation,
    "net": suite_net,
    "quantize": suite_quantize,
    "realize": suite_realize,
    "train": suite_train,
    "uap": suite_uap,
}


def verify(suite: str = "all", seed: int = 42, project=None) -> dict:
    """Run the named suite (or ``"all"``) and return a report with an overall ``ok``."""
    names = SUITES if suite == "all" else tuple(s.strip() for s in suite.split(","))
    unknown = [s for s in names if s not in RUNNERS]
    if unknown:
        raise ValueError(f"unknown suites {unknown}; choose from {SUITES} or 'all'")
    report = {"seed": seed, "suites": {}}
    for name in names:
        t0 = time.perf_counter()
        if name == "quantize" and project is not None:
            checks = suite_quantize(seed, project)
        else:
            checks = RUNNERS[name](seed)
        report["suites"][name] = {
            "ok": all(c["ok"] for c in checks),
            "checks": checks,
            "seconds": time.perf_counter() - t0,
        }
    report["ok"] = all(s["ok"] for s in report["suites"].values())
    return report


def max_index_projector(codebook, w) -> int:
    """Deliberately wrong tie rule (largest index); used as a mutation."""
    d = sq_distances(codebook.centers, np.asarray(w, dtype=np.float64))
    return int(len(d) - 1 - np.argmin(d[::-1]))


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def report_json(report: dict) -> dict:
    return _jsonable(report)
