"""The twelve acceptance criteria, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line, and the lines are repeated in the
terminal summary.  Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import json
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from conftest import ACCEPTANCE_LINES
from qpnet import data, tasks
from qpnet.activation import Componentwise, GateSpec, RankOne, apply, check_separating
from qpnet.embed import (
    CUBE_NORM_BOUND,
    ConvexPreserving,
    FunctionSample,
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
from qpnet.net import NeuronParams, forward_scalar, init_scalar, init_vector, project_params
from qpnet.quantize import Codebook, metric_project, voronoi_preimage_check
from qpnet.realize import ext1, ext2, ext3, flatten, pad_net, realize, stability_check
from qpnet.train import fd_check

ROOT = Path(__file__).resolve().parents[1]


def record(number, title, ok, detail):
    line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def cube_points(rng, count, n):
    return rng.uniform(0, 1, (count, n)) / np.arange(1, n + 1)


# ---------------------------------------------------------------------------


def test_01_separating_property_limits():
    t0 = time.perf_counter()
    n = 8
    e = np.eye(n)
    # psi on one axis so that kernel directions have psi . x == 0 exactly in floating point
    act = RankOne(e[0], e[0], GateSpec("relu_tanh"))
    rep = check_separating(act, lam=100.0, trials=1000, tol=1e-6, seed=0)
    secs = time.perf_counter() - t0
    ok = rep.ok and rep.max_negative_norm == 0.0 and rep.max_kernel_norm == 0.0 and secs < 1.0
    record(
        1,
        "separating-property limits (RankOne+ReluTanh, lambda=100, 1000 directions)",
        ok,
        f"pos gap {rep.max_positive_gap:.2e}, neg {rep.max_negative_norm}, kernel {rep.max_kernel_norm}, {secs:.2f}s",
    )


def test_02_gradient_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    gate = GateSpec("gated_tanh")
    worst, where = 0.0, None
    for i in range(200):
        n, j = int(rng.integers(1, 6)), int(rng.integers(1, 4))
        act = RankOne(rng.normal(size=n), rng.normal(size=n), gate) if i % 2 else Componentwise(gate)
        if i % 3 == 0:
            model, t = init_vector(n, j, 2, 3, act, rng), rng.normal(size=(5, 3))
        else:
            model, t = init_scalar(n, j, act, rng), rng.normal(size=5)
        rep = fd_check(model, (cube_points(rng, 5, n), t), step=1e-5, floor=1e-8)
        if rep.max_rel_error > worst:
            worst, where = rep.max_rel_error, (i, rep.worst[0])
    secs = time.perf_counter() - t0
    record(2, "gradient vs central differences (200 pairs, step 1e-5)", worst < 1e-4 and secs < 10.0, f"max rel err {worst:.2e} at {where}, {secs:.2f}s")


def test_03_replication_identities():
    rng = np.random.default_rng(3)
    exact = 0
    for _ in range(100):
        n = int(rng.integers(1, 33))
        m = int(rng.integers(n, 33))
        j = int(rng.integers(1, 5))
        net = init_scalar(n, j, RankOne(rng.normal(size=n), rng.normal(size=n)), rng)
        z = cube_points(rng, 1, m)[0]
        padded = forward_scalar(pad_net(net, m), z)
        projected = forward_scalar(net, z[:n])
        via_theta = realize(flatten(net), n, j, net.activation)(z[:n])
        exact += padded == projected == via_theta
    record(3, "padded forward == projected forward, bit-exact (100 cases, N<=M<=32)", exact == 100, f"{exact}/100 exact")


def test_04_ext_norm_bounds():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 16))
        m = n + int(rng.integers(0, 16))
        h, beta, y, v = rng.normal(size=n), rng.normal(size=(n, n)), rng.normal(size=n), rng.normal(size=m)
        worst = max(worst, abs(np.linalg.norm(ext1(h, m)) - np.linalg.norm(h)) / np.linalg.norm(h))
        worst = max(worst, abs(np.linalg.norm(ext3(y, m)) - np.linalg.norm(y)) / np.linalg.norm(y))
        bound = np.linalg.norm(beta) * np.linalg.norm(v)
        worst = max(worst, (np.linalg.norm(ext2(beta, m) @ v) - bound) / bound)
    record(4, "ext norm identities and Frobenius bound (1000 cases)", worst <= 1e-12, f"worst relative excess {worst:.2e}")


def test_05_realization_stability():
    rng = np.random.default_rng(5)
    n = 8
    ds = data.gen_fourier_family(data.FamilySpec(3, 1.0, 201, 50, 5))
    zs = encode_many(LinearFunctional(fourier_functionals(ds.samples[0].grid, n)), ds.samples, n)
    act = RankOne(rng.normal(size=n), rng.normal(size=n))
    failures = 0
    for _ in range(500):
        p = NeuronParams(rng.normal(size=n), rng.normal(size=(n, n)), rng.normal(size=n))
        s = 10.0 ** rng.uniform(-8, 0.5)
        q = NeuronParams(p.h + s * rng.normal(size=n), p.B + s * rng.normal(size=(n, n)), p.y + s * rng.normal(size=n))
        failures += sum(not row.ok for row in stability_check(p, q, zs, act))
    # norm bound on every encoded input produced in this module's criteria
    norm_ok = bool(np.all(np.linalg.norm(zs, axis=1) <= CUBE_NORM_BOUND + 1e-12))
    record(5, "stability lhs <= rhs (500 perturbations x 50 inputs) and |z| <= pi/sqrt(6)", failures == 0 and norm_ok, f"{failures} violations, max |z| {np.max(np.linalg.norm(zs, axis=1)):.4f}")


def _fuzz_functions(rng, count, grid):
    """Mix of smooth families, rough noise, and huge-amplitude inputs."""
    out = []
    for i in range(count):
        kind = i % 3
        if kind == 0:
            c = data.draw_coefficients(rng, 5, 10.0 ** rng.uniform(-2, 2))
            v = data.fourier_values(c, grid)
        elif kind == 1:
            v = rng.normal(0, 10.0 ** rng.uniform(-3, 3), len(grid))
        else:
            v = rng.standard_cauchy(len(grid)) * 1e6
        out.append(FunctionSample(grid, v))
    return out


def test_06_cube_and_pseudometric():
    rng = np.random.default_rng(6)
    grid = np.linspace(0, 1, 65)
    n = 10
    xs = _fuzz_functions(rng, 10_000, grid)
    f = fourier_functionals(grid, n)
    encoders = {
        "point_eval": PointEval(dyadic_sites(n)),
        "metric_landmark": MetricLandmark(tuple(_fuzz_functions(rng, n, grid)), "l2"),
        "linear_functional": LinearFunctional(f),
        "convex_preserving": ConvexPreserving.from_samples(f, xs[:100]),
    }
    bad = {}
    for name, enc in encoders.items():
        zs = encode_many(enc, xs, n)
        bad[name] = sum(not verify_cube(z) for z in zs)
    mono_fail, worst_gap = 0, -np.inf
    for _ in range(500):
        a, b = rng.choice(len(xs), 2, replace=False)
        for enc in encoders.values():
            d = [pseudometric(enc, xs[a], xs[b], k) for k in range(1, n + 1)]
            mono_fail += sum(d[k] > d[k + 1] for k in range(n - 1))
            for k in range(1, n):
                worst_gap = max(worst_gap, d[-1] ** 2 - d[k - 1] ** 2 - 1.0 / k)
    ok = not any(bad.values()) and mono_fail == 0 and worst_gap <= 1e-12
    record(6, "cube containment (4 encoders x 10^4 inputs), monotone pseudometric with tail gap", ok, f"cube failures {bad}, monotonicity failures {mono_fail}, worst gap excess {worst_gap:.2e}")


def test_07_convexity_preservation():
    rng = np.random.default_rng(7)
    grid = np.linspace(0, 1, 257)
    m = 3
    n = 2 * m + 1  # functionals that see a 3-mode family
    vert_coeffs = np.stack([data.draw_coefficients(rng, m, 1.0) for _ in range(4)])
    verts = np.stack([data.fourier_values(c, grid) for c in vert_coeffs])
    # linear functionals attain their extremes over a simplex at its vertices
    cp = ConvexPreserving.from_samples(fourier_functionals(grid, n), verts)
    worst = 0.0
    for _ in range(1000):
        wa, wb = rng.dirichlet(np.ones(4), 2)
        t = rng.uniform()
        a, b = wa @ verts, wb @ verts
        lhs = encode(cp, t * a + (1 - t) * b, n)
        rhs = t * encode(cp, a, n) + (1 - t) * encode(cp, b, n)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    record(7, "convexity preservation on a coefficient simplex (1000 triples)", worst <= 1e-12, f"max deviation {worst:.2e}")


def _brute_force(centers, w):
    best, best_d = 0, None
    for r in range(len(centers)):
        d = 0.0
        for k in range(len(w)):
            diff = centers[r][k] - w[k]
            d += diff * diff
        if best_d is None or d < best_d:
            best, best_d = r, d
    return best


def test_08_metric_projection_oracle():
    rng = np.random.default_rng(8)
    mismatches = ties = queries = 0
    preimage_ok = True
    for size in range(1, 65):
        # half-integer lattice centers and quarter-lattice queries: distances are exact binary fractions
        pool = np.stack(np.meshgrid(*[np.arange(-3.0, 3.5, 0.5)] * 3), -1).reshape(-1, 3)
        centers = pool[rng.choice(len(pool), size, replace=False)]
        cb = Codebook(centers, list(range(size)))
        qs = [rng.integers(-14, 15, 3) / 4.0 for _ in range(80)]
        qs += [rng.normal(0, 2, 3) for _ in range(70)]
        if size >= 2:  # constructed ties: midpoints of center pairs
            for _ in range(7):
                i, j = rng.choice(size, 2, replace=False)
                qs.append((centers[i] + centers[j]) / 2)
        qs = np.array(qs)
        for q in qs:
            d = ((centers - q) ** 2).sum(1)
            ties += np.count_nonzero(d == d.min()) > 1
            mismatches += metric_project(cb, q) != _brute_force(centers, q)
        queries += len(qs)
        preimage_ok &= bool(voronoi_preimage_check(cb, qs))
    ok = mismatches == 0 and preimage_ok and queries >= 10_000 and ties > 0
    record(8, "metric projection vs brute-force min-index scan (sizes 1..64)", ok, f"{queries} queries, {ties} exact ties, {mismatches} mismatches, preimage ok {preimage_ok}")


def test_09_projected_nets():
    rng = np.random.default_rng(9)
    identical = True
    for _ in range(50):
        n = int(rng.integers(1, 33))
        net = init_scalar(n, int(rng.integers(1, 6)), RankOne(rng.normal(size=n), rng.normal(size=n)), rng)
        z = cube_points(rng, 10, n)
        identical &= bool(np.array_equal(forward_scalar(project_params(net, n), z), forward_scalar(net, z)))
    ref = tasks.reference_net(32, 8, rng)
    curve = tasks.projection_curve(ref, tasks.fourier_inputs(100, 32, seed=9))
    first = next((k + 1 for k, v in enumerate(curve) if v < 1e-3), None)
    ok = identical and first is not None and first <= 32
    record(9, "projection at N'=N bit-exact; error curve below 1e-3 at some N'<=32", ok, f"first N' with error < 1e-3: {first}; error at N'=1: {curve[0]:.2e}")


def test_10_codebook_pipeline_bound(manifest):
    pinned = manifest["borel_square_operator"]
    task = tasks.BorelTask(epsilon=pinned["epsilon"], n=pinned["truncation"], k=pinned["truncation"])
    task.family = data.FamilySpec(3, 1.0, pinned["target_grid"], task.family.count, task.family.seed)
    res = tasks.run_borel_task(task)
    rows = res["rows"]
    bad = [r["id"] for r in rows if not r["ok"]]
    slack = min(r["bound"] - r["encoded_error"] for r in rows)
    ok = not bad and res["covering_radius"] <= task.epsilon
    record(10, "encoded error <= 2 net error + covering radius (SquareOperator, G=101, N=16, eps=0.1)", ok, f"{len(rows)} test points, {len(bad)} violations, radius {res['covering_radius']:.4f}, min slack {slack:.3e}")


def test_11_desk_scale_uap(uap_result, manifest):
    pinned = manifest["uap_integral"]
    err, secs = uap_result["test_max_abs_error"], uap_result["seconds"]
    ok = err < pinned["threshold_max_abs_error"] and secs < 60.0
    record(11, "integral functional, held-out max abs error < 0.05 in < 60 s", ok, f"max abs error {err:.4f} (pinned {pinned['pinned_test_max_abs_error']:.4f}), {secs:.1f}s")


def test_12_cli_fit_determinism(tmp_path):
    run = [sys.executable, "-m", "qpnet.cli"]
    subprocess.run(run + ["gen", "--family", "fourier", "--modes", "3", "--bound", "1", "--grid", "1001", "--count", "2048", "--seed", "42", "--target", "integral", "--out", "data.jsonl"], cwd=tmp_path, check=True)
    cfg = str(ROOT / "configs" / "uap.toml")
    for out in ("a.json", "b.json"):
        subprocess.run(run + ["fit", "--config", cfg, "--data", "data.jsonl", "--out", out], cwd=tmp_path, check=True)
    a, b = (tmp_path / "a.json").read_bytes(), (tmp_path / "b.json").read_bytes()
    record(12, "qpnet fit twice gives byte-identical model JSON", a == b and len(a) > 0, f"{len(a)} bytes, identical {a == b}")
