import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qpnet.embed import (
    CUBE_NORM_BOUND,
    ChiSpec,
    ConvexPreserving,
    EncodingError,
    FunctionSample,
    LinearFunctional,
    MetricLandmark,
    Normalizer,
    PointEval,
    default_chi,
    dyadic_intervals,
    dyadic_sites,
    encode,
    encoder_from_json,
    encoder_to_json,
    fourier_functionals,
    interval_integral_functionals,
    pseudometric,
    tail_bound,
    trapezoid_weights,
    verify_cube,
)

GRID = np.linspace(0.0, 1.0, 33)


def const(c, grid=GRID):
    return FunctionSample(grid, np.full(len(grid), float(c)))


finite = st.floats(-1e6, 1e6, allow_nan=False)
sample_values = arrays(np.float64, len(GRID), elements=st.floats(-50, 50, allow_nan=False))


def all_encoders(n=8):
    f = fourier_functionals(GRID, n)
    rng = np.random.default_rng(3)
    marks = tuple(FunctionSample(GRID, rng.normal(size=len(GRID))) for _ in range(n))
    return [
        PointEval(dyadic_sites(n)),
        MetricLandmark(marks, "l2"),
        LinearFunctional(f),
        ConvexPreserving(f, np.tile([-1.0, 1.0], (n, 1))),
    ]


# ---------------------------------------------------------------- FunctionSample


def test_sample_rejects_bad_grids():
    with pytest.raises(ValueError):
        FunctionSample([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        FunctionSample([0.0, 1.0], [1.0])
    with pytest.raises(ValueError):
        FunctionSample([], [])


def test_sample_interpolates_linearly():
    x = FunctionSample([0.0, 1.0], [0.0, 2.0])
    assert x(0.25) == pytest.approx(0.5)


def test_sample_record_round_trip():
    x = FunctionSample(GRID, np.sin(GRID) / 3, "a")
    y = FunctionSample.from_record(json.loads(json.dumps(x.to_record())))
    assert np.array_equal(x.values, y.values) and np.array_equal(x.grid, y.grid) and y.id == "a"


# ---------------------------------------------------------------- encode examples


def test_point_eval_zero_function_is_cube_center():
    z = encode(PointEval([0.0, 0.5, 1.0]), const(0), 3)
    assert z == pytest.approx([0.5, 0.25, 1 / 6], abs=1e-15)


def test_point_eval_one_function():
    # phi(1) = (2/pi) arctan 1 = 1/2, so f_i = 0.75 / i
    z = encode(PointEval([0.0, 0.5, 1.0]), const(1), 3)
    assert z == pytest.approx([0.75, 0.375, 0.25], abs=1e-15)


@pytest.mark.parametrize("value, expected", [(1.0, 0.5), (0.0, 0.25), (2.0, 0.75)])
def test_convex_preserving_single_functional(value, expected):
    cp = ConvexPreserving(np.array([[1.0]]), np.array([[0.0, 2.0]]))
    assert encode(cp, np.array([value]), 1)[0] == pytest.approx(expected, abs=1e-15)


def test_encode_depth_beyond_encoder_raises():
    with pytest.raises(EncodingError):
        encode(PointEval([0.0, 1.0]), const(0), 3)


def test_linear_functional_grid_mismatch_raises():
    enc = LinearFunctional(fourier_functionals(GRID, 3))
    with pytest.raises(EncodingError):
        encode(enc, const(0, np.linspace(0, 1, 10)), 3)


def test_convex_ranges_must_be_ordered():
    with pytest.raises(ValueError):
        ConvexPreserving(np.eye(2), np.array([[0.0, 1.0], [1.0, 1.0]]))


def test_fourier_functionals_recover_coefficients():
    grid = np.linspace(0, 1, 2001)
    x = FunctionSample(grid, 0.3 + 0.2 * np.cos(2 * np.pi * grid) - 0.1 * np.sin(2 * np.pi * grid))
    raw = LinearFunctional(fourier_functionals(grid, 3)).raw(x, 3)
    assert raw == pytest.approx([0.3, 0.2, -0.1], abs=1e-6)


def test_interval_integrals_of_constant():
    w = interval_integral_functionals(GRID, dyadic_intervals(3))
    assert w @ np.ones(len(GRID)) == pytest.approx([1.0, 0.5, 0.5])


def test_trapezoid_weights_sum_to_length():
    assert trapezoid_weights(GRID).sum() == pytest.approx(1.0, abs=1e-15)


def test_dyadic_sites_are_coarse_to_fine():
    assert dyadic_sites(5).tolist() == [0.0, 1.0, 0.5, 0.25, 0.75]


# ---------------------------------------------------------------- scalar maps


@given(finite, finite)
def test_normalizers_increasing_and_bounded(a, b):
    for name in ("arctan", "tanh"):
        phi = Normalizer(name)
        assert -1.0 <= phi(a) <= 1.0
        if a < b:
            assert phi(a) <= phi(b)


@given(st.floats(-0.5, 0.5))
def test_chi_is_identity_on_half_interval(t):
    assert default_chi(t) == t


@given(finite, finite)
def test_chi_increasing_and_bounded(a, b):
    chi = ChiSpec()
    assert abs(chi(a)) <= 1.0
    if a < b:
        assert chi(a) <= chi(b)


def test_chi_is_continuous_at_the_joins():
    for s in (0.5, -0.5):
        assert default_chi(s + 1e-12) == pytest.approx(s, abs=1e-11)


# ---------------------------------------------------------------- pseudometric / tail


def test_pseudometric_examples():
    enc = PointEval([0.0, 1.0])
    assert pseudometric(enc, const(0), const(0), 2) == 0.0
    assert pseudometric(enc, const(0), const(1), 1) == pytest.approx(0.25, abs=1e-15)
    assert pseudometric(enc, const(0), const(1), 2) == pytest.approx(math.hypot(0.25, 0.125), abs=1e-15)


@pytest.mark.parametrize("n, expected", [(1, 1.0), (10, math.sqrt(0.1)), (100, 0.1)])
def test_tail_bound(n, expected):
    assert tail_bound(n) == pytest.approx(expected, rel=1e-15)


def test_tail_bound_dominates_cube_tail():
    for n in (1, 5, 50):
        assert sum(1 / i**2 for i in range(n + 1, 200000)) < tail_bound(n) ** 2


@settings(max_examples=50, deadline=None)
@given(sample_values, sample_values)
def test_pseudometric_symmetric_and_monotone(u, v):
    enc = PointEval(dyadic_sites(12))
    x, y = FunctionSample(GRID, u), FunctionSample(GRID, v)
    d = [pseudometric(enc, x, y, n) for n in range(1, 13)]
    assert all(a <= b for a, b in zip(d, d[1:]))
    assert d[-1] == pseudometric(enc, y, x, 12)
    for n in range(1, 12):
        assert d[-1] ** 2 - d[n - 1] ** 2 <= sum(1 / i**2 for i in range(n + 1, 13)) + 1e-12


@settings(max_examples=50, deadline=None)
@given(sample_values, st.integers(0, 8), st.floats(2e-9, 10))
def test_point_eval_separates_at_a_site(u, i, bump):
    sites = dyadic_sites(9)
    k = int(np.argmin(np.abs(GRID - sites[i])))
    v = u.copy()
    v[k] += bump
    assert pseudometric(PointEval(sites), FunctionSample(GRID, u), FunctionSample(GRID, v), 9) > 0


# ---------------------------------------------------------------- cube


def test_verify_cube_examples():
    assert verify_cube([0.5, 0.25])
    rep = verify_cube([1.2, 0.1])
    assert not rep and rep.violations == [1]
    assert verify_cube([1.0, 0.5, 1 / 3])


@settings(max_examples=60, deadline=None)
@given(sample_values)
def test_every_encoder_lands_in_cube(u):
    x = FunctionSample(GRID, u)
    for enc in all_encoders():
        z = encode(enc, x, 8)
        assert verify_cube(z)
        assert np.linalg.norm(z) <= CUBE_NORM_BOUND + 1e-12


# ---------------------------------------------------------------- convexity


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1), st.lists(st.floats(0, 1), min_size=6, max_size=6))
def test_convex_combinations_are_preserved(t, ws):
    rng = np.random.default_rng(0)
    verts = rng.normal(size=(3, len(GRID)))
    f = fourier_functionals(GRID, 5)
    cp = ConvexPreserving.from_samples(f, verts)
    wa = np.array(ws[:3]) + 1e-3
    wb = np.array(ws[3:]) + 1e-3
    a, b = (wa / wa.sum()) @ verts, (wb / wb.sum()) @ verts
    lhs = encode(cp, t * a + (1 - t) * b, 5)
    rhs = t * encode(cp, a, 5) + (1 - t) * encode(cp, b, 5)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_estimated_ranges_are_flagged():
    cp = ConvexPreserving.from_samples(np.eye(2), [np.array([0.0, 1.0]), np.array([1.0, 0.0])])
    assert cp.ranges_estimated
    assert encoder_to_json(cp)["ranges_estimated"] is True


# ---------------------------------------------------------------- serialization


@pytest.mark.parametrize("enc", all_encoders(), ids=lambda e: e.kind)
def test_encoder_json_round_trip_is_bit_exact(enc):
    back = encoder_from_json(json.loads(json.dumps(encoder_to_json(enc))))
    assert json.dumps(encoder_to_json(back)) == json.dumps(encoder_to_json(enc))
    x = FunctionSample(GRID, np.cos(3 * GRID))
    assert np.array_equal(encode(back, x, 6), encode(enc, x, 6))
