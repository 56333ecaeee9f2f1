import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fixlab.iteration import (
    StoppingConfig,
    boundedness_transfer_bound,
    fixed_point_residual,
    monotone_max_series,
    monotone_max_violations,
    multi_start_uniqueness,
    run,
    strict_step_violations,
    tail_bound,
)
from fixlab.mappings import MappingSpec, closed_form
from fixlab.metric import Point, RejectedInput, SpaceDescriptor, distance, sample

HALVING = MappingSpec("affine-contraction", {"alpha": 0.5})
DAMPING = MappingSpec("shift-damping")
SATURATING = MappingSpec("saturating")
EXP_DRIFT = MappingSpec("exp-drift")
IDENTITY = MappingSpec("identity")
R1 = SpaceDescriptor(dim=1)
HALF_LINE = SpaceDescriptor(dim=1, nonnegative=True)


def test_run_halving():
    rep, tr = run(HALVING, R1, (1.0,), StoppingConfig(eps=1e-12))
    assert rep.status == "converged"
    assert abs(rep.final_point[0]) <= 1e-12
    assert abs(rep.estimated_rate - 0.5) <= 1e-9
    assert rep.tail_bound <= 1e-12
    assert rep.limit_proxy == rep.final_point
    # x_n = 2^-n exactly
    assert np.array_equal(tr.step_distance, 2.0 ** -np.arange(1, len(tr) + 1))


def test_run_example_31():
    sp = SpaceDescriptor.unit_l2_positive(100)
    x0 = sample(sp, 1, seed=4)[0]
    rep, _ = run(DAMPING, sp, x0, StoppingConfig(eps=1e-7, max_iter=5000))
    assert rep.status == "converged"
    assert distance(sp, rep.final_point, np.zeros(100)) <= 1e-7
    assert rep.estimated_rate < 100 / 101


def test_run_exp_drift_never_converges():
    rep, tr = run(EXP_DRIFT, HALF_LINE, (0.0,), StoppingConfig(eps=1e-9, max_iter=100_000))
    assert rep.status != "converged"
    # oracle: plain float iteration
    x = 0.0
    for _ in range(100_000):
        x = x + math.exp(-x)
    assert rep.final_point[0] == pytest.approx(x, rel=1e-12)
    assert x > 10
    assert strict_step_violations(tr) == 0


def test_run_divergence_detection():
    rep, _ = run(EXP_DRIFT, HALF_LINE, (0.0,), StoppingConfig(max_iter=10_000, divergence_radius=3.0))
    assert rep.status == "diverged"
    assert rep.max_excursion > 3.0
    assert rep.iterations < 10_000


def test_run_exact_fixed_point():
    rep, tr = run(IDENTITY, SpaceDescriptor(dim=2), (0.3, -0.2))
    assert rep.status == "converged" and rep.iterations == 1
    assert rep.tail_bound == 0.0
    rep, _ = run(DAMPING, SpaceDescriptor.unit_l2_positive(5), np.zeros(5))
    assert rep.converged and rep.final_point == Point(np.zeros(5))


def test_run_rejects_start_outside_space():
    with pytest.raises(RejectedInput):
        run(DAMPING, SpaceDescriptor.unit_l2_positive(2), (1.0, 1.0))
    with pytest.raises(RejectedInput):
        run(SATURATING, SpaceDescriptor(dim=1), (-1.0,))


def test_stopping_config_validation():
    with pytest.raises(RejectedInput):
        StoppingConfig(eps=0.0)
    with pytest.raises(RejectedInput):
        StoppingConfig(rate_window=1)
    with pytest.raises(RejectedInput):
        StoppingConfig(max_iter=0)
    assert StoppingConfig(max_iter=10**6).stride_for(100) == 10
    assert StoppingConfig(max_iter=5000).stride_for(100) == 1


def test_stride_keeps_final_point():
    rep, tr = run(SATURATING, HALF_LINE, (1.0,), StoppingConfig(max_iter=1000, store_stride=7))
    assert tr.point_index[0] == 0 and tr.point_index[-1] == rep.iterations
    assert np.all(tr.point_index[1:-1] % 7 == 0)
    with pytest.raises(RejectedInput):
        tr.point(3)


def test_tail_bound_halving_is_exact():
    _, tr = run(HALVING, R1, (1.0,), StoppingConfig(eps=1e-12))
    for at in range(0, len(tr.ratio) - 8):
        assert tail_bound(tr, at, 8) == 2.0 ** -at
    with pytest.raises(RejectedInput):
        tail_bound(tr, len(tr.ratio) - 2, 5)


def test_tail_bound_exp_drift_stays_away_from_zero():
    # steps ~ 1/n, ratios ~ 1 - 1/n: the bound tends to ~1, never towards eps
    _, tr = run(EXP_DRIFT, HALF_LINE, (0.0,), StoppingConfig(max_iter=20_000))
    bounds = np.array([tail_bound(tr, at, 16) for at in range(0, len(tr.ratio) - 16, 97)])
    assert np.all(bounds >= 0.99)
    assert abs(bounds[-1] - 1.0) < 1e-2
    assert np.all(tr.ratio < 1)
    assert np.nanmax(tr.ratio[-100:]) > 0.9999


def test_tail_bound_constant_sequence():
    from fixlab.iteration import OrbitTrace

    tr = OrbitTrace(step_distance=np.zeros(10), points=np.zeros((1, 1)), point_index=np.array([0]))
    assert tail_bound(tr, 0, 5) == 0.0


@pytest.mark.parametrize("mapping,x0,limit", [
    (HALVING, (3.0, -1.0), (0.0, 0.0)),
    (MappingSpec("affine-contraction", {"alpha": 0.8, "shift": (1.0, 2.0)}), (0.0, 0.0), (5.0, 10.0)),
])
def test_tail_bound_sound_on_affine(mapping, x0, limit):
    sp = SpaceDescriptor(dim=2)
    _, tr = run(mapping, sp, x0, StoppingConfig(eps=1e-13, max_iter=2000))
    for at in range(len(tr.ratio) - 16):
        b = tail_bound(tr, at, 16)
        assert distance(sp, tr.point(at), limit) <= b * (1 + 1e-12)


def test_tail_bound_sound_on_damping():
    sp = SpaceDescriptor.unit_l2_positive(20)
    for x0 in sample(sp, 5, seed=21):
        _, tr = run(DAMPING, sp, x0, StoppingConfig(eps=1e-10, max_iter=5000))
        for at in range(len(tr.ratio) - 16):
            b = tail_bound(tr, at, 16)
            assert distance(sp, tr.point(at), np.zeros(20)) <= b * (1 + 1e-12)


def test_tail_bound_underestimates_sublinear_convergence():
    # ratios creep up to 1 for x/(1+x); the windowed bound is not a bound here
    _, tr = run(SATURATING, HALF_LINE, (1.0,), StoppingConfig(eps=1e-4, max_iter=20_000))
    at = 1000
    assert tr.point(at)[0] > tail_bound(tr, at, 16)


def test_boundedness_transfer_examples():
    assert boundedness_transfer_bound(HALVING, (4.0,), (0.0,), 0.0) == 8.0
    x = Point([0.7])
    assert boundedness_transfer_bound(HALVING, x, x, 0.25) == 0.35 + 0.25
    sp = SpaceDescriptor.unit_l2_positive(10)
    for x in sample(sp, 20, seed=2):
        b = boundedness_transfer_bound(DAMPING, x, np.zeros(10), 0.0, sp)
        nx = distance(sp, x, np.zeros(10))
        assert b == pytest.approx(max(nx, distance(sp, x, x.coords * np.arange(1, 11) / np.arange(2, 12))) + nx, rel=1e-15)
        _, tr = run(DAMPING, sp, x, StoppingConfig(eps=1e-9))
        dist = np.sqrt(((tr.points - x.coords) ** 2).sum(axis=1))
        assert np.all(dist <= b * (1 + 1e-12))
    with pytest.raises(RejectedInput):
        boundedness_transfer_bound(HALVING, (1.0, 2.0), (0.0,), 0.0)


def test_boundedness_transfer_with_moving_reference():
    # reference orbit of x0 = 2 under saturating; sup_n |T^n 2 - 2| < 2
    sp = HALF_LINE
    _, ref = run(SATURATING, sp, (2.0,), StoppingConfig(eps=1e-6, max_iter=50_000))
    orbit_sup = float(np.max(np.abs(ref.points[:, 0] - 2.0)))
    for x in (0.0, 0.5, 3.0, 9.0):
        b = boundedness_transfer_bound(SATURATING, (x,), (2.0,), orbit_sup, sp)
        _, tr = run(SATURATING, sp, (x,), StoppingConfig(eps=1e-6, max_iter=50_000))
        assert np.all(np.abs(tr.points[:, 0] - x) <= b * (1 + 1e-12))


def test_monotone_max_halving():
    rep, tr = run(HALVING, R1, (1.0,), StoppingConfig(eps=1e-12))
    m = monotone_max_series(tr, (0.0,), R1)
    assert m[0] == 0.5 and m[1] == 0.25
    assert monotone_max_violations(m) == 0


def test_monotone_max_at_fixed_point():
    rep, tr = run(DAMPING, SpaceDescriptor.unit_l2_positive(3), np.zeros(3))
    assert np.all(monotone_max_series(tr, rep.limit_proxy, SpaceDescriptor.unit_l2_positive(3)) == 0)


def test_monotone_max_damping_nonincreasing():
    sp = SpaceDescriptor.unit_l2_positive(20)
    rep, tr = run(DAMPING, sp, sample(sp, 1, seed=6)[0], StoppingConfig(eps=1e-9, max_iter=20_000))
    assert rep.converged
    m = monotone_max_series(tr, rep.limit_proxy, sp)
    assert len(m) == rep.iterations
    assert monotone_max_violations(m) == 0


def test_monotone_max_requires_points():
    _, tr = run(HALVING, R1, (1.0,), StoppingConfig(eps=1e-12))
    with pytest.raises(RejectedInput):
        monotone_max_series(tr, (0.0,), R1, points=np.empty((0, 1)))


def test_uniqueness_examples():
    sp = SpaceDescriptor.unit_l2_positive(20)
    res = multi_start_uniqueness(DAMPING, sp, sample(sp, 10, seed=3), StoppingConfig(eps=1e-9, max_iter=20_000), 1e-6)
    assert res.verdict == "unique" and res.pairwise_max <= 1e-6
    one = multi_start_uniqueness(HALVING, R1, [(5.0,)], StoppingConfig(eps=1e-12))
    assert one.verdict == "unique" and one.pairwise_max == 0.0
    drift = multi_start_uniqueness(EXP_DRIFT, HALF_LINE, [(0.0,), (1.0,)], StoppingConfig(max_iter=2000))
    assert drift.verdict == "inconclusive"
    ident = multi_start_uniqueness(IDENTITY, R1, [(0.0,), (1.0,)])
    assert ident.verdict == "distinct"
    with pytest.raises(RejectedInput):
        multi_start_uniqueness(HALVING, R1, [])


def test_trace_rows_serialize():
    _, tr = run(HALVING, R1, (1.0,), StoppingConfig(eps=1e-6))
    rows = [json.loads(line) for line in tr.to_jsonl().splitlines()]
    assert rows[0]["n"] == 0 and rows[0]["point"] == [1.0]
    assert rows[0]["ratio"] == 0.5 and rows[0]["gap"] == 0.5
    assert rows[-1]["n"] == len(tr) and "step_distance" not in rows[-1]
    assert all(r["step_distance"] >= 0 for r in rows if "step_distance" in r)


def test_gap_from_step_distances():
    _, tr = run(SATURATING, HALF_LINE, (1.0,), StoppingConfig(max_iter=50))
    s = tr.step_distance
    assert np.allclose(tr.gap, 1 - s[1:] / np.maximum(s[:-1], s[1:]))
    assert np.all(tr.gap > 0)


def test_run_is_deterministic():
    sp = SpaceDescriptor.unit_l2_positive(30)
    x0 = sample(sp, 1, seed=1)[0]
    a = run(DAMPING, sp, x0, StoppingConfig(eps=1e-8))
    b = run(DAMPING, sp, x0, StoppingConfig(eps=1e-8))
    assert a[0].to_dict() == b[0].to_dict()
    assert a[1].to_jsonl() == b[1].to_jsonl()


strict_maps = st.sampled_from([
    (MappingSpec("affine-contraction", {"alpha": 0.3, "shift": 0.2}), SpaceDescriptor(dim=3, ball_radius=5.0)),
    (DAMPING, SpaceDescriptor.unit_l2_positive(12)),
    (SATURATING, SpaceDescriptor(dim=3, ball_radius=50.0, nonnegative=True)),
    (EXP_DRIFT, SpaceDescriptor(dim=2, ball_radius=5.0, nonnegative=True)),
])


@given(strict_maps, st.integers(0, 2**31))
def test_strict_step_decrease_property(case, seed):
    mapping, sp = case
    x0 = sample(sp, 1, seed)[0]
    rep, tr = run(mapping, sp, x0, StoppingConfig(eps=1e-10, max_iter=3000))
    assert strict_step_violations(tr) == 0
    if rep.converged:
        assert fixed_point_residual(mapping, sp, rep.final_point) <= 10 * 1e-10
        m = monotone_max_series(tr, rep.limit_proxy, sp)
        assert monotone_max_violations(m) == 0


@given(st.floats(0.05, 0.95), st.floats(-3, 3), st.floats(-10, 10))
def test_converged_affine_within_eps(alpha, shift, x0):
    m = MappingSpec("affine-contraction", {"alpha": alpha, "shift": shift})
    rep, _ = run(m, R1, (x0,), StoppingConfig(eps=1e-9, max_iter=5000))
    assert rep.converged
    assert abs(rep.final_point[0] - shift / (1 - alpha)) <= 1e-9 * (1 + abs(shift / (1 - alpha)))
    assert closed_form(m, (x0,), rep.iterations)[0] == pytest.approx(rep.final_point[0], abs=1e-12)
