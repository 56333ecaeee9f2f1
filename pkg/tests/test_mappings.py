import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fixlab.mappings import (
    KINDS,
    MappingSpec,
    ModulusSpec,
    apply,
    apply_n,
    catalog,
    closed_form,
    evaluate_modulus,
    natural_domain,
    rakotch_factor,
)
from fixlab.metric import Point, RejectedInput, SpaceDescriptor, contains, distance, norm, sample

HALVING = MappingSpec("affine-contraction", {"alpha": 0.5})
DAMPING = MappingSpec("shift-damping")
SATURATING = MappingSpec("saturating")
EXP_DRIFT = MappingSpec("exp-drift")
ROTATION = MappingSpec("rotation", {"theta": math.pi / 4})
IDENTITY = MappingSpec("identity")


def test_apply_examples():
    assert apply(DAMPING, (1, 0, 0)) == Point([0.5, 0, 0])
    assert apply(SATURATING, (1,)) == Point([0.5])
    x = Point([3.0, -1.5])
    assert apply(IDENTITY, x) == x


def test_damping_weights_follow_general_term():
    # component k (1-based) is multiplied by k/(k+1)
    assert apply(DAMPING, (1, 1, 1, 1)).tolist() == [1 / 2, 2 / 3, 3 / 4, 4 / 5]


def test_apply_n_examples():
    assert apply_n(DAMPING, (1, 0, 0), 10) == Point([9.765625e-4, 0, 0])
    assert apply_n(HALVING, (4,), 2) == Point([1.0])
    for m in (DAMPING, SATURATING, ROTATION, IDENTITY, EXP_DRIFT):
        x = Point([0.3, 0.2])
        assert apply_n(m, x, 0) == x


def test_closed_form_examples():
    assert closed_form(DAMPING, (0, 1, 0), 3).tolist() == pytest.approx([0, 8 / 27, 0], abs=0, rel=1e-15)
    assert closed_form(SATURATING, (1,), 5) == Point([1 / 6])
    assert closed_form(HALVING, (4,), 2) == Point([1.0])
    for m in (DAMPING, SATURATING, HALVING):
        assert closed_form(m, (0.25, 0.5), 0) == Point([0.25, 0.5])
    assert closed_form(EXP_DRIFT, (1.0,), 3) is None
    assert closed_form(ROTATION, (1.0, 0.0), 3) is None


def _saturating_exact(x0: Fraction, n: int) -> Fraction:
    x = x0
    for _ in range(n):
        x = x / (1 + x)
    return x


@pytest.mark.parametrize("x0", [Fraction(1, 10), Fraction(1), Fraction(10)])
@pytest.mark.parametrize("n", [1, 2, 5, 40])
def test_saturating_closed_form_against_exact_rationals(x0, n):
    exact = _saturating_exact(x0, n)
    assert exact == x0 / (1 + n * x0)
    got = closed_form(SATURATING, (float(x0),), n)[0]
    assert got == pytest.approx(float(exact), rel=1e-15)


def test_affine_closed_form_with_shift():
    m = MappingSpec("affine-contraction", {"alpha": 0.25, "shift": (1.0, -2.0)})
    x = Point([3.0, 5.0])
    direct = apply_n(m, x, 30)
    assert distance(SpaceDescriptor(dim=2), direct, closed_form(m, x, 30)) < 1e-14
    assert closed_form(m, x, 200).tolist() == pytest.approx([4 / 3, -8 / 3], rel=1e-15)


@pytest.mark.parametrize("spec", [HALVING, MappingSpec("affine-contraction", {"alpha": 0.9, "shift": 0.3}), DAMPING, SATURATING])
@pytest.mark.parametrize("n", [1, 7, 100, 1000, 10_000])
def test_closed_form_matches_iteration(spec, n):
    sp = natural_domain(spec, 8)
    sp = SpaceDescriptor(dim=8, ball_radius=3.0, nonnegative=True) if not sp.bounded else sp
    for x in sample(sp, 5, seed=n):
        a, b = apply_n(spec, x, n), closed_form(spec, x, n)
        assert distance(sp, a, b) <= 1e-9 * (1 + norm(x.coords))


def test_domain_violations():
    with pytest.raises(RejectedInput):
        apply(SATURATING, (-0.5,))
    with pytest.raises(RejectedInput):
        apply(EXP_DRIFT, (1.0, -1.0))
    with pytest.raises(RejectedInput):
        apply(ROTATION, (1.0, 0.0, 0.0))
    with pytest.raises(RejectedInput):
        apply_n(HALVING, (1.0,), -1)
    with pytest.raises(RejectedInput):
        apply(MappingSpec("affine-contraction", {"alpha": 0.5, "shift": (1.0, 2.0, 3.0)}), (1.0, 1.0))


def test_spec_validation():
    with pytest.raises(RejectedInput, match="foo"):
        MappingSpec("foo")
    for alpha in (0.0, 1.0, 1.5, -0.2):
        with pytest.raises(RejectedInput):
            MappingSpec("affine-contraction", {"alpha": alpha})
    with pytest.raises(RejectedInput):
        MappingSpec("shift-damping", {"alpha": 0.5})
    assert MappingSpec("rotation").params["theta"] == pytest.approx(math.pi / 4)
    assert MappingSpec("affine-contraction", {"alpha": 0.5}) == HALVING


def test_damping_fixes_origin():
    zero = Point(np.zeros(50))
    assert apply(DAMPING, zero) == zero


@pytest.mark.parametrize("kind", KINDS)
def test_self_map_closure(kind):
    spec = MappingSpec(kind)
    sp = natural_domain(spec, 6)
    for x in sample(sp, 1000, seed=11):
        assert contains(sp, apply(spec, x))


@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=5))
def test_bounded_nonnegative_boxes_are_invariant(xs):
    # saturating maps [0, R] into itself; shift-damping shrinks every coordinate
    for spec in (SATURATING, DAMPING):
        y = apply(spec, xs)
        assert np.all(y.coords >= 0) and np.all(y.coords <= np.asarray(xs))


def test_rotation_is_isometry():
    sp = SpaceDescriptor(dim=2, ball_radius=1.0)
    pts = sample(sp, 2000, seed=5)
    ulp = np.spacing(1.0)
    worst = 0.0
    for x, y in zip(pts[::2], pts[1::2]):
        d = distance(sp, x, y)
        if d < 0.1:
            continue  # rounding of Tx - Ty is absolute, not relative to d
        dt = distance(sp, apply(ROTATION, x), apply(ROTATION, y))
        worst = max(worst, abs(dt / d - 1.0) / ulp)
    assert worst <= 4.0


@given(st.floats(0, 30))
def test_exp_drift_step(x):
    step = apply(EXP_DRIFT, (x,))[0] - x
    # beyond x ~ 36, e^-x < ulp(x)/2 and the float map stalls
    assert step > 0
    # (x + e^-x) - x cancels; the error is a couple of ulps of x
    assert step == pytest.approx(math.exp(-x), rel=1e-15, abs=2 * float(np.spacing(x + 1.0)))


def test_modulus_examples():
    assert evaluate_modulus(ModulusSpec("saturating"), 1.0) == 0.5
    assert evaluate_modulus(ModulusSpec("power-family", {"alpha": 0.5}), 8.0, n=3) == 1.0
    assert evaluate_modulus(ModulusSpec("linear", {"alpha": 0.3}), 10.0) == pytest.approx(3.0)
    for m in (ModulusSpec("saturating"), ModulusSpec("linear", {"alpha": 0.2})):
        assert evaluate_modulus(m, 0.0) == 0.0
    assert evaluate_modulus(ModulusSpec("power-family", {"alpha": 0.2}), 0.0, n=4) == 0.0
    with pytest.raises(RejectedInput):
        evaluate_modulus(ModulusSpec("power-family", {"alpha": 0.5}), 1.0)
    with pytest.raises(RejectedInput):
        ModulusSpec("linear", {"alpha": 1.0})
    with pytest.raises(RejectedInput):
        ModulusSpec("quadratic")


@given(st.floats(1e-9, 1e9), st.integers(1, 50))
def test_modulus_below_identity(t, n):
    assert evaluate_modulus(ModulusSpec("saturating"), t) < t
    assert evaluate_modulus(ModulusSpec("linear", {"alpha": 0.99}), t) < t
    assert evaluate_modulus(ModulusSpec("power-family", {"alpha": 0.9}), t, n) < t
    assert rakotch_factor(ModulusSpec("saturating"), t) * t == pytest.approx(t / (1 + t))


def test_catalog_listing():
    rows = catalog()
    assert [r["kind"] for r in rows] == list(KINDS)
    by_kind = {r["kind"]: r for r in rows}
    assert "fixed point 0" in by_kind["shift-damping"]["note"]
    assert "no fixed point; unbounded orbit" in by_kind["exp-drift"]["note"]
    assert by_kind["saturating"]["closed_form"] and not by_kind["rotation"]["closed_form"]
