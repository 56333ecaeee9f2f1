"""Catalog of built-in self-maps and comparison functions (moduli).

Every map acts row-wise on arrays of shape ``(..., d)`` so the classifier can
push thousands of points through one call.  Adding a map means adding a
``_Entry`` with a step function and, optionally, a closed form for T^n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

import numpy as np

from .metric import Point, RejectedInput, SpaceDescriptor, as_point

__all__ = [
    "MappingSpec",
    "ModulusSpec",
    "apply",
    "apply_n",
    "closed_form",
    "evaluate_modulus",
    "rakotch_factor",
    "natural_domain",
    "step_function",
    "catalog",
    "KINDS",
    "MODULUS_KINDS",
]

Param = Union[float, tuple]


def _freeze(params: Mapping[str, object]) -> dict[str, Param]:
    out: dict[str, Param] = {}
    for name, value in params.items():
        if isinstance(value, (list, tuple, np.ndarray)):
            vals = tuple(float(v) for v in np.asarray(value, dtype=np.float64).reshape(-1))
            if not all(math.isfinite(v) for v in vals):
                raise RejectedInput(f"parameter {name!r} has a non-finite entry")
            out[name] = vals
        else:
            v = float(value)
            if not math.isfinite(v):
                raise RejectedInput(f"parameter {name!r} is not finite")
            out[name] = v
    return out


@dataclass(frozen=True)
class _Entry:
    kind: str
    params: tuple[tuple[str, str], ...]  # (name, description)
    domain: str
    note: str
    defaults: Mapping[str, Param]
    make_step: Callable[[Mapping[str, Param], int], Callable[[np.ndarray], np.ndarray]]
    make_closed: Optional[Callable[[Mapping[str, Param], int], Callable[[np.ndarray, int], np.ndarray]]] = None
    nonnegative_domain: bool = False
    fixed_dim: Optional[int] = None
    strictly_nonexpansive: bool = False


def _affine_step(params, dim):
    alpha = params["alpha"]
    shift = np.broadcast_to(np.asarray(params.get("shift", 0.0), dtype=np.float64), (dim,)).copy()
    if not np.any(shift):
        return lambda x: alpha * x
    return lambda x: alpha * x + shift


def _affine_closed(params, dim):
    alpha = params["alpha"]
    shift = np.broadcast_to(np.asarray(params.get("shift", 0.0), dtype=np.float64), (dim,))

    def closed(x, n):
        an = alpha**n
        # sum_{k<n} alpha^k = (1 - alpha^n) / (1 - alpha)
        return an * x + shift * ((1.0 - an) / (1.0 - alpha))

    return closed


def _damping_weights(dim: int) -> np.ndarray:
    k = np.arange(1, dim + 1, dtype=np.float64)
    return k / (k + 1.0)


def _damping_step(params, dim):
    w = _damping_weights(dim)
    return lambda x: w * x


def _damping_closed(params, dim):
    w = _damping_weights(dim)
    return lambda x, n: np.power(w, n) * x


def _saturating_step(params, dim):
    return lambda x: x / (1.0 + x)


def _saturating_closed(params, dim):
    return lambda x, n: x / (1.0 + n * x)


def _exp_drift_step(params, dim):
    # in float64 x + exp(-x) == x once x > ~36: a rounding artefact, not a fixed point of T
    return lambda x: x + np.exp(-x)


def _rotation_step(params, dim):
    theta = params["theta"]
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, s], [-s, c]])  # x @ rot == R x for row vectors
    return lambda x: x @ rot


def _identity_step(params, dim):
    return lambda x: x.copy()


def _validate_affine(params, dim):
    alpha = params.get("alpha")
    if not isinstance(alpha, float) or not (0.0 < alpha < 1.0):
        raise RejectedInput(f"affine-contraction needs 0 < alpha < 1, got {alpha!r}")
    shift = params.get("shift", 0.0)
    if isinstance(shift, tuple) and dim is not None and len(shift) not in (1, dim):
        raise RejectedInput(f"shift has length {len(shift)}, expected 1 or {dim}")


def _validate_rotation(params, dim):
    if not isinstance(params.get("theta"), float):
        raise RejectedInput("rotation needs a real parameter theta")


_CATALOG: dict[str, _Entry] = {}


def _register(entry: _Entry, validate=None):
    _CATALOG[entry.kind] = entry
    _VALIDATORS[entry.kind] = validate


_VALIDATORS: dict[str, Optional[Callable]] = {}

_register(
    _Entry(
        kind="affine-contraction",
        params=(("alpha", "factor in (0,1)"), ("shift", "vector b (scalar broadcasts)")),
        domain="R^d",
        note="Banach contraction T(x) = alpha*x + b; fixed point b/(1-alpha)",
        defaults={"alpha": 0.5, "shift": 0.0},
        make_step=_affine_step,
        make_closed=_affine_closed,
        strictly_nonexpansive=True,
    ),
    _validate_affine,
)
_register(
    _Entry(
        kind="shift-damping",
        params=(),
        domain="truncated l2; M = nonnegative unit ball",
        note="x_k -> k/(k+1) x_k; strictly nonexpansive, not a contraction on l2; fixed point 0",
        defaults={},
        make_step=_damping_step,
        make_closed=_damping_closed,
        strictly_nonexpansive=True,
    )
)
_register(
    _Entry(
        kind="saturating",
        params=(),
        domain="nonnegative orthant",
        note="x -> x/(1+x) coordinatewise; Boyd-Wong with psi(t)=t/(1+t) in d=1, not Banach; fixed point 0",
        defaults={},
        make_step=_saturating_step,
        make_closed=_saturating_closed,
        nonnegative_domain=True,
        strictly_nonexpansive=True,
    )
)
_register(
    _Entry(
        kind="exp-drift",
        params=(),
        domain="nonnegative orthant",
        note="x -> x + exp(-x); strictly nonexpansive, no fixed point; unbounded orbit",
        defaults={},
        make_step=_exp_drift_step,
        nonnegative_domain=True,
        strictly_nonexpansive=True,
    )
)
_register(
    _Entry(
        kind="rotation",
        params=(("theta", "angle in radians"),),
        domain="R^2",
        note="isometry; violates strict nonexpansiveness with equality",
        defaults={"theta": math.pi / 4},
        make_step=_rotation_step,
        fixed_dim=2,
    ),
    _validate_rotation,
)
_register(
    _Entry(
        kind="identity",
        params=(),
        domain="R^d",
        note="every point is fixed; violates strict nonexpansiveness",
        defaults={},
        make_step=_identity_step,
    )
)

KINDS: tuple[str, ...] = tuple(_CATALOG)


@dataclass(frozen=True, eq=True)
class MappingSpec:
    """A catalog map selected by ``kind`` with named real parameters."""

    kind: str
    params: Mapping[str, Param] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _CATALOG:
            raise RejectedInput(f"unknown map kind {self.kind!r}; known kinds: {', '.join(KINDS)}")
        entry = _CATALOG[self.kind]
        merged = dict(entry.defaults)
        merged.update(self.params)
        unknown = set(merged) - {name for name, _ in entry.params}
        if unknown:
            raise RejectedInput(f"{self.kind} does not take parameter(s) {sorted(unknown)}")
        frozen = _freeze(merged)
        validate = _VALIDATORS[self.kind]
        if validate is not None:
            validate(frozen, None)
        object.__setattr__(self, "params", frozen)

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self.params.items()))))

    @property
    def entry(self) -> _Entry:
        return _CATALOG[self.kind]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": {k: list(v) if isinstance(v, tuple) else v for k, v in self.params.items()}}


def _check_domain(spec: MappingSpec, x: np.ndarray) -> None:
    entry = spec.entry
    dim = x.shape[-1]
    if entry.fixed_dim is not None and dim != entry.fixed_dim:
        raise RejectedInput(f"{spec.kind} acts on dimension {entry.fixed_dim}, got {dim}")
    if entry.nonnegative_domain and np.any(x < 0.0):
        raise RejectedInput(f"{spec.kind} is defined on the nonnegative orthant")
    validate = _VALIDATORS[spec.kind]
    if validate is not None:
        validate(spec.params, dim)


def step_function(spec: MappingSpec, dim: int) -> Callable[[np.ndarray], np.ndarray]:
    """The raw array map x -> T(x) for points of dimension ``dim`` (no checks)."""
    entry = spec.entry
    if entry.fixed_dim is not None and dim != entry.fixed_dim:
        raise RejectedInput(f"{spec.kind} acts on dimension {entry.fixed_dim}, got {dim}")
    validate = _VALIDATORS[spec.kind]
    if validate is not None:
        validate(spec.params, dim)
    return entry.make_step(spec.params, dim)


def apply(spec: MappingSpec, x) -> Point:
    x = as_point(x)
    _check_domain(spec, x.coords)
    return Point(step_function(spec, x.dim)(x.coords))


def apply_n(spec: MappingSpec, x, n: int) -> Point:
    """n-fold composition T^n x by direct iteration."""
    if n < 0:
        raise RejectedInput(f"n must be nonnegative, got {n}")
    x = as_point(x)
    _check_domain(spec, x.coords)
    f = step_function(spec, x.dim)
    v = x.coords
    for _ in range(n):
        v = f(v)
    return Point(v)


def closed_form(spec: MappingSpec, x, n: int) -> Optional[Point]:
    """Exact T^n x without looping, or ``None`` when the map has no closed form."""
    if n < 0:
        raise RejectedInput(f"n must be nonnegative, got {n}")
    x = as_point(x)
    _check_domain(spec, x.coords)
    entry = spec.entry
    if entry.make_closed is None:
        return None
    if n == 0:
        return x
    return Point(entry.make_closed(spec.params, x.dim)(x.coords, n))


def has_closed_form(spec: MappingSpec) -> bool:
    return spec.entry.make_closed is not None


def natural_domain(spec: MappingSpec, dim: int) -> SpaceDescriptor:
    """A space on which the map is a self-map, used for defaults and closure checks."""
    entry = spec.entry
    if entry.fixed_dim is not None:
        dim = entry.fixed_dim
    if spec.kind == "shift-damping":
        return SpaceDescriptor.unit_l2_positive(dim)
    if spec.kind == "rotation":
        return SpaceDescriptor(dim=2, norm_p=2.0, ball_radius=1.0)
    return SpaceDescriptor(dim=dim, nonnegative=entry.nonnegative_domain)


def catalog() -> list[dict]:
    """Catalog listing in a stable order."""
    rows = []
    for kind in KINDS:
        e = _CATALOG[kind]
        rows.append(
            {
                "kind": kind,
                "params": [f"{name}: {desc}" for name, desc in e.params],
                "defaults": {k: v for k, v in e.defaults.items()},
                "domain": e.domain,
                "closed_form": e.make_closed is not None,
                "note": e.note,
            }
        )
    return rows


# ---------------------------------------------------------------------------
# comparison functions

MODULUS_KINDS = ("linear", "saturating", "power-family")


@dataclass(frozen=True)
class ModulusSpec:
    """Comparison function psi (or family psi_n) with psi(t) < t for t > 0.

    ``linear``: psi(t) = alpha t.  ``saturating``: psi(t) = t / (1 + t).
    ``power-family``: psi_n(t) = alpha^n t.
    """

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in MODULUS_KINDS:
            raise RejectedInput(f"unknown modulus kind {self.kind!r}; known kinds: {', '.join(MODULUS_KINDS)}")
        params = {k: float(v) for k, v in self.params.items()}
        expected = set() if self.kind == "saturating" else {"alpha"}
        if set(params) != expected:
            raise RejectedInput(f"modulus {self.kind} takes parameters {sorted(expected)}, got {sorted(params)}")
        if "alpha" in params and not (0.0 <= params["alpha"] < 1.0):
            raise RejectedInput(f"modulus {self.kind} needs 0 <= alpha < 1 so that psi(t) < t")
        object.__setattr__(self, "params", params)

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self.params.items()))))

    @property
    def indexed(self) -> bool:
        return self.kind == "power-family"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}

    def describe(self) -> str:
        if self.kind == "saturating":
            return "saturating"
        return f"{self.kind} alpha={self.params['alpha']!r}"


def evaluate_modulus(m: ModulusSpec, t, n: Optional[int] = None):
    """psi(t), or psi_n(t) for the indexed family.  Accepts scalars or arrays."""
    if m.indexed and n is None:
        raise RejectedInput("power-family modulus needs the iterate index n")
    if n is not None and n < 0:
        raise RejectedInput(f"n must be nonnegative, got {n}")
    arr = np.asarray(t, dtype=np.float64)
    if np.any(arr < 0.0):
        raise RejectedInput("modulus argument must be nonnegative")
    if m.kind == "linear":
        out = m.params["alpha"] * arr
    elif m.kind == "saturating":
        out = arr / (1.0 + arr)
    else:
        out = m.params["alpha"] ** n * arr
    return float(out) if out.ndim == 0 else out


def rakotch_factor(m: ModulusSpec, t):
    """The distance-dependent factor alpha(t) in d(Tx,Ty) <= alpha(d(x,y)) d(x,y)."""
    if m.indexed:
        raise RejectedInput("a Rakotch factor cannot come from an indexed modulus family")
    arr = np.asarray(t, dtype=np.float64)
    if m.kind == "linear":
        out = np.full_like(arr, m.params["alpha"])
    else:
        out = 1.0 / (1.0 + arr)
    return float(out) if out.ndim == 0 else out
