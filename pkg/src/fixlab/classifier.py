"""Sample-based certification of contraction-type inequalities.

For a map T and a batch of separated pairs (x, y) each class reduces to a
left-hand side and right-hand side:

=====================  =====================  =======================================
class                  lhs                    rhs
=====================  =====================  =======================================
banach                 d(Tx, Ty)              alpha d(x, y), or d(x, y) when alpha is
                                              to be estimated (then strict, so the
                                              observed max ratio is the alpha)
rakotch                d(Tx, Ty)              alpha(d(x, y)) d(x, y)
boyd_wong              d(Tx, Ty)              psi(d(x, y))
asymptotic             d(T^n x, T^n y)        psi_n(d(x, y))
strict                 d(Tx, Ty)              d(x, y)                       (strict)
generalized_strict     d(Tx, Ty)              max{d(x,y), d(x,Tx), d(Ty,y)} (strict)
=====================  =====================  =======================================

Passing a sample never proves membership, hence the verdicts are
``consistent`` / ``violated``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .mappings import (
    MappingSpec,
    ModulusSpec,
    evaluate_modulus,
    rakotch_factor,
    step_function,
)
from .metric import Point, RejectedInput, SpaceDescriptor, _contains_rows, row_norms, sample_array, stack

__all__ = [
    "CLASS_IDS",
    "ClassSpec",
    "Witness",
    "ContractionCertificate",
    "sample_pairs",
    "check_class",
    "evaluate_pairs",
    "default_class_specs",
    "classify_all",
    "DEFAULT_MIN_SEPARATION",
    "DEFAULT_SLACK",
]

CLASS_IDS = ("banach", "rakotch", "boyd_wong", "asymptotic", "strict", "generalized_strict")
_NEEDS_MODULUS = {"rakotch", "boyd_wong", "asymptotic"}
_STRICT = {"strict", "generalized_strict"}

DEFAULT_MIN_SEPARATION = 1e-9
DEFAULT_SLACK = 1e-12
DEFAULT_HORIZON = 3
WITNESS_CAP = 20


@dataclass(frozen=True)
class ClassSpec:
    class_id: str
    modulus: Optional[ModulusSpec] = None
    horizon: Optional[int] = None

    def __post_init__(self):
        if self.class_id not in CLASS_IDS:
            raise RejectedInput(f"unknown class {self.class_id!r}; known classes: {', '.join(CLASS_IDS)}")
        needs = self.class_id in _NEEDS_MODULUS
        if needs and self.modulus is None:
            raise RejectedInput(f"class {self.class_id} needs a modulus")
        if self.class_id == "banach":
            if self.modulus is not None and self.modulus.kind != "linear":
                raise RejectedInput("banach takes only a linear modulus (its factor alpha)")
        elif not needs and self.modulus is not None:
            raise RejectedInput(f"class {self.class_id} takes no modulus")
        if self.class_id in ("rakotch", "boyd_wong") and self.modulus.indexed:
            raise RejectedInput(f"class {self.class_id} needs a non-indexed modulus")
        if self.class_id == "asymptotic":
            h = DEFAULT_HORIZON if self.horizon is None else self.horizon
            if int(h) != h or h < 1:
                raise RejectedInput(f"horizon must be a positive integer, got {self.horizon!r}")
            object.__setattr__(self, "horizon", int(h))
        elif self.horizon is not None:
            raise RejectedInput(f"class {self.class_id} takes no horizon")

    @property
    def strict(self) -> bool:
        return self.class_id in _STRICT or (self.class_id == "banach" and self.modulus is None)

    def to_dict(self) -> dict:
        out: dict = {"class_id": self.class_id}
        if self.modulus is not None:
            out["modulus"] = self.modulus.to_dict()
        if self.horizon is not None:
            out["horizon"] = self.horizon
        return out


@dataclass(frozen=True)
class Witness:
    x: Point
    y: Point
    lhs: float
    rhs: float

    def to_dict(self) -> dict:
        return {"x": self.x.tolist(), "y": self.y.tolist(), "lhs": self.lhs, "rhs": self.rhs}


@dataclass(frozen=True)
class ContractionCertificate:
    class_id: str
    pairs_tested: int
    max_ratio: float
    verdict: str
    witnesses: tuple[Witness, ...]
    seed: Optional[int]
    slack: float
    violations: int = 0
    spec: Optional[ClassSpec] = None
    note: str = ""

    def __post_init__(self):
        if (self.verdict == "violated") != bool(self.witnesses):
            raise ValueError("verdict must be 'violated' exactly when witnesses exist")

    @property
    def consistent(self) -> bool:
        return self.verdict == "consistent"

    def to_dict(self) -> dict:
        out = {
            "class_id": self.class_id,
            "pairs_tested": self.pairs_tested,
            "max_ratio": self.max_ratio,
            "verdict": self.verdict,
            "violations": self.violations,
            "witnesses": [w.to_dict() for w in self.witnesses],
            "seed": self.seed,
            "slack": self.slack,
        }
        if self.spec is not None:
            out["spec"] = self.spec.to_dict()
        if self.note:
            out["note"] = self.note
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), allow_nan=False)


def sample_pairs(
    space: SpaceDescriptor,
    count: int,
    seed: int,
    min_separation: float = DEFAULT_MIN_SEPARATION,
) -> list[tuple[Point, Point]]:
    xs, ys = sample_pair_arrays(space, count, seed, min_separation)
    return [(Point(a), Point(b)) for a, b in zip(xs, ys)]


def sample_pair_arrays(
    space: SpaceDescriptor,
    count: int,
    seed: int,
    min_separation: float = DEFAULT_MIN_SEPARATION,
    max_rounds: int = 64,
) -> tuple[np.ndarray, np.ndarray]:
    """Like :func:`sample_pairs` but returns two ``(count, d)`` arrays."""
    if count < 1:
        raise RejectedInput(f"count must be >= 1, got {count}")
    if not (min_separation > 0):
        raise RejectedInput("min_separation must be positive")
    if min_separation > space.diameter_bound():
        raise RejectedInput(
            f"min_separation {min_separation} exceeds the diameter bound {space.diameter_bound()} of the space"
        )
    rng = np.random.default_rng(seed)
    xs = sample_array(space, count, rng)
    ys = sample_array(space, count, rng)
    for _ in range(max_rounds):
        close = row_norms(xs - ys, space.norm_p) < min_separation
        if not np.any(close):
            return xs, ys
        ys[close] = sample_array(space, int(close.sum()), rng)
    raise RejectedInput(f"could not draw {count} pairs separated by {min_separation} in {max_rounds} rounds")


def _as_arrays(pairs) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(pairs, tuple) and len(pairs) == 2 and isinstance(pairs[0], np.ndarray):
        return np.asarray(pairs[0], dtype=np.float64), np.asarray(pairs[1], dtype=np.float64)
    pairs = list(pairs)
    if not pairs:
        raise RejectedInput("no pairs to test")
    return stack([p[0] for p in pairs]), stack([p[1] for p in pairs])


def evaluate_pairs(mapping: MappingSpec, spec: ClassSpec, xs, ys, norm_p: float = 2.0):
    """lhs and rhs of the class inequality for each row pair."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    ys = np.atleast_2d(np.asarray(ys, dtype=np.float64))
    if xs.shape != ys.shape:
        raise RejectedInput(f"pair arrays differ in shape: {xs.shape} vs {ys.shape}")
    if mapping.entry.nonnegative_domain and (np.any(xs < 0) or np.any(ys < 0)):
        raise RejectedInput(f"{mapping.kind} is defined on the nonnegative orthant")
    f = step_function(mapping, xs.shape[1])
    dxy = row_norms(xs - ys, norm_p)
    cid = spec.class_id
    if cid == "asymptotic":
        tx, ty = xs, ys
        for _ in range(spec.horizon):
            tx, ty = f(tx), f(ty)
        lhs = row_norms(tx - ty, norm_p)
        rhs = evaluate_modulus(spec.modulus, dxy, spec.horizon)
        return lhs, np.asarray(rhs, dtype=np.float64)
    tx, ty = f(xs), f(ys)
    lhs = row_norms(tx - ty, norm_p)
    if cid == "banach":
        rhs = dxy if spec.modulus is None else spec.modulus.params["alpha"] * dxy
    elif cid == "rakotch":
        rhs = rakotch_factor(spec.modulus, dxy) * dxy
    elif cid == "boyd_wong":
        rhs = evaluate_modulus(spec.modulus, dxy)
    elif cid == "strict":
        rhs = dxy
    else:
        rhs = np.maximum(np.maximum(dxy, row_norms(xs - tx, norm_p)), row_norms(ty - ys, norm_p))
    return lhs, np.asarray(rhs, dtype=np.float64)


def check_class(
    mapping: MappingSpec,
    spec: ClassSpec,
    pairs,
    slack: float = DEFAULT_SLACK,
    *,
    space: Optional[SpaceDescriptor] = None,
    seed: Optional[int] = None,
    witness_cap: int = WITNESS_CAP,
) -> ContractionCertificate:
    """Test the class inequality on every pair and aggregate a certificate.

    ``pairs`` is a list of point pairs or a tuple of two row arrays.  Strict
    classes need ``lhs < rhs - slack*rhs``, the others ``lhs <= rhs + slack*rhs``.
    Witnesses are the first ``witness_cap`` failing pairs in input order.
    """
    if slack < 0:
        raise RejectedInput("slack must be nonnegative")
    xs, ys = _as_arrays(pairs)
    norm_p = 2.0 if space is None else space.norm_p
    if space is not None and xs.shape[1] != space.dim:
        raise RejectedInput(f"pairs have dimension {xs.shape[1]}, space has dimension {space.dim}")
    lhs, rhs = evaluate_pairs(mapping, spec, xs, ys, norm_p)
    if spec.strict:
        ok = lhs < rhs - slack * rhs
    else:
        ok = lhs <= rhs + slack * rhs
    pos = rhs > 0
    if np.any(pos):
        max_ratio = float(np.max(lhs[pos] / rhs[pos]))
    else:
        max_ratio = 0.0
    bad = np.flatnonzero(~ok)
    witnesses = tuple(
        Witness(Point(xs[k]), Point(ys[k]), float(lhs[k]), float(rhs[k])) for k in bad[:witness_cap]
    )
    return ContractionCertificate(
        class_id=spec.class_id,
        pairs_tested=int(len(lhs)),
        max_ratio=max_ratio,
        verdict="violated" if len(bad) else "consistent",
        witnesses=witnesses,
        seed=seed,
        slack=float(slack),
        violations=int(len(bad)),
        spec=spec,
    )


def reevaluate_witness(mapping: MappingSpec, spec: ClassSpec, w: Witness, norm_p: float = 2.0) -> tuple[float, float]:
    lhs, rhs = evaluate_pairs(mapping, spec, w.x.coords[None, :], w.y.coords[None, :], norm_p)
    return float(lhs[0]), float(rhs[0])


def default_class_specs(mapping: MappingSpec, space: SpaceDescriptor) -> dict[str, Optional[ClassSpec]]:
    """Class specs with the moduli cataloged for this map; ``None`` marks a skip."""
    specs: dict[str, Optional[ClassSpec]] = {cid: None for cid in CLASS_IDS}
    specs["banach"] = ClassSpec("banach")
    specs["strict"] = ClassSpec("strict")
    specs["generalized_strict"] = ClassSpec("generalized_strict")
    if mapping.kind == "affine-contraction":
        alpha = mapping.params["alpha"]
        specs["rakotch"] = ClassSpec("rakotch", ModulusSpec("linear", {"alpha": alpha}))
        specs["boyd_wong"] = ClassSpec("boyd_wong", ModulusSpec("linear", {"alpha": alpha}))
        specs["asymptotic"] = ClassSpec("asymptotic", ModulusSpec("power-family", {"alpha": alpha}), DEFAULT_HORIZON)
    elif mapping.kind == "saturating" and space.dim == 1:
        # |x/(1+x) - y/(1+y)| = |x-y| / ((1+x)(1+y)) <= |x-y| / (1+|x-y|) for x, y >= 0
        specs["rakotch"] = ClassSpec("rakotch", ModulusSpec("saturating"))
        specs["boyd_wong"] = ClassSpec("boyd_wong", ModulusSpec("saturating"))
    return specs


def classify_all(
    mapping: MappingSpec,
    space: SpaceDescriptor,
    count: int,
    seed: int,
    slack: float = DEFAULT_SLACK,
    min_separation: float = DEFAULT_MIN_SEPARATION,
    specs: Optional[Sequence[ClassSpec]] = None,
) -> list[ContractionCertificate]:
    """One certificate per class, all on the same pair sample.

    Classes that need a modulus and have none cataloged for the map come back
    as a ``skipped`` entry (``pairs_tested == 0``, ``note`` says why).
    """
    pairs = sample_pair_arrays(space, count, seed, min_separation)
    if not np.all(_contains_rows(space, pairs[0])) or not np.all(_contains_rows(space, pairs[1])):
        raise RejectedInput("sampled pairs left the space")
    if specs is None:
        chosen = default_class_specs(mapping, space)
    else:
        chosen = {s.class_id: s for s in specs}
    out = []
    for cid in CLASS_IDS:
        if cid not in chosen:
            continue
        spec = chosen[cid]
        if spec is None:
            out.append(
                ContractionCertificate(
                    class_id=cid,
                    pairs_tested=0,
                    max_ratio=0.0,
                    verdict="skipped",
                    witnesses=(),
                    seed=seed,
                    slack=float(slack),
                    note=f"no modulus cataloged for {mapping.kind} in dimension {space.dim}",
                )
            )
            continue
        out.append(check_class(mapping, spec, pairs, slack, space=space, seed=seed))
    return out


def implication_consistent(certs: Sequence[ContractionCertificate]) -> bool:
    """False when a banach certificate (alpha < 1) is consistent while strict is violated."""
    by_id = {c.class_id: c for c in certs}
    b, s = by_id.get("banach"), by_id.get("strict")
    if b is None or s is None:
        return True
    return not (b.verdict == "consistent" and s.verdict == "violated")

