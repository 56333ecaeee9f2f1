"""Scenario files: parsing, validation, execution and on-disk outputs.

A scenario is an INI-style key-value file (see README for the full grammar)::

    [scenario]
    name = damping
    task = run            ; run | classify | uniqueness
    seed = 2023

    [space]
    dim = 100
    norm = 2              ; 1 | 2 | inf
    ball_radius = 1
    nonnegative = true

    [map]
    kind = shift-damping

    [stopping]
    eps = 1e-7
    max_iter = 5000

    [run]
    x0 = seeded           ; or comma-separated coordinates

All randomness is derived from ``seed`` through named sub-seeds, so a file
fully determines trace.jsonl and certificates.json.
"""
from __future__ import annotations

import configparser
import json
import math
import os
import re
import time
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import classifier, iteration
from .classifier import CLASS_IDS, ClassSpec, default_class_specs
from .mappings import KINDS, MappingSpec, ModulusSpec, natural_domain
from .metric import Point, RejectedInput, SpaceDescriptor, contains, norm, sample

__all__ = [
    "ScenarioError",
    "ScenarioParseError",
    "UnknownMapError",
    "IncompleteTaskError",
    "Scenario",
    "SummaryReport",
    "load_scenario",
    "parse_scenario",
    "dump_scenario",
    "execute",
    "sub_seed",
    "TASKS",
    "OUT_DIR_ENV",
]

TASKS = ("run", "classify", "uniqueness")
OUT_DIR_ENV = "FIXLAB_OUT_DIR"

_SECTIONS = {
    "scenario": {"name", "task", "seed", "out"},
    "space": {"dim", "norm", "ball_radius", "nonnegative", "sample_scale"},
    "map": None,  # keys are map parameters plus `kind`
    "stopping": {"eps", "max_iter", "divergence_radius", "rate_window", "cycle_window", "store_stride"},
    "run": {"x0"},
    "classify": {"pairs", "classes", "slack", "min_separation", "horizon"},  # plus modulus.<class>
    "uniqueness": {"starts", "tol"},
}


class ScenarioError(ValueError):
    """Invalid scenario file."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path, self.line = path, line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class ScenarioParseError(ScenarioError):
    pass


class UnknownMapError(ScenarioError):
    pass


class IncompleteTaskError(ScenarioError):
    pass


def sub_seed(seed: int, name: str) -> int:
    """Independent, reproducible seed for the named consumer of randomness."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(name.encode())])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


@dataclass(frozen=True)
class Scenario:
    name: str
    task: str
    space: SpaceDescriptor
    map: MappingSpec
    seed: int = 0
    stopping: iteration.StoppingConfig = field(default_factory=iteration.StoppingConfig)
    x0: Optional[Point] = None  # None: one seeded start
    classes: Optional[tuple[ClassSpec, ...]] = None  # None: every class with a cataloged modulus
    pairs: int = 10_000
    slack: float = classifier.DEFAULT_SLACK
    min_separation: float = classifier.DEFAULT_MIN_SEPARATION
    starts: int = 10
    tol: float = 1e-6
    out: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "task": self.task,
            "seed": self.seed,
            "space": self.space.to_dict(),
            "map": self.map.to_dict(),
            "stopping": self.stopping.to_dict(),
            "x0": None if self.x0 is None else self.x0.tolist(),
            "classes": None if self.classes is None else [c.to_dict() for c in self.classes],
            "pairs": self.pairs,
            "slack": self.slack,
            "min_separation": self.min_separation,
            "starts": self.starts,
            "tol": self.tol,
            "out": self.out,
        }


# ---------------------------------------------------------------------------
# parsing


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    lines: dict[tuple[str, str], int] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", line)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip().lower()), lineno)
    return lines


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, text: str, path: Optional[str]):
        self.parser = parser
        self.lines = _key_lines(text)
        self.path = path

    def error(self, cls, message, section=None, key=None):
        line = self.lines.get((section, key)) if section else None
        return cls(message, self.path, line)

    def has(self, section, key):
        return self.parser.has_option(section, key)

    def raw(self, section, key, default=None):
        if not self.has(section, key):
            return default
        return self.parser.get(section, key).strip()

    def convert(self, section, key, conv, default=None, what="value"):
        value = self.raw(section, key)
        if value is None or value == "":
            return default
        try:
            return conv(value)
        except (ValueError, RejectedInput) as exc:
            raise self.error(ScenarioParseError, f"[{section}] {key}: invalid {what} {value!r} ({exc})", section, key)


def _int(s: str) -> int:
    f = float(s)
    if not f.is_integer():
        raise ValueError("expected an integer")
    return int(f)


def _radius(s: str) -> Optional[float]:
    return None if s.lower() == "none" else float(s)


def _bool(s: str) -> bool:
    v = s.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _norm_p(s: str) -> float:
    v = s.lower()
    if v in ("inf", "infinity", "max"):
        return math.inf
    p = float(v)
    if p not in (1.0, 2.0):
        raise ValueError("expected 1, 2 or inf")
    return p


def _vector(s: str) -> tuple[float, ...]:
    parts = [p for p in re.split(r"[,\s]+", s.strip()) if p]
    if not parts:
        raise ValueError("empty vector")
    return tuple(float(p) for p in parts)


def _param(s: str):
    vals = _vector(s)
    return vals[0] if len(vals) == 1 and "," not in s else vals


def _modulus(s: str) -> ModulusSpec:
    tokens = s.split()
    if not tokens:
        raise ValueError("empty modulus")
    params = {}
    for tok in tokens[1:]:
        name, sep, value = tok.partition("=")
        if not sep:
            raise ValueError(f"expected name=value, got {tok!r}")
        params[name] = float(value)
    return ModulusSpec(tokens[0], params)


def parse_scenario(text: str, path: Optional[str] = None) -> Scenario:
    """Parse and validate scenario text, filling in every default."""
    parser = configparser.ConfigParser(
        inline_comment_prefixes=(";", "#"), interpolation=None, default_section="__defaults__"
    )
    try:
        parser.read_string(text, source=path or "<scenario>")
    except configparser.MissingSectionHeaderError as exc:
        raise ScenarioParseError("key outside of any [section]", path, exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ScenarioParseError("line is not `key = value`", path, lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ScenarioParseError(f"duplicate entry ({exc})", path, exc.lineno) from None
    rd = _Reader(parser, text, path)

    for section in parser.sections():
        if section not in _SECTIONS:
            raise ScenarioParseError(f"unknown section [{section}]", path, _section_line(text, section))
        allowed = _SECTIONS[section]
        for key in parser.options(section):
            if allowed is None:
                continue
            if section == "classify" and key.startswith("modulus."):
                continue
            if key not in allowed:
                raise rd.error(ScenarioParseError, f"unknown key {key!r} in [{section}]", section, key)

    # [scenario]
    name = rd.raw("scenario", "name") or (Path(path).stem if path else "scenario")
    task = rd.raw("scenario", "task", "run").lower()
    if task not in TASKS:
        raise rd.error(ScenarioParseError, f"task must be one of {', '.join(TASKS)}, got {task!r}", "scenario", "task")
    seed = rd.convert("scenario", "seed", _int, 0, "integer")
    out = rd.raw("scenario", "out") or None

    # [map]
    if not parser.has_section("map") or not rd.has("map", "kind"):
        raise IncompleteTaskError("missing [map] kind", path)
    kind = rd.raw("map", "kind")
    if kind not in KINDS:
        raise rd.error(UnknownMapError, f"unknown map kind {kind!r}; known kinds: {', '.join(KINDS)}", "map", "kind")
    params = {}
    for key in parser.options("map"):
        if key != "kind":
            params[key] = rd.convert("map", key, _param, what="parameter")
    try:
        mapping = MappingSpec(kind, params)
    except RejectedInput as exc:
        bad = next(iter(params), "kind")
        raise rd.error(ScenarioParseError, f"[map] {exc}", "map", bad) from None

    # [space]
    if parser.has_section("space") and rd.has("space", "dim"):
        dim = rd.convert("space", "dim", _int, what="integer")
    elif mapping.entry.fixed_dim is not None:
        dim = mapping.entry.fixed_dim
    else:
        raise IncompleteTaskError("missing [space] dim", path)
    base = natural_domain(mapping, dim)
    if parser.has_section("space"):
        try:
            space = SpaceDescriptor(
                dim=dim,
                norm_p=rd.convert("space", "norm", _norm_p, base.norm_p, "norm"),
                ball_radius=rd.convert("space", "ball_radius", _radius, base.ball_radius, "radius"),
                nonnegative=rd.convert("space", "nonnegative", _bool, base.nonnegative, "boolean"),
                sample_scale=rd.convert("space", "sample_scale", float, base.sample_scale, "real"),
            )
        except RejectedInput as exc:
            raise rd.error(ScenarioParseError, f"[space] {exc}", "space", "dim") from None
    else:
        space = base
    if mapping.entry.fixed_dim is not None and space.dim != mapping.entry.fixed_dim:
        raise rd.error(ScenarioParseError, f"{kind} needs dim = {mapping.entry.fixed_dim}", "space", "dim")
    if mapping.entry.nonnegative_domain and not space.nonnegative:
        raise rd.error(ScenarioParseError, f"{kind} needs nonnegative = true", "space", "nonnegative")

    # [stopping]
    try:
        stopping = iteration.StoppingConfig(
            eps=rd.convert("stopping", "eps", float, 1e-9, "real"),
            max_iter=rd.convert("stopping", "max_iter", _int, 10_000, "integer"),
            divergence_radius=rd.convert("stopping", "divergence_radius", float, None, "real"),
            rate_window=rd.convert("stopping", "rate_window", _int, 16, "integer"),
            cycle_window=rd.convert("stopping", "cycle_window", _int, 0, "integer"),
            store_stride=rd.convert("stopping", "store_stride", _int, None, "integer"),
        )
    except RejectedInput as exc:
        raise ScenarioParseError(f"[stopping] {exc}", path, _section_line(text, "stopping")) from None

    # [run]
    x0 = None
    x0_raw = rd.raw("run", "x0")
    if x0_raw is not None and x0_raw.lower() not in ("", "seeded"):
        x0 = rd.convert("run", "x0", lambda s: Point(_vector(s)), what="point")
        if x0.dim != space.dim:
            raise rd.error(ScenarioParseError, f"x0 has dimension {x0.dim}, space has dimension {space.dim}", "run", "x0")
        if not contains(space, x0):
            raise rd.error(ScenarioParseError, "x0 lies outside the space", "run", "x0")
    if task == "run" and parser.has_section("run") and rd.has("run", "x0") and not x0_raw:
        raise rd.error(IncompleteTaskError, "[run] x0 is empty; use `seeded` or coordinates", "run", "x0")

    # [classify]
    pairs = rd.convert("classify", "pairs", _int, 10_000, "integer")
    slack = rd.convert("classify", "slack", float, classifier.DEFAULT_SLACK, "real")
    min_sep = rd.convert("classify", "min_separation", float, classifier.DEFAULT_MIN_SEPARATION, "real")
    horizon = rd.convert("classify", "horizon", _int, None, "integer")
    if pairs < 1:
        raise rd.error(ScenarioParseError, "pairs must be >= 1", "classify", "pairs")
    if slack < 0 or not min_sep > 0:
        raise rd.error(ScenarioParseError, "slack must be >= 0 and min_separation > 0", "classify", "slack")
    classes = None
    if rd.has("classify", "classes") or horizon is not None or _modulus_keys(parser):
        listed = rd.raw("classify", "classes", "")
        ids = [c.strip().lower() for c in listed.split(",") if c.strip()] if listed else None
        classes = _class_specs(rd, mapping, space, ids, horizon, task == "classify")

    # [uniqueness]
    starts = rd.convert("uniqueness", "starts", _int, 10, "integer")
    tol = rd.convert("uniqueness", "tol", float, 1e-6, "real")
    if starts < 1:
        raise rd.error(IncompleteTaskError, "uniqueness needs starts >= 1", "uniqueness", "starts")
    if not tol > 0:
        raise rd.error(ScenarioParseError, "tol must be positive", "uniqueness", "tol")

    return Scenario(
        name=name,
        task=task,
        space=space,
        map=mapping,
        seed=seed,
        stopping=stopping,
        x0=x0,
        classes=classes,
        pairs=pairs,
        slack=slack,
        min_separation=min_sep,
        starts=starts,
        tol=tol,
        out=out,
    )


def _section_line(text: str, section: str) -> Optional[int]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if raw.strip().lower() == f"[{section}]":
            return lineno
    return None


def _modulus_keys(parser) -> list[str]:
    if not parser.has_section("classify"):
        return []
    return [k for k in parser.options("classify") if k.startswith("modulus.")]


def _class_specs(rd: _Reader, mapping, space, ids, horizon, required) -> Optional[tuple[ClassSpec, ...]]:
    for key in _modulus_keys(rd.parser):
        cid = key.split(".", 1)[1]
        if cid not in CLASS_IDS:
            raise rd.error(ScenarioParseError, f"modulus for unknown class {cid!r}", "classify", key)
    if ids is None:
        ids = list(CLASS_IDS)
        explicit = False
    else:
        explicit = True
    defaults = default_class_specs(mapping, space)
    specs = []
    for cid in ids:
        if cid not in CLASS_IDS:
            raise rd.error(ScenarioParseError, f"unknown class {cid!r}; known classes: {', '.join(CLASS_IDS)}", "classify", "classes")
        key = f"modulus.{cid}"
        modulus = rd.convert("classify", key, _modulus, None, "modulus")
        default = defaults.get(cid)
        if modulus is None and default is not None:
            modulus = default.modulus
        h = None
        if cid == "asymptotic":
            h = horizon if horizon is not None else (default.horizon if default is not None else None)
        try:
            if modulus is None and cid in ("rakotch", "boyd_wong", "asymptotic"):
                if explicit:
                    raise rd.error(
                        IncompleteTaskError,
                        f"class {cid} needs `modulus.{cid}` (no default modulus is cataloged for {mapping.kind})",
                        "classify",
                        "classes",
                    )
                continue
            specs.append(ClassSpec(cid, modulus, h))
        except RejectedInput as exc:
            raise rd.error(ScenarioParseError, str(exc), "classify", key if rd.has("classify", key) else "classes") from None
    return tuple(specs)


def load_scenario(path) -> Scenario:
    path = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", path) from None
    return parse_scenario(text, path)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "inf" if v == math.inf else repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(float(x)) for x in v)
    return str(v)


def dump_scenario(s: Scenario) -> str:
    """Scenario text with every field spelled out; parses back to an equal Scenario."""
    lines = [
        "[scenario]",
        f"name = {s.name}",
        f"task = {s.task}",
        f"seed = {s.seed}",
    ]
    if s.out:
        lines.append(f"out = {s.out}")
    sp = s.space
    lines += ["", "[space]", f"dim = {sp.dim}", f"norm = {'inf' if sp.norm_p == math.inf else int(sp.norm_p)}"]
    lines.append(f"ball_radius = {'none' if sp.ball_radius is None else _fmt(sp.ball_radius)}")
    lines += [f"nonnegative = {_fmt(sp.nonnegative)}", f"sample_scale = {_fmt(sp.sample_scale)}"]
    lines += ["", "[map]", f"kind = {s.map.kind}"]
    for k, v in s.map.params.items():
        # trailing comma keeps a length-1 vector a vector
        lines.append(f"{k} = {_fmt(v)}{',' if isinstance(v, tuple) and len(v) == 1 else ''}")
    st = s.stopping
    lines += ["", "[stopping]", f"eps = {_fmt(st.eps)}", f"max_iter = {st.max_iter}"]
    if st.divergence_radius is not None:
        lines.append(f"divergence_radius = {_fmt(float(st.divergence_radius))}")
    lines += [f"rate_window = {st.rate_window}", f"cycle_window = {st.cycle_window}"]
    if st.store_stride is not None:
        lines.append(f"store_stride = {st.store_stride}")
    lines += ["", "[run]", f"x0 = {'seeded' if s.x0 is None else _fmt(s.x0.tolist())}"]
    lines += [
        "",
        "[classify]",
        f"pairs = {s.pairs}",
        f"slack = {_fmt(s.slack)}",
        f"min_separation = {_fmt(s.min_separation)}",
    ]
    if s.classes is not None:
        lines.append(f"classes = {', '.join(c.class_id for c in s.classes)}")
        for c in s.classes:
            if c.modulus is not None:
                lines.append(f"modulus.{c.class_id} = {_modulus_text(c.modulus)}")
            if c.horizon is not None:
                lines.append(f"horizon = {c.horizon}")
    lines += ["", "[uniqueness]", f"starts = {s.starts}", f"tol = {_fmt(s.tol)}", ""]
    return "\n".join(lines)


def _modulus_text(m: ModulusSpec) -> str:
    return " ".join([m.kind] + [f"{k}={v!r}" for k, v in m.params.items()])


# ---------------------------------------------------------------------------
# execution


@dataclass
class SummaryReport:
    scenario: str
    task: str
    status: str
    metrics: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    duration_s: float = 0.0
    sparkline: str = ""
    notes: list = field(default_factory=list)
    resolved: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "task": self.task,
            "status": self.status,
            "metrics": self.metrics,
            "checks": self.checks,
            "ok": self.ok,
            "duration_s": self.duration_s,
            "sparkline": self.sparkline,
            "notes": self.notes,
            "files": self.files,
            "resolved": self.resolved,
        }


_BARS = "▁▂▃▄▅▆▇█"


def sparkline(values, width: int = 48) -> str:
    """Log-scale text sparkline of positive values (zeros drawn as blanks)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return ""
    idx = np.unique(np.linspace(0, v.size - 1, min(width, v.size)).astype(int))
    v = v[idx]
    pos = v > 0
    if not np.any(pos):
        return " " * len(v)
    logs = np.full(v.shape, np.nan)
    logs[pos] = np.log10(v[pos])
    lo, hi = np.nanmin(logs), np.nanmax(logs)
    span = hi - lo if hi > lo else 1.0
    out = []
    for x in logs:
        out.append(" " if math.isnan(x) else _BARS[int(round((x - lo) / span * (len(_BARS) - 1)))])
    return "".join(out)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def resolve_out_dir(scenario: Scenario, out: Optional[str] = None) -> Path:
    if out:
        return Path(out)
    if scenario.out:
        return Path(scenario.out)
    base = os.environ.get(OUT_DIR_ENV) or "fixlab-out"
    return Path(base) / scenario.name


def _run_task(s: Scenario, out_dir: Path, summary: SummaryReport) -> None:
    x0 = s.x0
    if x0 is None:
        x0 = sample(s.space, 1, sub_seed(s.seed, "starts"))[0]
    report, trace = iteration.run(s.map, s.space, x0, s.stopping)
    (out_dir / "trace.jsonl").write_text(trace.to_jsonl())
    summary.files.append("trace.jsonl")
    summary.status = report.status
    final = report.final_point
    residual = iteration.fixed_point_residual(s.map, s.space, final)
    summary.metrics.update(
        {
            "iterations": report.iterations,
            "x0": report.x0.tolist(),
            "final_point_norm": norm(final.coords, s.space.norm_p),
            "final_step_distance": float(trace.step_distance[-1]) if len(trace) else 0.0,
            "fixed_point_residual": residual,
            "estimated_rate": report.estimated_rate,
            "tail_bound": report.tail_bound,
            "max_excursion": report.max_excursion,
            "divergence_radius": report.divergence_radius,
        }
    )
    if final.dim <= 16:
        summary.metrics["final_point"] = final.tolist()
    summary.sparkline = sparkline(trace.step_distance)
    strict_map = s.map.entry.strictly_nonexpansive
    if strict_map:
        summary.checks["strict_step_decrease"] = iteration.strict_step_violations(trace) == 0
    if report.converged:
        summary.checks["tail_bound_within_eps"] = report.tail_bound is not None and report.tail_bound <= s.stopping.eps
        summary.checks["fixed_point_residual"] = residual <= 10 * s.stopping.eps
        if strict_map:
            series = iteration.monotone_max_series(trace, report.limit_proxy, s.space)
            summary.checks["monotone_max"] = iteration.monotone_max_violations(series) == 0
    if report.status == "diverged":
        summary.checks["divergence_witnessed"] = report.max_excursion > report.divergence_radius
    if not report.converged:
        summary.notes.append(f"run ended with status {report.status}; non-convergence is reported, not an error")


def _classify_task(s: Scenario, out_dir: Path, summary: SummaryReport) -> None:
    seed = sub_seed(s.seed, "sampling")
    certs = classifier.classify_all(
        s.map, s.space, s.pairs, seed, s.slack, s.min_separation, specs=s.classes
    )
    (out_dir / "certificates.json").write_text(_dump_json([c.to_dict() for c in certs]))
    summary.files.append("certificates.json")
    summary.status = "classified"
    summary.metrics["pairs"] = s.pairs
    summary.metrics["sampling_seed"] = seed
    summary.metrics["classes"] = {
        c.class_id: {"verdict": c.verdict, "max_ratio": c.max_ratio, "violations": c.violations} for c in certs
    }
    sound = True
    for c in certs:
        for w in c.witnesses:
            if classifier.reevaluate_witness(s.map, c.spec, w, s.space.norm_p) != (w.lhs, w.rhs):
                sound = False
        if c.verdict == "skipped":
            summary.notes.append(f"{c.class_id} skipped: {c.note}")
    summary.checks["witness_soundness"] = sound
    summary.checks["class_implication"] = classifier.implication_consistent(certs)
    banach = [c for c in certs if c.class_id == "banach" and c.consistent and c.spec.modulus is None]
    summary.checks["banach_ratio_below_one"] = all(c.max_ratio < 1.0 for c in banach)


def _uniqueness_task(s: Scenario, out_dir: Path, summary: SummaryReport) -> None:
    starts = sample(s.space, s.starts, sub_seed(s.seed, "starts"))
    result = iteration.multi_start_uniqueness(s.map, s.space, starts, s.stopping, s.tol)
    summary.status = result.verdict
    summary.metrics["starts"] = s.starts
    summary.metrics["pairwise_max"] = result.pairwise_max
    summary.metrics["runs"] = result.to_dict()["runs"] if s.space.dim <= 16 else [
        {"status": r.status, "iterations": r.iterations} for r in result.reports
    ]
    converged = [r for r in result.reports if r.converged]
    summary.checks["fixed_point_residual"] = all(
        iteration.fixed_point_residual(s.map, s.space, r.final_point) <= 10 * s.stopping.eps for r in converged
    )
    if result.verdict == "inconclusive":
        summary.notes.append("some run did not converge; uniqueness is not assessed")


_DISPATCH = {"run": _run_task, "classify": _classify_task, "uniqueness": _uniqueness_task}


def execute(scenario: Scenario, out: Optional[str] = None, task: Optional[str] = None) -> SummaryReport:
    """Run the scenario's task, write its files and summary.json, return the summary.

    ``task`` overrides the scenario's own task (the CLI verb does this).
    """
    task = task or scenario.task
    if task not in TASKS:
        raise ScenarioError(f"unknown task {task!r}")
    if task != scenario.task:
        scenario = replace(scenario, task=task)
    out_dir = resolve_out_dir(scenario, out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = SummaryReport(scenario=scenario.name, task=task, status="error", resolved=scenario.to_dict())
    t0 = time.perf_counter()
    try:
        _DISPATCH[task](scenario, out_dir, summary)
    except RejectedInput as exc:
        summary.status = "error"
        summary.checks["task_completed"] = False
        summary.notes.append(f"task failed: {exc}")
    summary.duration_s = time.perf_counter() - t0
    (out_dir / "summary.json").write_text(_dump_json(summary.to_dict()))
    return summary
