"""Run configuration loading and report serialisation.

Configs are YAML (JSON is accepted as a subset). Relative file references
resolve against the directory holding the config. Reports are JSON with a
``payload`` block that is a pure function of the config, and a separate
``metadata`` block for timestamps and environment details.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .exceptions import ConfigError, GnMetricError
from .fixed_point import SelfMap
from .metric_core import FiniteSpace, GnMetric, Kind, RealSpace, Space
from .sampling import SamplePlan

DEFAULT_RADII = [0.5, 1.0, 2.0, 4.0, 8.0]


@dataclass
class RunConfig:
    space: Space
    metric: GnMetric
    plan: SamplePlan | None = None
    g3_rule: str = "pairwise"
    radii: list = field(default_factory=lambda: list(DEFAULT_RADII))
    maps: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    sequences: list = field(default_factory=list)
    analysis: dict = field(default_factory=dict)
    pairs: list = field(default_factory=list)
    output: str | None = None
    source: Path | None = None


def _num(value, path: str, *, positive=False, integer=False):
    if isinstance(value, bool) or value is None:
        raise ConfigError("expected a number", path)
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {value!r}", path) from None
    if not np.isfinite(out):
        raise ConfigError("number must be finite", path)
    if integer:
        if out != int(out):
            raise ConfigError(f"expected an integer, got {value!r}", path)
        out = int(out)
    if positive and out <= 0:
        raise ConfigError("must be positive", path)
    return out


def _section(raw: dict, key: str, required=False) -> dict:
    val = raw.get(key)
    if val is None:
        if required:
            raise ConfigError("missing required section", key)
        return {}
    if not isinstance(val, dict):
        raise ConfigError("expected a mapping", key)
    return val


def _array_from(spec, base_dir: Path, path: str) -> np.ndarray:
    """Inline nested list, or a file reference (``.npy`` or whitespace/comma text)."""
    if isinstance(spec, (str, os.PathLike)):
        file = Path(spec)
        if not file.is_absolute():
            file = base_dir / file
        if not file.exists():
            raise ConfigError(f"file {str(file)!r} does not exist", path)
        if file.suffix == ".npy":
            return np.load(file)
        text = file.read_text()
        delim = "," if "," in text else None
        return np.loadtxt(file, delimiter=delim, ndmin=1)
    if isinstance(spec, dict) and "file" in spec:
        return _array_from(spec["file"], base_dir, f"{path}.file")
    try:
        return np.asarray(_floatify(spec), dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"expected numeric data: {exc}", path) from None


def _floatify(obj):
    if isinstance(obj, list):
        return [_floatify(v) for v in obj]
    if isinstance(obj, str):
        return float(obj)
    return obj


def _load_space(raw: dict, base_dir: Path) -> Space:
    sec = _section(raw, "space", required=True)
    kind = sec.get("kind", "real")
    try:
        if kind == "real":
            dim = _num(sec.get("dim", 1), "space.dim", positive=True, integer=True)
            return RealSpace(dim, sec.get("norm", "absolute" if dim == 1 else "euclidean"))
        if kind == "finite":
            if "base" in sec:
                base = _array_from(sec["base"], base_dir, "space.base")
                return FiniteSpace(base)
            if "points" in sec:
                pts = _array_from(sec["points"], base_dir, "space.points")
                norm = sec.get("norm", "absolute" if pts.ndim == 1 else "euclidean")
                return FiniteSpace.from_points(pts, norm)
            raise ConfigError("finite space needs 'base' or 'points'", "space")
    except ConfigError:
        raise
    except GnMetricError as exc:
        cell = getattr(exc, "cell", None)
        where = "space.base" + (f"[{cell[0]}][{cell[1]}]" if cell else "")
        raise ConfigError(str(exc), where) from None
    raise ConfigError(f"unknown space kind {kind!r} (real | finite)", "space.kind")


def _load_metric(raw: dict, space: Space, base_dir: Path) -> GnMetric:
    sec = _section(raw, "metric", required=True)
    arity = _num(sec.get("arity"), "metric.arity", integer=True)
    if arity < 3:
        raise ConfigError(f"arity ≥ 3 required, got {arity}", "metric.arity")
    kind = sec.get("kind")
    try:
        kind = Kind(kind)
    except ValueError:
        raise ConfigError(f"unknown metric kind {kind!r}; choose from {[k.value for k in Kind]}", "metric.kind") from None
    table = None
    if kind is Kind.EXPLICIT_TABLE:
        if "table" not in sec:
            raise ConfigError("explicit_table needs 'table'", "metric.table")
        table = _array_from(sec["table"], base_dir, "metric.table")
    try:
        return GnMetric(space, arity, kind, table=table)
    except GnMetricError as exc:
        raise ConfigError(str(exc), "metric") from None


def _load_plan(raw: dict, space: Space, seed_override: int | None) -> tuple[SamplePlan | None, str]:
    sec = _section(raw, "plan")
    if not sec and seed_override is None:
        return None, "pairwise"
    mode = sec.get("mode", "random")
    if mode not in ("random", "exhaustive"):
        raise ConfigError(f"unknown mode {mode!r}", "plan.mode")
    seed = seed_override if seed_override is not None else sec.get("seed")
    if seed is None:
        if mode == "random":
            raise ConfigError("seed is required in random mode", "plan.seed")
        seed = 0
    seed = _num(seed, "plan.seed", integer=True)
    count = _num(sec.get("tuple_count", 10_000), "plan.tuple_count", positive=True, integer=True)
    pool = sec.get("pool")
    kw = {}
    if sec.get("tuples") is not None:
        kw["tuples"] = _floatify(sec["tuples"])
    try:
        if isinstance(pool, dict) and "uniform" in pool:
            u = pool["uniform"]
            plan = SamplePlan.uniform_pool(
                _num(u.get("low"), "plan.pool.uniform.low"),
                _num(u.get("high"), "plan.pool.uniform.high"),
                _num(u.get("count"), "plan.pool.uniform.count", positive=True, integer=True),
                seed, mode=mode, tuple_count=count, **kw,
            )
        else:
            plan = SamplePlan(mode=mode, tuple_count=count, seed=seed,
                              point_pool=None if pool is None else _floatify(pool), **kw)
        plan.pool_for(space)
    except ConfigError:
        raise
    except GnMetricError as exc:
        raise ConfigError(str(exc), "plan") from None
    rule = sec.get("g3_rule", "pairwise")
    if rule not in ("pairwise", "some-pair"):
        raise ConfigError(f"unknown g3_rule {rule!r}", "plan.g3_rule")
    return plan, rule


def _load_map(spec, path: str) -> SelfMap:
    if not isinstance(spec, dict):
        raise ConfigError("expected a mapping", path)
    kind = spec.get("kind")
    pre_spec = spec.get("preimage")
    pre = _load_map(pre_spec, f"{path}.preimage") if pre_spec not in (None, "inverse") else None
    if kind == "affine":
        a = spec.get("a", 1.0)
        b = spec.get("b", 0.0)
        try:
            a, b = np.asarray(_floatify(a), dtype=float), np.asarray(_floatify(b), dtype=float)
        except (TypeError, ValueError):
            raise ConfigError("affine parameters must be numeric", path) from None
        m = SelfMap.affine(a, b, preimage=pre)
        if pre_spec == "inverse":
            try:
                m.preimage = m.inverse()
            except GnMetricError as exc:
                raise ConfigError(str(exc), f"{path}.preimage") from None
        return m
    if kind == "identity":
        m = SelfMap.identity()
        if pre is not None:
            m.preimage = pre
        return m
    if kind == "index":
        vals = spec.get("values")
        if not isinstance(vals, list):
            raise ConfigError("index map needs a 'values' list", f"{path}.values")
        return SelfMap.index([_num(v, f"{path}.values[{i}]", integer=True) for i, v in enumerate(vals)], preimage=pre)
    if kind == "named":
        try:
            return SelfMap.named(str(spec.get("name")), preimage=pre)
        except GnMetricError as exc:
            raise ConfigError(str(exc), f"{path}.name") from None
    raise ConfigError(f"unknown map kind {kind!r} (affine | identity | index | named)", f"{path}.kind")


def _load_maps(raw: dict) -> dict:
    sec = _section(raw, "maps")
    out = {}
    for name, spec in sec.items():
        out[name] = _load_map(spec, f"maps.{name}")
    return out


def load_config(path, seed_override: int | None = None) -> RunConfig:
    """Parse and validate a run configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"parse error: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping")
    base_dir = path.parent
    space = _load_space(raw, base_dir)
    metric = _load_metric(raw, space, base_dir)
    plan, rule = _load_plan(raw, space, seed_override)

    radii = raw.get("radii", DEFAULT_RADII)
    if not isinstance(radii, list) or not radii:
        raise ConfigError("expected a nonempty list", "radii")
    radii = [_num(r, f"radii[{i}]", positive=True) for i, r in enumerate(radii)]

    seqs = raw.get("sequences") or []
    if not isinstance(seqs, list):
        raise ConfigError("expected a list", "sequences")
    sequences = []
    for i, s in enumerate(seqs):
        arr = _array_from(s, base_dir, f"sequences[{i}]")
        try:
            sequences.append(space.coerce_points(arr))
        except GnMetricError as exc:
            raise ConfigError(str(exc), f"sequences[{i}]") from None

    pairs = raw.get("pairs") or []
    if not isinstance(pairs, list) or any(not isinstance(p, list) or len(p) != 2 for p in pairs):
        raise ConfigError("expected a list of [x, y] pairs", "pairs")

    solver = dict(_section(raw, "solver"))
    for key in ("q", "k", "eps", "uniqueness_tol"):
        if key in solver:
            solver[key] = _num(solver[key], f"solver.{key}")
    for key in ("x0", "seeds"):
        if key in solver:
            try:
                solver[key] = _floatify(solver[key])
            except (TypeError, ValueError):
                raise ConfigError("expected numeric point data", f"solver.{key}") from None
    if "max_iter" in solver:
        solver["max_iter"] = _num(solver["max_iter"], "solver.max_iter", positive=True, integer=True)

    analysis = dict(_section(raw, "analysis"))
    for key in ("tol",):
        if key in analysis:
            analysis[key] = _num(analysis[key], f"analysis.{key}", positive=True)
    for key in ("limit", "limits"):
        if key in analysis:
            try:
                analysis[key] = _floatify(analysis[key])
            except (TypeError, ValueError):
                raise ConfigError("expected numeric point data", f"analysis.{key}") from None
    for key in ("tail_start", "N", "exhaustive_cap"):
        if key in analysis:
            analysis[key] = _num(analysis[key], f"analysis.{key}", integer=True)

    return RunConfig(
        space=space,
        metric=metric,
        plan=plan,
        g3_rule=rule,
        radii=radii,
        maps=_load_maps(raw),
        solver=solver,
        sequences=sequences,
        analysis=analysis,
        pairs=[_floatify(p) for p in pairs],
        output=raw.get("output"),
        source=path,
    )


def _jsonable(obj: Any):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serialisable: {type(obj).__name__}")


def dumps_payload(payload: dict) -> str:
    """Canonical text of a payload. Floats use shortest round-trip repr."""
    return json.dumps(payload, sort_keys=True, indent=2, default=_jsonable, allow_nan=True)


def write_report(path, payload: dict, command: str) -> None:
    """Atomically write ``{"payload": ..., "metadata": ...}`` to ``path``."""
    from . import __version__, _kernels

    doc = {
        "payload": json.loads(dumps_payload(payload)),
        "metadata": {
            "command": command,
            "written_at": datetime.now(timezone.utc).isoformat(),
            "version": __version__,
            "backend": _kernels.BACKEND,
        },
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(json.dumps(doc, sort_keys=True, indent=2, default=_jsonable))
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_payload(path) -> dict:
    return json.loads(Path(path).read_text())["payload"]
