"""Strict run-configuration parsing (YAML or JSON).

Every mapping level has a fixed key set and unknown keys are rejected with
a message naming the full key path, e.g. ``dissipation[0].qq_sites``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import ConfigError, UnknownModel
from .lattice import _canonical_kind

__all__ = ["RunConfig", "ChannelConfig", "load_config", "parse_config", "expand_sweep", "ARTIFACTS"]

ARTIFACTS = ("spectrum", "rho_mn", "liouvillian_spectrum", "purity", "profile", "heatmap", "report")

_MODEL_KEYS = {"kind", "size", "boundary", "params"}
_CHANNEL_KEYS = {"chain", "kappa_cells", "q_sites", "a", "gamma", "direction"}
_SOLVER_KEYS = {"method", "zero_tol", "dt", "t_max", "conv_tol", "seed", "initial"}
_MB_KEYS = {"particles", "V", "statistics", "gap"}
_BAND_KEYS = {"windows", "fb", "gap", "degenerate"}
_OUTPUT_KEYS = {"dir", "artifacts"}
_TOP_KEYS = {"name", "model", "dissipation", "solver", "many_body", "bands", "outputs", "sweep", "workers"}


@dataclass(frozen=True)
class ChannelConfig:
    chain: str | None
    kappa_cells: int | None
    q_sites: int | None
    a: float
    gamma: float
    direction: str | None


@dataclass(frozen=True)
class RunConfig:
    name: str
    model: dict
    dissipation: tuple[ChannelConfig, ...]
    solver: dict
    many_body: dict | None
    bands: dict
    outputs: dict
    sweep: tuple[dict, ...] = ()
    workers: int = 1
    raw: dict = field(default_factory=dict, compare=False)


def _strict(obj: Any, allowed: set[str], path: str) -> dict:
    if not isinstance(obj, Mapping):
        raise ConfigError(f"{path or 'config'}: expected a mapping, got {type(obj).__name__}")
    for key in obj:
        if key not in allowed:
            where = f"{path}.{key}" if path else str(key)
            raise ConfigError(f"{where}: unknown key (allowed: {', '.join(sorted(allowed))})")
    return dict(obj)


def _number(val: Any, path: str, integer: bool = False, positive: bool = False, allow_none: bool = False):
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        # YAML 1.1 reads "1e-8" as a string
        try:
            val = float(val)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: expected a number, got {val!r}") from None
    if integer:
        if int(val) != val:
            raise ConfigError(f"{path}: expected an integer, got {val!r}")
        val = int(val)
    else:
        val = float(val)
    if positive and val <= 0:
        raise ConfigError(f"{path}: must be positive, got {val!r}")
    return val


def _choice(val: Any, options, path: str) -> str:
    if val not in options:
        raise ConfigError(f"{path}: expected one of {list(options)}, got {val!r}")
    return val


def parse_config(data: Mapping, name: str = "run") -> RunConfig:
    top = _strict(data, _TOP_KEYS, "")
    if "model" not in top:
        raise ConfigError("model: required key missing")
    model = _strict(top["model"], _MODEL_KEYS, "model")
    for k in ("kind", "size"):
        if k not in model:
            raise ConfigError(f"model.{k}: required key missing")
    try:
        model["kind"] = _canonical_kind(str(model["kind"]))
    except UnknownModel as exc:
        raise ConfigError(f"model.kind: {exc}") from None
    size = model["size"]
    if isinstance(size, (int, float)) and not isinstance(size, bool):
        size = [size]
    if not isinstance(size, (list, tuple)) or not size:
        raise ConfigError(f"model.size: expected an integer or a list of integers, got {size!r}")
    model["size"] = [_number(s, f"model.size[{i}]", integer=True, positive=True) for i, s in enumerate(size)]
    model["boundary"] = _choice(str(model.get("boundary", "obc")).lower(), ("obc", "pbc"), "model.boundary")
    params = model.get("params", {}) or {}
    if not isinstance(params, Mapping):
        raise ConfigError("model.params: expected a mapping")
    model["params"] = {str(k): _number(v, f"model.params.{k}") for k, v in params.items()}

    chans = []
    for i, ch in enumerate(top.get("dissipation", []) or []):
        path = f"dissipation[{i}]"
        c = _strict(ch, _CHANNEL_KEYS, path)
        has_k, has_q = "kappa_cells" in c, "q_sites" in c
        if has_k == has_q:
            raise ConfigError(f"{path}: exactly one of kappa_cells / q_sites is required")
        if "a" not in c:
            raise ConfigError(f"{path}.a: required key missing")
        a = _number(c["a"], f"{path}.a")
        if a not in (1.0, -1.0):
            raise ConfigError(f"{path}.a: must be +1 or -1, got {c['a']!r}")
        gamma = _number(c.get("gamma", 1.0), f"{path}.gamma")
        if gamma < 0:
            raise ConfigError(f"{path}.gamma: must be non-negative, got {gamma}")
        chans.append(
            ChannelConfig(
                chain=None if c.get("chain") is None else str(c["chain"]),
                kappa_cells=_number(c["kappa_cells"], f"{path}.kappa_cells", True, True) if has_k else None,
                q_sites=_number(c["q_sites"], f"{path}.q_sites", True, True) if has_q else None,
                a=a,
                gamma=gamma,
                direction=None if c.get("direction") is None else str(c["direction"]),
            )
        )

    solver = _strict(top.get("solver", {}) or {}, _SOLVER_KEYS, "solver")
    solver = {
        "method": _choice(solver.get("method", "auto"), ("auto", "spectral", "direct", "evolve"), "solver.method"),
        "zero_tol": _number(solver.get("zero_tol", 1e-8), "solver.zero_tol", positive=True),
        "dt": _number(solver.get("dt"), "solver.dt", positive=True, allow_none=True),
        "t_max": _number(solver.get("t_max", 1e4), "solver.t_max", positive=True),
        "conv_tol": _number(solver.get("conv_tol", 1e-10), "solver.conv_tol", positive=True),
        "seed": _number(solver.get("seed", 0), "solver.seed", integer=True),
        "initial": _choice(solver.get("initial", "mixed"), ("mixed", "random_pure"), "solver.initial"),
    }

    mb = top.get("many_body")
    if mb is not None:
        mb = _strict(mb, _MB_KEYS, "many_body")
        mb = {
            "particles": _number(mb.get("particles", 2), "many_body.particles", True, True),
            "V": _number(mb.get("V", 0.0), "many_body.V"),
            "statistics": _choice(mb.get("statistics", "fermion"), ("fermion", "hardcore_boson"), "many_body.statistics"),
            "gap": _number(mb.get("gap", 1.0), "many_body.gap", positive=True),
        }

    bands = _strict(top.get("bands", {"degenerate": 1e-8}) or {"degenerate": 1e-8}, _BAND_KEYS, "bands")
    kinds = [k for k in ("windows", "gap", "degenerate") if k in bands]
    if len(kinds) != 1:
        raise ConfigError("bands: exactly one of windows / gap / degenerate is required")
    if "windows" in bands:
        wins = bands["windows"]
        if not isinstance(wins, Mapping) or not wins:
            raise ConfigError("bands.windows: expected a non-empty mapping label -> [lo, hi]")
        parsed = {}
        for label, rng in wins.items():
            if not isinstance(rng, (list, tuple)) or len(rng) != 2:
                raise ConfigError(f"bands.windows.{label}: expected [lo, hi]")
            parsed[str(label)] = [_number(r, f"bands.windows.{label}", integer=True) for r in rng]
        bands["windows"] = parsed
    elif "gap" in bands:
        bands["gap"] = _number(bands["gap"], "bands.gap", positive=True)
        fb = bands.get("fb", "narrowest")
        if fb not in ("narrowest", "top", "bottom"):
            fb = _number(fb, "bands.fb", integer=True)
        bands["fb"] = fb
    else:
        bands["degenerate"] = _number(bands["degenerate"], "bands.degenerate", positive=True)
        if "fb" in bands:
            raise ConfigError("bands.fb: only used with windows or gap")

    outputs = _strict(top.get("outputs", {}) or {}, _OUTPUT_KEYS, "outputs")
    arts = outputs.get("artifacts", list(ARTIFACTS))
    if not isinstance(arts, (list, tuple)):
        raise ConfigError("outputs.artifacts: expected a list")
    for i, a in enumerate(arts):
        _choice(a, ARTIFACTS, f"outputs.artifacts[{i}]")
    outputs = {"dir": str(outputs.get("dir", f"out/{top.get('name', name)}")), "artifacts": list(arts)}

    sweep = top.get("sweep", []) or []
    if not isinstance(sweep, (list, tuple)):
        raise ConfigError("sweep: expected a list of override mappings")
    for i, entry in enumerate(sweep):
        if not isinstance(entry, Mapping):
            raise ConfigError(f"sweep[{i}]: expected a mapping of dotted keys")

    return RunConfig(
        name=str(top.get("name", name)),
        model=model,
        dissipation=tuple(chans),
        solver=solver,
        many_body=mb,
        bands=bands,
        outputs=outputs,
        sweep=tuple(dict(s) for s in sweep),
        workers=_number(top.get("workers", 1), "workers", integer=True, positive=True),
        raw=copy.deepcopy(dict(data)),
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML/JSON: {exc}") from exc
    if data is None:
        raise ConfigError(f"{path}: empty config")
    return parse_config(data, name=path.stem)


def _set_dotted(tree: dict, dotted: str, value: Any) -> None:
    parts = dotted.split(".")
    node = tree
    for p in parts[:-1]:
        if isinstance(node, list):
            node = node[int(p)]
        else:
            node = node.setdefault(p, {})
    last = parts[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value


def expand_sweep(cfg: RunConfig) -> list[RunConfig]:
    """One config per sweep entry (``name`` in an entry names the subrun)."""
    if not cfg.sweep:
        return [cfg]
    out = []
    base_dir = cfg.outputs["dir"]
    for i, entry in enumerate(cfg.sweep):
        raw = copy.deepcopy(cfg.raw)
        raw.pop("sweep", None)
        entry = dict(entry)
        sub = str(entry.pop("name", f"sweep_{i:03d}"))
        for key, val in entry.items():
            try:
                _set_dotted(raw, key, val)
            except (IndexError, ValueError, TypeError, AttributeError) as exc:
                raise ConfigError(f"sweep[{i}].{key}: cannot apply override ({exc})") from None
        raw["name"] = f"{cfg.name}/{sub}"
        raw.setdefault("outputs", {})
        raw["outputs"] = dict(raw["outputs"], dir=f"{base_dir}/{sub}")
        out.append(parse_config(raw, name=raw["name"]))
    return out
