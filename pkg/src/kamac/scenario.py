"""Scenario files: a source model, a target function and run options.

Schema (JSON)::

    {
      "name": "...", "description": "...",
      "sources": {"independent": [PMF, ...]}
               | {"joint": {"alphabets": [[...], ...], "table": [[...], ...]}}
               | {"maximal_coupling": [PMF, PMF]},
      "function": {"name": "<catalog entry>", "params": {...}},
      "options": {"k_max": 1, "edge_rule": "pointwise", "calculus_at": [...],
                  "calculus_dx": [...], "conditional_breakdown": false},
      "annotations": [{"quantity": "...", "location": "...",
                       "paper_value": 1.0, "oracle": "<report key>"}]
    }

``PMF`` is ``{"symbols": [...], "probs": [...]}``; probabilities may be
rational strings such as ``"1/3"``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import KamacError, SizeCapError, ValidationError
from .ka import CATALOG_NAMES, KaSystem, catalog
from .prob import Alphabet, JointPmf, Pmf, as_prob, maximal_coupling

__all__ = ["Scenario", "ScenarioParseError", "load_scenario", "parse_scenario", "bundled_scenarios"]

MAX_ALPHABET = 16
MAX_SOURCES = 4
OPTION_KEYS = {"k_max", "edge_rule", "calculus_at", "calculus_dx", "conditional_breakdown"}


class ScenarioParseError(KamacError):
    exit_code = 2


@dataclass(frozen=True)
class Scenario:
    name: str
    joint: JointPmf
    function: str
    params: dict
    system: KaSystem | None
    options: dict
    raw: dict
    coupling: tuple | None = None
    annotations: tuple = field(default_factory=tuple)
    description: str = ""

    @property
    def n(self) -> int:
        return self.joint.n


def _pmf(spec, path) -> Pmf:
    if not isinstance(spec, dict) or "symbols" not in spec or "probs" not in spec:
        raise ValidationError("pmf needs 'symbols' and 'probs'", path)
    try:
        return Pmf(Alphabet(tuple(spec["symbols"])), tuple(spec["probs"]))
    except ValidationError as exc:
        raise ValidationError(str(exc), path) from None


def _sources(spec) -> tuple:
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ValidationError(
            "exactly one of 'independent', 'joint', 'maximal_coupling' is required", "sources"
        )
    (kind, body), = spec.items()
    if kind == "independent":
        if not isinstance(body, list) or not body:
            raise ValidationError("expected a non-empty list of pmfs", "sources.independent")
        pmfs = [_pmf(s, f"sources.independent[{i}]") for i, s in enumerate(body)]
        return JointPmf.product(*pmfs), None
    if kind == "joint":
        path = "sources.joint"
        if not isinstance(body, dict) or "alphabets" not in body or "table" not in body:
            raise ValidationError("joint needs 'alphabets' and 'table'", path)
        try:
            table = np.vectorize(as_prob, otypes=[object])(np.asarray(body["table"], dtype=object))
            return JointPmf(body["alphabets"], table), None
        except ValidationError as exc:
            raise ValidationError(str(exc), path) from None
        except (ValueError, TypeError) as exc:
            raise ValidationError(f"malformed table: {exc}", path) from None
    if kind == "maximal_coupling":
        path = "sources.maximal_coupling"
        if not isinstance(body, list) or len(body) != 2:
            raise ValidationError("expected exactly two pmfs", path)
        p, q = (_pmf(s, f"{path}[{i}]") for i, s in enumerate(body))
        try:
            c = maximal_coupling(p, q)
        except ValidationError as exc:
            raise ValidationError(str(exc), path) from None
        return c.joint, (p, q)
    raise ValidationError(f"unknown source kind {kind!r}", "sources")


def _check_domain(name: str, joint: JointPmf):
    if name == "xor":
        for i, a in enumerate(joint.alphabets):
            if not all(isinstance(s, int) and s >= 0 for s in a.symbols):
                raise ValidationError(
                    f"xor needs non-negative integer symbols (source {i + 1})", "function"
                )


def parse_scenario(data: dict, name: str = "scenario") -> Scenario:
    """Validate a decoded scenario document."""
    if not isinstance(data, dict):
        raise ValidationError("scenario must be a JSON object", "")
    for key in ("sources", "function"):
        if key not in data:
            raise ValidationError("missing required key", key)
    joint, coupling = _sources(data["sources"])
    if joint.n > MAX_SOURCES or any(len(a) > MAX_ALPHABET for a in joint.alphabets):
        raise SizeCapError(
            f"scenarios are capped at {MAX_SOURCES} sources of at most {MAX_ALPHABET} symbols"
        )

    fn = data["function"]
    if not isinstance(fn, dict) or "name" not in fn:
        raise ValidationError("function needs a 'name'", "function")
    fname = fn["name"]
    params = dict(fn.get("params") or {})
    if fname not in CATALOG_NAMES:
        raise ValidationError(f"unknown catalog entry {fname!r}", "function.name")
    try:
        system = catalog(fname, params, joint.n)
    except ValidationError as exc:
        raise ValidationError(str(exc), "function") from None
    _check_domain(fname, joint)

    options = dict(data.get("options") or {})
    unknown = set(options) - OPTION_KEYS
    if unknown:
        raise ValidationError(f"unknown options {sorted(unknown)}", "options")
    options.setdefault("k_max", 1)
    options.setdefault("edge_rule", "pointwise")
    options.setdefault("conditional_breakdown", False)
    if options["edge_rule"] not in ("pointwise", "global"):
        raise ValidationError("must be 'pointwise' or 'global'", "options.edge_rule")
    if options["k_max"] not in (1, 2):
        raise ValidationError("must be 1 or 2", "options.k_max")
    for key in ("calculus_at", "calculus_dx"):
        if key in options and len(options[key]) != joint.n:
            raise ValidationError(f"needs {joint.n} components", f"options.{key}")

    annotations = []
    for i, a in enumerate(data.get("annotations") or []):
        for key in ("quantity", "location", "paper_value", "oracle"):
            if key not in a:
                raise ValidationError("missing key " + key, f"annotations[{i}]")
        annotations.append(dict(a))

    return Scenario(
        name=str(data.get("name", name)),
        joint=joint,
        function=fname,
        params=params,
        system=None if fname == "xor" else system,
        options=options,
        raw=data,
        coupling=coupling,
        annotations=tuple(annotations),
        description=str(data.get("description", "")),
    )


def bundled_scenarios() -> dict:
    """``{name: path}`` of the scenarios shipped with the package."""
    root = resources.files("kamac") / "scenarios"
    return {p.name[:-5]: Path(str(p)) for p in root.iterdir() if p.name.endswith(".json")}


def load_scenario(path) -> Scenario:
    """Load a scenario file; a bare bundled name such as ``product`` also works."""
    p = Path(path)
    if not p.exists():
        bundled = bundled_scenarios()
        if str(path) in bundled:
            p = bundled[str(path)]
        else:
            raise ScenarioParseError(f"{path}: no such scenario file")
    try:
        data = json.loads(p.read_text())
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ScenarioParseError(f"{p}: {exc}") from None
    return parse_scenario(data, p.stem)
