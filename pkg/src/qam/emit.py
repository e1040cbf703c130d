"""DOT and JSON output.  Both are deterministic for deterministic input."""
from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
from fractions import Fraction

from .engine import LtsGraph
from .terms import Configuration, Label, Term, show, show_config, show_label, show_rate

SCHEMA = 1


def state_hash(config: Configuration) -> str:
    return hashlib.sha256(show_config(config).encode("utf-8")).hexdigest()


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_dot(g: LtsGraph) -> str:
    lines = ["digraph lts {", "  rankdir=LR;", '  node [shape=box, fontname="monospace"];']
    states = g.states or [Configuration(())]
    for i, c in enumerate(states):
        extra = ", peripheries=2" if i == g.initial else ""
        lines.append(f"  s{i} [label={_quote(show_config(c))}{extra}];")
    for src, dst, t in g.edges:
        lines.append(f"  s{src} -> s{dst} [label={_quote(show_label(t.label))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def jsonable(obj):
    """Plain JSON data for reports: terms and labels print in surface syntax."""
    if isinstance(obj, Label):
        return show_label(obj)
    if isinstance(obj, Configuration):
        return show_config(obj)
    if isinstance(obj, Term):
        return show(obj)
    if isinstance(obj, Fraction):
        return show_rate(obj)
    if isinstance(obj, enum.Enum):
        return obj.name
    if isinstance(obj, float):
        out = round(obj, 12)
        return 0.0 if out == 0 else out
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = [jsonable(x) for x in obj]
        if isinstance(obj, (set, frozenset)):
            items.sort(key=lambda x: json.dumps(x, sort_keys=True))
        return items
    return obj


def emit_json(report: dict, indent: int | None = 2) -> str:
    data = {"schema": SCHEMA}
    data.update(jsonable(report))
    return json.dumps(data, sort_keys=True, indent=indent, ensure_ascii=False)
