"""File formats: population JSON, schema text syntax, canonical reports.

Population files are UTF-8 JSON::

    {"rollouts": [{"action": "alpha",
                   "states": [[1, "a", 0], ...],
                   "terminal": "f1"}, ...],
     "payoffs": {"f1": "3/2", ...}}

States are [class id, tag symbol, copy index] triples and payoffs are
exact rationals written as "p/q" (or plain "p") strings.  Parsing
untrusted files runs the full population validation and reports every
violation.

The schema text syntax is ``action,c1,...,ck,tail`` where the tail is a
terminal label or ``#``, and the bare ``#`` is the root pattern.  All
serialisation here is canonical (sorted keys, stable number formatting)
so reports produced from the same inputs and seeds are byte-identical.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from .model import (
    Population,
    Rollout,
    Schema,
    StateTag,
    TaggedState,
    TerminalLabel,
    WILDCARD,
    validate_population,
)

PayoffMap = dict[TerminalLabel, Fraction]


class ParseError(Exception):
    """The file is not well-formed for its format."""


class SchemaSyntaxError(ParseError):
    """Schema text does not follow the grammar; pinpoints the token."""


def parse_rational(text: Any) -> Fraction:
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise ParseError(f"expected a rational string, got {text!r}")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad rational {text!r}: {exc}") from None


def format_rational(value: Fraction) -> str:
    return str(Fraction(value))


# --- schema text --------------------------------------------------------------


def parse_schema(text: str) -> Schema:
    """Parse ``action,c1,...,ck,tail`` (or bare ``#``) into a Schema."""
    stripped = text.strip()
    if stripped == WILDCARD:
        return Schema()
    tokens = [t.strip() for t in stripped.split(",")]
    if len(tokens) < 2:
        raise SchemaSyntaxError(
            f"schema {text!r} needs an action and a tail (terminal or '#')"
        )
    action = tokens[0]
    if not action or action == WILDCARD or action.isdigit():
        raise SchemaSyntaxError(f"bad action token {action!r} in {text!r}")
    classes = []
    for tok in tokens[1:-1]:
        if not tok.isdigit() or int(tok) < 1:
            raise SchemaSyntaxError(f"bad class token {tok!r} in {text!r}")
        classes.append(int(tok))
    tail = tokens[-1]
    if not tail:
        raise SchemaSyntaxError(f"empty tail token in {text!r}")
    if tail != WILDCARD and tail.isdigit():
        raise SchemaSyntaxError(
            f"tail {tail!r} in {text!r} looks like a class; schemata end in a terminal or '#'"
        )
    return Schema(action, tuple(classes), tail)


def format_schema(h: Schema) -> str:
    return str(h)


def read_schemata_file(path: str | Path) -> list[Schema]:
    """One schema per non-blank line."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [parse_schema(line) for line in lines if line.strip()]


# --- population files ---------------------------------------------------------


def _state_from_json(entry: Any, where: str) -> TaggedState:
    if (
        not isinstance(entry, list)
        or len(entry) != 3
        or not isinstance(entry[0], int)
        or not isinstance(entry[1], str)
        or not isinstance(entry[2], int)
    ):
        raise ParseError(f"{where}: state entries are [class, tag, copy] triples, got {entry!r}")
    try:
        return TaggedState(entry[0], StateTag(entry[1], entry[2]))
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from None


def population_from_json(data: Any) -> tuple[Population, PayoffMap]:
    if not isinstance(data, dict) or "rollouts" not in data:
        raise ParseError("population files are objects with a 'rollouts' list")
    raw_rollouts = data["rollouts"]
    if not isinstance(raw_rollouts, list):
        raise ParseError("'rollouts' must be a list")
    rollouts: list[Rollout] = []
    for i, entry in enumerate(raw_rollouts):
        where = f"rollout {i}"
        if not isinstance(entry, dict):
            raise ParseError(f"{where}: must be an object")
        try:
            action = entry["action"]
            terminal = entry["terminal"]
        except KeyError as exc:
            raise ParseError(f"{where}: missing field {exc}") from None
        states = entry.get("states", [])
        if not isinstance(states, list):
            raise ParseError(f"{where}: 'states' must be a list")
        if not isinstance(action, str) or not isinstance(terminal, str):
            raise ParseError(f"{where}: action and terminal are strings")
        parsed = tuple(_state_from_json(s, where) for s in states)
        try:
            rollouts.append(Rollout(action, parsed, terminal))
        except ValueError as exc:
            raise ParseError(f"{where}: {exc}") from None
    payoffs: PayoffMap = {}
    for name, value in (data.get("payoffs") or {}).items():
        payoffs[name] = parse_rational(value)
    population = validate_population(rollouts)
    return population, payoffs


def population_to_json(p: Population, payoffs: Mapping[TerminalLabel, Fraction] | None = None) -> dict:
    return {
        "rollouts": [
            {
                "action": r.action,
                "states": [[s.cls, s.tag.symbol, s.tag.copy] for s in r.states],
                "terminal": r.terminal,
            }
            for r in p.rollouts
        ],
        "payoffs": {
            name: format_rational(value) for name, value in sorted((payoffs or {}).items())
        },
    }


def dump_canonical(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def save_population(
    path: str | Path, p: Population, payoffs: Mapping[TerminalLabel, Fraction] | None = None
) -> None:
    Path(path).write_text(dump_canonical(population_to_json(p, payoffs)), encoding="utf-8")


def load_population(path: str | Path) -> tuple[Population, PayoffMap]:
    """Parse and validate a population file; see roundtrip_population."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return population_from_json(data)


def roundtrip_population(path: str | Path) -> Population:
    """Load a population file; parse -> serialise -> parse is the identity."""
    return load_population(path)[0]


# --- digraph files --------------------------------------------------------------

# Node naming: actions and terminals by their labels, classes as "c<id>".


def _node_name(node: tuple) -> str:
    kind, payload = node
    return f"c{payload}" if kind == "class" else str(payload)


def digraph_to_json(g) -> dict:
    """{"nodes": {...}, "edges": [[src, dst, weight], ...]} with stable order."""
    edges = sorted(
        (_node_name(src), _node_name(dst), w)
        for src, outs in g.weights.items()
        for dst, w in outs.items()
    )
    return {
        "nodes": {
            "actions": sorted(g.actions),
            "classes": [f"c{i}" for i in sorted(g.classes)],
            "terminals": sorted(g.terminals),
        },
        "edges": [list(edge) for edge in edges],
    }


def digraph_from_json(data: Any):
    from .digraph import WeightedDigraph, action_node, class_node, terminal_node

    if not isinstance(data, dict) or "nodes" not in data or "edges" not in data:
        raise ParseError("digraph files carry 'nodes' and 'edges'")
    nodes = data["nodes"]
    g = WeightedDigraph()
    g.actions.update(nodes.get("actions", []))
    g.terminals.update(nodes.get("terminals", []))
    lookup = {name: action_node(name) for name in g.actions}
    lookup.update({name: terminal_node(name) for name in g.terminals})
    for name in nodes.get("classes", []):
        if not (isinstance(name, str) and name[:1] == "c" and name[1:].isdigit()):
            raise ParseError(f"bad class node {name!r}; expected 'c<id>'")
        cls = int(name[1:])
        g.classes.add(cls)
        lookup[name] = class_node(cls)
    for entry in data["edges"]:
        if not (isinstance(entry, list) and len(entry) == 3 and isinstance(entry[2], int)):
            raise ParseError(f"bad edge {entry!r}; expected [src, dst, weight]")
        src, dst, weight = entry
        if src not in lookup or dst not in lookup:
            raise ParseError(f"edge {entry!r} references an undeclared node")
        if weight < 1:
            raise ParseError(f"edge {entry!r} must have positive weight")
        g.weights.setdefault(lookup[src], {})[lookup[dst]] = weight
    return g
