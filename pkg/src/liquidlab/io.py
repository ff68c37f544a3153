"""JSON (de)serialization of substrates, networks, moves, liquids, models and mappings."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .substrate import (
    Atom,
    Binding,
    Bond,
    Element,
    EqualityPolicy,
    Move,
    Network,
    Slot,
    Substrate,
    atom_end,
    check_network,
    is_open,
    open_end,
)
from .tensors import GradedDim, Model, QSqrt2, is_exact_array

SCHEMA = "liquidlab/1"


class SchemaError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Substrates
# ---------------------------------------------------------------------------


def substrate_to_json(s: Substrate) -> dict:
    return {
        "name": s.name,
        "bindings": [{"name": b.name, "arrow_semantics": b.arrow_semantics} for b in s.bindings],
        "elements": [{"name": e.name, "slots": [{"name": sl.name, "binding": sl.binding, "arrow": sl.arrow} for sl in e.slots]} for e in s.elements],
    }


def substrate_from_json(d: Mapping | str) -> Substrate:
    """Inline definition or the name of a built-in substrate."""
    if isinstance(d, str):
        from .liquids import substrate

        return substrate(d)
    bindings = tuple(Binding(b["name"], bool(b.get("arrow_semantics", False))) for b in d["bindings"])
    elements = tuple(Element(e["name"], tuple(Slot(sl["name"], sl["binding"], sl.get("arrow")) for sl in e["slots"])) for e in d["elements"])
    return Substrate(bindings, elements, d.get("name", ""))


# ---------------------------------------------------------------------------
# Networks and moves
# ---------------------------------------------------------------------------


def _end_to_json(e) -> dict:
    return {"open": e[1]} if is_open(e) else {"atom": e[1], "slot": e[2]}


def _end_from_json(d: Mapping):
    return open_end(d["open"]) if "open" in d else atom_end(int(d["atom"]), d["slot"])


def network_to_json(n: Network, inline_substrate: bool = False) -> dict:
    return {
        "schema": SCHEMA,
        "kind": "network",
        "substrate": substrate_to_json(n.substrate) if inline_substrate else n.substrate.name,
        "atoms": [{"id": a.id, "element": a.element, "conjugated": a.conjugated} for a in n.atoms],
        "bonds": [
            {"ends": [_end_to_json(b.ends[0]), _end_to_json(b.ends[1])], "direction": b.direction, "binding": b.binding} for b in n.bonds
        ],
        "open_order": list(n.open_order),
        "directed": n.directed,
    }


def network_from_json(d: Mapping, substrate: Substrate | None = None) -> Network:
    sub = substrate or substrate_from_json(d["substrate"])
    atoms = tuple(Atom(int(a["id"]), a["element"], bool(a.get("conjugated", False))) for a in d["atoms"])
    bonds = tuple(
        Bond((_end_from_json(b["ends"][0]), _end_from_json(b["ends"][1])), b.get("direction"), b.get("binding")) for b in d["bonds"]
    )
    n = Network(sub, atoms, bonds, tuple(d["open_order"]), bool(d.get("directed", False)))
    return check_network(n)


def move_to_json(m: Move) -> dict:
    return {
        "name": m.name,
        "lhs": network_to_json(m.lhs),
        "rhs": network_to_json(m.rhs),
        "correspondence": [list(p) for p in m.correspondence],
        "policy": m.policy.to_json(),
        "derived": m.derived,
    }


def move_from_json(d: Mapping, substrate: Substrate) -> Move:
    return Move(
        d["name"],
        network_from_json(d["lhs"], substrate),
        network_from_json(d["rhs"], substrate),
        tuple((a, b) for a, b in d["correspondence"]),
        EqualityPolicy.from_json(d.get("policy", "tolerance")),
        bool(d.get("derived", False)),
    )


def liquid_to_json(l) -> dict:
    return {
        "schema": SCHEMA,
        "kind": "liquid",
        "name": l.name,
        "substrate": substrate_to_json(l.substrate),
        "moves": [move_to_json(m) for m in l.moves],
        "derived": [move_to_json(m) for m in l.derived],
        "notes": dict(l.notes),
        "metadata": _jsonable(l.metadata),
    }


def liquid_from_json(d: Mapping):
    from .checker import Liquid

    sub = substrate_from_json(d["substrate"])
    moves = tuple(move_from_json(m, sub) for m in d["moves"])
    derived = tuple(move_from_json(m, sub) for m in d.get("derived", []))
    return Liquid(d["name"], sub, moves, derived, dict(d.get("notes", {})), dict(d.get("metadata", {})))


def _jsonable(x: Any) -> Any:
    if isinstance(x, Mapping):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


def _exact_entry(v: QSqrt2) -> list[str]:
    return [str(v.a), str(v.b)]


def tensor_to_json(t: np.ndarray) -> dict:
    t = np.asarray(t)
    if is_exact_array(t):
        return {"shape": list(t.shape), "exact": True, "data": [_exact_entry(QSqrt2.coerce(v)) for v in t.ravel()]}
    c = np.asarray(t, dtype=complex).ravel()
    return {"shape": list(t.shape), "exact": False, "data": [[float(v.real), float(v.imag)] for v in c]}


def tensor_from_json(d: Mapping) -> np.ndarray:
    shape = tuple(d["shape"])
    if d.get("exact"):
        out = np.empty(len(d["data"]), dtype=object)
        for i, (a, b) in enumerate(d["data"]):
            out[i] = QSqrt2(Fraction(a), Fraction(b))
        return out.reshape(shape)
    data = np.array([complex(re, im) for re, im in d["data"]], dtype=complex)
    if not np.any(data.imag):
        data = data.real
    return data.reshape(shape)


def _dim_to_json(d: int | GradedDim) -> int | dict:
    return d.to_json() if isinstance(d, GradedDim) else int(d)


def _dim_from_json(d: int | Mapping) -> int | GradedDim:
    if isinstance(d, Mapping):
        return GradedDim(int(d["even"]), int(d.get("odd", 0)), int(d.get("hole_even", 0)), int(d.get("hole_odd", 0)))
    return int(d)


def model_to_json(m: Model, inline_substrate: bool = False) -> dict:
    return {
        "schema": SCHEMA,
        "kind": "model",
        "name": m.name,
        "substrate": substrate_to_json(m.substrate) if inline_substrate else m.substrate.name,
        "semantics": m.semantics,
        "dims": {k: _dim_to_json(v) for k, v in m.dims.items()},
        "tensors": {k: tensor_to_json(v) for k, v in m.tensors.items()},
        "orderings": {k: list(v) for k, v in m.orderings.items()},
    }


def model_from_json(d: Mapping) -> Model:
    sub = substrate_from_json(d["substrate"])
    return Model(
        sub,
        {k: _dim_from_json(v) for k, v in d["dims"].items()},
        {k: tensor_from_json(v) for k, v in d["tensors"].items()},
        d.get("semantics", "complex"),
        {k: tuple(v) for k, v in d.get("orderings", {}).items()},
        d.get("name", ""),
    )


# ---------------------------------------------------------------------------
# Mappings and files
# ---------------------------------------------------------------------------


def mapping_to_json(m) -> dict:
    out = m.to_json()
    out["schema"] = SCHEMA
    out["kind"] = "mapping"
    return out


def mapping_from_json(d: Mapping):
    from .mappings import SubstrateMapping

    src = substrate_from_json(d["source"])
    tgt = substrate_from_json(d["target"])
    return SubstrateMapping(
        d.get("name", ""),
        src,
        tgt,
        {k: tuple(v) for k, v in d["binding_map"].items()},
        {k: network_from_json(v, tgt) for k, v in d["element_map"].items()},
        {k: {s: tuple(g) for s, g in v.items()} for k, v in d["slot_groups"].items()},
        {k: tuple(v) for k, v in d.get("orderings", {}).items()},
    )


def load_json(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    if not isinstance(d, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    schema = d.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise SchemaError(f"{path}: unsupported schema {schema!r}")
    return d


def dump_json(obj: Any, path: str | Path | None = None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text
