"""Built-in liquids and the auxiliary substrates used by mappings and circuits.

Networks are written with a small notation: each atom is ``(element,
{slot: label})``.  A label ``"x"`` is an open index, ``"<x"`` an open index
whose fermionic stub points inward, and ``"~x"`` one end of the internal bond
``x``.  In directed networks ``"~x>"`` marks the end contracted first.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Mapping, Sequence

from .checker import DerivationStep, Liquid
from .substrate import (
    BACKWARD,
    EXACT,
    FORWARD,
    Atom,
    Binding,
    Bond,
    Element,
    EqualityPolicy,
    Move,
    Network,
    NetworkError,
    Slot,
    Substrate,
    atom_end,
    check_network,
    make_move,
    open_end,
)

TOL = EqualityPolicy("tolerance", 1e-12)
PROJ = EqualityPolicy("projective", 1e-12)


def net(
    substrate: Substrate,
    atoms: Sequence[tuple],
    order: Sequence[str] | None = None,
    directed: bool = False,
    wires: Sequence[tuple[str, str, str]] = (),
) -> Network:
    """Build a network from the compact notation described in the module docstring."""
    built_atoms = []
    bonds: list[Bond] = []
    pending: dict[str, list[tuple[tuple, bool]]] = {}
    opens: list[str] = []
    for i, spec in enumerate(atoms):
        element, slots = spec[0], spec[1]
        conj = bool(spec[2]) if len(spec) > 2 else False
        el = substrate.element(element)
        if set(slots) != set(el.slot_names):
            raise NetworkError(f"atom {i} ({element}) must name every slot")
        built_atoms.append(Atom(i, element, conj))
        for sl in el.slot_names:
            lab = slots[sl]
            end = atom_end(i, sl)
            if lab.startswith("~"):
                first = lab.endswith(">")
                key = lab[1:].rstrip(">")
                pending.setdefault(key, []).append((end, first))
            else:
                inward = lab.startswith("<")
                name = lab.lstrip("<")
                direction = (BACKWARD if inward else FORWARD) if directed else None
                bonds.append(Bond((end, open_end(name)), direction))
                opens.append(name)
    for key, ends in pending.items():
        if len(ends) != 2:
            raise NetworkError(f"bond {key!r} has {len(ends)} ends")
        (e0, f0), (e1, f1) = ends
        direction = None
        if directed:
            if f0 == f1:
                raise NetworkError(f"bond {key!r} needs exactly one first end")
            direction = FORWARD if f0 else BACKWARD
        bonds.append(Bond((e0, e1), direction))
    for first, second, binding in wires:
        bonds.append(Bond((open_end(first), open_end(second)), FORWARD if directed else None, binding))
        opens += [first, second]
    n = Network(substrate, tuple(built_atoms), tuple(bonds), tuple(order if order is not None else opens), directed)
    return check_network(n)


def _el(name: str, slots: Sequence[str], binding: str = "e", arrows: Sequence[str | None] | None = None) -> Element:
    arrows = arrows or [None] * len(slots)
    return Element(name, tuple(Slot(s, binding, a) for s, a in zip(slots, arrows)))


# ---------------------------------------------------------------------------
# Substrates
# ---------------------------------------------------------------------------

TRI = ("01", "12", "02")
GON = ("01", "10")
TRI_ARROWS = ("in", "in", "out")


@lru_cache(maxsize=None)
def substrate(name: str) -> Substrate:
    e = Binding("e")
    ea = Binding("e", arrow_semantics=True)
    if name == "toy2d":
        return Substrate((e,), (_el("T", "abc"),), name)
    if name == "toy2d-boundary":
        b = Element("B", (Slot("l", "f"), Slot("r", "f"), Slot("t", "e")))
        return Substrate((e, Binding("f")), (_el("T", "abc"), b), name)
    if name == "toy2d-hadamard":
        return Substrate((e,), (_el("T", "abc"), _el("Tz", "abc"), _el("H", "io")), name)
    if name == "toy2d-product":
        return Substrate((e,), (_el("T", "abc"), _el("V", "a")), name)
    if name == "algebra":
        return Substrate((e,), (_el("A", "abc"),), name)
    if name == "commproj":
        return Substrate((e,), (_el("P", "abcd"),), name)
    if name == "square":
        return Substrate((e,), (_el("Q", ("t", "b", "l", "r")),), name)
    if name == "branch2d":
        return Substrate((e,), (_el("T", TRI), _el("G", GON)), name)
    if name == "cluster-square":
        return Substrate((e,), (_el("S", ("01", "12", "32", "03")),), name)
    if name in ("orient2d", "spin2d"):
        return Substrate((ea,), (_el("T", TRI, arrows=TRI_ARROWS), _el("C", GON, arrows=("in", "in")), _el("D", GON, arrows=("out", "out"))), name)
    if name == "orient2d-weighted":
        base = substrate("orient2d")
        return Substrate(base.bindings, base.elements + (_el("W", ("in", "out"), arrows=("in", "out")),), name)
    if name == "faceedge3d-toy":
        return Substrate((e,), (_el("F", "abc"), _el("E", "abc")), name)
    if name == "toric-commproj":
        q = Binding("q")
        return Substrate((q,), (_el("PA", "abcd", "q"), _el("PB", "abcd", "q")), name)
    if name == "gauge":
        return Substrate((e,), (_el("G", ("in", "out")),), name)
    if name == "kitaev-rhombus":
        return Substrate((Binding("e"),), (_el("R", "abcd"),), name)
    raise KeyError(f"unknown substrate {name!r}")


# ---------------------------------------------------------------------------
# Liquids
# ---------------------------------------------------------------------------


def _toy_moves(sub: Substrate, el: str, prefix: str = "", one_three_split: bool = False, policy13: EqualityPolicy = TOL) -> list[Move]:
    lhs = net(sub, [(el, {"a": "a", "b": "b", "c": "~x"}), (el, {"a": "~x", "b": "c", "c": "d"})], "abcd")
    rhs = net(sub, [(el, {"a": "a", "b": "~y", "c": "d"}), (el, {"a": "b", "b": "c", "c": "~y"})], "abcd")
    three = net(
        sub,
        [(el, {"a": "a", "b": "~p", "c": "~r"}), (el, {"a": "b", "b": "~q", "c": "~p"}), (el, {"a": "c", "b": "~r", "c": "~q"})],
        "abc",
    )
    one = net(sub, [(el, {"a": "a", "b": "b", "c": "c"})], "abc")
    m13 = make_move(prefix + "1-3", one, three, policy=policy13) if one_three_split else make_move(prefix + "1-3", three, one, policy=policy13)
    return [make_move(prefix + "2-2", lhs, rhs, policy=TOL), m13]


def _toy2d() -> Liquid:
    sub = substrate("toy2d")
    return Liquid("toy2d", sub, tuple(_toy_moves(sub, "T")), notes={"2-2": "2-2 Pachner move", "1-3": "1-3 Pachner move"})


def _toy2d_boundary() -> Liquid:
    sub = substrate("toy2d-boundary")
    lhs = net(sub, [("T", {"a": "p", "b": "q", "c": "~y"}), ("B", {"l": "l", "r": "r", "t": "~y"})], ["l", "r", "p", "q"])
    rhs = net(sub, [("B", {"l": "l", "r": "~z", "t": "p"}), ("B", {"l": "~z", "r": "r", "t": "q"})], ["l", "r", "p", "q"])
    moves = _toy_moves(sub, "T") + [make_move("boundary", lhs, rhs, policy=TOL)]
    return Liquid("toy2d-boundary", sub, tuple(moves), notes={"boundary": "attach or remove a bulk triangle at the boundary"})


def _algebra() -> Liquid:
    sub = substrate("algebra")
    lhs = net(sub, [("A", {"a": "a", "b": "b", "c": "~x"}), ("A", {"a": "~x", "b": "c", "c": "d"})], "abcd")
    rhs = net(sub, [("A", {"a": "b", "b": "c", "c": "~x"}), ("A", {"a": "a", "b": "~x", "c": "d"})], "abcd")
    return Liquid("algebra", sub, (make_move("associativity", lhs, rhs, policy=TOL),))


def _commproj() -> Liquid:
    sub = substrate("commproj")
    proj_l = net(sub, [("P", {"a": "~u", "b": "~v", "c": "c", "d": "d"}), ("P", {"a": "a", "b": "b", "c": "~u", "d": "~v"})], "abcd")
    proj_r = net(sub, [("P", {"a": "a", "b": "b", "c": "c", "d": "d"})], "abcd")
    com_l = net(sub, [("P", {"a": "e", "b": "~x", "c": "c", "d": "d"}), ("P", {"a": "a", "b": "b", "c": "~x", "d": "f"})], "abcdef")
    com_r = net(sub, [("P", {"a": "e", "b": "a", "c": "c", "d": "~y"}), ("P", {"a": "~y", "b": "b", "c": "d", "d": "f"})], "abcdef")
    return Liquid("commproj", sub, (make_move("projector", proj_l, proj_r, policy=TOL), make_move("commutativity", com_l, com_r, policy=TOL)))


def branch_one_three(sub: Substrate) -> Move:
    """1-3 move with the interior vertex third in the branching order."""
    lhs = net(
        sub,
        [
            ("T", {"01": "01", "12": "~e12", "02": "~e02"}),
            ("T", {"01": "~e02", "12": "~e23", "02": "02"}),
            ("T", {"01": "~e12", "12": "~e23", "02": "12"}),
        ],
        TRI,
    )
    rhs = net(sub, [("T", {"01": "01", "12": "12", "02": "02"})], TRI)
    return make_move("1-3", lhs, rhs, policy=TOL, derived=True)


def _branch2d() -> Liquid:
    sub = substrate("branch2d")
    p22l = net(sub, [("T", {"01": "a", "12": "b", "02": "~x"}), ("T", {"01": "~x", "12": "c", "02": "d"})], "abcd")
    p22r = net(sub, [("T", {"01": "a", "12": "~y", "02": "d"}), ("T", {"01": "b", "12": "c", "02": "~y"})], "abcd")
    tcl = net(sub, [("T", {"01": "~x", "12": "~y", "02": "a"}), ("T", {"01": "~x", "12": "~y", "02": "b"})], "ab")
    wire = net(sub, [], "ab", wires=[("a", "b", "e")])
    s12l = net(sub, [("T", {"01": "a", "12": "~x", "02": "b"}), ("G", {"01": "~x", "10": "c"})], "abc")
    s12r = net(sub, [("T", {"01": "b", "12": "c", "02": "a"})], "abc")
    s01l = net(sub, [("T", {"01": "~x", "12": "b", "02": "c"}), ("G", {"01": "~x", "10": "d"})], "bcd")
    s01r = net(sub, [("T", {"01": "d", "12": "c", "02": "b"})], "bcd")
    gl = net(sub, [("G", {"01": "a", "10": "~x"}), ("G", {"01": "b", "10": "~x"})], "ab")
    moves = (
        make_move("2-2", p22l, p22r, policy=TOL),
        make_move("triangle_cancellation", tcl, wire, policy=TOL),
        make_move("12_symmetry", s12l, s12r, policy=TOL),
        make_move("01_symmetry", s01l, s01r, policy=TOL),
        make_move("2gon_cancellation", gl, wire, policy=TOL),
    )
    one_three = branch_one_three(sub)
    return Liquid(
        "branch2d",
        sub,
        moves,
        derived=(one_three,),
        notes={
            "2-2": "2-2 Pachner move with branching",
            "triangle_cancellation": "two triangles sharing two edges shrink to one edge",
            "12_symmetry": "(12) triangle symmetry",
            "01_symmetry": "(01) triangle symmetry",
            "2gon_cancellation": "2-gon cancellation",
            "1-3": "derived: 2-2 followed by triangle cancellation",
        },
        metadata={"derivations": {"1-3": ["2-2", "triangle_cancellation"]}},
    )


def branch_derivation(l: Liquid) -> list[DerivationStep]:
    return [DerivationStep(l.move("2-2")), DerivationStep(l.move("triangle_cancellation"))]


def _orient_moves(sub: Substrate, weighted: bool = False) -> list[Move]:
    p22l = net(sub, [("T", {"01": "a", "12": "b", "02": "~x"}), ("T", {"01": "~x", "12": "c", "02": "d"})], "abcd")
    p22r = net(sub, [("T", {"01": "a", "12": "~y", "02": "d"}), ("T", {"01": "b", "12": "c", "02": "~y"})], "abcd")
    syml = net(sub, [("T", {"01": "01", "12": "12", "02": "~x"}), ("C", {"01": "~x", "10": "20"})], ["01", "12", "20"])
    symr = net(sub, [("T", {"01": "20", "12": "01", "02": "~y"}), ("C", {"01": "~y", "10": "12"})], ["01", "12", "20"])
    gonl = net(sub, [("C", {"01": "a", "10": "~x"}), ("D", {"01": "b", "10": "~x"})], "ab")
    wire = net(sub, [], "ab", wires=[("a", "b", "e")])
    c2 = net(sub, [("C", {"01": "02", "10": "20"})], ["02", "20"])
    moves = [make_move("2-2", p22l, p22r, policy=TOL), make_move("120_symmetry", syml, symr, policy=TOL)]
    if weighted:
        wtl = net(
            sub,
            [("T", {"01": "~x", "12": "02", "02": "~y"}), ("T", {"01": "~y", "12": "20", "02": "~z"}), ("W", {"out": "~x", "in": "~z"})],
            ["02", "20"],
        )
        moves.append(make_move("weighted_triangle_cancellation", wtl, c2, policy=TOL))
        wcl = net(sub, [("T", {"01": "~x", "12": "c", "02": "b"}), ("W", {"out": "~x", "in": "a"})], "abc")
        wcr = net(sub, [("T", {"01": "a", "12": "c", "02": "~y"}), ("W", {"in": "~y", "out": "b"})], "abc")
        moves.append(make_move("weight_commutation", wcl, wcr, policy=TOL))
    else:
        tcl = net(sub, [("T", {"01": "~x", "12": "02", "02": "~y"}), ("T", {"01": "~y", "12": "20", "02": "~x"})], ["02", "20"])
        moves.append(make_move("triangle_cancellation", tcl, c2, policy=TOL))
    moves.append(make_move("2gon_cancellation", gonl, wire, policy=TOL))
    return moves


def hermiticity_move(sub: Substrate) -> Move:
    lhs = net(sub, [("T", {"01": "a", "12": "b", "02": "c"}, True)], "abc")
    rhs = net(sub, [("T", {"01": "c", "12": "~x", "02": "a"}), ("D", {"01": "b", "10": "~x"})], "abc")
    return make_move("hermiticity", lhs, rhs, policy=TOL)


def ccw_hermiticity_move(sub: Substrate) -> Move:
    """Derived: the conjugate of the clockwise 2-gon is the counter-clockwise one."""
    lhs = net(sub, [("C", {"01": "a", "10": "b"}, True)], "ab")
    rhs = net(sub, [("D", {"01": "a", "10": "b"})], "ab")
    return make_move("ccw_2gon_hermiticity", lhs, rhs, policy=TOL, derived=True)


def hermiticity_chain(l: Liquid) -> list[DerivationStep]:
    """Rewrite steps from the conjugated clockwise 2-gon to the counter-clockwise one."""
    return [
        DerivationStep(l.move("triangle_cancellation"), reverse=True, conjugate=True),
        DerivationStep(l.move("hermiticity")),
        DerivationStep(l.move("hermiticity")),
        DerivationStep(l.move("2gon_cancellation"), reverse=True),
        DerivationStep(l.move("120_symmetry")),
        DerivationStep(l.move("120_symmetry"), reverse=True),
        DerivationStep(l.move("2gon_cancellation")),
        DerivationStep(l.move("triangle_cancellation")),
        DerivationStep(l.move("2gon_cancellation")),
    ]


def _orient2d(variant: str = "") -> Liquid:
    weighted = variant == "weighted"
    sub = substrate("orient2d-weighted" if weighted else "orient2d")
    moves = _orient_moves(sub, weighted)
    derived: list[Move] = []
    if variant == "hermitian":
        moves.append(hermiticity_move(sub))
        derived.append(ccw_hermiticity_move(sub))
    if variant == "invertible":
        s0 = net(sub, [("C", {"01": "~x", "10": "~y"}), ("D", {"01": "~x", "10": "~y"})], [])
        empty = net(sub, [], [])
        s1l = net(sub, [("T", {"01": "00", "12": "~x", "02": "~y"}), ("T", {"01": "~y", "12": "11", "02": "~x"})], ["00", "11"])
        s1r = net(sub, [("T", {"01": "00", "12": "~u", "02": "~u"}), ("T", {"01": "11", "12": "~v", "02": "~v"})], ["00", "11"])
        moves += [make_move("0-surgery", s0, empty, policy=PROJ), make_move("1-surgery", s1l, s1r, policy=PROJ)]
    name = "orient2d" + (f"-{variant}" if variant else "")
    return Liquid(name, sub, tuple(moves), tuple(derived))


def _faceedge() -> Liquid:
    sub = substrate("faceedge3d-toy")
    face = _toy_moves(sub, "F", "face_", one_three_split=True, policy13=PROJ)
    edge = _toy_moves(sub, "E", "edge_")
    bl = net(
        sub,
        [
            ("F", {"a": "~c1", "b": "~d1", "c": "p"}),
            ("F", {"a": "~c2", "b": "~d2", "c": "q"}),
            ("E", {"a": "~c1", "b": "~c2", "c": "u"}),
            ("E", {"a": "~d1", "b": "~d2", "c": "v"}),
        ],
        "uvpq",
    )
    br = net(sub, [("F", {"a": "u", "b": "v", "c": "~x"}), ("E", {"a": "~x", "b": "p", "c": "q"})], "uvpq")
    moves = face + edge + [make_move("bialgebra", bl, br, policy=EXACT)]
    return Liquid("faceedge3d-toy", sub, tuple(moves), notes={"face_1-3": "projective: the face tensor is not normalized"})


# Fermionic index orderings that make all reordering signs cancel.
SPIN_ORDERINGS: dict[str, tuple[str, ...]] = {"T": ("02", "01", "12"), "C": ("01", "10"), "D": ("01", "10")}


def _spin2d() -> Liquid:
    sub = substrate("spin2d")
    d = True
    p22l = net(sub, [("T", {"01": "01", "12": "12", "02": "~x"}), ("T", {"01": "~x>", "12": "23", "02": "03"})], ["01", "12", "23", "03"], d)
    p22r = net(sub, [("T", {"01": "01", "12": "~y>", "02": "03"}), ("T", {"01": "12", "12": "23", "02": "~y"})], ["01", "12", "23", "03"], d)
    tcl = net(sub, [("T", {"01": "~v", "12": "02", "02": "~u"}), ("T", {"01": "~u>", "12": "20", "02": "~v>"})], ["02", "20"], d)
    tcr = net(sub, [("C", {"01": "02", "10": "20"})], ["02", "20"], d)
    syml = net(
        sub,
        [("T", {"01": "10", "12": "~q>", "02": "~p"}), ("C", {"01": "21", "10": "~p>"}), ("D", {"01": "20", "10": "~q"})],
        ["10", "21", "20"],
        d,
    )
    symr = net(sub, [("T", {"01": "21", "12": "10", "02": "20"})], ["10", "21", "20"], d)
    gonl = net(sub, [("C", {"01": "a", "10": "~x>"}), ("D", {"01": "b", "10": "~x"})], "ab", d)
    wire = net(sub, [], "ab", d, wires=[("b", "a", "e")])
    gsl = net(sub, [("C", {"01": "a", "10": "b"})], "ab", d)
    gsr = net(sub, [("C", {"10": "<a", "01": "b"})], "ab", d)
    moves = (
        make_move("2-2", p22l, p22r, policy=TOL),
        make_move("triangle_cancellation", tcl, tcr, policy=TOL),
        make_move("012_symmetry", syml, symr, policy=TOL),
        make_move("2gon_cancellation", gonl, wire, policy=TOL),
    )
    derived = (make_move("2gon_symmetry", gsl, gsr, policy=TOL, derived=True),)
    meta = {
        "orderings": SPIN_ORDERINGS,
        "bond_rule": "each bond starts at the clockwise-traversed (in) slot; edges in eta are reversed",
    }
    return Liquid("spin2d", sub, moves, derived, metadata=meta)


_LIQUIDS = {
    "toy2d": _toy2d,
    "toy2d-boundary": _toy2d_boundary,
    "algebra": _algebra,
    "commproj": _commproj,
    "branch2d": _branch2d,
    "orient2d": lambda: _orient2d(""),
    "orient2d-hermitian": lambda: _orient2d("hermitian"),
    "orient2d-invertible": lambda: _orient2d("invertible"),
    "orient2d-weighted": lambda: _orient2d("weighted"),
    "faceedge3d-toy": _faceedge,
    "spin2d": _spin2d,
}

LIQUID_IDS = tuple(_LIQUIDS)


@lru_cache(maxsize=None)
def load_liquid(name: str) -> Liquid:
    if name not in _LIQUIDS:
        raise KeyError(f"unknown liquid {name!r}; known: {', '.join(_LIQUIDS)}")
    return _LIQUIDS[name]()


def liquid_with_policy(l: Liquid, overrides: Mapping[str, EqualityPolicy]) -> Liquid:
    moves = tuple(Move(m.name, m.lhs, m.rhs, m.correspondence, overrides.get(m.name, m.policy), m.derived) for m in l.moves)
    return Liquid(l.name, l.substrate, moves, l.derived, l.notes, l.metadata)
