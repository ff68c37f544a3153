"""Combinatorial core: substrates, networks, moves, pattern search and rewriting.

Networks are immutable values.  Bond endpoints are plain tuples,
``("atom", atom_id, slot)`` or ``("open", label)``, which is also how they
serialize to JSON.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, Sequence, Union

AtomEnd = tuple  # ("atom", int, str)
OpenEnd = tuple  # ("open", str)
End = Union[AtomEnd, OpenEnd]

FORWARD = "from-first-end"
BACKWARD = "from-second-end"

_FLIP_ARROW = {"in": "out", "out": "in", None: None}


def atom_end(atom: int, slot: str) -> AtomEnd:
    return ("atom", int(atom), str(slot))


def open_end(label: str) -> OpenEnd:
    return ("open", str(label))


def is_open(end: End) -> bool:
    return end[0] == "open"


class NetworkError(ValueError):
    """Raised for malformed networks, moves, or failed rewrites."""


@dataclass(frozen=True)
class Binding:
    name: str
    arrow_semantics: bool = False


@dataclass(frozen=True)
class Slot:
    name: str
    binding: str
    arrow: str | None = None  # "in", "out" or None


@dataclass(frozen=True)
class Element:
    name: str
    slots: tuple[Slot, ...]

    @property
    def slot_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.slots)

    def slot(self, name: str) -> Slot:
        for s in self.slots:
            if s.name == name:
                return s
        raise NetworkError(f"element {self.name!r} has no slot {name!r}")


@dataclass(frozen=True)
class Substrate:
    bindings: tuple[Binding, ...]
    elements: tuple[Element, ...]
    name: str = ""

    def __post_init__(self) -> None:
        names = [b.name for b in self.bindings]
        if len(set(names)) != len(names):
            raise NetworkError("binding names must be unique")
        enames = [e.name for e in self.elements]
        if len(set(enames)) != len(enames):
            raise NetworkError("element names must be unique")
        known = set(names)
        arrowed = {b.name for b in self.bindings if b.arrow_semantics}
        for e in self.elements:
            if len(set(e.slot_names)) != len(e.slots):
                raise NetworkError(f"duplicate slot names in element {e.name!r}")
            for s in e.slots:
                if s.binding not in known:
                    raise NetworkError(f"slot {e.name}.{s.name} uses unknown binding {s.binding!r}")
                if s.arrow is not None and s.binding not in arrowed:
                    raise NetworkError(f"slot {e.name}.{s.name} has an arrow on a binding without arrow semantics")
                if s.arrow not in ("in", "out", None):
                    raise NetworkError(f"bad arrow flag {s.arrow!r}")

    def binding(self, name: str) -> Binding:
        for b in self.bindings:
            if b.name == name:
                return b
        raise NetworkError(f"unknown binding {name!r}")

    def element(self, name: str) -> Element:
        for e in self.elements:
            if e.name == name:
                return e
        raise NetworkError(f"unknown element {name!r}")

    def has_element(self, name: str) -> bool:
        return any(e.name == name for e in self.elements)

    def extended(self, bindings: Iterable[Binding] = (), elements: Iterable[Element] = (), name: str | None = None) -> "Substrate":
        """Return a substrate with extra bindings/elements appended (duplicates by name are skipped)."""
        bs = list(self.bindings)
        have = {b.name for b in bs}
        for b in bindings:
            if b.name not in have:
                bs.append(b)
                have.add(b.name)
        es = list(self.elements)
        have_e = {e.name for e in es}
        for e in elements:
            if e.name not in have_e:
                es.append(e)
                have_e.add(e.name)
        return Substrate(tuple(bs), tuple(es), self.name if name is None else name)


@dataclass(frozen=True)
class Atom:
    id: int
    element: str
    conjugated: bool = False


@dataclass(frozen=True)
class Bond:
    """A bond between two endpoints.

    ``direction`` is only meaningful for fermionic evaluation: the endpoint the
    arrow starts from is the index that comes first when contracting.  For an
    open stub, an arrow pointing from the atom to the open label is the
    default ("outward"); the reverse multiplies by the parity of the index.
    ``binding`` is only needed for bare wires, which have no atom slot to
    read it from.
    """

    ends: tuple[End, End]
    direction: str | None = None
    binding: str | None = None

    def __post_init__(self) -> None:
        if self.direction not in (None, FORWARD, BACKWARD):
            raise NetworkError(f"bad bond direction {self.direction!r}")

    @property
    def is_bare(self) -> bool:
        return is_open(self.ends[0]) and is_open(self.ends[1])

    def ordered(self) -> tuple[End, End]:
        """Endpoints as (first, second) in contraction order."""
        if self.direction == BACKWARD:
            return self.ends[1], self.ends[0]
        return self.ends[0], self.ends[1]

    def first_end(self) -> End | None:
        if self.direction is None:
            return None
        return self.ordered()[0]

    def reversed(self) -> "Bond":
        flip = {None: None, FORWARD: BACKWARD, BACKWARD: FORWARD}[self.direction]
        return replace(self, direction=flip)


def directed_bond(first: End, second: End, binding: str | None = None) -> Bond:
    return Bond((first, second), FORWARD, binding)


@dataclass(frozen=True)
class Network:
    substrate: Substrate
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    open_order: tuple[str, ...]
    directed: bool = False

    # -- lookups -----------------------------------------------------------
    def atom(self, atom_id: int) -> Atom:
        for a in self.atoms:
            if a.id == atom_id:
                return a
        raise NetworkError(f"no atom {atom_id}")

    def atom_ids(self) -> list[int]:
        return [a.id for a in self.atoms]

    def element_of(self, atom_id: int) -> Element:
        return self.substrate.element(self.atom(atom_id).element)

    def end_index(self) -> dict[End, tuple[int, int]]:
        """Map endpoint -> (bond index, position 0/1)."""
        out: dict[End, tuple[int, int]] = {}
        for i, b in enumerate(self.bonds):
            for k, e in enumerate(b.ends):
                out[e] = (i, k)
        return out

    def partner(self, end: End) -> End:
        i, k = self.end_index()[end]
        return self.bonds[i].ends[1 - k]

    def slot_arrow(self, end: AtomEnd) -> str | None:
        """Effective arrow flag of an atom slot (conjugation flips it)."""
        a = self.atom(end[1])
        arrow = self.substrate.element(a.element).slot(end[2]).arrow
        return _FLIP_ARROW[arrow] if a.conjugated else arrow

    def slot_binding(self, end: AtomEnd) -> str:
        return self.substrate.element(self.atom(end[1]).element).slot(end[2]).binding

    def open_info(self, label: str) -> tuple[str | None, str | None]:
        """(binding, arrow) of an open index; arrow is None on bare wires."""
        idx = self.end_index()
        key = open_end(label)
        if key not in idx:
            raise NetworkError(f"no open index {label!r}")
        i, k = idx[key]
        bond = self.bonds[i]
        other = bond.ends[1 - k]
        if is_open(other):
            return bond.binding, None
        return self.slot_binding(other), self.slot_arrow(other)

    def open_direction(self, label: str) -> str | None:
        """'out' / 'in' for the stub carrying ``label``; None if undirected."""
        i, k = self.end_index()[open_end(label)]
        b = self.bonds[i]
        if b.direction is None:
            return None
        first = b.ordered()[0]
        if b.is_bare:
            return "out" if first == open_end(label) else "in"
        return "in" if first == open_end(label) else "out"

    def is_closed(self) -> bool:
        return not self.open_order

    def with_conjugation(self, flag_all: bool | None = None) -> "Network":
        """Toggle (None) or set all conjugation flags."""
        atoms = tuple(replace(a, conjugated=(not a.conjugated) if flag_all is None else flag_all) for a in self.atoms)
        return replace(self, atoms=atoms)

    def relabel_open(self, mapping: Mapping[str, str]) -> "Network":
        def f(e: End) -> End:
            return open_end(mapping.get(e[1], e[1])) if is_open(e) else e

        bonds = tuple(replace(b, ends=(f(b.ends[0]), f(b.ends[1]))) for b in self.bonds)
        return replace(self, bonds=bonds, open_order=tuple(mapping.get(l, l) for l in self.open_order))

    def shift_atoms(self, offset: int) -> "Network":
        def f(e: End) -> End:
            return e if is_open(e) else atom_end(e[1] + offset, e[2])

        atoms = tuple(replace(a, id=a.id + offset) for a in self.atoms)
        bonds = tuple(replace(b, ends=(f(b.ends[0]), f(b.ends[1]))) for b in self.bonds)
        return replace(self, atoms=atoms, bonds=bonds)

    def renumbered(self) -> "Network":
        """Atom ids 0..n-1 in current atom order."""
        m = {a.id: i for i, a in enumerate(self.atoms)}

        def f(e: End) -> End:
            return e if is_open(e) else atom_end(m[e[1]], e[2])

        atoms = tuple(replace(a, id=m[a.id]) for a in self.atoms)
        bonds = tuple(replace(b, ends=(f(b.ends[0]), f(b.ends[1]))) for b in self.bonds)
        return replace(self, atoms=atoms, bonds=bonds)

    def with_order(self, open_order: Sequence[str]) -> "Network":
        if sorted(open_order) != sorted(self.open_order):
            raise NetworkError("open order must be a permutation of the current labels")
        return replace(self, open_order=tuple(open_order))


def empty_network(substrate: Substrate) -> Network:
    return Network(substrate, (), (), ())


def disjoint_union(a: Network, b: Network) -> Network:
    if set(a.open_order) & set(b.open_order):
        raise NetworkError("open labels clash in disjoint union")
    offset = (max(a.atom_ids()) + 1) if a.atoms else 0
    b2 = b.shift_atoms(offset - (min(b.atom_ids()) if b.atoms else 0))
    return Network(a.substrate, a.atoms + b2.atoms, a.bonds + b2.bonds, a.open_order + b2.open_order, a.directed or b.directed)


# ---------------------------------------------------------------------------
# Building networks tersely
# ---------------------------------------------------------------------------


class NetworkBuilder:
    """Small helper for writing networks by hand.

    >>> nb = NetworkBuilder(sub)
    >>> t = nb.atom("T")
    >>> nb.open(t, "a", "x")
    """

    def __init__(self, substrate: Substrate, directed: bool = False) -> None:
        self.substrate = substrate
        self.directed = directed
        self._atoms: list[Atom] = []
        self._bonds: list[Bond] = []
        self._open: list[str] = []

    def atom(self, element: str, conjugated: bool = False) -> int:
        self.substrate.element(element)
        i = len(self._atoms)
        self._atoms.append(Atom(i, element, conjugated))
        return i

    def bond(self, a: int, sa: str, b: int, sb: str, first: int | None = None) -> None:
        """Bond a.sa -- b.sb; ``first`` = 0 or 1 names the end contracted first."""
        direction = None if first is None else (FORWARD if first == 0 else BACKWARD)
        self._bonds.append(Bond((atom_end(a, sa), atom_end(b, sb)), direction))

    def open(self, a: int, slot: str, label: str, inward: bool | None = None) -> None:
        """Open stub; ``inward`` None means undirected, False the default outward arrow."""
        direction = None if inward is None else (BACKWARD if inward else FORWARD)
        self._bonds.append(Bond((atom_end(a, slot), open_end(label)), direction))
        self._open.append(label)

    def wire(self, first: str, second: str, binding: str, directed: bool = False) -> None:
        self._bonds.append(Bond((open_end(first), open_end(second)), FORWARD if directed else None, binding))
        self._open.extend([first, second])

    def build(self, open_order: Sequence[str] | None = None) -> Network:
        order = tuple(self._open if open_order is None else open_order)
        return Network(self.substrate, tuple(self._atoms), tuple(self._bonds), order, self.directed)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_network(n: Network) -> list[str]:
    """Return a list of invariant violations; empty means valid."""
    problems: list[str] = []
    ids = [a.id for a in n.atoms]
    if len(set(ids)) != len(ids):
        problems.append("duplicate atom ids")
    atoms = {}
    for a in n.atoms:
        if not n.substrate.has_element(a.element):
            problems.append(f"atom {a.id}: unknown element {a.element!r}")
        else:
            atoms[a.id] = n.substrate.element(a.element)

    seen: dict[End, int] = {}
    for i, b in enumerate(n.bonds):
        if b.ends[0] == b.ends[1]:
            problems.append(f"bond {i}: both ends are the same endpoint")
        for e in b.ends:
            if e in seen:
                problems.append(f"bond {i}: endpoint {e} already used by bond {seen[e]}")
            seen[e] = i
            if not is_open(e):
                if e[1] not in atoms:
                    problems.append(f"bond {i}: unknown atom {e[1]}")
                elif e[2] not in atoms[e[1]].slot_names:
                    problems.append(f"bond {i}: atom {e[1]} has no slot {e[2]!r}")
        if n.directed and b.direction is None:
            problems.append(f"bond {i}: missing direction in a directed network")
        closed = [e for e in b.ends if not is_open(e) and e[1] in atoms and e[2] in atoms[e[1]].slot_names]
        if len(closed) == 2:
            b0, b1 = (n.slot_binding(e) for e in closed)
            if b0 != b1:
                problems.append(f"bond {i}: binding mismatch {b0!r} vs {b1!r}")
            elif n.substrate.binding(b0).arrow_semantics:
                arrows = sorted(str(n.slot_arrow(e)) for e in closed)
                if arrows != ["in", "out"]:
                    problems.append(f"bond {i}: arrow mismatch {arrows} (atoms {closed[0][1]}, {closed[1][1]})")
        if b.is_bare and b.binding is None:
            problems.append(f"bond {i}: bare wire without a binding")

    for aid, el in atoms.items():
        for s in el.slot_names:
            if atom_end(aid, s) not in seen:
                problems.append(f"atom {aid}: slot {s!r} is not connected")

    labels = [e[1] for e in seen if is_open(e)]
    if sorted(labels) != sorted(n.open_order):
        problems.append(f"open_order {list(n.open_order)} does not match open stubs {sorted(labels)}")
    if len(set(n.open_order)) != len(n.open_order):
        problems.append("open_order lists a label twice")
    return problems


def check_network(n: Network) -> Network:
    problems = validate_network(n)
    if problems:
        raise NetworkError("; ".join(problems))
    return n


# ---------------------------------------------------------------------------
# Moves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EqualityPolicy:
    kind: str = "tolerance"  # exact | tolerance | projective
    eps: float = 1e-10

    def __post_init__(self) -> None:
        if self.kind not in ("exact", "tolerance", "projective"):
            raise ValueError(f"unknown policy {self.kind!r}")
        if self.eps < 0:
            raise ValueError("eps must be non-negative")

    def to_json(self) -> dict:
        return {"kind": self.kind, "eps": self.eps}

    @staticmethod
    def from_json(d: Mapping | str) -> "EqualityPolicy":
        if isinstance(d, str):
            return EqualityPolicy(d)
        return EqualityPolicy(d["kind"], float(d.get("eps", 1e-10)))


EXACT = EqualityPolicy("exact", 0.0)
TOLERANCE = EqualityPolicy("tolerance", 1e-10)
PROJECTIVE = EqualityPolicy("projective", 1e-10)


@dataclass(frozen=True)
class Move:
    name: str
    lhs: Network
    rhs: Network
    correspondence: tuple[tuple[str, str], ...]
    policy: EqualityPolicy = TOLERANCE
    derived: bool = False

    def __post_init__(self) -> None:
        lhs_labels = [p[0] for p in self.correspondence]
        rhs_labels = [p[1] for p in self.correspondence]
        if sorted(lhs_labels) != sorted(self.lhs.open_order) or sorted(rhs_labels) != sorted(self.rhs.open_order):
            raise NetworkError(f"move {self.name}: correspondence does not biject the open indices")
        if self.lhs.substrate.name != self.rhs.substrate.name:
            raise NetworkError(f"move {self.name}: sides on different substrates")

    @property
    def corr(self) -> dict[str, str]:
        return dict(self.correspondence)

    def reversed(self) -> "Move":
        return Move(self.name + "^-1", self.rhs, self.lhs, tuple((b, a) for a, b in self.correspondence), self.policy, self.derived)

    def conjugated(self) -> "Move":
        return Move("conj(" + self.name + ")", self.lhs.with_conjugation(), self.rhs.with_conjugation(), self.correspondence, self.policy, self.derived)


def make_move(name: str, lhs: Network, rhs: Network, correspondence: Mapping[str, str] | None = None, policy: EqualityPolicy = TOLERANCE, derived: bool = False) -> Move:
    """Build a move; by default open labels correspond by equality."""
    if correspondence is None:
        correspondence = {l: l for l in lhs.open_order}
    return Move(name, lhs, rhs, tuple((a, correspondence[a]) for a in lhs.open_order), policy, derived)


def validate_move(m: Move) -> list[str]:
    problems = [f"lhs: {p}" for p in validate_network(m.lhs)] + [f"rhs: {p}" for p in validate_network(m.rhs)]
    if problems:
        return problems
    for a, b in m.correspondence:
        ba, aa = m.lhs.open_info(a)
        bb, ab = m.rhs.open_info(b)
        if ba is not None and bb is not None and ba != bb:
            problems.append(f"open {a}->{b}: binding {ba} vs {bb}")
        if aa is not None and ab is not None and aa != ab:
            problems.append(f"open {a}->{b}: arrow {aa} vs {ab}")
    return problems


@dataclass(frozen=True)
class SymmetryMove:
    element: str
    cycle: tuple[str, ...]


def expand_symmetry_move(substrate: Substrate, s: SymmetryMove, name: str | None = None, policy: EqualityPolicy = TOLERANCE) -> Move:
    """Single-atom move whose right side has the open indices permuted along ``s.cycle``."""
    el = substrate.element(s.element)
    for c in s.cycle:
        el.slot(c)
    if len(set(s.cycle)) != len(s.cycle):
        raise NetworkError("cycle repeats a slot")
    perm = {c: s.cycle[(i + 1) % len(s.cycle)] for i, c in enumerate(s.cycle)}
    for a, b in perm.items():
        sa, sb = el.slot(a), el.slot(b)
        if (sa.binding, sa.arrow) != (sb.binding, sb.arrow):
            raise NetworkError(f"cycle maps {a} to {b} with different binding or arrow")
    lb = NetworkBuilder(substrate)
    t = lb.atom(el.name)
    for sl in el.slot_names:
        lb.open(t, sl, sl)
    rb = NetworkBuilder(substrate)
    t = rb.atom(el.name)
    for sl in el.slot_names:
        rb.open(t, sl, perm.get(sl, sl))
    lhs = lb.build(el.slot_names)
    rhs = rb.build(el.slot_names)
    label = name or f"{el.name}({' '.join(s.cycle)})"
    return make_move(label, lhs, rhs, policy=policy)


# ---------------------------------------------------------------------------
# Occurrence search
# ---------------------------------------------------------------------------


def _direction_agrees(pb: Bond, pmap: Mapping[End, End], hb: Bond) -> bool:
    """Pattern bond direction (if any) matches the host bond after mapping ends."""
    if pb.direction is None:
        return True
    pf = pb.ordered()[0]
    if is_open(pf):
        return True
    return hb.direction is not None and hb.ordered()[0] == pmap[pf]


def is_occurrence(host: Network, pattern: Network, mapping: Mapping[int, int]) -> bool:
    """Predicate used by both the search and the brute-force oracle."""
    if len(set(mapping.values())) != len(mapping) or set(mapping) != set(pattern.atom_ids()):
        return False
    hatoms = {a.id: a for a in host.atoms}
    for pa in pattern.atoms:
        ha = hatoms.get(mapping[pa.id])
        if ha is None or ha.element != pa.element or ha.conjugated != pa.conjugated:
            return False
    hidx = host.end_index()
    for pb in pattern.bonds:
        e0, e1 = pb.ends
        if is_open(e0) and is_open(e1):
            return False
        if is_open(e0) or is_open(e1):
            continue
        h0 = atom_end(mapping[e0[1]], e0[2])
        h1 = atom_end(mapping[e1[1]], e1[2])
        i, k = hidx[h0]
        hb = host.bonds[i]
        if hb.ends[1 - k] != h1:
            return False
        if pattern.directed and not _direction_agrees(pb, {e0: h0, e1: h1}, hb):
            return False
    return True


def find_occurrences(host: Network, pattern: Network) -> list[dict[int, int]]:
    """All injective atom maps pattern -> host, sorted by the image tuple."""
    patoms = list(pattern.atoms)
    if not patoms:
        return []
    pidx = pattern.end_index()
    hidx = host.end_index()
    order = sorted(range(len(patoms)), key=lambda i: patoms[i].id)
    candidates = {
        pa.id: [ha.id for ha in host.atoms if ha.element == pa.element and ha.conjugated == pa.conjugated]
        for pa in patoms
    }
    results: list[dict[int, int]] = []
    assign: dict[int, int] = {}
    used: set[int] = set()

    def consistent(pid: int, hid: int) -> bool:
        el = pattern.substrate.element(pattern.atom(pid).element)
        for sl in el.slot_names:
            pe = atom_end(pid, sl)
            i, k = pidx[pe]
            other = pattern.bonds[i].ends[1 - k]
            if is_open(other):
                continue
            if other[1] != pid and other[1] not in assign:
                continue
            target = assign.get(other[1], hid) if other[1] != pid else hid
            he = atom_end(hid, sl)
            j, kk = hidx[he]
            if host.bonds[j].ends[1 - kk] != atom_end(target, other[2]):
                return False
        return True

    def rec(pos: int) -> None:
        if pos == len(order):
            m = dict(assign)
            if is_occurrence(host, pattern, m):
                results.append(m)
            return
        pid = patoms[order[pos]].id
        for hid in candidates[pid]:
            if hid in used:
                continue
            if not consistent(pid, hid):
                continue
            assign[pid] = hid
            used.add(hid)
            rec(pos + 1)
            del assign[pid]
            used.discard(hid)

    rec(0)
    results.sort(key=lambda m: tuple(m[p.id] for p in sorted(patoms, key=lambda a: a.id)))
    return results


def brute_force_occurrences(host: Network, pattern: Network) -> list[dict[int, int]]:
    """Reference enumeration over all injective maps (small inputs only)."""
    pids = sorted(pattern.atom_ids())
    out = []
    for image in itertools.permutations(host.atom_ids(), len(pids)):
        m = dict(zip(pids, image))
        if is_occurrence(host, pattern, m):
            out.append(m)
    out.sort(key=lambda m: tuple(m[p] for p in pids))
    return out


def find_wire_occurrences(host: Network, binding: str) -> list[int]:
    """Bond indices a bare-wire pattern of ``binding`` can match."""
    out = []
    for i, b in enumerate(host.bonds):
        ends = [e for e in b.ends if not is_open(e)]
        bb = host.slot_binding(ends[0]) if ends else b.binding
        if bb == binding:
            out.append(i)
    return out


# ---------------------------------------------------------------------------
# Rewriting
# ---------------------------------------------------------------------------


def _outward(bond: Bond, inner: End) -> bool | None:
    """Whether ``bond`` points away from its endpoint ``inner`` (None if undirected)."""
    if bond.direction is None:
        return None
    return bond.ordered()[0] == inner


def _splice(host: Network, removed: set[int], cut: dict[str, tuple[End, bool | None, bool | None]], rhs: Network, corr: Mapping[str, str]) -> Network:
    """Replace atoms ``removed`` of ``host`` by ``rhs``.

    ``cut`` maps each pattern open label to (external endpoint, host bond
    outward flag, pattern stub outward flag).  The external endpoint can be
    ``("glue", other_label)`` when the host connects two pattern stubs.
    """
    next_id = (max(host.atom_ids()) + 1) if host.atoms else 0
    rmap = {a.id: next_id + i for i, a in enumerate(rhs.atoms)}

    def rend(e: End) -> End:
        return e if is_open(e) else atom_end(rmap[e[1]], e[2])

    kept_bonds = []
    for b in host.bonds:
        if any((not is_open(e)) and e[1] in removed for e in b.ends):
            continue
        kept_bonds.append(b)

    inv = {v: k for k, v in corr.items()}
    ridx = rhs.end_index()
    # resolved[label] = (endpoint on the new side, outward flag of rhs stub relative to that endpoint, binding)
    new_side: dict[str, tuple[End, bool | None]] = {}
    bare_pairs: list[tuple[str, str, Bond]] = []
    new_bonds: list[Bond] = []
    for b in rhs.bonds:
        e0, e1 = b.ends
        if not is_open(e0) and not is_open(e1):
            new_bonds.append(replace(b, ends=(rend(e0), rend(e1))))
        elif b.is_bare:
            bare_pairs.append((inv[e0[1]], inv[e1[1]], b))
        else:
            inner, lab = (e0, e1) if is_open(e1) else (e1, e0)
            new_side[inv[lab[1]]] = (rend(inner), _outward(b, inner))

    def join(x: End, y: End, x_first: bool | None, binding: str | None) -> Bond:
        if x_first is None:
            return Bond((x, y), None, binding if (is_open(x) and is_open(y)) else None)
        return Bond((x, y), FORWARD if x_first else BACKWARD, binding if (is_open(x) and is_open(y)) else None)

    def mismatch(label: str) -> bool:
        _, host_out, pat_out = cut[label]
        return host_out is not None and pat_out is not None and host_out != pat_out

    done: set[str] = set()
    for label, (inner, rhs_out) in new_side.items():
        ext, host_out, pat_out = cut[label]
        if label in done:
            continue
        done.add(label)
        out = rhs_out
        if out is not None and mismatch(label):
            out = not out
        if ext[0] == "glue":
            other = ext[1]
            done.add(other)
            if other in new_side:
                oinner, orhs = new_side[other]
                new_bonds.append(join(inner, oinner, out, None))
            else:
                raise NetworkError("rewrite would glue a bare wire onto itself")
            continue
        new_bonds.append(join(inner, ext, out, None))

    for p, q, b in bare_pairs:
        ep, eq = cut[p][0], cut[q][0]
        if ep[0] == "glue" or eq[0] == "glue":
            raise NetworkError("rewrite would create a closed loop without atoms")
        first = None
        if b.direction is not None:
            first = b.ordered()[0] == open_end(corr[p])
            flips = int(mismatch(p)) + int(mismatch(q))
            if flips % 2:
                first = not first
        new_bonds.append(join(ep, eq, first, b.binding))

    atoms = tuple(a for a in host.atoms if a.id not in removed) + tuple(replace(a, id=rmap[a.id]) for a in rhs.atoms)
    out = Network(host.substrate, atoms, tuple(kept_bonds) + tuple(new_bonds), host.open_order, host.directed or rhs.directed)
    return check_network(out)


def rewrite(host: Network, m: Move, occ: Mapping[int, int]) -> Network:
    """Excise the occurrence of ``m.lhs`` and glue in ``m.rhs``."""
    pattern = m.lhs
    if not is_occurrence(host, pattern, occ):
        raise NetworkError("stale or invalid occurrence")
    removed = set(occ.values())
    hidx = host.end_index()
    stub_of: dict[End, str] = {}
    pat_out: dict[str, bool | None] = {}
    for b in pattern.bonds:
        e0, e1 = b.ends
        if is_open(e0) != is_open(e1):
            inner, lab = (e0, e1) if is_open(e1) else (e1, e0)
            he = atom_end(occ[inner[1]], inner[2])
            stub_of[he] = lab[1]
            pat_out[lab[1]] = _outward(b, inner)
    cut: dict[str, tuple[End, bool | None, bool | None]] = {}
    for he, label in stub_of.items():
        i, k = hidx[he]
        hb = host.bonds[i]
        other = hb.ends[1 - k]
        if not is_open(other) and other[1] in removed:
            if other not in stub_of:
                raise NetworkError("boundary mismatch: cut bond hits an internal pattern slot")
            ext = ("glue", stub_of[other])
        else:
            ext = other
        cut[label] = (ext, _outward(hb, he), pat_out[label])
    return _splice(host, removed, cut, m.rhs, m.corr)


def rewrite_wire(host: Network, m: Move, bond_index: int, flip: bool = False) -> Network:
    """Apply a move whose left side is a single bare wire at host bond ``bond_index``.

    ``flip`` chooses which end of the host bond plays the wire's first label.
    """
    pattern = m.lhs
    if pattern.atoms or len(pattern.bonds) != 1:
        raise NetworkError("left side is not a bare wire")
    pb = pattern.bonds[0]
    hb = host.bonds[bond_index]
    p, q = pb.ends[0][1], pb.ends[1][1]
    x, y = hb.ends if not flip else (hb.ends[1], hb.ends[0])
    host_wo = replace(host, bonds=tuple(b for i, b in enumerate(host.bonds) if i != bond_index))
    # pretend the wire was cut at a point: x attaches to label p, y to label q
    host_first = None if hb.direction is None else hb.ordered()[0] == x
    pat_first = None if pb.direction is None else pb.ordered()[0] == pb.ends[0]
    # outward flags relative to the removed point: x side sees the bond pointing toward x when x is second
    cut = {
        p: (x, None if host_first is None else not host_first, None if pat_first is None else not pat_first),
        q: (y, host_first, pat_first),
    }
    return _splice(host_wo, set(), cut, m.rhs, m.corr)


def substitute_atom(host: Network, atom_id: int, replacement: Network, slot_map: Mapping[str, str | Sequence[str]]) -> Network:
    """Replace one atom by a network whose open indices stand for the atom's slots.

    A slot may map to several replacement labels only when the slot's bond
    leads to an open index of the host; the host label then splits into
    ``label.0``, ``label.1``, ... in that order.
    """
    atom = host.atom(atom_id)
    el = host.substrate.element(atom.element)
    if set(slot_map) != set(el.slot_names):
        raise NetworkError("slot_map incomplete")
    hidx = host.end_index()
    groups = {s: ([v] if isinstance(v, str) else list(v)) for s, v in slot_map.items()}
    used = [l for g in groups.values() for l in g]
    if sorted(used) != sorted(replacement.open_order):
        raise NetworkError("slot_map does not cover the replacement's open indices")
    new_open = list(host.open_order)
    cut: dict[str, tuple[End, bool | None, bool | None]] = {}
    extra_bonds: list[Bond] = []
    for s, labels in groups.items():
        he = atom_end(atom_id, s)
        i, k = hidx[he]
        hb = host.bonds[i]
        other = hb.ends[1 - k]
        if len(labels) == 1:
            if not is_open(other) and other[1] == atom_id:
                # self-bond: glue the two replacement labels
                other_slot = other[2]
                cut[labels[0]] = (("glue", groups[other_slot][0]), _outward(hb, he), _outward(hb, he))
            else:
                cut[labels[0]] = (other, _outward(hb, he), _outward(hb, he))
        else:
            if not is_open(other):
                raise NetworkError("a split slot must lead to an open index")
            pos = new_open.index(other[1])
            split = [f"{other[1]}.{j}" for j in range(len(labels))]
            new_open[pos : pos + 1] = split
            for lab, new_label in zip(labels, split):
                cut[lab] = (open_end(new_label), None, None)
    shifted = host
    out = _splice(replace(shifted, open_order=tuple(new_open)), {atom_id}, cut, replacement, {l: l for l in replacement.open_order})
    return out


# ---------------------------------------------------------------------------
# Canonical labeling / isomorphism
# ---------------------------------------------------------------------------


def _neighbour_desc(n: Network, idx: dict[End, tuple[int, int]], colors: Mapping[int, object], aid: int) -> tuple:
    el = n.substrate.element(n.atom(aid).element)
    desc = []
    for sl in el.slot_names:
        e = atom_end(aid, sl)
        i, k = idx[e]
        b = n.bonds[i]
        other = b.ends[1 - k]
        first = None if b.direction is None else (b.ordered()[0] == e)
        if is_open(other):
            desc.append((sl, "open", other[1], first))
        else:
            desc.append((sl, "atom", colors[other[1]], other[2], first, other[1] == aid))
    return tuple(desc)


def _refine(n: Network, idx, colors: dict[int, object]) -> dict[int, int]:
    """Colour refinement; returns colours as dense integer ranks."""
    ranks = _dense(colors)
    while True:
        sig = {a: (ranks[a], _neighbour_desc(n, idx, ranks, a)) for a in ranks}
        new = _dense(sig)
        if len(set(new.values())) == len(set(ranks.values())):
            return new
        ranks = new


def _dense(colors: Mapping[int, object]) -> dict[int, int]:
    keys = sorted(set(map(repr, colors.values())))
    pos = {k: i for i, k in enumerate(keys)}
    return {a: pos[repr(c)] for a, c in colors.items()}


def _serialize(n: Network, order: Mapping[int, int]) -> tuple:
    atoms = tuple(sorted((order[a.id], a.element, a.conjugated) for a in n.atoms))

    def f(e: End) -> tuple:
        return ("open", e[1]) if is_open(e) else ("atom", order[e[1]], e[2])

    bonds = []
    for b in n.bonds:
        ends = sorted([f(b.ends[0]), f(b.ends[1])], key=repr)
        first = None if b.direction is None else repr(f(b.ordered()[0]))
        bonds.append((repr(ends), first, b.binding))
    return (atoms, tuple(sorted(bonds, key=repr)), tuple(n.open_order))


def canonical_form(n: Network) -> tuple:
    """Canonical, hashable form invariant under atom relabeling."""
    idx = n.end_index()
    init = {a.id: (a.element, a.conjugated) for a in n.atoms}
    best: list[tuple | None] = [None]

    def search(colors: dict[int, int]) -> None:
        ranks = _refine(n, idx, colors)
        cells: dict[int, list[int]] = {}
        for a, r in ranks.items():
            cells.setdefault(r, []).append(a)
        nontrivial = [r for r in sorted(cells) if len(cells[r]) > 1]
        if not nontrivial:
            s = _serialize(n, ranks)
            if best[0] is None or repr(s) < repr(best[0]):
                best[0] = s
            return
        r = nontrivial[0]
        for a in sorted(cells[r]):
            c = {x: (v, 0) for x, v in ranks.items()}
            c[a] = (ranks[a], -1)
            search(c)

    if not n.atoms:
        return _serialize(n, {})
    search(init)
    return best[0]


def is_isomorphic(a: Network, b: Network) -> bool:
    return canonical_form(a) == canonical_form(b)
