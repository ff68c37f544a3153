"""Closed surfaces as networks: branching triangulations, vertex loops, spin data."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .liquids import substrate
from .substrate import FORWARD, BACKWARD, Atom, Bond, Network, NetworkError, atom_end, check_network, is_open

SURFACES = ("sphere", "torus", "rp2", "klein")
FLAVORS = ("unoriented", "oriented", "weighted", "spin")
EULER = {"sphere": 2, "torus": 0, "rp2": 1, "klein": 0}


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Triangulation:
    """Triangles with vertices listed in branching order (v0 < v1 < v2).

    ``tri_edges[k]`` are the edge ids of triangle ``k`` in slot order
    (01, 12, 02).  Edges are pairs (u, v) with u < v; the same pair may occur
    more than once when the triangulation is not simplicial.  ``chirality`` is
    +1 for triangles traversed 0->1->2 by the global orientation and -1 for
    the others.
    """

    n_vertices: int
    triangles: tuple[tuple[int, int, int], ...]
    edges: tuple[tuple[int, int], ...]
    tri_edges: tuple[tuple[int, int, int], ...]
    chirality: tuple[int, ...] | None = None
    eta: frozenset[int] = frozenset()
    name: str = ""

    def __post_init__(self) -> None:
        for t in self.triangles:
            if not (t[0] < t[1] < t[2]):
                raise GeometryError(f"triangle {t} is not in branching order")
        for t, es in zip(self.triangles, self.tri_edges):
            pairs = [(t[0], t[1]), (t[1], t[2]), (t[0], t[2])]
            for p, e in zip(pairs, es):
                if self.edges[e] != p:
                    raise GeometryError(f"edge {e} of triangle {t} does not join {p}")
        counts = [0] * len(self.edges)
        for es in self.tri_edges:
            for e in es:
                counts[e] += 1
        if any(c != 2 for c in counts):
            raise GeometryError("not a closed surface: every edge must border exactly two triangles")

    @property
    def euler(self) -> int:
        return self.n_vertices - len(self.edges) + len(self.triangles)

    @property
    def simplicial(self) -> bool:
        return len(set(self.edges)) == len(self.edges)

    def edge_id(self, u: int, v: int) -> int:
        key = (min(u, v), max(u, v))
        hits = [i for i, e in enumerate(self.edges) if e == key]
        if len(hits) != 1:
            raise GeometryError(f"edge {key} is {'missing' if not hits else 'ambiguous'}")
        return hits[0]

    def with_eta(self, eta: Iterable[int]) -> "Triangulation":
        return replace(self, eta=frozenset(eta))

    def to_json(self) -> dict:
        out = {
            "vertices": self.n_vertices,
            "triangles": [list(t) for t in self.triangles],
            "chirality": list(self.chirality) if self.chirality is not None else None,
            "eta": [list(self.edges[e]) for e in sorted(self.eta)],
        }
        if not self.simplicial:
            out["edges"] = [list(e) for e in self.edges]
            out["triangle_edges"] = [list(es) for es in self.tri_edges]
            out["eta_ids"] = sorted(self.eta)
        return out

    @staticmethod
    def from_json(d: Mapping) -> "Triangulation":
        tris = [tuple(t) for t in d["triangles"]]
        if "triangle_edges" in d:
            t = Triangulation(int(d["vertices"]), tuple(tris), tuple(tuple(e) for e in d["edges"]), tuple(tuple(es) for es in d["triangle_edges"]))
            eta = d.get("eta_ids", [])
        else:
            t = from_triangles(int(d["vertices"]), tris)
            eta = [t.edge_id(*p) for p in d.get("eta", [])]
        chir = d.get("chirality")
        return replace(t, chirality=tuple(chir) if chir is not None else None, eta=frozenset(eta))


def from_triangles(n: int, triangles: Sequence[Sequence[int]], name: str = "") -> Triangulation:
    """Simplicial triangulation; each triangle is re-sorted to branching order."""
    edges: list[tuple[int, int]] = []
    index: dict[tuple[int, int], int] = {}
    tri_edges = []
    tris = []
    for t in triangles:
        a, b, c = sorted(t)
        ids = []
        for p in ((a, b), (b, c), (a, c)):
            if p not in index:
                index[p] = len(edges)
                edges.append(p)
            ids.append(index[p])
        tris.append((a, b, c))
        tri_edges.append(tuple(ids))
    return Triangulation(n, tuple(tris), tuple(edges), tuple(tri_edges), name=name)


def _grid_torus(k: int = 3) -> Triangulation:
    def v(i: int, j: int) -> int:
        return (i % k) * k + (j % k)

    tris = []
    for i in range(k):
        for j in range(k):
            tris.append((v(i, j), v(i + 1, j), v(i + 1, j + 1)))
            tris.append((v(i, j), v(i, j + 1), v(i + 1, j + 1)))
    return from_triangles(k * k, tris, "torus")


RP2_TRIANGLES = (
    (0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5), (0, 1, 5),
    (1, 2, 4), (2, 3, 5), (1, 3, 4), (2, 4, 5), (1, 3, 5),
)


def _klein() -> Triangulation:
    """Square with a centre vertex; sides glued as a Klein bottle.

    Vertices: 0 corner, 1 midpoint of bottom/top, 2 midpoint of left/right,
    3 centre.  Eight triangles fan around the centre.
    """
    names = ["b1", "b2", "l1", "l2", "d00", "d20", "d22", "d02", "mb", "mt", "ml", "mr"]
    ends = {
        "b1": (0, 1), "b2": (0, 1), "l1": (0, 2), "l2": (0, 2),
        "d00": (0, 3), "d20": (0, 3), "d22": (0, 3), "d02": (0, 3),
        "mb": (1, 3), "mt": (1, 3), "ml": (2, 3), "mr": (2, 3),
    }
    fan = [
        ("d00", "mb", "b1"), ("mb", "d20", "b2"), ("d20", "mr", "l2"), ("mr", "d22", "l1"),
        ("d22", "mt", "b2"), ("mt", "d02", "b1"), ("d02", "ml", "l2"), ("ml", "d00", "l1"),
    ]
    eid = {n: i for i, n in enumerate(names)}
    edges = tuple(ends[n] for n in names)
    tris, tri_edges = [], []
    for f in fan:
        verts = sorted({v for n in f for v in ends[n]})
        a, b, c = verts
        by_pair = {ends[n]: eid[n] for n in f}
        tris.append((a, b, c))
        tri_edges.append((by_pair[(a, b)], by_pair[(b, c)], by_pair[(a, c)]))
    return Triangulation(4, tuple(tris), edges, tuple(tri_edges), name="klein")


def surface_triangulation(kind: str) -> Triangulation:
    if kind == "sphere":
        return from_triangles(3, [(0, 1, 2), (0, 1, 2)], "sphere")
    if kind == "torus":
        return _grid_torus(3)
    if kind == "rp2":
        return from_triangles(6, RP2_TRIANGLES, "rp2")
    if kind == "klein":
        return _klein()
    raise GeometryError(f"unknown surface {kind!r}; choose from {', '.join(SURFACES)}")


# ---------------------------------------------------------------------------
# Orientation
# ---------------------------------------------------------------------------

_SLOT_SIGN = (1, 1, -1)  # how a triangle traversed 0->1->2 runs along edges 01, 12, 02


def orient(t: Triangulation) -> Triangulation:
    """Attach a global orientation; raises for non-orientable surfaces."""
    inc: dict[int, list[tuple[int, int]]] = {}
    for k, es in enumerate(t.tri_edges):
        for pos, e in enumerate(es):
            inc.setdefault(e, []).append((k, pos))
    chir: list[int | None] = [None] * len(t.triangles)
    for start in range(len(t.triangles)):
        if chir[start] is not None:
            continue
        chir[start] = 1
        queue = deque([start])
        while queue:
            k = queue.popleft()
            for pos, e in enumerate(t.tri_edges[k]):
                for k2, pos2 in inc[e]:
                    if (k2, pos2) == (k, pos):
                        continue
                    want = -chir[k] * _SLOT_SIGN[pos] * _SLOT_SIGN[pos2]
                    if chir[k2] is None:
                        chir[k2] = want
                        queue.append(k2)
                    elif chir[k2] != want:
                        raise GeometryError(f"{t.name or 'surface'} is not orientable")
    return replace(t, chirality=tuple(int(c) for c in chir))


def is_orientable(t: Triangulation) -> bool:
    try:
        orient(t)
        return True
    except GeometryError:
        return False


# ---------------------------------------------------------------------------
# Networks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Surface:
    network: Network
    triangulation: Triangulation
    bond_edges: tuple[int | None, ...]  # triangulation edge of each bond (None for internal 2-gon bonds)
    flavor: str = "unoriented"


_TOY_SLOTS = {"01": "a", "12": "b", "02": "c"}


def _glue(
    sub_name: str,
    t: Triangulation,
    placements: list[list[tuple[str, dict[str, int | str]]]],
    directed: bool = False,
) -> tuple[Network, tuple[int | None, ...]]:
    """Build atoms per triangle and bond the slots that carry the same edge.

    ``placements[k]`` lists atoms for triangle k as (element, {slot: edge id or
    internal key}).
    """
    sub = substrate(sub_name)
    atoms = []
    ends_by_edge: dict[int, list] = {}
    internal: dict[str, list] = {}
    for k, group in enumerate(placements):
        for element, slots in group:
            aid = len(atoms)
            atoms.append(Atom(aid, element))
            for sl, tag in slots.items():
                if isinstance(tag, str):
                    internal.setdefault(f"{k}:{tag}", []).append(atom_end(aid, sl))
                else:
                    ends_by_edge.setdefault(tag, []).append(atom_end(aid, sl))
    bonds = []
    bond_edges: list[int | None] = []
    for e in sorted(ends_by_edge):
        pair = ends_by_edge[e]
        if len(pair) != 2:
            raise GeometryError(f"edge {e} has {len(pair)} sides")
        bonds.append(Bond((pair[0], pair[1]), FORWARD if directed else None))
        bond_edges.append(e)
    for key in sorted(internal):
        pair = internal[key]
        bonds.append(Bond((pair[0], pair[1]), FORWARD if directed else None))
        bond_edges.append(None)
    n = Network(sub, tuple(atoms), tuple(bonds), (), directed)
    return check_network(n), tuple(bond_edges)


def _oriented_placements(t: Triangulation) -> list[list[tuple[str, dict]]]:
    out = []
    for k, (e01, e12, e02) in enumerate(t.tri_edges):
        if t.chirality[k] == 1:
            out.append([("T", {"01": e01, "12": e12, "02": e02})])
        else:
            # counter-clockwise triangle: clockwise triangle glued to a counter-clockwise 2-gon
            out.append([("T", {"01": e02, "12": "x", "02": e01}), ("D", {"01": e12, "10": "x"})])
    return out


def build_surface(kind: str, flavor: str = "unoriented", liquid: str = "branch2d", eta: Iterable[int] | None = None, weight_placement: str = "least") -> Surface:
    """Closed network for ``kind`` in the requested flavor.

    ``liquid`` picks the element names of the unoriented flavor (``branch2d``
    or ``toy2d``).  ``eta`` overrides the default spin structure of the spin
    flavor; ``weight_placement`` is ``least`` or ``greatest`` and picks which
    corner of each vertex loop carries the vertex weight.
    """
    if flavor not in FLAVORS:
        raise GeometryError(f"unknown flavor {flavor!r}")
    t = surface_triangulation(kind)
    if flavor == "unoriented":
        if liquid == "toy2d":
            places = [[("T", {_TOY_SLOTS[s]: e for s, e in zip(("01", "12", "02"), es)})] for es in t.tri_edges]
        elif liquid == "branch2d":
            places = [[("T", {"01": es[0], "12": es[1], "02": es[2]})] for es in t.tri_edges]
        else:
            raise GeometryError(f"no unoriented build for liquid {liquid!r}")
        n, be = _glue(liquid, t, places)
        return Surface(n, t, be, flavor)
    if not is_orientable(t):
        raise GeometryError(f"{kind} is not orientable; the {flavor} flavor needs an orientation")
    t = orient(t)
    if flavor == "oriented":
        n, be = _glue("orient2d", t, _oriented_placements(t))
        return Surface(n, t, be, flavor)
    if flavor == "weighted":
        n, be = _glue("orient2d-weighted", t, _oriented_placements(t))
        s = Surface(n, t, be, flavor)
        return insert_vertex_weights(s, weight_placement)
    # spin
    n, be = _glue("spin2d", t, _oriented_placements(t), directed=True)
    if eta is None:
        eta = default_eta(t)
    t = t.with_eta(eta)
    verdict = validate_eta(t)
    if not verdict.passed:
        raise GeometryError(f"eta boundary differs from omega_2 at vertices {list(verdict.bad_vertices)}")
    s = Surface(n, t, be, flavor)
    return assign_bond_directions(s)


# ---------------------------------------------------------------------------
# Vertex loops and Euler characteristic
# ---------------------------------------------------------------------------


def slot_vertices(element: str, slot: str) -> tuple[int, int]:
    """(start, end) local vertex of the edge carried by a slot."""
    if slot in ("in", "out"):
        return (0, 1)
    if len(slot) == 2 and slot.isdigit():
        return (int(slot[0]), int(slot[1]))
    toy = {"a": (0, 1), "b": (1, 2), "c": (0, 2), "i": (0, 1), "o": (0, 1)}
    if slot in toy:
        return toy[slot]
    raise GeometryError(f"slot {slot!r} of {element} carries no edge")


def _is_weight(element: str) -> bool:
    return element == "W"


class _UF:
    def __init__(self) -> None:
        self.p: dict = {}

    def find(self, x):
        self.p.setdefault(x, x)
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.p[max(ra, rb)] = min(ra, rb)


def _corner_classes(n: Network) -> tuple[_UF, set]:
    uf = _UF()
    open_corners = set()
    for a in n.atoms:
        el = n.substrate.element(a.element)
        for sl in el.slot_names:
            s, e = slot_vertices(a.element, sl)
            uf.find((a.id, s))
            uf.find((a.id, e))
    for b in n.bonds:
        e0, e1 = b.ends
        if is_open(e0) or is_open(e1):
            for x in (e0, e1):
                if not is_open(x):
                    s, e = slot_vertices(n.atom(x[1]).element, x[2])
                    open_corners |= {(x[1], s), (x[1], e)}
            continue
        s0, t0 = slot_vertices(n.atom(e0[1]).element, e0[2])
        s1, t1 = slot_vertices(n.atom(e1[1]).element, e1[2])
        uf.union((e0[1], s0), (e1[1], s1))
        uf.union((e0[1], t0), (e1[1], t1))
    return uf, open_corners


def trace_vertex_loops(n: Network) -> list[list[tuple[int, int]]]:
    """Closed vertex loops as sorted lists of (atom id, local vertex) corners.

    Corners of vertex-weight atoms are not listed; loops touching an open
    index are not closed and are dropped.
    """
    uf, open_corners = _corner_classes(n)
    classes: dict = {}
    for c in list(uf.p):
        classes.setdefault(uf.find(c), []).append(c)
    open_roots = {uf.find(c) for c in open_corners}
    loops = []
    for root, corners in classes.items():
        if root in open_roots:
            continue
        face = sorted(c for c in corners if not _is_weight(n.atom(c[0]).element))
        if face:
            loops.append(face)
    return sorted(loops)


def euler_characteristic(n: Network) -> int:
    """V - E + F; 2-gon atoms are faces, vertex weights sit inside an edge."""
    if not n.is_closed():
        raise GeometryError("euler characteristic needs a closed network")
    weights = sum(1 for a in n.atoms if _is_weight(a.element))
    v = len(trace_vertex_loops(n))
    e = len(n.bonds) - weights
    f = len(n.atoms) - weights
    return v - e + f


def weight_loops(n: Network) -> dict[int, tuple[int, int]]:
    """Loop (root corner) each vertex weight is bound to: the start vertex of its edge."""
    uf, _ = _corner_classes(n)
    return {a.id: uf.find((a.id, 0)) for a in n.atoms if _is_weight(a.element)}


def insert_vertex_weights(s: Surface, placement: str = "least") -> Surface:
    """Put one vertex weight on each vertex loop.

    A weight on a bond belongs to the loop of the edge's start vertex.  For
    each loop the candidate bonds are the slots starting at one of its
    corners; ``least`` takes the lexicographically smallest (atom, slot),
    ``greatest`` the largest.
    """
    n = s.network
    uf, _ = _corner_classes(n)
    idx = n.end_index()
    candidates: dict = {}
    for a in n.atoms:
        if _is_weight(a.element):
            continue
        for sl in n.substrate.element(a.element).slot_names:
            start, _end = slot_vertices(a.element, sl)
            candidates.setdefault(uf.find((a.id, start)), []).append((a.id, sl))
    roots = {uf.find(c) for loop in trace_vertex_loops(n) for c in loop[:1]}
    chosen = []
    for r in sorted(roots):
        cands = sorted(candidates.get(r, []))
        if not cands:
            raise GeometryError("a vertex loop has no edge starting at it")
        chosen.append(cands[0] if placement == "least" else cands[-1])
    atoms = list(n.atoms)
    bonds = list(n.bonds)
    bond_edges = list(s.bond_edges)
    next_id = max(n.atom_ids()) + 1
    replaced: dict[int, list[Bond]] = {}
    for aid, sl in chosen:
        here = atom_end(aid, sl)
        i, k = idx[here]
        if i in replaced:
            raise GeometryError("two vertex weights on one bond")
        other = bonds[i].ends[1 - k]
        w = next_id
        next_id += 1
        atoms.append(Atom(w, "W"))
        out_end, in_end = (here, other) if n.slot_arrow(here) == "out" else (other, here)
        replaced[i] = [Bond((out_end, atom_end(w, "in"))), Bond((atom_end(w, "out"), in_end))]
    new_bonds, new_edges = [], []
    for i, b in enumerate(bonds):
        if i in replaced:
            new_bonds += replaced[i]
            new_edges += [bond_edges[i], bond_edges[i]]
        else:
            new_bonds.append(b)
            new_edges.append(bond_edges[i])
    net = check_network(Network(n.substrate, tuple(atoms), tuple(new_bonds), (), n.directed))
    return Surface(net, s.triangulation, tuple(new_edges), s.flavor)


# ---------------------------------------------------------------------------
# Spin structures
# ---------------------------------------------------------------------------


def compute_omega2(t: Triangulation) -> dict[int, int]:
    """omega_2(v) = 1 + #edges starting at v + #triangles with v as vertex 0, mod 2."""
    w = {v: 1 for v in range(t.n_vertices)}
    for u, _v in t.edges:
        w[u] += 1
    for tri in t.triangles:
        w[tri[0]] += 1
    return {v: c % 2 for v, c in w.items()}


def eta_boundary(t: Triangulation, eta: Iterable[int] | None = None) -> dict[int, int]:
    eta = t.eta if eta is None else eta
    deg = {v: 0 for v in range(t.n_vertices)}
    for e in eta:
        u, v = t.edges[e]
        deg[u] += 1
        deg[v] += 1
    return {v: d % 2 for v, d in deg.items()}


@dataclass(frozen=True)
class EtaVerdict:
    passed: bool
    bad_vertices: tuple[int, ...] = ()


def validate_eta(t: Triangulation, eta: Iterable[int] | None = None) -> EtaVerdict:
    """Pass iff the endpoints of eta, counted mod 2, equal omega_2."""
    w = compute_omega2(t)
    b = eta_boundary(t, eta)
    bad = tuple(v for v in range(t.n_vertices) if w[v] != b[v])
    return EtaVerdict(not bad, bad)


def default_eta(t: Triangulation) -> frozenset[int]:
    """An eta with boundary omega_2, built from paths in a spanning tree."""
    w = compute_omega2(t)
    if sum(w.values()) % 2:
        raise GeometryError("omega_2 has odd total weight; no eta exists")
    adj: dict[int, list[tuple[int, int]]] = {v: [] for v in range(t.n_vertices)}
    for i, (u, v) in enumerate(t.edges):
        adj[u].append((v, i))
        adj[v].append((u, i))
    parent: dict[int, tuple[int, int] | None] = {0: None}
    order = [0]
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v, e in adj[u]:
            if v not in parent:
                parent[v] = (u, e)
                order.append(v)
                queue.append(v)
    need = dict(w)
    eta = set()
    for v in reversed(order):
        if parent[v] is None:
            continue
        if need[v]:
            u, e = parent[v]
            eta ^= {e}
            need[v] ^= 1
            need[u] ^= 1
    return frozenset(eta)


def apply_homology_move(t: Triangulation, triangle: int) -> Triangulation:
    """Add the boundary of one triangle to eta (mod 2)."""
    return t.with_eta(t.eta ^ frozenset(t.tri_edges[triangle]))


def assign_bond_directions(s: Surface, eta: Iterable[int] | None = None) -> Surface:
    """Direct every bond from its clockwise-traversed slot; reverse eta edges."""
    t = s.triangulation if eta is None else s.triangulation.with_eta(eta)
    if t.chirality is None:
        raise GeometryError("bond directions need an oriented triangulation")
    n = s.network
    bonds = []
    for b, e in zip(n.bonds, s.bond_edges):
        e0, e1 = b.ends
        first_is_0 = n.slot_arrow(e0) == "in"
        if e is not None and e in t.eta:
            first_is_0 = not first_is_0
        bonds.append(Bond(b.ends, FORWARD if first_is_0 else BACKWARD))
    net = check_network(Network(substrate("spin2d") if n.substrate.name != "spin2d" else n.substrate, n.atoms, tuple(bonds), n.open_order, True))
    return Surface(net, t, s.bond_edges, "spin")


# ---------------------------------------------------------------------------
# Invariants
# ---------------------------------------------------------------------------

_FLAVOR_BY_SUBSTRATE = {
    "toy2d": ("unoriented", "toy2d"),
    "branch2d": ("unoriented", "branch2d"),
    "orient2d": ("oriented", "orient2d"),
    "orient2d-weighted": ("weighted", "orient2d-weighted"),
    "spin2d": ("spin", "spin2d"),
}


def surface_for_model(model, kind: str, **kw) -> Surface:
    name = model.substrate.name
    if name not in _FLAVOR_BY_SUBSTRATE:
        raise GeometryError(f"no surface builds for models on {name!r}")
    flavor, liquid = _FLAVOR_BY_SUBSTRATE[name]
    return build_surface(kind, flavor, liquid, **kw)


def invariant(model, kind: str, **kw):
    """Evaluate ``model`` on the closed surface ``kind``; returns a scalar."""
    from .tensors import evaluate_network

    s = surface_for_model(model, kind, **kw)
    val = evaluate_network(model, s.network)
    return val.reshape(()).item() if hasattr(val, "reshape") else val
