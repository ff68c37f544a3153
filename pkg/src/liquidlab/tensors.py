"""Tensor semantics and network evaluation.

Dense evaluation contracts atom tensors pairwise with ``numpy.tensordot``.
Fermionic evaluation follows the rule "bring y directly after x, then sum
the diagonal": each pairwise step reorders both operands with the Koszul
sign of the permutation and multiplies in the extra signs needed to
interleave the contracted pairs.
"""

from __future__ import annotations

import math
import random as _random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .substrate import (
    BACKWARD,
    EqualityPolicy,
    Network,
    NetworkError,
    Substrate,
    atom_end,
    check_network,
    is_open,
)

SEMANTICS = ("real", "complex", "projective", "graded", "fermionic_plain", "fermionic_particle_hole")


class EvaluationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Exact arithmetic in Q(sqrt 2)
# ---------------------------------------------------------------------------


class QSqrt2:
    """Exact number ``a + b*sqrt(2)`` with rational ``a`` and ``b``."""

    __slots__ = ("a", "b")

    def __init__(self, a: int | Fraction = 0, b: int | Fraction = 0) -> None:
        self.a = Fraction(a)
        self.b = Fraction(b)

    @staticmethod
    def coerce(x: object) -> "QSqrt2":
        if isinstance(x, QSqrt2):
            return x
        if isinstance(x, (int, Fraction)):
            return QSqrt2(x)
        if isinstance(x, (float, np.floating)) and float(x).is_integer():
            return QSqrt2(int(x))
        if isinstance(x, np.integer):
            return QSqrt2(int(x))
        raise TypeError(f"cannot represent {x!r} exactly")

    def __add__(self, o: object) -> "QSqrt2":
        o = QSqrt2.coerce(o)
        return QSqrt2(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self) -> "QSqrt2":
        return QSqrt2(-self.a, -self.b)

    def __sub__(self, o: object) -> "QSqrt2":
        return self + (-QSqrt2.coerce(o))

    def __rsub__(self, o: object) -> "QSqrt2":
        return QSqrt2.coerce(o) - self

    def __mul__(self, o: object) -> "QSqrt2":
        o = QSqrt2.coerce(o)
        return QSqrt2(self.a * o.a + 2 * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def inverse(self) -> "QSqrt2":
        den = self.a * self.a - 2 * self.b * self.b
        if den == 0:
            raise ZeroDivisionError("QSqrt2 division by zero")
        return QSqrt2(self.a / den, -self.b / den)

    def __truediv__(self, o: object) -> "QSqrt2":
        return self * QSqrt2.coerce(o).inverse()

    def __rtruediv__(self, o: object) -> "QSqrt2":
        return QSqrt2.coerce(o) * self.inverse()

    def __eq__(self, o: object) -> bool:
        try:
            o = QSqrt2.coerce(o)
        except TypeError:
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __hash__(self) -> int:
        return hash((self.a, self.b))

    def __bool__(self) -> bool:
        return bool(self.a) or bool(self.b)

    def conjugate(self) -> "QSqrt2":
        return self

    def __float__(self) -> float:
        return float(self.a) + float(self.b) * math.sqrt(2.0)

    def __complex__(self) -> complex:
        return complex(float(self))

    def __repr__(self) -> str:
        if not self.b:
            return f"QSqrt2({self.a})"
        return f"QSqrt2({self.a} + {self.b}*sqrt2)"


SQRT2 = QSqrt2(0, 1)
INV_SQRT2 = QSqrt2(0, Fraction(1, 2))


def is_exact_array(a: np.ndarray) -> bool:
    return a.dtype == object


def to_exact(a: np.ndarray) -> np.ndarray:
    out = np.empty(a.shape, dtype=object)
    for idx, v in np.ndenumerate(a):
        out[idx] = QSqrt2.coerce(v)
    return out


def to_float(a: np.ndarray) -> np.ndarray:
    if not is_exact_array(a):
        return np.asarray(a, dtype=complex)
    out = np.empty(a.shape, dtype=complex)
    for idx, v in np.ndenumerate(a):
        out[idx] = complex(v)
    return out


def _conj(a: np.ndarray) -> np.ndarray:
    if is_exact_array(a):
        out = np.empty(a.shape, dtype=object)
        for idx, v in np.ndenumerate(a):
            out[idx] = v.conjugate()
        return out
    return np.conj(a)


# ---------------------------------------------------------------------------
# Graded dimensions and models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GradedDim:
    """Index with ``even`` then ``odd`` configurations.

    Inside each parity sector the last ``hole_even`` / ``hole_odd``
    configurations are holes (relevant for particle-hole semantics only).
    """

    even: int
    odd: int = 0
    hole_even: int = 0
    hole_odd: int = 0

    def __post_init__(self) -> None:
        if self.even < 0 or self.odd < 0 or not (0 <= self.hole_even <= self.even) or not (0 <= self.hole_odd <= self.odd):
            raise ValueError(f"bad graded dimension {self}")

    @property
    def total(self) -> int:
        return self.even + self.odd

    def parity(self) -> np.ndarray:
        return np.array([0] * self.even + [1] * self.odd, dtype=np.int64)

    def hole(self) -> np.ndarray:
        ev = [0] * (self.even - self.hole_even) + [1] * self.hole_even
        od = [0] * (self.odd - self.hole_odd) + [1] * self.hole_odd
        return np.array(ev + od, dtype=np.int64)

    def to_json(self) -> dict:
        return {"even": self.even, "odd": self.odd, "hole_even": self.hole_even, "hole_odd": self.hole_odd}


def dim_total(d: int | GradedDim) -> int:
    return d.total if isinstance(d, GradedDim) else int(d)


def as_graded(d: int | GradedDim) -> GradedDim:
    return d if isinstance(d, GradedDim) else GradedDim(int(d), 0)


@dataclass(frozen=True)
class Model:
    substrate: Substrate
    dims: Mapping[str, int | GradedDim]
    tensors: Mapping[str, np.ndarray]
    semantics: str = "complex"
    orderings: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self) -> None:
        if self.semantics not in SEMANTICS:
            raise ValueError(f"unknown semantics {self.semantics!r}")
        for el in self.substrate.elements:
            if el.name not in self.tensors:
                continue
            t = self.tensors[el.name]
            want = tuple(dim_total(self.dims[s.binding]) for s in el.slots)
            if tuple(t.shape) != want:
                raise ValueError(f"tensor for {el.name} has shape {t.shape}, expected {want}")
            if self.is_fermionic:
                order = self.orderings.get(el.name, el.slot_names)
                if sorted(order) != sorted(el.slot_names):
                    raise ValueError(f"ordering for {el.name} does not cover its slots")

    @property
    def is_fermionic(self) -> bool:
        return self.semantics.startswith("fermionic")

    @property
    def particle_hole(self) -> bool:
        return self.semantics == "fermionic_particle_hole"

    def dim(self, binding: str) -> int:
        return dim_total(self.dims[binding])

    def ordering(self, element: str) -> tuple[str, ...]:
        return tuple(self.orderings.get(element, self.substrate.element(element).slot_names))

    def with_tensors(self, **updates: np.ndarray) -> "Model":
        t = dict(self.tensors)
        t.update(updates)
        return Model(self.substrate, self.dims, t, self.semantics, self.orderings, self.name)

    def replace(self, **kw) -> "Model":
        d = dict(substrate=self.substrate, dims=self.dims, tensors=self.tensors, semantics=self.semantics, orderings=self.orderings, name=self.name)
        d.update(kw)
        return Model(**d)


# ---------------------------------------------------------------------------
# Koszul signs
# ---------------------------------------------------------------------------


def _parity_grid(parities: Sequence[np.ndarray], axes: Sequence[int], ndim: int) -> list[np.ndarray]:
    out = []
    for ax in axes:
        shape = [1] * ndim
        shape[ax] = len(parities[ax])
        out.append(parities[ax].reshape(shape))
    return out


def koszul_sign(parities: Sequence[np.ndarray], perm: Sequence[int]) -> np.ndarray | int:
    """Sign array (broadcastable, original axis order) for transposing by ``perm``.

    ``perm[k]`` is the original axis that lands at position ``k``.
    """
    n = len(perm)
    pos = {ax: k for k, ax in enumerate(perm)}
    total: np.ndarray | int = 0
    for i in range(n):
        for j in range(i + 1, n):
            if pos[i] > pos[j]:
                pi, pj = _parity_grid(parities, (i, j), n)
                total = total + pi * pj
    if isinstance(total, int):
        return 1
    return 1 - 2 * (total % 2)


def reorder(array: np.ndarray, parities: Sequence[np.ndarray], perm: Sequence[int]) -> np.ndarray:
    """Transpose a fermionic representative, applying the reordering sign."""
    perm = list(perm)
    if perm == list(range(array.ndim)):
        return array
    sign = koszul_sign(parities, perm)
    signed = array * sign if not isinstance(sign, int) else array
    return _transpose(signed, perm)


# ---------------------------------------------------------------------------
# Fermionic tensors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FermionicTensor:
    """Equivalence class of (array, ordering); stored with labels sorted."""

    array: np.ndarray
    ordering: tuple[str, ...]
    gradings: Mapping[str, GradedDim]
    particle_hole: bool = False

    @staticmethod
    def from_representative(array: np.ndarray, ordering: Sequence[str], gradings: Mapping[str, GradedDim], particle_hole: bool = False) -> "FermionicTensor":
        ordering = tuple(ordering)
        if len(set(ordering)) != len(ordering) or array.ndim != len(ordering):
            raise EvaluationError("ordering must list each axis label once")
        for lab, n in zip(ordering, array.shape):
            if gradings[lab].total != n:
                raise EvaluationError(f"axis {lab} has size {n}, grading says {gradings[lab].total}")
        target = tuple(sorted(ordering))
        arr = reorder(array, [gradings[l].parity() for l in ordering], [ordering.index(l) for l in target])
        return FermionicTensor(arr, target, {l: gradings[l] for l in target}, particle_hole)

    def parities(self) -> list[np.ndarray]:
        return [self.gradings[l].parity() for l in self.ordering]

    def to_canonical_array(self, target: Sequence[str]) -> np.ndarray:
        target = tuple(target)
        if sorted(target) != sorted(self.ordering):
            raise EvaluationError("label mismatch")
        return reorder(self.array, self.parities(), [self.ordering.index(l) for l in target])

    def total_parity_violation(self) -> float:
        return parity_violation(self.array, self.parities())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FermionicTensor):
            return NotImplemented
        return self.ordering == other.ordering and np.array_equal(self.array, other.array)

    __hash__ = None  # type: ignore[assignment]


def parity_violation(array: np.ndarray, parities: Sequence[np.ndarray]) -> float:
    """Largest magnitude of an entry with odd total parity."""
    if array.ndim == 0:
        return 0.0
    total = sum(_parity_grid(parities, range(array.ndim), array.ndim)) % 2
    mask = np.broadcast_to(total == 1, array.shape)
    vals = to_float(array)[mask]
    return float(np.max(np.abs(vals))) if vals.size else 0.0


def tensor_product(a, b):
    """Entry product of two dense arrays, or of two fermionic tensors (orderings concatenate)."""
    if isinstance(a, FermionicTensor) or isinstance(b, FermionicTensor):
        if set(a.ordering) & set(b.ordering):
            raise EvaluationError("label clash in tensor product")
        arr = np.multiply.outer(a.array, b.array)
        grad = dict(a.gradings)
        grad.update(b.gradings)
        return FermionicTensor.from_representative(arr, a.ordering + b.ordering, grad, a.particle_hole or b.particle_hole)
    return np.multiply.outer(np.asarray(a), np.asarray(b))


def contract(t, x, y):
    """Contract index ``x`` with ``y`` (dense: axis numbers, fermionic: labels, x first)."""
    if isinstance(t, FermionicTensor):
        if x == y:
            raise EvaluationError("cannot contract an index with itself")
        gx, gy = t.gradings[x], t.gradings[y]
        if (gx.even, gx.odd) != (gy.even, gy.odd):
            raise EvaluationError("grading mismatch")
        rest = [l for l in t.ordering if l not in (x, y)]
        arr = t.to_canonical_array(rest + [x, y])
        diag = _diag_last2(arr)
        if t.particle_hole:
            diag = diag * _axis_vec((-1) ** gx.hole(), diag.ndim, diag.ndim - 1, exact=is_exact_array(diag))
        summed = diag.sum(axis=-1)
        return FermionicTensor.from_representative(summed, rest, {l: t.gradings[l] for l in rest}, t.particle_hole)
    t = np.asarray(t)
    if x == y:
        raise EvaluationError("cannot contract an index with itself")
    if t.shape[x] != t.shape[y]:
        raise EvaluationError("dimension mismatch")
    return np.trace(t, axis1=x, axis2=y)


def _diag_last2(arr: np.ndarray) -> np.ndarray:
    return np.diagonal(arr, axis1=-2, axis2=-1)


class _Exact:
    """``(A + B*sqrt2) / den`` with integer object arrays.

    Internal fast path of the contraction engine: integer products are far
    cheaper than products of rational pairs.
    """

    __slots__ = ("A", "B", "den")

    def __init__(self, A: np.ndarray, B: np.ndarray, den: int = 1) -> None:
        self.A, self.B, self.den = _wrap0(A), _wrap0(B), den

    @staticmethod
    def from_qsqrt2(arr: np.ndarray) -> "_Exact":
        arr = np.asarray(arr, dtype=object)
        den = 1
        for v in arr.flat:
            den = math.lcm(den, v.a.denominator, v.b.denominator)
        A = np.empty(arr.shape, dtype=object)
        B = np.empty(arr.shape, dtype=object)
        for idx, v in np.ndenumerate(arr):
            A[idx] = v.a.numerator * (den // v.a.denominator)
            B[idx] = v.b.numerator * (den // v.b.denominator)
        return _Exact(A, B, den)

    def to_qsqrt2(self) -> np.ndarray:
        out = np.empty(self.A.shape, dtype=object)
        for idx in np.ndindex(*self.A.shape):
            out[idx] = QSqrt2(Fraction(int(self.A[idx]), self.den), Fraction(int(self.B[idx]), self.den))
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.A.shape

    @property
    def ndim(self) -> int:
        return self.A.ndim

    def transpose(self, perm: Sequence[int]) -> "_Exact":
        return _Exact(np.transpose(self.A, perm), np.transpose(self.B, perm), self.den)

    def __mul__(self, s) -> "_Exact":
        s = np.asarray(s)
        if s.dtype != object:
            s = s.astype(object)
        return _Exact(self.A * s, self.B * s, self.den)

    def diag_last2(self) -> "_Exact":
        return _Exact(_diag_last2(self.A), _diag_last2(self.B), self.den)

    def sum(self, axis: int) -> "_Exact":
        return _Exact(_wrap0(self.A.sum(axis=axis)), _wrap0(self.B.sum(axis=axis)), self.den)

    def reduced(self) -> "_Exact":
        g = self.den
        for arr in (self.A, self.B):
            if arr.size and g != 1:
                g = math.gcd(g, int(np.gcd.reduce(arr.ravel())))
        if g in (0, 1):
            return self
        return _Exact(self.A // g, self.B // g, self.den // g)


def _wrap0(x) -> np.ndarray:
    if isinstance(x, np.ndarray):
        return x
    out = np.empty((), dtype=object)
    out[()] = x
    return out


def _is_exact_block(x) -> bool:
    return isinstance(x, _Exact) or is_exact_array(x)


def _transpose(x, perm: Sequence[int]):
    return x.transpose(perm) if isinstance(x, _Exact) else np.transpose(x, perm)


def _diag(x):
    return x.diag_last2() if isinstance(x, _Exact) else _diag_last2(x)


def _tensordot(x, y, axes):
    if isinstance(x, _Exact):
        aa = np.tensordot(x.A, y.A, axes=axes)
        bb = np.tensordot(x.B, y.B, axes=axes)
        ab = np.tensordot(x.A, y.B, axes=axes)
        ba = np.tensordot(x.B, y.A, axes=axes)
        return _Exact(_wrap0(aa + 2 * bb), _wrap0(ab + ba), x.den * y.den).reduced()
    return np.tensordot(x, y, axes=axes)


def _outer(x, y):
    if isinstance(x, _Exact):
        o = np.multiply.outer
        return _Exact(o(x.A, y.A) + 2 * o(x.B, y.B), o(x.A, y.B) + o(x.B, y.A), x.den * y.den).reduced()
    return np.multiply.outer(x, y)


def _axis_vec(v: np.ndarray, ndim: int, axis: int, exact: bool = False) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = len(v)
    out = np.asarray(v).reshape(shape)
    if exact:
        out = out.astype(object)
        for idx, val in np.ndenumerate(out):
            out[idx] = int(val)
    return out


def particle_hole_map(t: FermionicTensor) -> FermionicTensor:
    """Multiply each index by i to the power of its Z4 grade (parity + 2 * hole).

    On an even tensor this keeps the global even-particle sector and negates
    the global even-hole sector.
    """
    if not t.particle_hole:
        raise EvaluationError("particle-hole map requires particle-hole semantics")
    arr = t.array.astype(complex)
    for ax, lab in enumerate(t.ordering):
        g = t.gradings[lab]
        phase = 1j ** ((g.parity() + 2 * g.hole()) % 4)
        arr = arr * _axis_vec(phase, arr.ndim, ax)
    return FermionicTensor(arr, t.ordering, t.gradings, True)


# ---------------------------------------------------------------------------
# Equality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Comparison:
    equal: bool
    residual: float
    lam: complex | None = None


def equal(a: np.ndarray, b: np.ndarray, policy: EqualityPolicy = EqualityPolicy()) -> Comparison:
    """Compare two arrays; projective comparisons report the least-squares scalar."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise EvaluationError(f"shape mismatch {a.shape} vs {b.shape}")
    if policy.kind == "exact":
        same = bool(np.all(a == b))
        diff = to_float(a) - to_float(b)
        res = float(np.max(np.abs(diff))) if diff.size else 0.0
        return Comparison(same, res, None)
    fa, fb = to_float(a), to_float(b)
    if policy.kind == "tolerance":
        res = float(np.max(np.abs(fa - fb))) if fa.size else 0.0
        return Comparison(res <= policy.eps, res, None)
    na = float(np.linalg.norm(fa))
    nb = float(np.linalg.norm(fb))
    if nb == 0.0:
        return Comparison(na == 0.0, na, None)
    lam = complex(np.vdot(fb, fa) / np.vdot(fb, fb))
    res = float(np.linalg.norm(fa - lam * fb))
    ok = lam != 0 and res <= policy.eps * na
    return Comparison(ok, res, lam)


# ---------------------------------------------------------------------------
# Network evaluation
# ---------------------------------------------------------------------------


@dataclass
class _Node:
    array: np.ndarray
    axes: list  # endpoint keys
    parities: list  # np arrays (fermionic) or None
    holes: list


def _identity(n: int, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                out[i, j] = QSqrt2(int(i == j))
        return out
    return np.eye(n, dtype=complex)


def evaluate_network(model: Model, n: Network, schedule: str | Sequence[int] = "greedy", seed: int | None = None, exact: bool | None = None) -> np.ndarray:
    """Contract ``n`` under ``model``; axes of the result follow ``n.open_order``.

    ``schedule`` is ``"greedy"``, ``"sequential"``, ``"random"`` (with ``seed``).
    The result does not depend on the schedule.
    """
    check_network(n)
    if n.substrate.name != model.substrate.name:
        raise EvaluationError(f"network on substrate {n.substrate.name!r}, model on {model.substrate.name!r}")
    fermionic = model.is_fermionic
    if fermionic and not n.directed:
        raise EvaluationError("fermionic evaluation needs a directed network")
    for a in n.atoms:
        if a.element not in model.tensors:
            raise EvaluationError(f"model has no tensor for element {a.element!r}")
    if exact is None:
        used = [model.tensors[a.element] for a in n.atoms] if n.atoms else list(model.tensors.values())
        exact = bool(used) and all(is_exact_array(t) for t in used)

    nodes: list[_Node] = []
    for a in n.atoms:
        el = model.substrate.element(a.element)
        if a.element not in model.tensors:
            raise EvaluationError(f"model has no tensor for element {a.element!r}")
        arr = model.tensors[a.element]
        arr = to_exact(arr) if exact and not is_exact_array(arr) else (arr if exact else to_float(arr))
        if a.conjugated:
            arr = _conj(arr)
        grads = [as_graded(model.dims[s.binding]) for s in el.slots]
        axes = [atom_end(a.id, s) for s in el.slot_names]
        if fermionic:
            order = model.ordering(a.element)
            perm = [el.slot_names.index(s) for s in order]
            # stored arrays are in slot order; the representative lives in ``order``
            arr = np.transpose(arr, perm)
            axes = [axes[p] for p in perm]
            grads = [grads[p] for p in perm]
        nodes.append(_Node(arr, axes, [g.parity() for g in grads], [g.hole() for g in grads]))

    # closed bonds as (first, second) endpoint pairs; open stubs as endpoint -> label
    pairs: dict = {}
    stub_label: dict = {}
    inward: set = set()
    for b in n.bonds:
        e0, e1 = b.ordered()
        if b.is_bare:
            binding = b.binding
            d = model.dims[binding]
            arr = _identity(dim_total(d), exact)
            g = as_graded(d)
            k0, k1 = ("wire", e0[1]), ("wire", e1[1])
            nodes.append(_Node(arr, [k0, k1], [g.parity(), g.parity()], [g.hole(), g.hole()]))
            stub_label[k0] = e0[1]
            stub_label[k1] = e1[1]
            continue
        if is_open(e0) or is_open(e1):
            inner, lab = (e1, e0) if is_open(e0) else (e0, e1)
            stub_label[inner] = lab[1]
            if fermionic and b.direction is not None and is_open(e0):
                inward.add(inner)
            continue
        pairs[e0] = e1
        pairs[e1] = e0

    firsts = {}
    for b in n.bonds:
        if not b.is_bare and not is_open(b.ends[0]) and not is_open(b.ends[1]):
            f, s = b.ordered()
            firsts[frozenset((f, s))] = f

    ph = model.particle_hole

    if exact:
        for node in nodes:
            node.array = _Exact.from_qsqrt2(node.array)

    # self bonds first
    for node in nodes:
        _self_contract(node, pairs, firsts, fermionic, ph)

    rng = _random.Random(seed)
    step = 0
    while len(nodes) > 1:
        i, j = _pick(nodes, pairs, schedule, rng, step)
        step += 1
        merged = _pair_contract(nodes[i], nodes[j], pairs, firsts, fermionic, ph)
        _self_contract(merged, pairs, firsts, fermionic, ph)
        nodes = [x for k, x in enumerate(nodes) if k not in (i, j)] + [merged]

    if not nodes:
        return np.array(QSqrt2(1) if exact else 1.0 + 0j, dtype=object if exact else complex)
    node = nodes[0]
    if fermionic:
        for k, ax in enumerate(node.axes):
            if ax in inward:
                sign = 1 - 2 * node.parities[k]
                node.array = node.array * _axis_vec(sign, node.array.ndim, k, exact)
    labels = [stub_label[ax] for ax in node.axes]
    perm = [labels.index(l) for l in n.open_order]
    if fermionic:
        out = reorder(node.array, node.parities, perm)
    else:
        out = _transpose(node.array, perm)
    return out.to_qsqrt2() if isinstance(out, _Exact) else out


def _self_contract(node: _Node, pairs, firsts, fermionic: bool, ph: bool) -> None:
    while True:
        found = None
        ax_set = set(node.axes)
        for k, ax in enumerate(node.axes):
            other = pairs.get(ax)
            if other is not None and other in ax_set:
                found = (ax, other)
                break
        if found is None:
            return
        f = firsts[frozenset(found)]
        s = pairs[f]
        kf, ks = node.axes.index(f), node.axes.index(s)
        rest = [k for k in range(len(node.axes)) if k not in (kf, ks)]
        perm = rest + [kf, ks]
        exact = _is_exact_block(node.array)
        if fermionic:
            arr = reorder(node.array, node.parities, perm)
        else:
            arr = _transpose(node.array, perm)
        diag = _diag(arr)
        if fermionic and ph:
            diag = diag * _axis_vec(1 - 2 * node.holes[kf], diag.ndim, diag.ndim - 1, exact)
        node.array = _as_array(diag.sum(axis=-1))
        node.axes = [node.axes[k] for k in rest]
        node.parities = [node.parities[k] for k in rest]
        node.holes = [node.holes[k] for k in rest]
        del pairs[f], pairs[s]


def _as_array(x) -> np.ndarray:
    """Object reductions to 0-d hand back a bare scalar; wrap it again."""
    if isinstance(x, (np.ndarray, _Exact)):
        return x
    out = np.empty((), dtype=object if isinstance(x, QSqrt2) else np.asarray(x).dtype)
    out[()] = x
    return out


def _size(node: _Node) -> int:
    return int(np.prod(node.array.shape)) if node.array.ndim else 1


def _pick(nodes: list[_Node], pairs, schedule, rng: _random.Random, step: int) -> tuple[int, int]:
    owner = {}
    for i, nd in enumerate(nodes):
        for ax in nd.axes:
            owner[ax] = i
    connected: dict[tuple[int, int], int] = {}
    for i, nd in enumerate(nodes):
        for ax in nd.axes:
            o = pairs.get(ax)
            if o is not None and o in owner and owner[o] != i:
                key = (min(i, owner[o]), max(i, owner[o]))
                connected[key] = connected.get(key, 0) + 1
    if schedule == "sequential":
        if connected:
            return min(connected)
        return 0, 1
    if schedule == "random":
        keys = sorted(connected) if connected else [(i, j) for i in range(len(nodes)) for j in range(i + 1, len(nodes))]
        return rng.choice(keys)
    if not isinstance(schedule, str):
        raise EvaluationError("unknown schedule")
    if not connected:
        sizes = sorted(range(len(nodes)), key=lambda k: _size(nodes[k]))
        a, b = sizes[0], sizes[1]
        return min(a, b), max(a, b)

    def cost(key):
        i, j = key
        shared = 1
        for ax in nodes[i].axes:
            o = pairs.get(ax)
            if o is not None and o in nodes[j].axes:
                shared *= nodes[i].array.shape[nodes[i].axes.index(ax)]
        return (_size(nodes[i]) * _size(nodes[j]) // (shared * shared), key)

    return min(connected, key=cost)


def _pair_contract(A: _Node, B: _Node, pairs, firsts, fermionic: bool, ph: bool) -> _Node:
    shared_a = [k for k, ax in enumerate(A.axes) if pairs.get(ax) in set(B.axes)]
    shared_b = [B.axes.index(pairs[A.axes[k]]) for k in shared_a]
    rest_a = [k for k in range(len(A.axes)) if k not in shared_a]
    rest_b = [k for k in range(len(B.axes)) if k not in shared_b]
    exact = _is_exact_block(A.array) or _is_exact_block(B.array)
    if fermionic:
        a_arr = reorder(A.array, A.parities, rest_a + shared_a)
        b_arr = reorder(B.array, B.parities, shared_b + rest_b)
        # interleave signs and pair-internal swaps, expressed on A's contracted axes
        ndim = a_arr.ndim
        m = len(shared_a)
        off = len(rest_a)
        total = 0
        par = [A.parities[k] for k in shared_a]
        grid = [_axis_vec(p, ndim, off + i) for i, p in enumerate(par)]
        for i in range(m):
            for j in range(i + 1, m):
                total = total + grid[i] * grid[j]
            if firsts[frozenset((A.axes[shared_a[i]], B.axes[shared_b[i]]))] != A.axes[shared_a[i]]:
                total = total + grid[i]
            if ph:
                total = total + _axis_vec(A.holes[shared_a[i]], ndim, off + i)
        if not isinstance(total, int):
            sign = 1 - 2 * (total % 2)
            if exact:
                sign = sign.astype(object)
                for idx, v in np.ndenumerate(sign):
                    sign[idx] = int(v)
            a_arr = a_arr * sign
    else:
        a_arr = _transpose(A.array, rest_a + shared_a)
        b_arr = _transpose(B.array, shared_b + rest_b)
    m = len(shared_a)
    if m:
        arr = _tensordot(a_arr, b_arr, (list(range(len(rest_a), len(rest_a) + m)), list(range(m))))
    else:
        arr = _outer(a_arr, b_arr)
    for k in shared_a:
        f = A.axes[k]
        del pairs[pairs[f]]
        del pairs[f]
    return _Node(
        _as_array(arr),
        [A.axes[k] for k in rest_a] + [B.axes[k] for k in rest_b],
        [A.parities[k] for k in rest_a] + [B.parities[k] for k in rest_b],
        [A.holes[k] for k in rest_a] + [B.holes[k] for k in rest_b],
    )
