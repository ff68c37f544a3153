"""Built-in models, symmetry checks and grading checks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .liquids import SPIN_ORDERINGS, substrate
from .tensors import INV_SQRT2, GradedDim, Model, QSqrt2, as_graded, is_exact_array, parity_violation, to_float


def _exact(shape: Sequence[int], fill: Callable[[tuple[int, ...]], object]) -> np.ndarray:
    out = np.empty(tuple(shape), dtype=object)
    for idx in itertools.product(*(range(s) for s in shape)):
        out[idx] = QSqrt2.coerce(fill(idx))
    return out


def exact_inv_sqrt(x: float) -> QSqrt2 | None:
    """x^(-1/2) as an element of Q(sqrt 2) when it is one, else None."""
    fx = Fraction(x).limit_denominator(10**6)
    if float(fx) != float(x) or fx <= 0:
        return None
    for mult, root2 in ((1, False), (2, True)):
        q = fx / mult
        num, den = q.numerator, q.denominator
        rn, rd = math.isqrt(num), math.isqrt(den)
        if rn * rn == num and rd * rd == den:
            base = Fraction(rd, rn)  # (1/sqrt q)
            # x = mult*q, so x^(-1/2) = base / sqrt(mult)
            return QSqrt2(0, base / 2) if root2 else QSqrt2(base)
    return None


# ---------------------------------------------------------------------------
# Toy liquid models
# ---------------------------------------------------------------------------


def delta(x: int = 2) -> Model:
    if int(x) != x or x < 1:
        raise ValueError("delta(x) needs an integer x >= 1")
    x = int(x)
    t = _exact((x, x, x), lambda i: int(i[0] == i[1] == i[2]))
    return Model(substrate("toy2d"), {"e": x}, {"T": t}, "real", name=f"delta:{x}")


def _z2_tensor() -> np.ndarray:
    return _exact((2, 2, 2), lambda i: INV_SQRT2 if sum(i) % 2 == 0 else 0)


def z2() -> Model:
    return Model(substrate("toy2d"), {"e": 2}, {"T": _z2_tensor()}, "real", name="z2")


def hadamard_matrix() -> np.ndarray:
    return _exact((2, 2), lambda i: -INV_SQRT2 if i == (1, 1) else INV_SQRT2)


def hadamard() -> Model:
    """δ(2), the ℤ₂ triangle and the Hadamard gate on the circuit substrate."""
    sub = substrate("toy2d-hadamard")
    t = delta(2).tensors["T"]
    return Model(sub, {"e": 2}, {"T": t, "Tz": _z2_tensor(), "H": hadamard_matrix()}, "real", name="hadamard")


def product(x: float = 2) -> Model:
    if x < 1:
        raise ValueError("product(x) needs x >= 1")
    d = int(round(x))
    if d != x:
        raise ValueError("product(x) needs an integer dimension")
    v = exact_inv_sqrt(d)
    if v is not None:
        t = _exact((d, d, d), lambda i: v * v * v)
    else:
        t = np.full((d, d, d), d ** -1.5)
    return Model(substrate("toy2d"), {"e": d}, {"T": t}, "real", name=f"product:{d}")


def product_vector(x: int = 2) -> np.ndarray:
    v = exact_inv_sqrt(x)
    if v is not None:
        return _exact((x,), lambda i: v)
    return np.full(x, x ** -0.5)


def circuit_models(kind: str, x: int = 2) -> tuple[Model, Model]:
    """(a, b) model pairs for the shipped circuits: b turns into a."""
    if kind == "hadamard":
        sub = substrate("toy2d-hadamard")
        h = hadamard_matrix()
        a = Model(sub, {"e": 2}, {"T": delta(2).tensors["T"], "H": h}, "real", name="delta:2")
        b = Model(sub, {"e": 2}, {"Tz": _z2_tensor(), "H": h}, "real", name="z2")
        return a, b
    if kind == "product":
        sub = substrate("toy2d-product")
        p = product(x)
        b = Model(sub, {"e": x}, {"T": p.tensors["T"], "V": product_vector(x)}, "real", name=p.name)
        a = Model(sub, {"e": x}, {"V": product_vector(x)}, "real", name="trivial")
        return a, b
    raise KeyError(kind)


def delta_boundary(x: int = 2, x0: int = 0) -> Model:
    """δ(x) in the bulk with the irreducible representation selecting ``x0``."""
    if not 0 <= x0 < x:
        raise ValueError("x0 out of range")
    sub = substrate("toy2d-boundary")
    b = _exact((1, 1, x), lambda i: int(i[2] == x0))
    return Model(sub, {"e": x, "f": 1}, {"T": delta(x).tensors["T"], "B": b}, "real", name=f"delta_boundary:{x},{x0}")


# ---------------------------------------------------------------------------
# Branching / oriented models
# ---------------------------------------------------------------------------


def matrix_triangle(n: int) -> np.ndarray:
    """n^(-1/2) times three identity wirings of n×n matrix indices (a, b) -> a*n + b."""
    d = n * n
    s = exact_inv_sqrt(n)
    t = np.zeros((d, d, d), dtype=object if s is not None else float)
    t[...] = QSqrt2(0) if s is not None else 0.0
    for a0, b0, a1 in itertools.product(range(n), repeat=3):
        # 01 = (a0, b0), 12 = (a1, b1=a0), 02 = (a2=a1, b2=b0)
        t[a0 * n + b0, a1 * n + a0, a1 * n + b0] = s if s is not None else n ** -0.5
    return t


def swap_matrix(n: int) -> np.ndarray:
    d = n * n
    return _exact((d, d), lambda i: int(i[0] // n == i[1] % n and i[0] % n == i[1] // n))


def matrix(n: int = 2, flavor: str = "branch2d") -> Model:
    if int(n) != n or n < 1:
        raise ValueError("matrix(n) needs an integer n >= 1")
    n = int(n)
    t = matrix_triangle(n)
    s = swap_matrix(n)
    if flavor == "branch2d":
        return Model(substrate("branch2d"), {"e": n * n}, {"T": t, "G": s}, "real", name=f"matrix:{n}")
    if flavor in ("orient2d", "orient2d-weighted"):
        tensors = {"T": t, "C": s, "D": s}
        if flavor == "orient2d-weighted":
            tensors["W"] = _exact((n * n, n * n), lambda i: int(i[0] == i[1]))
        return Model(substrate(flavor), {"e": n * n}, tensors, "real", name=f"matrix:{n}")
    raise KeyError(flavor)


_QUAT = "1ijk"
_QMUL = {
    ("i", "i"): (-1, "1"), ("j", "j"): (-1, "1"), ("k", "k"): (-1, "1"),
    ("i", "j"): (1, "k"), ("j", "k"): (1, "i"), ("k", "i"): (1, "j"),
    ("j", "i"): (-1, "k"), ("k", "j"): (-1, "i"), ("i", "k"): (-1, "j"),
}


def quaternion_product(a: str, b: str) -> tuple[int, str]:
    if a == "1":
        return 1, b
    if b == "1":
        return 1, a
    return _QMUL[(a, b)]


def quaternion_triangle() -> np.ndarray:
    def f(idx: tuple[int, ...]) -> Fraction:
        s, c = quaternion_product(_QUAT[idx[0]], _QUAT[idx[1]])
        return Fraction(s, 2) if _QUAT[idx[2]] == c else Fraction(0)

    return _exact((4, 4, 4), f)


def quaternion() -> Model:
    g = _exact((4, 4), lambda i: (1 if i[0] == 0 else -1) if i[0] == i[1] else 0)
    return Model(substrate("branch2d"), {"e": 4}, {"T": quaternion_triangle(), "G": g}, "real", name="quaternion")


PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def g_basis_change() -> np.ndarray:
    """G[q, a*2+b] = 2^(-1/2) sigma_q[b, a] with sigma = (1, iX, iZ, iY)."""
    sig = [PAULI["I"], 1j * PAULI["X"], 1j * PAULI["Z"], 1j * PAULI["Y"]]
    return np.array([s.T.reshape(-1) for s in sig]) / math.sqrt(2)


def apply_g_basis_change(t: np.ndarray) -> np.ndarray:
    """Change the quaternion basis to matrix units on every triangle index.

    Indices 01 and 12 transform with G and 02 with its complex conjugate.
    """
    g = g_basis_change()
    return np.einsum("pqr,pa,qb,rc->abc", to_float(np.asarray(t)), g, g, np.conj(g))


def g_model() -> Model:
    return Model(substrate("gauge"), {"e": 4}, {"G": g_basis_change()}, "complex", name="g_basis_change")


def scalar_alpha(alpha: complex = 2.0) -> Model:
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    a = complex(alpha)
    t = np.full((1, 1, 1), a ** -0.5, dtype=complex)
    one = np.ones((1, 1), dtype=complex)
    tensors = {"T": t, "C": one, "D": one, "W": np.array([[a]])}
    return Model(substrate("orient2d-weighted"), {"e": 1}, tensors, "complex", name=f"scalar_alpha:{alpha}")


def klein4_representation() -> list[np.ndarray]:
    """R(g) ⊗ conj(R(g)) acting on matrix indices for g in the Klein four-group."""
    rs = [PAULI["I"], PAULI["X"], PAULI["Z"], 1j * PAULI["Y"]]
    return [np.kron(r, np.conj(r)) for r in rs]


def spt_matrix2() -> Model:
    m = matrix(2, "orient2d")
    return m.replace(name="spt_matrix2")


# ---------------------------------------------------------------------------
# Face-edge and fermionic models
# ---------------------------------------------------------------------------


def toric_code() -> Model:
    f = _exact((2, 2, 2), lambda i: int(sum(i) % 2 == 0))
    e = _exact((2, 2, 2), lambda i: int(i[0] == i[1] == i[2]))
    return Model(substrate("faceedge3d-toy"), {"e": 2}, {"F": f, "E": e}, "real", name="toric_code")


def kitaev_chain() -> Model:
    g = GradedDim(1, 1)
    t = _exact((2, 2, 2), lambda i: INV_SQRT2 if sum(i) % 2 == 0 else 0)
    ident = _exact((2, 2), lambda i: int(i[0] == i[1]))
    return Model(substrate("spin2d"), {"e": g}, {"T": t, "C": ident, "D": ident}, "fermionic_plain", dict(SPIN_ORDERINGS), name="kitaev_chain")


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CatalogModel:
    id: str
    build: Callable[..., Model]
    targets: tuple[str, ...]
    params: tuple[type, ...] = ()
    flavors: Mapping[str, Callable[..., Model]] = field(default_factory=dict)
    expected: Mapping[str, str] = field(default_factory=dict)


CATALOG: dict[str, CatalogModel] = {
    "delta": CatalogModel("delta", delta, ("toy2d",), (int,), expected={"sphere": "x"}),
    "z2": CatalogModel("z2", z2, ("toy2d",)),
    "hadamard": CatalogModel("hadamard", hadamard, ()),
    "product": CatalogModel("product", product, ("toy2d",), (int,)),
    "delta_boundary": CatalogModel("delta_boundary", delta_boundary, ("toy2d-boundary",), (int, int)),
    "matrix": CatalogModel(
        "matrix",
        matrix,
        ("branch2d", "orient2d", "orient2d-hermitian", "orient2d-invertible", "orient2d-weighted"),
        (int,),
        flavors={
            "orient2d": lambda n=2: matrix(n, "orient2d"),
            "orient2d-weighted": lambda n=2: matrix(n, "orient2d-weighted"),
        },
        expected={"any": "n^chi"},
    ),
    "quaternion": CatalogModel("quaternion", quaternion, ("branch2d",), expected={"rp2": "-2"}),
    "g_basis_change": CatalogModel("g_basis_change", g_model, ()),
    "scalar_alpha": CatalogModel("scalar_alpha", scalar_alpha, ("orient2d-weighted",), (float,), expected={"any": "alpha^chi"}),
    "toric_code": CatalogModel("toric_code", toric_code, ("faceedge3d-toy",)),
    "spt_matrix2": CatalogModel("spt_matrix2", spt_matrix2, ("orient2d", "orient2d-hermitian", "orient2d-invertible")),
    "kitaev_chain": CatalogModel("kitaev_chain", kitaev_chain, ("spin2d",)),
}

MODEL_IDS = tuple(CATALOG)


def parse_ref(ref: str) -> tuple[str, list[str]]:
    """``name[:p1,p2]`` -> (name, [p1, p2])."""
    name, _, rest = ref.partition(":")
    params = [p for p in rest.split(",") if p] if rest else []
    return name, params


def _convert(raw: str, kind: type):
    if kind is int:
        v = float(raw)
        if v != int(v):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(v)
    if kind is float:
        return float(raw)
    return kind(raw)


def load_model(ref: str, substrate_name: str | None = None) -> Model:
    """Resolve ``name[:params]``; ``substrate_name`` selects a flavor of the model."""
    name, raw = parse_ref(ref)
    if name not in CATALOG:
        raise KeyError(f"unknown model {name!r}; known: {', '.join(CATALOG)}")
    entry = CATALOG[name]
    if len(raw) > len(entry.params):
        raise ValueError(f"model {name} takes at most {len(entry.params)} parameters")
    args = [_convert(r, k) for r, k in zip(raw, entry.params)]
    builder = entry.build
    if substrate_name is not None and substrate_name in entry.flavors:
        builder = entry.flavors[substrate_name]
    m = builder(*args)
    if raw:
        m = m.replace(name=ref)
    return m


def model_for_liquid(ref: str, liquid_substrate: str) -> Model:
    """Load ``ref`` in the flavor that lives on ``liquid_substrate`` when one exists."""
    return load_model(ref, liquid_substrate)


# ---------------------------------------------------------------------------
# Symmetry and grading checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymmetryVerdict:
    passed: bool
    residual: float
    failures: tuple[tuple[int, str], ...] = ()


def _act(t: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
    out = to_float(np.asarray(t))
    for ax, m in enumerate(mats):
        out = np.moveaxis(np.tensordot(m, out, axes=([1], [ax])), 0, ax)
    return out


def verify_symmetry(m: Model, rep: Sequence[np.ndarray] | Mapping[str, Sequence[np.ndarray]], eps: float = 1e-12, elements: Sequence[str] | None = None) -> SymmetryVerdict:
    """Check that every tensor is invariant when each index is transformed.

    ``rep`` lists one unitary per group element (or a mapping binding ->
    list).  Slots with an outgoing arrow transform with the complex
    conjugate, all other slots with the matrix itself.
    """
    worst = 0.0
    failures = []
    names = list(elements) if elements is not None else [e.name for e in m.substrate.elements if e.name in m.tensors]
    for name in names:
        el = m.substrate.element(name)
        t = m.tensors[name]
        for g in range(len(rep if not isinstance(rep, Mapping) else next(iter(rep.values())))):
            mats = []
            for s in el.slots:
                u = rep[s.binding][g] if isinstance(rep, Mapping) else rep[g]
                u = np.asarray(u)
                if u.shape != (m.dim(s.binding), m.dim(s.binding)):
                    raise ValueError(f"representation matrix has shape {u.shape}, binding {s.binding} has dim {m.dim(s.binding)}")
                mats.append(np.conj(u) if s.arrow == "out" else u)
            r = float(np.max(np.abs(_act(t, mats) - to_float(np.asarray(t)))))
            worst = max(worst, r)
            if r > eps:
                failures.append((g, name))
    return SymmetryVerdict(not failures, worst, tuple(failures))


def verify_symmetry_on(m: Model, element: str, mats: Sequence[np.ndarray], eps: float = 1e-12) -> SymmetryVerdict:
    """Invariance of one tensor under explicit per-slot matrices."""
    t = m.tensors[element]
    r = float(np.max(np.abs(_act(t, mats) - to_float(np.asarray(t)))))
    return SymmetryVerdict(r <= eps, r, () if r <= eps else ((0, element),))


@dataclass(frozen=True)
class GradingVerdict:
    passed: bool
    violations: Mapping[str, float]


def check_grading(m: Model, eps: float = 1e-12) -> GradingVerdict:
    """Every tensor must vanish on odd total parity."""
    bad = {}
    for el in m.substrate.elements:
        if el.name not in m.tensors:
            continue
        parities = [as_graded(m.dims[s.binding]).parity() for s in el.slots]
        v = parity_violation(np.asarray(m.tensors[el.name]), parities)
        if v > eps:
            bad[el.name] = v
    return GradingVerdict(not bad, bad)


def is_real_model(m: Model, eps: float = 0.0) -> bool:
    return all(float(np.max(np.abs(to_float(np.asarray(t)).imag), initial=0.0)) <= eps for t in m.tensors.values())


__all__ = [
    "CATALOG",
    "MODEL_IDS",
    "CatalogModel",
    "apply_g_basis_change",
    "check_grading",
    "circuit_models",
    "delta",
    "delta_boundary",
    "exact_inv_sqrt",
    "g_basis_change",
    "hadamard",
    "kitaev_chain",
    "klein4_representation",
    "load_model",
    "matrix",
    "parse_ref",
    "product",
    "quaternion",
    "scalar_alpha",
    "spt_matrix2",
    "toric_code",
    "verify_symmetry",
    "z2",
]
