"""Independent reference evaluations, and the frozen values they produced.

Run ``python tests/oracles.py`` to regenerate ``tests/frozen/derived_values.json``.
The evaluators here never call the package's contraction engine: one absorbs
atoms with two-operand ``np.einsum`` calls, the other sums over every index
assignment.
"""

from __future__ import annotations

import itertools
import json
import string
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent
FROZEN = ROOT / "frozen" / "derived_values.json"

if __name__ == "__main__":
    sys.path.insert(0, str(ROOT.parent / "src"))

from liquidlab.substrate import Network, is_open  # noqa: E402
from liquidlab.tensors import Model, to_float  # noqa: E402

_LETTERS = string.ascii_letters


def _float_tensor(model: Model, element: str, conjugated: bool) -> np.ndarray:
    t = to_float(np.asarray(model.tensors[element]))
    return np.conj(t) if conjugated else t


def _labels(n: Network) -> tuple[dict, dict]:
    """Letter per closed bond end and per open label."""
    end_letter: dict = {}
    open_letter: dict = {}
    k = 0
    for b in n.bonds:
        e0, e1 = b.ends
        if is_open(e0) and is_open(e1):
            continue
        if is_open(e0) or is_open(e1):
            inner, lab = (e1, e0) if is_open(e0) else (e0, e1)
            open_letter[lab[1]] = _LETTERS[k]
            end_letter[inner] = _LETTERS[k]
        else:
            end_letter[e0] = end_letter[e1] = _LETTERS[k]
        k += 1
    for b in n.bonds:
        if b.is_bare:
            open_letter[b.ends[0][1]] = _LETTERS[k]
            open_letter[b.ends[1][1]] = _LETTERS[k + 1]
            k += 2
    if k > len(_LETTERS):
        raise ValueError("network too large for the einsum oracle")
    return end_letter, open_letter


def einsum_evaluate(model: Model, n: Network) -> np.ndarray:
    """Non-fermionic evaluation; axes follow ``n.open_order``.

    Atoms are absorbed one at a time, always the one leaving the fewest
    open letters, each step a single two-operand ``np.einsum``.
    """
    if model.is_fermionic:
        raise ValueError("the einsum oracle handles bosonic models only")
    end_letter, open_letter = _labels(n)
    pieces: list[tuple[np.ndarray, str]] = []
    for a in n.atoms:
        el = n.substrate.element(a.element)
        pieces.append((_float_tensor(model, a.element, a.conjugated), "".join(end_letter[("atom", a.id, s)] for s in el.slot_names)))
    for b in n.bonds:
        if b.is_bare:
            pieces.append((np.eye(model.dim(b.binding), dtype=complex), open_letter[b.ends[0][1]] + open_letter[b.ends[1][1]]))
    out = "".join(open_letter[l] for l in n.open_order)
    if not pieces:
        return np.array(1.0 + 0j)
    run, subs = pieces.pop(0)

    def survivors(a: str, b: str, others) -> str:
        both = a + b
        return "".join(c for c in dict.fromkeys(both) if c in out or both.count(c) == 1 or any(c in p for _, p in others))

    while pieces:
        # absorb the piece that leaves the fewest open letters
        best = min(range(len(pieces)), key=lambda k: (not set(pieces[k][1]) & set(subs), len(survivors(subs, pieces[k][1], pieces[:k] + pieces[k + 1 :]))))
        t, s2 = pieces.pop(best)
        res = survivors(subs, s2, pieces)
        run = np.einsum(f"{subs},{s2}->{res}", run, t)
        subs = res
    return np.asarray(np.einsum(f"{subs}->{out}", run), dtype=complex)


def brute_force_evaluate(model: Model, n: Network) -> complex:
    """Closed bosonic networks only: explicit sum over all bond assignments."""
    if n.open_order or model.is_fermionic:
        raise ValueError("brute force handles closed bosonic networks")
    end_letter, _ = _labels(n)
    letters = sorted(set(end_letter.values()))
    dims = {}
    for end, let in end_letter.items():
        dims[let] = model.dim(n.slot_binding(end))
    tensors = [(_float_tensor(model, a.element, a.conjugated), [end_letter[("atom", a.id, s)] for s in n.substrate.element(a.element).slot_names]) for a in n.atoms]
    total = 0j
    for values in itertools.product(*(range(dims[l]) for l in letters)):
        v = dict(zip(letters, values))
        term = 1 + 0j
        for t, ls in tensors:
            term *= t[tuple(v[l] for l in ls)]
            if term == 0:
                break
        total += term
    return total


def projective_lambda(lhs: np.ndarray, rhs: np.ndarray) -> complex:
    """Least-squares scalar with lhs ~ lambda * rhs."""
    return complex(np.vdot(rhs.ravel(), lhs.ravel()) / np.vdot(rhs.ravel(), rhs.ravel()))


def move_sides(model: Model, mv) -> tuple[np.ndarray, np.ndarray]:
    lhs = einsum_evaluate(model, mv.lhs)
    rhs = einsum_evaluate(model, mv.rhs.with_order([mv.corr[l] for l in mv.lhs.open_order]))
    return lhs, rhs


# ---------------------------------------------------------------------------
# Frozen values
# ---------------------------------------------------------------------------


def _c(v: complex) -> list[float]:
    v = complex(v)
    return [round(v.real, 12), round(v.imag, 12)]


def compute_values() -> dict:
    from liquidlab.geometry import SURFACES, build_surface, surface_for_model
    from liquidlab.liquids import load_liquid
    from liquidlab.models import delta, load_model, matrix, model_for_liquid, quaternion, toric_code

    out: dict = {"invariants": {}, "lambdas": {}, "brute_force": {}}
    cases = [(f"delta:{x}", delta(x)) for x in (1, 2, 3)] + [("matrix:2", matrix(2)), ("matrix:3", matrix(3)), ("quaternion", quaternion())]
    for name, model in cases:
        for s in SURFACES:
            out["invariants"][f"{name}/{s}"] = _c(einsum_evaluate(model, surface_for_model(model, s).network))
    for a in ("0.5", "2"):
        m = load_model(f"scalar_alpha:{a}")
        for s in ("sphere", "torus"):
            for p in ("least", "greatest"):
                out["invariants"][f"scalar_alpha:{a}/{s}/{p}"] = _c(einsum_evaluate(m, surface_for_model(m, s, weight_placement=p).network))
    m2o = model_for_liquid("matrix:2", "orient2d")
    for s in ("sphere", "torus"):
        out["invariants"][f"matrix:2-oriented/{s}"] = _c(einsum_evaluate(m2o, surface_for_model(m2o, s).network))
    for liquid, model, move in (
        ("faceedge3d-toy", toric_code(), "face_1-3"),
        ("orient2d-invertible", m2o, "0-surgery"),
        ("orient2d-invertible", m2o, "1-surgery"),
    ):
        lhs, rhs = move_sides(model, load_liquid(liquid).move(move))
        out["lambdas"][f"{liquid}/{move}"] = _c(projective_lambda(lhs, rhs))
    klein = build_surface("klein", "unoriented", liquid="toy2d").network
    out["brute_force"]["delta:2/klein"] = _c(brute_force_evaluate(delta(2), klein))
    sphere = build_surface("sphere", "unoriented", liquid="branch2d").network
    out["brute_force"]["quaternion/sphere"] = _c(brute_force_evaluate(quaternion(), sphere))
    # hand-solved dim-1 toy system: 2-2 is t^2 = t^2, 1-3 is t^3 = t
    out["toy_dim1_roots"] = [-1.0, 0.0, 1.0]
    return out


def load_frozen() -> dict:
    return json.loads(FROZEN.read_text(encoding="utf-8"))


if __name__ == "__main__":
    FROZEN.parent.mkdir(exist_ok=True)
    FROZEN.write_text(json.dumps(compute_values(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {FROZEN}")
