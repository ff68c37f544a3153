"""Branching-structure liquid: matrix algebras give n^chi, the quaternions give -2 on RP2."""

from __future__ import annotations

import numpy as np

from liquidlab.checker import check_model
from liquidlab.geometry import EULER, SURFACES, invariant
from liquidlab.liquids import load_liquid
from liquidlab.models import apply_g_basis_change, matrix, quaternion
from liquidlab.tensors import to_float


def value(v) -> complex:
    return complex(to_float(np.asarray(v)).reshape(()))


def main() -> None:
    branch = load_liquid("branch2d")
    print(check_model(branch, quaternion()).table())
    print()
    print(f"{'model':<12}" + "".join(f"{s:>10}" for s in SURFACES))
    for name, m in (("matrix(2)", matrix(2)), ("matrix(3)", matrix(3)), ("quaternion", quaternion())):
        print(f"{name:<12}" + "".join(f"{value(invariant(m, s)).real:>10.4g}" for s in SURFACES))
    print(f"{'chi':<12}" + "".join(f"{EULER[s]:>10}" for s in SURFACES))
    gap = np.max(np.abs(apply_g_basis_change(quaternion().tensors["T"]) - to_float(matrix(2).tensors["T"])))
    print(f"\nquaternion triangle after the basis change G vs matrix(2): max deviation {gap:.1e}")


if __name__ == "__main__":
    main()
