"""Toy 1+1D liquid: check the delta and Z2 models, evaluate surfaces, replay circuits."""

from __future__ import annotations

from liquidlab.checker import check_model
from liquidlab.circuits import load_circuit
from liquidlab.geometry import SURFACES, invariant
from liquidlab.liquids import load_liquid
from liquidlab.models import delta, z2


def main() -> None:
    toy = load_liquid("toy2d")
    for model in (delta(1), delta(2), delta(3), z2()):
        print(check_model(toy, model).table())
        print()
    print("delta(x) on closed surfaces:")
    for x in (1, 2, 3):
        print(f"  x={x}: " + ", ".join(f"{s} {invariant(delta(x), s)}" for s in SURFACES))
    print()
    for name in ("hadamard", "product"):
        rep = load_circuit(name).check(eps=0.0)
        print(f"circuit {name}: {'equivalent' if rep.passed else rep.message} (exact: {rep.exact})")


if __name__ == "__main__":
    main()
