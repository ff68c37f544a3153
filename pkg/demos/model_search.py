"""Numerical search for models of the toy liquid."""

from __future__ import annotations

from liquidlab.liquids import load_liquid
from liquidlab.solver import SolveConfig, solve


def main() -> None:
    toy = load_liquid("toy2d")
    for d in (1, 2):
        rep = solve(toy, {"e": d}, SolveConfig(restarts=20, seed=0))
        print(f"bond dimension {d}: {sum(r.converged for r in rep.runs)}/{len(rep.runs)} restarts converged")
        for root in rep.roots:
            fp = ", ".join(f"{z.real:.6g}" for z in root.fingerprint)
            print(f"  root from restart {root.seed}: residual {root.residual:.1e}, sphere/torus values {fp}")


if __name__ == "__main__":
    main()
