"""Spin structures on triangulated surfaces and the Kitaev chain model."""

from __future__ import annotations

import numpy as np

from liquidlab.geometry import (
    SURFACES,
    GeometryError,
    apply_homology_move,
    compute_omega2,
    default_eta,
    invariant,
    surface_triangulation,
    validate_eta,
)
from liquidlab.liquids import load_liquid
from liquidlab.models import kitaev_chain
from liquidlab.signcheck import signcheck_liquid
from liquidlab.tensors import to_float


def main() -> None:
    for s in SURFACES:
        t = surface_triangulation(s)
        w = compute_omega2(t)
        support = [v for v, x in w.items() if x]
        try:
            eta = default_eta(t)
            status = f"eta with {len(eta)} edges, valid: {validate_eta(t, eta).passed}"
        except GeometryError as exc:
            status = str(exc)
        print(f"{s:<7} omega_2 support {support}; {status}")
    print()
    for s in ("sphere", "torus"):
        t = surface_triangulation(s)
        eta = default_eta(t)
        vals = {complex(to_float(np.asarray(invariant(kitaev_chain(), s, eta=apply_homology_move(t.with_eta(eta), k).eta)))).real for k in range(len(t.triangles))}
        print(f"Kitaev chain on the {s}: values over all single homology moves {sorted(vals)}")
    print()
    for r in signcheck_liquid(load_liquid("spin2d")):
        print(f"{r.ledger.move:<22} ledger cancels: {r.ledger.cancels}, numeric {r.numeric.trials - r.numeric.failures}/{r.numeric.trials}")


if __name__ == "__main__":
    main()
