"""Pull models back along substrate mappings and compare with lattice projectors."""

from __future__ import annotations

import numpy as np

from liquidlab.mappings import (
    cluster_mapping,
    cluster_projector_slots,
    kitaev_mapping,
    kitaev_projector_array,
    operator_to_slots,
    pull_back_model,
    toric_mapping,
    toric_projectors,
)
from liquidlab.models import kitaev_chain, quaternion, toric_code
from liquidlab.substrate import EqualityPolicy
from liquidlab.tensors import equal, to_float


def main() -> None:
    s = to_float(pull_back_model(cluster_mapping(), quaternion()).tensors["S"])
    print(f"cluster plaquette: max deviation {np.max(np.abs(s - cluster_projector_slots())):.1e}")
    r = pull_back_model(kitaev_mapping(), kitaev_chain()).tensors["R"]
    same = np.array_equal(np.transpose(r, (3, 2, 1, 0)), kitaev_projector_array(exact=True))
    print(f"Kitaev rhombus equals its projector exactly: {same}")
    pulled = pull_back_model(toric_mapping(), toric_code())
    proj = EqualityPolicy("projective", 1e-12)
    for el, op in zip(("PA", "PB"), toric_projectors()):
        direct = equal(to_float(pulled.tensors[el]), operator_to_slots(op), proj)
        complement = equal(to_float(pulled.tensors[el]), operator_to_slots(np.eye(16) - op), proj)
        print(f"toric {el}: matches (1 - S)/2: {direct.equal}; matches (1 + S)/2: {complement.equal} (scalar {complement.lam.real:g})")


if __name__ == "__main__":
    main()
