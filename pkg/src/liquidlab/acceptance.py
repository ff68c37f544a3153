"""Executable acceptance checks, one function per numbered criterion.

Each check returns a :class:`CriterionResult`; ``liquidlab accept`` and the
test suite both run them.  Tolerances are the ones each criterion states.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .checker import check_model, replay_derivation
from .circuits import load_circuit
from .geometry import (
    EULER,
    SURFACES,
    GeometryError,
    apply_homology_move,
    compute_omega2,
    default_eta,
    invariant,
    surface_triangulation,
    validate_eta,
)
from .liquids import LIQUID_IDS, hermiticity_chain, load_liquid, substrate
from .mappings import (
    cluster_mapping,
    cluster_projector_slots,
    kitaev_mapping,
    kitaev_projector_array,
    operator_to_slots,
    pull_back_model,
    toric_mapping,
    toric_projectors,
)
from .models import (
    apply_g_basis_change,
    delta,
    kitaev_chain,
    klein4_representation,
    load_model,
    matrix,
    model_for_liquid,
    quaternion,
    scalar_alpha,
    spt_matrix2,
    toric_code,
    verify_symmetry,
    z2,
)
from .sampling import induced_subnetwork, random_host_with, random_model, random_network, rewrite_round_trip
from .signcheck import signcheck_liquid
from .solver import SolveConfig, finite_difference_jacobian, jacobian, make_params, solve
from .substrate import EqualityPolicy, brute_force_occurrences, find_occurrences
from .tensors import GradedDim, QSqrt2, equal, evaluate_network, is_exact_array, to_float

EXACT = EqualityPolicy("exact", 0.0)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool = True
    details: list[str] = field(default_factory=list)

    def check(self, ok: bool, message: str) -> bool:
        self.details.append(f"{'ok  ' if ok else 'FAIL'} {message}")
        self.passed &= bool(ok)
        return bool(ok)

    def line(self) -> str:
        return f"criterion {self.number:>2} {'PASS' if self.passed else 'FAIL'}: {self.title}"

    def to_json(self) -> dict:
        return {"criterion": self.number, "title": self.title, "pass": self.passed, "details": list(self.details)}


def _cval(v) -> complex:
    return complex(to_float(np.asarray(v)).reshape(()))


def _exact_zero_report(liquid: str, model) -> tuple[bool, str]:
    rep = check_model(load_liquid(liquid), model, policy=EXACT)
    exact = True
    for mv in load_liquid(liquid).all_moves:
        exact &= is_exact_array(evaluate_network(model, mv.lhs)) and is_exact_array(evaluate_network(model, mv.rhs))
    zero = all(m.residual == 0.0 for m in rep.moves)
    return rep.passed and exact and zero, ", ".join(f"{m.name}={m.residual:.1e}" for m in rep.moves)


def criterion_1() -> CriterionResult:
    r = CriterionResult(1, "toy2d: delta:x exact residual 0 for x in 1..3, z2 within 1e-12")
    for x in (1, 2, 3):
        ok, msg = _exact_zero_report("toy2d", delta(x))
        r.check(ok, f"delta:{x} exact ({msg})")
    rep = check_model(load_liquid("toy2d"), z2(), policy=EqualityPolicy("tolerance", 1e-12))
    r.check(rep.passed, "z2 " + ", ".join(f"{m.name}={m.residual:.1e}" for m in rep.moves))
    return r


def criterion_2() -> CriterionResult:
    r = CriterionResult(2, "delta:2 on the sphere is exactly 2")
    v = invariant(delta(2), "sphere")
    r.check(isinstance(v, QSqrt2) and v == QSqrt2(2), f"value {v!r}")
    return r


def criterion_3() -> CriterionResult:
    r = CriterionResult(3, "matrix:n on every surface equals n^chi within 1e-9")
    for n in (2, 3):
        for s in SURFACES:
            v = _cval(invariant(matrix(n), s))
            want = float(n) ** EULER[s]
            r.check(abs(v - want) <= 1e-9, f"matrix:{n} {s}: {v:.12g} vs {want:g}")
    return r


def criterion_4() -> CriterionResult:
    r = CriterionResult(4, "branch2d: quaternion passes 5 moves within 1e-12; rp2 gives -2")
    rep = check_model(load_liquid("branch2d"), quaternion(), policy=EqualityPolicy("tolerance", 1e-12), include_derived=False)
    r.check(len(rep.moves) == 5 and rep.passed, ", ".join(f"{m.name}={m.residual:.1e}" for m in rep.moves))
    v = _cval(invariant(quaternion(), "rp2"))
    r.check(abs(v + 2) <= 1e-9, f"rp2 value {v:.12g}")
    return r


def criterion_5() -> CriterionResult:
    r = CriterionResult(5, "G maps the quaternion triangle onto matrix:2's within 1e-12")
    got = to_float(apply_g_basis_change(quaternion().tensors["T"]))
    want = to_float(matrix(2).tensors["T"])
    res = float(np.max(np.abs(got - want)))
    r.check(res <= 1e-12, f"max deviation {res:.2e}")
    return r


def criterion_6() -> CriterionResult:
    r = CriterionResult(6, "orient2d-hermitian: matrix:2 passes; the ccw 2-gon chain replays")
    liquid = load_liquid("orient2d-hermitian")
    rep = check_model(liquid, model_for_liquid("matrix:2", "orient2d"))
    r.check(rep.passed, ", ".join(f"{m.name}={m.residual:.1e}" for m in rep.moves))
    r.check(rep.result("hermiticity").passed, "hermiticity move")
    mv = liquid.move("ccw_2gon_hermiticity")
    path = replay_derivation(mv.lhs, hermiticity_chain(liquid), mv.rhs)
    r.check(path is not None, f"chain replay reaches the counter-clockwise 2-gon ({0 if path is None else len(path) - 1} steps)")
    return r


def criterion_7() -> CriterionResult:
    r = CriterionResult(7, "orient2d-invertible projective pass; Klein-4 symmetry within 1e-12")
    liquid = load_liquid("orient2d-invertible")
    rep = check_model(liquid, model_for_liquid("matrix:2", "orient2d"), policy=EqualityPolicy("projective", 1e-12))
    for m in rep.moves:
        lam = "" if m.lam is None else f", lambda {m.lam.real:.6g}"
        r.check(m.passed, f"{m.name} residual {m.residual:.1e}{lam}")
    names = {m.name for m in rep.moves}
    r.check({"0-surgery", "1-surgery"} <= names, "both surgery moves present")
    sym = verify_symmetry(spt_matrix2(), klein4_representation(), eps=1e-12)
    r.check(sym.passed, f"Klein-4 Pauli representation residual {sym.residual:.1e}")
    return r


def criterion_8() -> CriterionResult:
    r = CriterionResult(8, "scalar_alpha:a gives a^chi; weight placement is irrelevant")
    for a in (0.5, 2.0):
        for s in ("sphere", "torus"):
            vals = {p: _cval(invariant(scalar_alpha(a), s, weight_placement=p)) for p in ("least", "greatest")}
            want = a ** EULER[s]
            r.check(abs(vals["least"] - want) <= 1e-9, f"a={a} {s}: {vals['least']:.12g} vs {want:g}")
            r.check(abs(vals["least"] - vals["greatest"]) <= 1e-9, f"a={a} {s}: placements agree ({vals['greatest']:.12g})")
    return r


def criterion_9() -> CriterionResult:
    r = CriterionResult(9, "faceedge3d-toy toric_code passes; pull-back reproduces P_A and P_B")
    rep = check_model(load_liquid("faceedge3d-toy"), toric_code())
    r.check(rep.passed, ", ".join(f"{m.name}={m.residual:.1e}" for m in rep.moves))
    bi = rep.result("bialgebra")
    r.check(bi.policy.kind == "exact" and bi.passed, "bialgebra move exact")
    face = rep.result("face_1-3")
    lam = face.lam
    r.check(face.policy.kind == "projective" and lam is not None and abs(lam - 0.5) <= 1e-12, f"face 1-3 lambda {lam}")
    pulled = pull_back_model(toric_mapping(), toric_code())
    pa, pb = toric_projectors()
    proj = EqualityPolicy("projective", 1e-12)
    for el, op in (("PA", pa), ("PB", pb)):
        cmp = equal(to_float(pulled.tensors[el]), operator_to_slots(op), proj)
        r.check(cmp.equal, f"{el} vs reference: residual {cmp.residual:.3e}, lambda {cmp.lam}")
    return r


def criterion_10() -> CriterionResult:
    r = CriterionResult(10, "cluster pull-back equals the blocked projector within 1e-12")
    pulled = pull_back_model(cluster_mapping(), quaternion())
    res = float(np.max(np.abs(to_float(pulled.tensors["S"]) - cluster_projector_slots())))
    r.check(res <= 1e-12, f"max deviation {res:.2e}")
    return r


def criterion_11() -> CriterionResult:
    r = CriterionResult(11, "spin2d kitaev_chain passes; rhombus pull-back matches exactly in order dcba")
    rep = check_model(load_liquid("spin2d"), kitaev_chain(), policy=EqualityPolicy("tolerance", 1e-12))
    r.check(rep.passed, ", ".join(f"{m.name}={m.residual:.1e}" for m in rep.moves))
    rhombus = pull_back_model(kitaev_mapping(), kitaev_chain()).tensors["R"]
    dcba = np.transpose(rhombus, (3, 2, 1, 0))
    ok = is_exact_array(dcba) and np.array_equal(dcba, kitaev_projector_array(exact=True))
    r.check(ok, "exact array equality with 1/2 delta(s0+s1, s0'+s1') (-1)^(s0 s1 + s0' s1')")
    return r


def criterion_12() -> CriterionResult:
    r = CriterionResult(12, "signcheck spin2d: empty ledgers, 20/20 numeric; permuted ordering fails")
    liquid = load_liquid("spin2d")
    results = signcheck_liquid(liquid, trials=20, seed=0)
    r.check(len(results) == 4, f"{len(results)} primitive spin moves")
    for res in results:
        n = res.numeric
        r.check(res.ledger.cancels, f"{res.ledger.move}: ledger difference {res.ledger.difference}")
        r.check(n.trials == 20 and n.failures == 0, f"{res.ledger.move}: numeric {n.trials - n.failures}/{n.trials}")
    permuted = dict(liquid.metadata["orderings"])
    permuted["T"] = ("01", "02", "12")
    bad = signcheck_liquid(liquid, permuted, trials=20, seed=0)
    caught = [b for b in bad if not b.ledger.cancels and b.numeric.failures > 0]
    r.check(bool(caught), "permuted T ordering: nonzero ledger with numeric failure on " + ", ".join(b.ledger.move for b in caught))
    return r


def criterion_13() -> CriterionResult:
    r = CriterionResult(13, "spin structures: omega_2 parity, eta validation, homology invariance")
    for s in SURFACES:
        t = surface_triangulation(s)
        w = compute_omega2(t)
        r.check(sum(w.values()) % 2 == EULER[s] % 2, f"{s}: sum omega_2 = {sum(w.values())}, chi = {EULER[s]}")
        try:
            eta = default_eta(t)
        except GeometryError:
            r.check(sum(w.values()) % 2 == 1, f"{s}: no eta exists (odd omega_2 total)")
        else:
            r.check(validate_eta(t, eta).passed, f"{s}: shipped eta accepted")
        if any(w.values()):
            r.check(not validate_eta(t, frozenset()).passed, f"{s}: empty eta rejected")
    kc = kitaev_chain()
    for s in ("sphere", "torus"):
        t = surface_triangulation(s)
        eta = default_eta(t)
        base = _cval(invariant(kc, s, eta=eta))
        worst = 0.0
        for k in range(len(t.triangles)):
            moved = apply_homology_move(t.with_eta(eta), k)
            worst = max(worst, abs(_cval(invariant(kc, s, eta=moved.eta)) - base))
        r.check(worst <= 1e-12, f"{s}: Kitaev value {base:.6g} under {len(t.triangles)} homology moves, max change {worst:.1e}")
    return r


def _jacobian_dims(lid: str) -> dict:
    l = load_liquid(lid)
    return {b.name: (GradedDim(1, 1) if lid == "spin2d" else 2) for b in l.substrate.bindings}


def criterion_14() -> CriterionResult:
    r = CriterionResult(14, "solver: dim-1 convergence, dim-2 fingerprint, Jacobian vs central differences, < 60 s")
    start = time.perf_counter()
    toy = load_liquid("toy2d")
    rep1 = solve(toy, {"e": 1}, SolveConfig(restarts=20, seed=0))
    hit = sum(1 for run in rep1.runs if run.residual < 1e-8)
    at_one = sum(1 for run in rep1.runs if run.residual < 1e-8 and abs(run.params.values[0] - 1.0) <= 1e-6)
    r.check(hit >= 10, f"dim 1: {hit}/20 restarts below 1e-8 ({at_one} at t = 1)")
    r.check(any(abs(to_float(np.asarray(root.params.tensors()["T"])).ravel()[0] - 1.0) <= 1e-6 for root in rep1.roots), "dim 1: root t = 1 reported")
    rep2 = solve(toy, {"e": 2}, SolveConfig(restarts=20, seed=0))
    fps = [root.fingerprint[0] for root in rep2.roots]
    r.check(any(min(abs(f - 1), abs(f - 2)) <= 1e-6 for f in fps), f"dim 2: sphere fingerprints {[round(f.real, 9) for f in fps]}")
    rng = np.random.default_rng(14)
    for lid in LIQUID_IDS:
        l = load_liquid(lid)
        dims = _jacobian_dims(lid)
        worst = 0.0
        for _ in range(10):
            p = make_params(l, dims, rng=rng)
            J = jacobian(l, p)
            F = finite_difference_jacobian(l, p, h=1e-6)
            scale = float(np.linalg.norm(F))
            worst = max(worst, float(np.linalg.norm(J - F)) / scale if scale else float(np.linalg.norm(J)))
        r.check(worst <= 1e-5, f"{lid}: Jacobian relative error {worst:.1e}")
    elapsed = time.perf_counter() - start
    r.check(elapsed < 60, f"runtime {elapsed:.1f} s")
    return r


def criterion_15() -> CriterionResult:
    r = CriterionResult(15, "Hadamard and product circuits replay with exact evaluations")
    for name in ("hadamard", "product"):
        c = load_circuit(name)
        rep = c.check(eps=0.0)
        r.check(rep.passed and rep.exact, f"{name}: {rep.message or 'all probes preserved'}, exact {rep.exact}")
        if name == "product":
            r.check(all(not f.atoms for f in rep.finals), "product: final networks are empty")
    return r


_PROPERTY_SUBSTRATES = ("toy2d", "branch2d", "orient2d")


def schedule_cases(n: int = 100, seed: int = 16) -> int:
    """Number of random networks where greedy, sequential and random schedules disagree."""
    from .liquids import SPIN_ORDERINGS

    rng = np.random.default_rng(seed)
    bad = 0
    for k in range(n):
        fermionic = k % 4 == 3
        name = "spin2d" if fermionic else _PROPERTY_SUBSTRATES[k % 3]
        sub = substrate(name)
        net = random_network(sub, rng, int(rng.integers(1, 7)), directed=fermionic, p_conjugate=0.3 if name == "orient2d" else 0.0)
        if fermionic:
            model = random_model(sub, rng, {"e": GradedDim(1, 1)}, semantics="fermionic_plain", orderings=SPIN_ORDERINGS)
        else:
            model = random_model(sub, rng)
        ref = evaluate_network(model, net, "greedy")
        for other in (evaluate_network(model, net, "sequential"), evaluate_network(model, net, "random", seed=k)):
            if not np.array_equal(ref, other):
                bad += 1
                break
    return bad


def round_trip_cases(n: int = 100, seed: int = 17) -> int:
    rng = np.random.default_rng(seed)
    moves = []
    for lid in ("toy2d", "branch2d", "orient2d"):
        for mv in load_liquid(lid).moves:
            if mv.lhs.atoms and mv.rhs.atoms and not any(b.is_bare for b in mv.lhs.bonds + mv.rhs.bonds):
                moves.append(mv)
    bad = 0
    for k in range(n):
        mv = moves[k % len(moves)]
        host = random_host_with(mv.lhs, rng, int(rng.integers(0, 7 - len(mv.lhs.atoms))))
        occs = find_occurrences(host, mv.lhs)
        if not occs or not rewrite_round_trip(host, mv, occs[int(rng.integers(len(occs)))]):
            bad += 1
    return bad


def occurrence_cases(n: int = 50, seed: int = 18) -> int:
    rng = np.random.default_rng(seed)
    bad = 0
    for k in range(n):
        sub = substrate(_PROPERTY_SUBSTRATES[k % 3])
        host = random_network(sub, rng, int(rng.integers(1, 7)), p_open=0.2, p_conjugate=0.3 if k % 3 == 2 else 0.0)
        if k % 2:
            pattern = random_network(sub, rng, int(rng.integers(1, 4)), p_open=0.5)
        else:
            size = int(rng.integers(1, min(3, len(host.atoms)) + 1))
            pattern = induced_subnetwork(host, list(rng.choice(host.atom_ids(), size=size, replace=False)))
        if find_occurrences(host, pattern) != brute_force_occurrences(host, pattern):
            bad += 1
    return bad


def criterion_16() -> CriterionResult:
    r = CriterionResult(16, "properties: schedule independence, rewrite round trip, occurrence completeness")
    bad = schedule_cases(100)
    r.check(bad == 0, f"schedule independence: {100 - bad}/100 agree exactly")
    bad = round_trip_cases(100)
    r.check(bad == 0, f"rewrite round trip: {100 - bad}/100 isomorphic")
    bad = occurrence_cases(50)
    r.check(bad == 0, f"occurrence completeness: {50 - bad}/50 match brute force")
    return r


CRITERIA: dict[int, Callable[[], CriterionResult]] = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
    12: criterion_12,
    13: criterion_13,
    14: criterion_14,
    15: criterion_15,
    16: criterion_16,
}


def run_criterion(number: int) -> CriterionResult:
    if number not in CRITERIA:
        raise KeyError(f"no criterion {number}")
    return CRITERIA[number]()
