"""Command-line entry point: ``liquidlab <command> ...``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import geometry, io
from .checker import Liquid, check_model
from .liquids import LIQUID_IDS, load_liquid
from .mappings import MAPPING_IDS, SubstrateMapping, apply_mapping, load_mapping, pull_back_model, verify_mapped_moves
from .models import CATALOG, load_model
from .substrate import EqualityPolicy, NetworkError
from .tensors import EvaluationError, GradedDim, Model, QSqrt2, to_float

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_SEED = 0


class UsageError(Exception):
    pass


@dataclass
class CommandResult:
    code: int
    payload: Any = None
    text: str = ""
    extra: dict = field(default_factory=dict)

    def emit(self, as_json: bool, stream=None) -> None:
        stream = stream or sys.stdout
        if as_json and self.payload is not None:
            stream.write(json.dumps(self.payload, indent=2, default=_json_default) + "\n")
        elif self.text:
            stream.write(self.text.rstrip("\n") + "\n")


def _json_default(x: Any) -> Any:
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"not serializable: {type(x).__name__}")


# ---------------------------------------------------------------------------
# Reference resolution
# ---------------------------------------------------------------------------


def _is_file(ref: str) -> bool:
    return ref.endswith(".json") or os.path.sep in ref


def resolve_liquid(ref: str) -> Liquid:
    try:
        if _is_file(ref):
            return io.liquid_from_json(io.load_json(ref))
        return load_liquid(ref)
    except (KeyError, OSError, ValueError) as exc:
        raise UsageError(f"cannot resolve liquid {ref!r}: {exc}") from exc


def resolve_model(ref: str, substrate_name: str | None = None) -> Model:
    try:
        if _is_file(ref):
            return io.model_from_json(io.load_json(ref))
        return load_model(ref, substrate_name)
    except (KeyError, OSError, ValueError, TypeError) as exc:
        raise UsageError(f"cannot resolve model {ref!r}: {exc}") from exc


def resolve_mapping(ref: str) -> SubstrateMapping:
    try:
        if _is_file(ref):
            return io.mapping_from_json(io.load_json(ref))
        return load_mapping(ref)
    except (KeyError, OSError, ValueError) as exc:
        raise UsageError(f"cannot resolve mapping {ref!r}: {exc}") from exc


def parse_policy(text: str | None) -> EqualityPolicy | None:
    """``kind[:eps]``; the default eps is 1e-12 (0 for exact)."""
    if text is None:
        return None
    kind, _, eps = text.partition(":")
    try:
        default = 0.0 if kind == "exact" else 1e-12
        return EqualityPolicy(kind, float(eps) if eps else default)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def parse_dims(text: str) -> dict[str, int | GradedDim]:
    """``e=2,f=3``; a graded dimension is written ``even+odd`` (e.g. ``e=1+1``)."""
    out: dict[str, int | GradedDim] = {}
    for part in filter(None, text.split(",")):
        name, sep, val = part.partition("=")
        if not sep:
            raise UsageError(f"bad dimension {part!r}; expected binding=dim")
        try:
            if "+" in val:
                even, odd = val.split("+")
                out[name.strip()] = GradedDim(int(even), int(odd))
            else:
                out[name.strip()] = int(val)
        except ValueError as exc:
            raise UsageError(f"bad dimension {part!r}") from exc
    return out


def _complex_str(z: complex) -> str:
    z = complex(z)
    if abs(z.imag) <= 1e-12 * max(1.0, abs(z.real)):
        return f"{z.real:.12g}"
    return f"{z.real:.12g}{z.imag:+.12g}j"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_verify(liquid_ref: str, model_ref: str, policy: str | None = None) -> CommandResult:
    liquid = resolve_liquid(liquid_ref)
    model = resolve_model(model_ref, liquid.substrate.name)
    if model.substrate.name != liquid.substrate.name:
        raise UsageError(f"model {model_ref} lives on {model.substrate.name}, liquid {liquid.name} on {liquid.substrate.name}")
    rep = check_model(liquid, model, parse_policy(policy), model_name=model_ref)
    return CommandResult(EXIT_PASS if rep.passed else EXIT_FAIL, rep.to_json(), rep.table())


def cmd_invariant(model_ref: str, surface: str, placement: str = "least", flavor: str | None = None) -> CommandResult:
    if surface not in geometry.SURFACES:
        raise UsageError(f"unknown surface {surface!r}; choose from {', '.join(geometry.SURFACES)}")
    model = resolve_model(model_ref, flavor)
    kw = {"weight_placement": placement} if model.substrate.name == "orient2d-weighted" else {}
    try:
        raw = geometry.invariant(model, surface, **kw)
    except geometry.GeometryError as exc:
        raise UsageError(str(exc)) from exc
    value = complex(raw)
    exact = repr(raw) if isinstance(raw, QSqrt2) else None
    payload = {"model": model_ref, "surface": surface, "value": [value.real, value.imag], "exact": exact}
    return CommandResult(EXIT_PASS, payload, f"{model_ref} on {surface}: {_complex_str(value)}")


def cmd_solve(liquid_ref: str, dims: str, restarts: int = 20, seed: int = DEFAULT_SEED, target: float = 1e-8, out: str | None = None, allow_trivial: bool = False, max_iters: int = 200) -> CommandResult:
    from .solver import SolveConfig, solve

    liquid = resolve_liquid(liquid_ref)
    try:
        cfg = SolveConfig(max_iters=max_iters, residual_target=target, restarts=restarts, seed=seed, allow_trivial=allow_trivial)
        rep = solve(liquid, parse_dims(dims), cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    payload = {
        "liquid": liquid.name,
        "dims": dims,
        "seed": seed,
        "restarts": restarts,
        "target": target,
        "converged": sum(r.converged for r in rep.runs),
        "runs": [{"seed": r.seed, "residual": r.residual, "iterations": r.iterations, "converged": r.converged} for r in rep.runs],
        "roots": [r.to_json() for r in rep.roots],
    }
    if out:
        io.dump_json(payload, out)
    lines = [f"seed {seed}: {payload['converged']}/{restarts} runs reached residual <= {target:g}", f"{len(rep.roots)} distinct root(s)"]
    for r in rep.roots:
        fp = ", ".join(_complex_str(z) for z in r.fingerprint)
        lines.append(f"  run {r.seed}: residual {r.residual:.3e}, fingerprint (sphere, torus) = ({fp})")
        if sum(int(np.prod(s)) for _, s in r.params.layout) == 1:
            (t,) = [v.ravel()[0] for v in r.params.tensors().values()]
            lines.append(f"    t = {_complex_str(t)}")
    return CommandResult(EXIT_PASS if rep.roots else EXIT_FAIL, payload, "\n".join(lines))


def _reference_for(mapping: SubstrateMapping):
    """Known closed-form results of catalog mappings: element -> (expected tensor, policy)."""
    from . import mappings as mp

    proj = EqualityPolicy("projective", 1e-12)
    tol = EqualityPolicy("tolerance", 1e-12)
    if mapping.name == "extension":
        return {"Q": (mp.ising_projector(), tol)}
    if mapping.name == "cluster":
        return {"S": (mp.cluster_projector_slots(), tol)}
    if mapping.name == "kitaev_rhombus":
        return {"R": (np.transpose(mp.kitaev_projector_array(), (3, 2, 1, 0)), tol)}
    if mapping.name == "toric":
        pa, pb = mp.toric_projectors()
        return {"PA": (mp.operator_to_slots(pa), proj), "PB": (mp.operator_to_slots(pb), proj)}
    return {}


def cmd_map(action: str, mapping_ref: str, args: Sequence[str], out: str | None = None) -> CommandResult:
    from .tensors import equal

    mapping = resolve_mapping(mapping_ref)
    if action == "apply":
        if len(args) != 1:
            raise UsageError("map apply <mapping> <network.json>")
        try:
            n = io.network_from_json(io.load_json(args[0]), mapping.source)
            res = apply_mapping(mapping, n)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        payload = io.network_to_json(res)
        if out:
            io.dump_json(payload, out)
        return CommandResult(EXIT_PASS, payload, json.dumps(payload, indent=2))
    if action == "pullback":
        if len(args) != 1:
            raise UsageError("map pullback <mapping> <model>")
        target = resolve_model(args[0], mapping.target.name)
        try:
            pulled = pull_back_model(mapping, target)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        checks = []
        ok = True
        for el, (ref, pol) in _reference_for(mapping).items():
            cmp = equal(to_float(pulled.tensors[el]), ref, pol)
            ok &= cmp.equal
            checks.append({"element": el, "policy": pol.kind, "residual": cmp.residual, "lambda": None if cmp.lam is None else [cmp.lam.real, cmp.lam.imag], "pass": cmp.equal})
        payload = {"mapping": mapping.name, "model": io.model_to_json(pulled), "checks": checks, "pass": ok}
        if out:
            io.dump_json(payload["model"], out)
        lines = [f"pulled back {args[0]} along {mapping.name}:"]
        for el, t in pulled.tensors.items():
            nz = int(np.count_nonzero(np.abs(to_float(np.asarray(t))) > 1e-14))
            lines.append(f"  {el}: shape {tuple(np.asarray(t).shape)}, {nz} nonzero entries")
        for c in checks:
            lam = "" if c["lambda"] is None else f", lambda {_complex_str(complex(*c['lambda']))}"
            lines.append(f"  {c['element']} vs reference ({c['policy']}): residual {c['residual']:.3e}{lam} {'PASS' if c['pass'] else 'FAIL'}")
        return CommandResult(EXIT_PASS if ok else EXIT_FAIL, payload, "\n".join(lines))
    if action == "verify-moves":
        if len(args) != 2:
            raise UsageError("map verify-moves <mapping> <source-liquid> <target-model>")
        source = resolve_liquid(args[0])
        target = resolve_model(args[1], mapping.target.name)
        rep = verify_mapped_moves(mapping, source, target)
        return CommandResult(EXIT_PASS if rep.passed else EXIT_FAIL, rep.to_json(), rep.table())
    raise UsageError(f"unknown map action {action!r}")


def parse_orderings(text: str) -> dict[str, tuple[str, ...]]:
    """A JSON file path, or inline ``T=01,02,12;D=10,01``."""
    if "=" in text and not Path(text).exists():
        out: dict[str, tuple[str, ...]] = {}
        for part in text.split(";"):
            name, _, slots = part.partition("=")
            if not name.strip() or not slots.strip():
                raise UsageError(f"bad orderings entry {part!r}")
            out[name.strip()] = tuple(x.strip() for x in slots.split(","))
        return out
    try:
        with open(text, encoding="utf-8") as fh:
            return {k: tuple(v) for k, v in json.load(fh).items()}
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read orderings: {exc}") from exc


def cmd_signcheck(liquid_ref: str, orderings: str | None = None, trials: int = 20, seed: int = DEFAULT_SEED) -> CommandResult:
    from .signcheck import signcheck_liquid

    liquid = resolve_liquid(liquid_ref)
    ords = None
    if orderings:
        ords = parse_orderings(orderings)
    elif not liquid.metadata.get("orderings"):
        raise UsageError(f"liquid {liquid.name} has no fermionic orderings; pass --orderings")
    results = signcheck_liquid(liquid, ords, trials, seed)
    ok = all(r.passed for r in results)
    lines = []
    for r in results:
        lines.append(r.ledger.shorthand())
        n = r.numeric
        lines.append(f"  ledger {'empty' if r.ledger.cancels else 'NONEMPTY'}, schedule-independent {r.schedule_independent}, numeric {n.trials - n.failures}/{n.trials} -> {'PASS' if r.passed else 'FAIL'}")
    lines.append(f"overall: {'PASS' if ok else 'FAIL'}")
    payload = {"liquid": liquid.name, "moves": [r.to_json() for r in results], "pass": ok}
    return CommandResult(EXIT_PASS if ok else EXIT_FAIL, payload, "\n".join(lines))


def cmd_circuit(name: str) -> CommandResult:
    from .circuits import CIRCUIT_IDS, load_circuit

    if name not in CIRCUIT_IDS:
        raise UsageError(f"unknown circuit {name!r}; known: {', '.join(CIRCUIT_IDS)}")
    c = load_circuit(name)
    rep = c.check()
    lines = [f"circuit {name}: {c.source.name} -> {c.target.name}, {len(c.steps)} step(s), {len(c.probes)} probe(s)"]
    for k, final in enumerate(rep.finals):
        lines.append(f"  probe {k}: final network has {len(final.atoms)} atom(s)")
    if rep.message:
        lines.append(f"  {rep.message}")
    lines.append(f"exact: {rep.exact}")
    lines.append(f"overall: {'PASS' if rep.passed else 'FAIL'}")
    payload = {"circuit": name, "steps": [st.move.name for st in c.steps], "probes": len(c.probes), "exact": rep.exact, "message": rep.message, "pass": rep.passed}
    return CommandResult(EXIT_PASS if rep.passed else EXIT_FAIL, payload, "\n".join(lines))


def cmd_accept(numbers: Sequence[int]) -> CommandResult:
    from .acceptance import CRITERIA, run_criterion

    chosen = list(numbers) or sorted(CRITERIA)
    unknown = [k for k in chosen if k not in CRITERIA]
    if unknown:
        raise UsageError(f"no criterion {unknown[0]}; known: 1-{max(CRITERIA)}")
    results = [run_criterion(k) for k in chosen]
    lines = []
    for r in results:
        lines.append(r.line())
        lines.extend(f"    {d}" for d in r.details)
    ok = all(r.passed for r in results)
    payload = {"criteria": [r.to_json() for r in results], "pass": ok}
    return CommandResult(EXIT_PASS if ok else EXIT_FAIL, payload, "\n".join(lines))


def cmd_show(kind: str, ref: str | None) -> CommandResult:
    if ref == "list":
        ref = None
    if kind == "liquid":
        if ref is None:
            return CommandResult(EXIT_PASS, list(LIQUID_IDS), "\n".join(LIQUID_IDS))
        payload = io.liquid_to_json(resolve_liquid(ref))
    elif kind == "model":
        if ref is None:
            return CommandResult(EXIT_PASS, list(CATALOG), "\n".join(CATALOG))
        payload = io.model_to_json(resolve_model(ref))
    elif kind == "mapping":
        if ref is None:
            return CommandResult(EXIT_PASS, list(MAPPING_IDS), "\n".join(MAPPING_IDS))
        payload = io.mapping_to_json(resolve_mapping(ref))
    else:
        raise UsageError(f"unknown kind {kind!r}")
    return CommandResult(EXIT_PASS, payload, json.dumps(payload, indent=2, default=_json_default))


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit code 2 with usage, as argparse does, but catchable
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="liquidlab", description="Check, evaluate and search tensor-network models of liquids.")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    v = sub.add_parser("verify", help="check a model against every move of a liquid")
    v.add_argument("liquid")
    v.add_argument("model")
    v.add_argument("--policy", help="override every move's policy: exact | tolerance[:eps] | projective[:eps]")

    inv = sub.add_parser("invariant", help="evaluate a model on a closed surface")
    inv.add_argument("model")
    inv.add_argument("surface", help="sphere | torus | rp2 | klein")
    inv.add_argument("--placement", choices=("least", "greatest"), default="least", help="which corner of each vertex loop carries the weight")
    inv.add_argument("--flavor", help="substrate flavor of the model (e.g. orient2d)")

    s = sub.add_parser("solve", help="search models numerically")
    s.add_argument("liquid")
    s.add_argument("--dims", required=True, help="binding dimensions, e.g. e=2 or e=1+1 (graded)")
    s.add_argument("--restarts", type=int, default=20)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--target", type=float, default=1e-8)
    s.add_argument("--max-iters", type=int, default=200)
    s.add_argument("--out")
    s.add_argument("--allow-trivial", action="store_true")

    m = sub.add_parser("map", help="substrate mappings")
    m.add_argument("action", choices=("apply", "pullback", "verify-moves"))
    m.add_argument("mapping")
    m.add_argument("args", nargs="*")
    m.add_argument("--out")

    sc = sub.add_parser("signcheck", help="reordering-sign ledgers of a fermionic liquid")
    sc.add_argument("liquid")
    sc.add_argument("--orderings", help="JSON file (element -> slot ordering) or inline T=01,02,12;C=01,10")
    sc.add_argument("--trials", type=int, default=20)
    sc.add_argument("--seed", type=int, default=DEFAULT_SEED)

    c = sub.add_parser("circuit", help="replay a shipped circuit equivalence")
    c.add_argument("name", help="hadamard | product")

    a = sub.add_parser("accept", help="run numbered acceptance checks (all by default)")
    a.add_argument("numbers", nargs="*", type=int)

    for kind in ("liquid", "model", "mapping"):
        k = sub.add_parser(kind, help=f"inspect catalog {kind}s")
        k.add_argument("action", choices=("show",))
        k.add_argument("ref", nargs="?")
    return p


def _dispatch(ns: argparse.Namespace) -> CommandResult:
    if ns.command == "verify":
        return cmd_verify(ns.liquid, ns.model, ns.policy)
    if ns.command == "invariant":
        return cmd_invariant(ns.model, ns.surface, ns.placement, ns.flavor)
    if ns.command == "solve":
        return cmd_solve(ns.liquid, ns.dims, ns.restarts, ns.seed, ns.target, ns.out, ns.allow_trivial, ns.max_iters)
    if ns.command == "map":
        return cmd_map(ns.action, ns.mapping, ns.args, ns.out)
    if ns.command == "signcheck":
        return cmd_signcheck(ns.liquid, ns.orderings, ns.trials, ns.seed)
    if ns.command == "circuit":
        return cmd_circuit(ns.name)
    if ns.command == "accept":
        return cmd_accept(ns.numbers)
    if ns.command in ("liquid", "model", "mapping"):
        return cmd_show(ns.command, ns.ref)
    raise UsageError("missing command")


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    as_json = "--json" in argv
    argv = [a for a in argv if a != "--json"]
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        result = _dispatch(ns)
    except UsageError as exc:
        stderr.write(f"liquidlab: {exc}\n")
        if as_json:
            stdout.write(json.dumps({"error": str(exc), "exit": EXIT_USAGE}) + "\n")
        return EXIT_USAGE
    except (NetworkError, EvaluationError) as exc:
        stderr.write(f"liquidlab: {exc}\n")
        return EXIT_FAIL
    result.emit(as_json, stdout)
    return result.code


def main(argv: Sequence[str] | None = None) -> int:
    return run(argv)


if __name__ == "__main__":
    raise SystemExit(main())
