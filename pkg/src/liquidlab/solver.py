"""Numerical search for models: Levenberg-Marquardt on the move residuals."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .checker import Liquid, check_model
from .liquids import liquid_with_policy
from .substrate import Atom, Bond, Element, EqualityPolicy, Network, is_open, open_end
from .tensors import GradedDim, Model, as_graded, dim_total, evaluate_network, to_float


@dataclass(frozen=True)
class ParamVector:
    """Real coordinates of all free tensors: per element, real parts then imaginary parts.

    ``mask[element]`` marks entries that are free; masked-out entries are held
    at ``fixed[element]`` (zero by default).
    """

    values: np.ndarray
    dims: Mapping[str, int | GradedDim]
    layout: tuple[tuple[str, tuple[int, ...]], ...]
    complex_entries: bool = True
    mask: Mapping[str, np.ndarray] = field(default_factory=dict)
    fixed: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.values) != self.size_for(self.layout, self.mask, self.complex_entries):
            raise ValueError("parameter vector length does not match the layout")

    @staticmethod
    def size_for(layout, mask, complex_entries: bool) -> int:
        per = sum(int(np.count_nonzero(mask[el])) if el in mask else int(np.prod(shape)) for el, shape in layout)
        return per * (2 if complex_entries else 1)

    def free_indices(self, element: str, shape: tuple[int, ...]) -> np.ndarray:
        if element in self.mask:
            return np.flatnonzero(np.asarray(self.mask[element]).ravel())
        return np.arange(int(np.prod(shape)))

    def tensors(self) -> dict[str, np.ndarray]:
        out = {}
        pos = 0
        for el, shape in self.layout:
            free = self.free_indices(el, shape)
            k = len(free)
            base = np.array(self.fixed.get(el, np.zeros(shape)), dtype=complex).ravel().copy()
            vals = self.values[pos : pos + k].astype(complex)
            pos += k
            if self.complex_entries:
                vals = vals + 1j * self.values[pos : pos + k]
                pos += k
            base[free] = vals
            out[el] = base.reshape(shape)
        return out

    def with_values(self, values: np.ndarray) -> "ParamVector":
        return replace(self, values=np.asarray(values, dtype=float))

    def to_json(self) -> dict:
        return {
            "values": [float(v) for v in self.values],
            "layout": [[el, list(shape)] for el, shape in self.layout],
            "complex": self.complex_entries,
            "tensors": {k: [[float(z.real), float(z.imag)] for z in v.ravel()] for k, v in self.tensors().items()},
        }


@dataclass(frozen=True)
class SolveConfig:
    max_iters: int = 200
    residual_target: float = 1e-8
    damping: float = 1e-3
    damping_decay: float = 0.3
    damping_growth: float = 10.0
    restarts: int = 20
    seed: int = 0
    allow_trivial: bool = False
    complex_entries: bool = True
    threads: int | None = None

    def __post_init__(self) -> None:
        if self.max_iters <= 0 or self.restarts <= 0 or self.damping <= 0 or not (0 < self.damping_decay < 1) or self.damping_growth <= 1:
            raise ValueError("solver settings must be positive (decay in (0, 1), growth > 1)")
        if self.residual_target < 0:
            raise ValueError("residual target must be non-negative")


def free_elements(l: Liquid) -> list[str]:
    used = {a.element for m in l.moves for side in (m.lhs, m.rhs) for a in side.atoms}
    return [e.name for e in l.substrate.elements if e.name in used]


def param_layout(l: Liquid, dims: Mapping[str, int | GradedDim]) -> tuple[tuple[str, tuple[int, ...]], ...]:
    out = []
    for name in free_elements(l):
        el = l.substrate.element(name)
        out.append((name, tuple(dim_total(dims[s.binding]) for s in el.slots)))
    return tuple(out)


def parity_masks(l: Liquid, dims: Mapping[str, int | GradedDim]) -> dict[str, np.ndarray]:
    """Even-parity support of every free element (graded-array formulation)."""
    masks = {}
    for name, shape in param_layout(l, dims):
        el = l.substrate.element(name)
        par = np.zeros(shape, dtype=np.int64)
        for ax, s in enumerate(el.slots):
            p = as_graded(dims[s.binding]).parity()
            par = par + p.reshape([-1 if k == ax else 1 for k in range(len(shape))])
        masks[name] = par % 2 == 0
    return masks


def is_graded(dims: Mapping[str, int | GradedDim]) -> bool:
    return any(isinstance(d, GradedDim) and d.odd for d in dims.values())


def make_params(l: Liquid, dims: Mapping[str, int | GradedDim], values: np.ndarray | None = None, complex_entries: bool = True, rng: np.random.Generator | None = None) -> ParamVector:
    layout = param_layout(l, dims)
    mask = parity_masks(l, dims) if is_graded(dims) else {}
    n = ParamVector.size_for(layout, mask, complex_entries)
    if values is None:
        rng = rng or np.random.default_rng(0)
        values = rng.uniform(-1.0, 1.0, n)
    return ParamVector(np.asarray(values, dtype=float), dict(dims), layout, complex_entries, mask)


def params_from_model(l: Liquid, m: Model, complex_entries: bool = True) -> ParamVector:
    layout = param_layout(l, m.dims)
    mask = parity_masks(l, m.dims) if is_graded(m.dims) else {}
    chunks = []
    for el, shape in layout:
        t = to_float(np.asarray(m.tensors[el])).ravel()
        free = np.flatnonzero(np.asarray(mask[el]).ravel()) if el in mask else np.arange(t.size)
        chunks.append(t.real[free])
        if complex_entries:
            chunks.append(t.imag[free])
    return ParamVector(np.concatenate(chunks) if chunks else np.zeros(0), dict(m.dims), layout, complex_entries, mask)


def model_from_params(l: Liquid, p: ParamVector) -> Model:
    """Plain (graded-array when dims are graded) model for the parameters."""
    return Model(l.substrate, dict(p.dims), p.tensors(), "complex", name=f"{l.name}-solution")


# ---------------------------------------------------------------------------
# Residuals and the multilinear Jacobian
# ---------------------------------------------------------------------------


def _aligned_rhs(mv) -> Network:
    return mv.rhs.with_order([mv.corr[x] for x in mv.lhs.open_order])


def _environment(model: Model, n: Network, atom_id: int) -> np.ndarray:
    """Network value with one atom cut out; its slots become trailing open axes."""
    atom = n.atom(atom_id)
    el = n.substrate.element(atom.element)
    labels = {s: f"__env.{atom_id}.{s}" for s in el.slot_names}
    bonds = []
    for b in n.bonds:
        touches = [not is_open(e) and e[1] == atom_id for e in b.ends]
        if not any(touches):
            bonds.append(Bond(b.ends, None, b.binding))
            continue
        ends = tuple(open_end(labels[e[2]]) if t else e for e, t in zip(b.ends, touches))
        binding = None
        if is_open(ends[0]) and is_open(ends[1]):
            binding = el.slot(b.ends[0][2] if touches[0] else b.ends[1][2]).binding
        bonds.append(Bond(ends, None, binding))
    atoms = tuple(a for a in n.atoms if a.id != atom_id)
    order = tuple(n.open_order) + tuple(labels[s] for s in el.slot_names)
    cut = Network(n.substrate, atoms, tuple(bonds), order, False)
    return to_float(evaluate_network(model, cut))


def _side_value_and_derivative(model: Model, n: Network, p: ParamVector, offsets: Mapping[str, tuple[int, np.ndarray]]) -> tuple[np.ndarray, np.ndarray]:
    """Flattened value and d(value)/d(real params) as a complex matrix."""
    val = to_float(evaluate_network(model, n)).ravel()
    jac = np.zeros((val.size, len(p.values)), dtype=complex)
    for a in n.atoms:
        if a.element not in offsets:
            continue
        start, free = offsets[a.element]
        env = _environment(model, n, a.id).reshape(val.size, -1)[:, free]
        k = len(free)
        jac[:, start : start + k] += env
        if p.complex_entries:
            jac[:, start + k : start + 2 * k] += (-1j if a.conjugated else 1j) * env
    return val, jac


def _replacement_derivative(model: Model, n: Network, p: ParamVector, offsets: Mapping[str, tuple[int, np.ndarray]]) -> tuple[np.ndarray, np.ndarray]:
    """Same as the environment route, by replacing one atom at a time with a basis tensor.

    Works for every semantics, including fermionic ones.
    """
    val = to_float(evaluate_network(model, n)).ravel()
    jac = np.zeros((val.size, len(p.values)), dtype=complex)
    for a in n.atoms:
        if a.element not in offsets:
            continue
        start, free = offsets[a.element]
        el = n.substrate.element(a.element)
        probe_name = f"{a.element}__probe"
        sub = n.substrate.extended(elements=[Element(probe_name, el.slots)])
        atoms = tuple(Atom(x.id, probe_name if x.id == a.id else x.element, x.conjugated) for x in n.atoms)
        probe_net = Network(sub, atoms, n.bonds, n.open_order, n.directed)
        shape = tuple(dim_total(model.dims[s.binding]) for s in el.slots)
        orderings = dict(model.orderings)
        if a.element in orderings:
            orderings[probe_name] = orderings[a.element]
        k = len(free)
        for j, flat in enumerate(free):
            basis = np.zeros(int(np.prod(shape)), dtype=complex)
            basis[flat] = 1.0
            tensors = dict(model.tensors)
            tensors[probe_name] = basis.reshape(shape)
            m2 = Model(sub, model.dims, tensors, model.semantics, orderings)
            d = to_float(evaluate_network(m2, probe_net)).ravel()
            jac[:, start + j] += d
            if p.complex_entries:
                jac[:, start + k + j] += (-1j if a.conjugated else 1j) * d
    return val, jac


def _offsets(p: ParamVector) -> dict[str, tuple[int, np.ndarray]]:
    out = {}
    pos = 0
    for el, shape in p.layout:
        free = p.free_indices(el, shape)
        out[el] = (pos, free)
        pos += len(free) * (2 if p.complex_entries else 1)
    return out


def _projective(L: np.ndarray, R: np.ndarray, dL: np.ndarray | None, dR: np.ndarray | None):
    rr = float(np.vdot(R, R).real)
    if rr < 1e-300:
        return L.copy(), (dL.copy() if dL is not None else None)
    lam = np.vdot(R, L) / rr
    r = L - lam * R
    if dL is None:
        return r, None
    # d<R,L> = conj(dR)^T L + R^H dL ; d<R,R> = 2 Re(R^H dR)
    d_rl = dR.conj().T @ L + R.conj() @ dL
    d_rr = 2.0 * (R.conj() @ dR).real
    dlam = d_rl / rr - lam * d_rr / rr
    return r, dL - np.outer(R, dlam) - lam * dR


def _move_rows(model: Model, mv, p: ParamVector | None, offsets, with_jac: bool, fermionic: bool):
    lhs, rhs = mv.lhs, _aligned_rhs(mv)
    if with_jac:
        deriv = _replacement_derivative if fermionic else _side_value_and_derivative
        L, dL = deriv(model, lhs, p, offsets)
        R, dR = deriv(model, rhs, p, offsets)
    else:
        L, R = to_float(evaluate_network(model, lhs)).ravel(), to_float(evaluate_network(model, rhs)).ravel()
        dL = dR = None
    if mv.policy.kind == "projective":
        return _projective(L, R, dL, dR)
    return L - R, (dL - dR) if with_jac else None


def _model_for(l: Liquid, p: ParamVector, semantics: str | None) -> tuple[Model, bool]:
    m = model_from_params(l, p)
    if semantics and semantics.startswith("fermionic"):
        orderings = dict(l.metadata.get("orderings", {}))
        return m.replace(semantics=semantics, orderings=orderings), True
    return m, False


def residuals(l: Liquid, p: ParamVector, semantics: str | None = None) -> np.ndarray:
    """Real residual vector: per move, real parts then imaginary parts of vec(lhs - rhs).

    Projective moves use vec(lhs - lam*rhs) with the least-squares lam.
    ``semantics`` may request plain fermionic evaluation; by default graded
    dims are solved in the graded-array formulation.
    """
    m, _ = _model_for(l, p, semantics)
    parts = []
    for mv in l.moves:
        r, _ = _move_rows(m, mv, p, None, False, False)
        parts += [r.real, r.imag]
    return np.concatenate(parts) if parts else np.zeros(0)


def jacobian(l: Liquid, p: ParamVector, semantics: str | None = None) -> np.ndarray:
    """Exact Jacobian of :func:`residuals` with respect to the real parameters."""
    m, fermionic = _model_for(l, p, semantics)
    offs = _offsets(p)
    rows = []
    for mv in l.moves:
        _r, d = _move_rows(m, mv, p, offs, True, fermionic)
        rows += [d.real, d.imag]
    return np.vstack(rows) if rows else np.zeros((0, len(p.values)))


def residuals_and_jacobian(l: Liquid, p: ParamVector, semantics: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    m, fermionic = _model_for(l, p, semantics)
    offs = _offsets(p)
    rs, js = [], []
    for mv in l.moves:
        r, d = _move_rows(m, mv, p, offs, True, fermionic)
        rs += [r.real, r.imag]
        js += [d.real, d.imag]
    if not rs:
        return np.zeros(0), np.zeros((0, len(p.values)))
    return np.concatenate(rs), np.vstack(js)


def finite_difference_jacobian(l: Liquid, p: ParamVector, h: float = 1e-6, semantics: str | None = None) -> np.ndarray:
    cols = []
    for k in range(len(p.values)):
        up = p.values.copy()
        dn = p.values.copy()
        up[k] += h
        dn[k] -= h
        cols.append((residuals(l, p.with_values(up), semantics) - residuals(l, p.with_values(dn), semantics)) / (2 * h))
    return np.array(cols).T if cols else np.zeros((0, 0))


# ---------------------------------------------------------------------------
# Levenberg-Marquardt with restarts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunResult:
    seed: int
    params: ParamVector
    residual: float  # max-abs entry of the residual vector
    iterations: int
    converged: bool


def _deflated(r: np.ndarray, J: np.ndarray | None, x: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
    """Scale by ``1 + 1/|x|^2`` so the zero model stops attracting iterates."""
    n2 = float(x @ x)
    if n2 == 0.0:
        return np.full_like(r, np.inf), J
    m = 1.0 + 1.0 / n2
    if J is None:
        return m * r, None
    return m * r, m * J + np.outer(r, -2.0 * x / n2**2)


def levenberg_marquardt(l: Liquid, p: ParamVector, cfg: SolveConfig, seed: int = 0) -> RunResult:
    """Damped Gauss-Newton on the move residuals.

    Unless ``cfg.allow_trivial`` is set the residual is deflated at the zero
    model; convergence is always judged on the undeflated residual.
    """
    deflate = not cfg.allow_trivial

    def objective(x: np.ndarray, with_jac: bool):
        q = p.with_values(x)
        if with_jac:
            r, J = residuals_and_jacobian(l, q)
        else:
            r, J = residuals(l, q), None
        d, dJ = _deflated(r, J, x) if deflate else (r, J)
        return r, d, dJ

    x = p.values.copy()
    r, d, J = objective(x, True)
    cost = float(d @ d)
    mu = cfg.damping
    it = 0
    stop = cfg.residual_target * 1e-2
    for it in range(1, cfg.max_iters + 1):
        if not np.all(np.isfinite(d)) or not r.size or np.max(np.abs(r)) <= stop:
            break
        JtJ = J.T @ J
        g = J.T @ d
        improved = False
        for _ in range(30):
            A = JtJ + mu * (np.diag(np.diag(JtJ)) + np.eye(len(x)))
            try:
                step = np.linalg.solve(A, -g)
            except np.linalg.LinAlgError:
                mu *= cfg.damping_growth
                continue
            xn = x + step
            _, dn, _ = objective(xn, False)
            cn = float(dn @ dn)
            if np.isfinite(cn) and cn < cost:
                x, cost = xn, cn
                mu = max(mu * cfg.damping_decay, 1e-15)
                improved = True
                break
            mu *= cfg.damping_growth
        if not improved:
            break
        r, d, J = objective(x, True)
    res = float(np.max(np.abs(r))) if r.size else 0.0
    return RunResult(seed, p.with_values(x), res, it, res <= cfg.residual_target)


# ---------------------------------------------------------------------------
# Fingerprints and deduplication
# ---------------------------------------------------------------------------

_SURFACE_FLAVOR = {
    "toy2d": "toy2d",
    "branch2d": "branch2d",
    "orient2d": "orient2d",
    "orient2d-hermitian": "orient2d",
    "orient2d-invertible": "orient2d",
    "orient2d-weighted": "orient2d-weighted",
}


def fingerprint(l: Liquid, p: ParamVector) -> tuple[complex, ...]:
    """Closed-surface evaluations (sphere, torus) when the liquid has surface builds.

    Other liquids fall back to tensor norms, which are invariant under
    unitary basis changes only.
    """
    from .geometry import build_surface, GeometryError

    m = model_from_params(l, p)
    flavor = _SURFACE_FLAVOR.get(l.name)
    if flavor is not None:
        kind = {"toy2d": "unoriented", "branch2d": "unoriented", "orient2d": "oriented", "orient2d-weighted": "weighted"}[flavor]
        out = []
        for surf in ("sphere", "torus"):
            try:
                s = build_surface(surf, kind, flavor)
            except GeometryError:
                continue
            net = s.network
            if net.substrate.name != l.substrate.name:
                net = Network(l.substrate, net.atoms, net.bonds, net.open_order, net.directed)
            out.append(complex(to_float(evaluate_network(m, net)).reshape(())))
        return tuple(out)
    return tuple(complex(np.linalg.norm(t)) for t in p.tensors().values())


def _same_fingerprint(a: Sequence[complex], b: Sequence[complex], tol: float = 1e-6) -> bool:
    return len(a) == len(b) and all(abs(x - y) <= tol for x, y in zip(a, b))


@dataclass(frozen=True)
class Root:
    params: ParamVector
    residual: float
    seed: int
    fingerprint: tuple[complex, ...]

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "residual": self.residual,
            "fingerprint": [[z.real, z.imag] for z in self.fingerprint],
            "params": self.params.to_json(),
        }


@dataclass(frozen=True)
class SolveReport:
    runs: tuple[RunResult, ...]
    roots: tuple[Root, ...]

    @property
    def converged_fraction(self) -> float:
        return sum(r.converged for r in self.runs) / len(self.runs) if self.runs else 0.0


def _threads(cfg: SolveConfig) -> int:
    if cfg.threads:
        return cfg.threads
    try:
        return max(1, int(os.environ.get("LIQUIDLAB_THREADS", "4")))
    except ValueError:
        return 1


def solve(l: Liquid, dims: Mapping[str, int | GradedDim], cfg: SolveConfig = SolveConfig()) -> SolveReport:
    """Random restarts of Levenberg-Marquardt; roots deduplicated by fingerprint.

    Runs are seeded ``(cfg.seed, k)`` for restart ``k`` and merged in that
    order, so results do not depend on scheduling.  A root is kept when its
    residual is at most the target, it is not trivial (sphere fingerprint
    below 1e-3) unless allowed, and the model passes every move at ten times
    the target.
    """
    missing = [b.name for b in l.substrate.bindings if b.name not in dims]
    if missing:
        raise ValueError(f"missing dimensions for bindings: {', '.join(missing)}")

    def run(k: int) -> RunResult:
        rng = np.random.default_rng([cfg.seed, k])
        p0 = make_params(l, dims, complex_entries=cfg.complex_entries, rng=rng)
        return levenberg_marquardt(l, p0, cfg, k)

    with ThreadPoolExecutor(max_workers=_threads(cfg)) as pool:
        runs = list(pool.map(run, range(cfg.restarts)))
    roots: list[Root] = []
    for r in runs:
        if not (r.residual <= cfg.residual_target):
            continue
        fp = fingerprint(l, r.params)
        if not cfg.allow_trivial and (not fp or abs(fp[0]) < 1e-3):
            continue
        if any(_same_fingerprint(fp, q.fingerprint) for q in roots):
            continue
        eps = max(10 * cfg.residual_target, 1e-14)
        loose = liquid_with_policy(l, {mv.name: EqualityPolicy("tolerance" if mv.policy.kind == "exact" else mv.policy.kind, eps) for mv in l.moves})
        if check_model(loose, model_from_params(l, r.params), include_derived=False).passed:
            roots.append(Root(r.params, r.residual, r.seed, fp))
    return SolveReport(tuple(runs), tuple(roots))
