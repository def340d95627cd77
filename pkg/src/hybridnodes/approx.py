"""Differentiation weights on node stencils.

Regular nodes with intact axis neighborhoods use monomial collocation
(MON): 2d+1 basis functions {1, x_a, x_a^2} without mixed terms on the
symmetric 2d+1 point stencil.  Everything else uses RBF-FD: cubic
polyharmonic splines centred at the stencil nodes, augmented with all
monomials up to degree 2, solved as a saddle-point system.

Stencil coordinates are shifted to the center and scaled by the stencil
radius before assembly, so condition numbers stay O(1) as h shrinks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import SingularSystemError
from .nodegen import KIND_REGULAR, NodeSet

MON_SIZE = {2: 5, 3: 7}  # 2d + 1
RBF_SIZE = {2: 12, 3: 30}  # paired PHS/monomial setup, m = 2
POLY_COUNT = {2: 6, 3: 10}  # monomials of total degree <= 2

METHOD_MON = 0
METHOD_RBFFD = 1
METHOD_NONE = -1

_CHUNK = 4096


@dataclass(frozen=True)
class Laplacian:
    order: int = 2


@dataclass(frozen=True)
class Partial:
    axis: int
    order: int = 1


@dataclass(frozen=True)
class NormalDerivative:
    normal: tuple
    order: int = 1


OperatorKind = Laplacian | Partial | NormalDerivative


@dataclass(frozen=True)
class StencilSpec:
    center: int
    neighbors: np.ndarray  # center included, ordered by distance (ties: node index)
    method: str  # "mon" | "rbffd"


@dataclass
class WeightRow:
    neighbors: np.ndarray  # storage order: ascending node index
    weights: dict
    kappa: float


def _monomial_exponents(dim: int) -> list[tuple[int, ...]]:
    """Exponent tuples of all monomials with total degree <= 2, fixed order."""
    exps = [(0,) * dim]
    for deg in (1, 2):
        for combo in itertools.combinations_with_replacement(range(dim), deg):
            e = [0] * dim
            for a in combo:
                e[a] += 1
            exps.append(tuple(e))
    return exps


def _poly_rhs(exps, op, dim: int) -> np.ndarray:
    """Value of (op p)(0) for each monomial p."""
    rhs = np.zeros(len(exps))
    for j, e in enumerate(exps):
        if isinstance(op, Laplacian):
            for a in range(dim):
                if e[a] == 2 and sum(e) == 2:
                    rhs[j] += 2.0
        elif isinstance(op, Partial):
            if sum(e) == 1 and e[op.axis] == 1:
                rhs[j] = 1.0
        elif isinstance(op, NormalDerivative):
            if sum(e) == 1:
                rhs[j] = op.normal[e.index(1)]
        else:
            raise TypeError(f"unknown operator kind {op!r}")
    return rhs


def condition_number(matrix: np.ndarray) -> float:
    """Spectral condition number sigma_max / sigma_min (+inf when singular)."""
    s = np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)
    if s[-1] == 0.0:
        return float("inf")
    return float(s[0] / s[-1])


def _axis_neighbor_keys(key: np.ndarray, dim: int) -> np.ndarray:
    """The 2d lattice keys adjacent to `key` along the axes."""
    offsets = np.concatenate([np.eye(dim, dtype=np.int64), -np.eye(dim, dtype=np.int64)])
    return key[None, :] + offsets


def select_method(index: int, nodeset: NodeSet, tree: cKDTree | None = None) -> str:
    """MON for regular nodes whose 2d axis neighbors all exist; else RBF-FD."""
    if nodeset.kind[index] != KIND_REGULAR:
        return "rbffd"
    dim = nodeset.dim
    lattice = nodeset.lattice
    if lattice is not None and nodeset.lattice_idx is not None:
        key = nodeset.lattice_idx[index]
        if key[0] != NodeSet.LATTICE_NONE:
            return "mon" if np.all(lattice.occupied(_axis_neighbor_keys(key, dim)) >= 0) else "rbffd"
    if tree is None:
        tree = cKDTree(nodeset.positions)
    h = nodeset.spacing[index]
    pos = nodeset.positions[index]
    probes = np.concatenate([pos + h * np.eye(dim), pos - h * np.eye(dim)])
    d, _ = tree.query(probes, k=1)
    return "mon" if np.all(d < 1e-9 * h) else "rbffd"


def _knn_sorted(tree: cKDTree, nodeset: NodeSet, pts: np.ndarray, n: int) -> np.ndarray:
    """n nearest node indices per point, ties broken by ascending node index."""
    total = len(nodeset)
    if n > total:
        raise ValueError(f"stencil size {n} exceeds node count {total}")
    k = min(total, n + 8)
    while True:
        d, idx = tree.query(pts, k=k)
        # A tie crossing the cutoff needs a wider query to see every partner.
        if k == total or np.all(d[:, -1] > d[:, n - 1] * (1 + 1e-12)):
            break
        k = min(total, 2 * k)
    order = np.lexsort((idx, d), axis=1)
    return np.take_along_axis(idx, order, axis=1)[:, :n]


def find_stencil(center: int, nodeset: NodeSet, n: int, tree: cKDTree | None = None) -> StencilSpec:
    """The n nearest nodes (center included), via a spatial index."""
    if tree is None:
        tree = cKDTree(nodeset.positions)
    idx = _knn_sorted(tree, nodeset, nodeset.positions[center][None, :], n)[0]
    method = "mon" if n == MON_SIZE[nodeset.dim] and nodeset.kind[center] == KIND_REGULAR else "rbffd"
    return StencilSpec(center, idx, method)


def _mon_system(local: np.ndarray) -> np.ndarray:
    """Collocation matrix M_ji = p_j(y_i) for the 2d+1 monomial basis."""
    k, n, dim = local.shape
    m = np.empty((k, n, n))
    m[:, 0, :] = 1.0
    for a in range(dim):
        m[:, 1 + a, :] = local[:, :, a]
        m[:, 1 + dim + a, :] = local[:, :, a] ** 2
    return m


def _mon_rhs(op, dim: int) -> np.ndarray:
    rhs = np.zeros(2 * dim + 1)
    if isinstance(op, Laplacian):
        rhs[1 + dim:] = 2.0
    elif isinstance(op, Partial):
        rhs[1 + op.axis] = 1.0
    elif isinstance(op, NormalDerivative):
        rhs[1:1 + dim] = np.asarray(op.normal, dtype=float)
    else:
        raise TypeError(f"unknown operator kind {op!r}")
    return rhs


def _phs_matrix(local: np.ndarray) -> np.ndarray:
    """phi(|y_i - y_j|) with phi(r) = r^3."""
    diff = local[:, :, None, :] - local[:, None, :, :]
    r = np.sqrt(np.sum(diff * diff, axis=-1))
    return r**3


def _poly_matrix(local: np.ndarray, exps) -> np.ndarray:
    k, n, dim = local.shape
    p = np.ones((k, n, len(exps)))
    for j, e in enumerate(exps):
        for a in range(dim):
            if e[a]:
                p[:, :, j] *= local[:, :, a] ** e[a]
    return p


def _phs_rhs(local: np.ndarray, op, dim: int) -> np.ndarray:
    """(op phi(. - y_j))(0) for each stencil node j; phi(r) = r^3."""
    r = np.linalg.norm(local, axis=-1)
    if isinstance(op, Laplacian):
        return 3.0 * (dim + 1) * r
    if isinstance(op, Partial):
        return -3.0 * r * local[:, :, op.axis]
    if isinstance(op, NormalDerivative):
        nrm = np.asarray(op.normal, dtype=float)
        return -3.0 * r * (local @ nrm)
    raise TypeError(f"unknown operator kind {op!r}")


def _batched_mon_weights(positions: np.ndarray, stencils: np.ndarray, ops,
                         with_kappa: bool) -> tuple[np.ndarray, np.ndarray | None]:
    """Solve all MON collocation systems at once; returns (K, n, n_ops) weights."""
    pts = positions[stencils]  # (K, n, d)
    center = pts[:, 0, :]
    rel = pts - center[:, None, :]
    scale = np.max(np.linalg.norm(rel, axis=-1), axis=1)
    local = rel / scale[:, None, None]
    dim = positions.shape[1]
    m = _mon_system(local)
    rhs = np.stack([_mon_rhs(op, dim) for op in ops], axis=-1)  # broadcast over K
    try:
        w = np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"singular MON system: {exc}") from exc
    for j, op in enumerate(ops):
        w[:, :, j] /= scale[:, None] ** op.order
    kappa = None
    if with_kappa:
        s = np.linalg.svd(m, compute_uv=False)
        with np.errstate(divide="ignore"):
            kappa = np.where(s[:, -1] > 0, s[:, 0] / s[:, -1], np.inf)
    return w, kappa


def _batched_rbf_weights(positions: np.ndarray, stencils: np.ndarray, ops,
                         with_kappa: bool, normals: np.ndarray | None = None
                         ) -> tuple[np.ndarray, np.ndarray | None]:
    """Solve all RBF-FD saddle systems at once; returns (K, n, n_ops) weights.

    With `normals` given, ops are ignored and each row gets a single
    NormalDerivative operator built from its own normal vector.
    """
    pts = positions[stencils]
    k, n, dim = pts.shape
    center = pts[:, 0, :]
    rel = pts - center[:, None, :]
    scale = np.max(np.linalg.norm(rel, axis=-1), axis=1)
    local = rel / scale[:, None, None]
    exps = _monomial_exponents(dim)
    q = len(exps)
    size = n + q
    sys = np.zeros((k, size, size))
    sys[:, :n, :n] = _phs_matrix(local)
    p = _poly_matrix(local, exps)
    sys[:, :n, n:] = p
    sys[:, n:, :n] = np.transpose(p, (0, 2, 1))

    if normals is not None:
        n_ops = 1
        rhs = np.zeros((k, size, 1))
        r = np.linalg.norm(local, axis=-1)
        dots = np.einsum("knd,kd->kn", local, normals)
        rhs[:, :n, 0] = -3.0 * r * dots
        lin = np.array([e.index(1) if sum(e) == 1 else -1 for e in exps])
        for j, axis in enumerate(lin):
            if axis >= 0:
                rhs[:, n + j, 0] = normals[:, axis]
        orders = [1]
    else:
        n_ops = len(ops)
        rhs = np.zeros((k, size, n_ops))
        for j, op in enumerate(ops):
            rhs[:, :n, j] = _phs_rhs(local, op, dim)
            rhs[:, n:, j] = _poly_rhs(exps, op, dim)
        orders = [op.order for op in ops]
    try:
        sol = np.linalg.solve(sys, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"singular RBF-FD saddle system: {exc}") from exc
    w = sol[:, :n, :]
    for j, order in enumerate(orders):
        w[:, :, j] /= scale[:, None] ** order
    kappa = None
    if with_kappa:
        s = np.linalg.svd(sys, compute_uv=False)
        with np.errstate(divide="ignore"):
            kappa = np.where(s[:, -1] > 0, s[:, 0] / s[:, -1], np.inf)
    return w, kappa


def mon_weights(stencil: StencilSpec, positions: np.ndarray, op: OperatorKind) -> WeightRow:
    """Monomial collocation weights for one stencil and one operator."""
    w, kappa = _batched_mon_weights(positions, stencil.neighbors[None, :], [op], True)
    if not np.isfinite(kappa[0]):
        raise SingularSystemError("singular MON system (duplicate nodes?)", float(kappa[0]))
    order = np.argsort(stencil.neighbors)
    return WeightRow(stencil.neighbors[order], {op: w[0, order, 0]}, float(kappa[0]))


def rbf_fd_weights(stencil: StencilSpec, positions: np.ndarray, op: OperatorKind) -> WeightRow:
    """PHS + monomial RBF-FD weights for one stencil and one operator."""
    w, kappa = _batched_rbf_weights(positions, stencil.neighbors[None, :], [op], True)
    if not np.isfinite(kappa[0]):
        raise SingularSystemError("singular RBF-FD system (duplicate nodes?)", float(kappa[0]))
    order = np.argsort(stencil.neighbors)
    return WeightRow(stencil.neighbors[order], {op: w[0, order, 0]}, float(kappa[0]))


@dataclass
class WeightTable:
    """Per-node stencil indices and weights for a fixed list of operators.

    Rows are stored sorted by neighbor node index; `sizes` gives the stencil
    size per node (0 where no weights were computed, e.g. boundary rows).
    """

    indices: np.ndarray  # (N, n_max), -1 padding
    sizes: np.ndarray  # (N,)
    weights: dict  # op -> (N, n_max)
    method: np.ndarray  # (N,) METHOD_*
    kappa: np.ndarray | None = None

    def row(self, i: int) -> WeightRow:
        m = self.sizes[i]
        w = {op: tab[i, :m].copy() for op, tab in self.weights.items()}
        return WeightRow(self.indices[i, :m].copy(), w,
                         float(self.kappa[i]) if self.kappa is not None else float("nan"))


def classify_methods(nodeset: NodeSet, tree: cKDTree | None = None) -> np.ndarray:
    """METHOD_MON / METHOD_RBFFD per interior node, METHOD_NONE on boundary."""
    n = len(nodeset)
    dim = nodeset.dim
    method = np.full(n, METHOD_NONE, dtype=np.int8)
    interior = nodeset.interior_mask
    method[interior] = METHOD_RBFFD
    regular = np.nonzero(nodeset.kind == KIND_REGULAR)[0]
    if not len(regular):
        return method
    if nodeset.lattice is not None and nodeset.lattice_idx is not None:
        keys = nodeset.lattice_idx[regular]
        on = keys[:, 0] != NodeSet.LATTICE_NONE
        sub = keys[on]
        ok = np.ones(len(sub), dtype=bool)
        offsets = np.concatenate([np.eye(dim, dtype=np.int64), -np.eye(dim, dtype=np.int64)])
        for off in offsets:
            ok &= nodeset.lattice.occupied(sub + off) >= 0
        method[regular[on][ok]] = METHOD_MON
        return method
    if tree is None:
        tree = cKDTree(nodeset.positions)
    for i in regular:
        if select_method(int(i), nodeset, tree) == "mon":
            method[i] = METHOD_MON
    return method


def _mon_stencils(nodeset: NodeSet, rows: np.ndarray, tree: cKDTree) -> np.ndarray:
    """MON axis stencils: center plus the 2d lattice neighbors.

    Built from the lattice map when available; a blind nearest-neighbor query
    could pick up seam scattered nodes sitting closer than the axis spacing.
    """
    dim = nodeset.dim
    size = MON_SIZE[dim]
    if nodeset.lattice is None or nodeset.lattice_idx is None:
        return _knn_sorted(tree, nodeset, nodeset.positions[rows], size)
    lattice = nodeset.lattice
    offsets = np.concatenate([np.eye(dim, dtype=np.int64), -np.eye(dim, dtype=np.int64)])
    keys = nodeset.lattice_idx[rows]
    nbrs = np.stack([lattice.occupied(keys + off) for off in offsets], axis=1)  # (K, 2d)
    d = np.linalg.norm(nodeset.positions[nbrs] - nodeset.positions[rows][:, None, :], axis=-1)
    order = np.lexsort((nbrs, d), axis=1)
    return np.concatenate([rows[:, None], np.take_along_axis(nbrs, order, axis=1)], axis=1)


def compute_weights(nodeset: NodeSet, ops, with_kappa: bool = False,
                    tree: cKDTree | None = None) -> WeightTable:
    """Stencils and weights for every interior node, batched per method."""
    ops = list(ops)
    n = len(nodeset)
    dim = nodeset.dim
    if tree is None:
        tree = cKDTree(nodeset.positions)
    method = classify_methods(nodeset, tree)
    n_max = RBF_SIZE[dim]
    indices = np.full((n, n_max), -1, dtype=np.int64)
    sizes = np.zeros(n, dtype=np.int64)
    weights = {op: np.zeros((n, n_max)) for op in ops}
    kappa = np.full(n, np.nan) if with_kappa else None

    for meth, size, solver in ((METHOD_MON, MON_SIZE[dim], _batched_mon_weights),
                               (METHOD_RBFFD, RBF_SIZE[dim], _batched_rbf_weights)):
        rows = np.nonzero(method == meth)[0]
        if not len(rows):
            continue
        if meth == METHOD_MON:
            stencils = _mon_stencils(nodeset, rows, tree)
        else:
            stencils = _knn_sorted(tree, nodeset, nodeset.positions[rows], size)
        sizes[rows] = size
        for lo in range(0, len(rows), _CHUNK):
            sl = slice(lo, lo + _CHUNK)
            w, kap = solver(nodeset.positions, stencils[sl], ops, with_kappa)
            order = np.argsort(stencils[sl], axis=1)
            indices[rows[sl], :size] = np.take_along_axis(stencils[sl], order, axis=1)
            for j, op in enumerate(ops):
                weights[op][rows[sl], :size] = np.take_along_axis(w[:, :, j], order, axis=1)
            if with_kappa:
                kappa[rows[sl]] = kap
    return WeightTable(indices, sizes, weights, method, kappa)


def _boundary_stencils(nodeset: NodeSet, rows: np.ndarray,
                       tree: cKDTree | None, exclude: np.ndarray | None) -> np.ndarray:
    """Stencils for boundary rows: the node itself plus its nearest allowed
    neighbors when `exclude` is given, else the plain nearest-neighbor set."""
    size = RBF_SIZE[nodeset.dim]
    if exclude is not None:
        exclude = np.asarray(exclude, dtype=bool)
        if not np.all(exclude[rows]):
            raise ValueError("exclude mask must cover the requested rows")
        allowed = np.nonzero(~exclude)[0]
        sub = cKDTree(nodeset.positions[allowed])
        k = min(len(allowed), size - 1)
        d, idx = sub.query(nodeset.positions[rows], k=k)
        order = np.lexsort((allowed[idx], d), axis=1)
        picked = allowed[np.take_along_axis(idx, order, axis=1)]
        return np.concatenate([rows[:, None], picked], axis=1)
    if tree is None:
        tree = cKDTree(nodeset.positions)
    return _knn_sorted(tree, nodeset, nodeset.positions[rows], size)


def normal_derivative_table(nodeset: NodeSet, rows: np.ndarray,
                            tree: cKDTree | None = None,
                            exclude: np.ndarray | None = None) -> WeightTable:
    """One-sided RBF-FD normal-derivative rows for the given boundary nodes.

    With `exclude` given (bool mask), stencils take the node itself plus its
    nearest non-excluded neighbors.  Used to keep boundary-value
    reconstructions local: coupling insulated nodes tangentially through
    each other's stencils makes the reconstruction amplify along the wall.
    """
    rows = np.asarray(rows, dtype=np.int64)
    n = len(nodeset)
    stencils = _boundary_stencils(nodeset, rows, tree, exclude)
    size = stencils.shape[1]
    op_key = "normal"
    indices = np.full((n, size), -1, dtype=np.int64)
    sizes = np.zeros(n, dtype=np.int64)
    weights = {op_key: np.zeros((n, size))}
    method = np.full(n, METHOD_NONE, dtype=np.int8)
    for lo in range(0, len(rows), _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        normals = nodeset.normals[rows[sl]]
        w, _ = _batched_rbf_weights(nodeset.positions, stencils[sl], None, False, normals)
        order = np.argsort(stencils[sl], axis=1)
        indices[rows[sl]] = np.take_along_axis(stencils[sl], order, axis=1)
        weights[op_key][rows[sl]] = np.take_along_axis(w[:, :, 0], order, axis=1)
        sizes[rows[sl]] = size
        method[rows[sl]] = METHOD_RBFFD
    return WeightTable(indices, sizes, weights, method)


def boundary_partial_table(nodeset: NodeSet, rows: np.ndarray,
                           tree: cKDTree | None = None,
                           exclude: np.ndarray | None = None) -> WeightTable:
    """One-sided RBF-FD first-derivative rows at boundary nodes, all axes."""
    rows = np.asarray(rows, dtype=np.int64)
    n = len(nodeset)
    dim = nodeset.dim
    stencils = _boundary_stencils(nodeset, rows, tree, exclude)
    size = stencils.shape[1]
    ops = [Partial(a) for a in range(dim)]
    indices = np.full((n, size), -1, dtype=np.int64)
    sizes = np.zeros(n, dtype=np.int64)
    weights = {op: np.zeros((n, size)) for op in ops}
    method = np.full(n, METHOD_NONE, dtype=np.int8)
    for lo in range(0, len(rows), _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        w, _ = _batched_rbf_weights(nodeset.positions, stencils[sl], ops, False)
        order = np.argsort(stencils[sl], axis=1)
        indices[rows[sl]] = np.take_along_axis(stencils[sl], order, axis=1)
        for j, op in enumerate(ops):
            weights[op][rows[sl]] = np.take_along_axis(w[:, :, j], order, axis=1)
        sizes[rows[sl]] = size
        method[rows[sl]] = METHOD_RBFFD
    return WeightTable(indices, sizes, weights, method)
