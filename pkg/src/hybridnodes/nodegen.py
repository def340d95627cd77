"""Hybrid scattered-regular node sets.

The pipeline fills the box with a regular lattice, removes lattice nodes
where scattered placement is wanted (near irregular boundaries, or per an
explicit region rule), and fills the voids with an advancing-front
algorithm honoring a variable target spacing.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigurationError
from .geometry import BoundarySet, DomainSpec, discretize_boundary

KIND_REGULAR, KIND_SCATTERED, KIND_BOUNDARY = 0, 1, 2
ROLE_INTERIOR, ROLE_DIRICHLET, ROLE_NEUMANN = 0, 1, 2

_KIND_NAMES = {KIND_REGULAR: "regular", KIND_SCATTERED: "scattered", KIND_BOUNDARY: "boundary"}
_ROLE_NAMES = {ROLE_INTERIOR: "interior", ROLE_DIRICHLET: "dirichlet", ROLE_NEUMANN: "neumann"}

# Acceptance slack for the advancing front: candidates keep at least this
# fraction of their own target spacing to every existing node (covers the
# fixed-point residual of the graded-radius placement).
_ACCEPT = 0.995


@dataclass
class SpacingFunction:
    """Target internodal distance: h_s on the irregular boundary, growing
    linearly to h_r at distance delta_h*h_r, constant h_r beyond."""

    h_r: float
    h_s: float
    delta_h: float
    boundary_distance: object = None  # callable (Q, d) -> distance, or None

    def __post_init__(self):
        if self.h_s > self.h_r:
            raise ConfigurationError("h_s must not exceed h_r")

    @property
    def transition_width(self) -> float:
        return self.delta_h * self.h_r

    def __call__(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.boundary_distance is None or self.h_s == self.h_r or self.delta_h == 0:
            return np.full(len(pts), self.h_r)
        d = np.asarray(self.boundary_distance(pts), dtype=float)
        t = np.clip(d / self.transition_width, 0.0, 1.0)
        return self.h_s + (self.h_r - self.h_s) * t


@dataclass(frozen=True)
class Node:
    """Single-node view into a NodeSet."""

    position: np.ndarray
    h: float
    kind: int
    role: int
    bc_value: float
    normal: np.ndarray | None


@dataclass
class LatticeInfo:
    origin: np.ndarray
    step: np.ndarray  # per-axis spacing
    cells: tuple[int, ...]
    grid: np.ndarray = None  # (cells+1 per axis) -> node id, -1 where vacant

    def __post_init__(self):
        if self.grid is None:
            self.grid = np.full(tuple(c + 1 for c in self.cells), -1, dtype=np.int64)

    def occupied(self, keys: np.ndarray) -> np.ndarray:
        """Node ids at integer lattice keys (K, d); -1 where vacant."""
        keys = np.atleast_2d(keys)
        return self.grid[tuple(keys[:, a] for a in range(keys.shape[1]))]


class NodeSet:
    """Immutable-by-convention array-of-fields node container."""

    LATTICE_NONE = np.iinfo(np.int64).min

    def __init__(self, positions, spacing, kind, role, bc_value, normals, origin=None,
                 lattice: LatticeInfo | None = None, lattice_idx: np.ndarray | None = None):
        self.positions = np.asarray(positions, dtype=float)
        self.spacing = np.asarray(spacing, dtype=float)
        self.kind = np.asarray(kind, dtype=np.int8)
        self.role = np.asarray(role, dtype=np.int8)
        self.bc_value = np.asarray(bc_value, dtype=float)
        self.normals = np.asarray(normals, dtype=float)
        self.origin = list(origin) if origin is not None else [""] * len(self.positions)
        self.lattice = lattice
        self.lattice_idx = lattice_idx  # (N, d) int, LATTICE_NONE where off-lattice
        n = len(self.positions)
        if not (len(self.spacing) == len(self.kind) == len(self.role) == n):
            raise ValueError("field lengths disagree")
        if np.any(self.spacing <= 0):
            raise ValueError("node spacing must be positive")

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def counts(self) -> tuple[int, int, int]:
        return (
            int(np.sum(self.kind == KIND_REGULAR)),
            int(np.sum(self.kind == KIND_SCATTERED)),
            int(np.sum(self.kind == KIND_BOUNDARY)),
        )

    @property
    def interior_mask(self) -> np.ndarray:
        return self.kind != KIND_BOUNDARY

    @property
    def boundary_mask(self) -> np.ndarray:
        return self.kind == KIND_BOUNDARY

    def node(self, i: int) -> Node:
        normal = self.normals[i] if self.kind[i] == KIND_BOUNDARY else None
        return Node(self.positions[i], float(self.spacing[i]), int(self.kind[i]),
                    int(self.role[i]), float(self.bc_value[i]), normal)

    def min_distance_violations(self) -> int:
        """Count pairs violating dist >= 0.5*min(h_i, h_j)."""
        tree = cKDTree(self.positions)
        r = 0.5 * float(np.max(self.spacing))
        bad = 0
        for i, j in tree.query_pairs(r):
            d = np.linalg.norm(self.positions[i] - self.positions[j])
            if d < 0.5 * min(self.spacing[i], self.spacing[j]) - 1e-12:
                bad += 1
        return bad

    def to_csv(self, path) -> None:
        d = self.dim
        axes = "xyz"[:d]
        header = list(axes) + ["h", "kind", "role", "bc_value"] + [f"n{a}" for a in axes]
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(header)
            for i in range(len(self)):
                row = [repr(float(v)) for v in self.positions[i]]
                row += [repr(float(self.spacing[i])), _KIND_NAMES[int(self.kind[i])],
                        _ROLE_NAMES[int(self.role[i])], repr(float(self.bc_value[i]))]
                row += [repr(float(v)) for v in self.normals[i]]
                w.writerow(row)

    @staticmethod
    def from_csv(path) -> "NodeSet":
        kind_ids = {v: k for k, v in _KIND_NAMES.items()}
        role_ids = {v: k for k, v in _ROLE_NAMES.items()}
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        header, rows = rows[0], rows[1:]
        d = sum(1 for c in header if c in ("x", "y", "z"))
        pos = np.array([[float(r[a]) for a in range(d)] for r in rows])
        h = np.array([float(r[d]) for r in rows])
        kind = np.array([kind_ids[r[d + 1]] for r in rows])
        role = np.array([role_ids[r[d + 2]] for r in rows])
        bc = np.array([float(r[d + 3]) for r in rows])
        normals = np.array([[float(r[d + 4 + a]) for a in range(d)] for r in rows])
        return NodeSet(pos, h, kind, role, bc, normals)


@dataclass
class RegularFill:
    """Interior lattice nodes produced by regular_fill."""

    positions: np.ndarray  # (K, d)
    indices: np.ndarray  # (K, d) integer lattice indices
    origin: np.ndarray  # box lower corner
    step: np.ndarray  # per-axis spacing (extent / round(extent / h_r))
    cells: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.positions)


def regular_fill(spec: DomainSpec, h_r: float) -> RegularFill:
    """Axis-aligned interior lattice, excluding nodes within h_r/2 of the boundary.

    The per-axis spacing snaps to extent/round(extent/h_r) so lattice lines
    land exactly on the box walls.
    """
    if h_r <= 0:
        raise ConfigurationError("h_r must be positive")
    extent = spec.extent
    if np.any(h_r > extent):
        raise ConfigurationError(f"h_r={h_r} exceeds the domain extent {extent}")
    cells = tuple(max(1, round(float(e) / h_r)) for e in extent)
    step = extent / np.asarray(cells)
    grids = [spec.lo[a] + np.arange(1, cells[a]) * step[a] for a in range(spec.dim)]
    mesh = np.meshgrid(*grids, indexing="ij")
    pos = np.stack([m.ravel() for m in mesh], axis=-1)
    idx = np.stack([m.ravel() for m in np.meshgrid(
        *[np.arange(1, cells[a]) for a in range(spec.dim)], indexing="ij")], axis=-1)
    keep = spec.signed_distance(pos) <= -0.5 * float(np.max(step)) * (1 - 1e-12)
    return RegularFill(pos[keep], idx[keep], spec.lo.copy(), step, cells)


def carve_transition(fill: RegularFill, spec: DomainSpec, delta_h: float, h_r: float) -> RegularFill:
    """Remove regular nodes within delta_h*h_r of an obstacle surface.

    Box walls never trigger removal; explicit region rules (the split and
    quarter benchmark cases) are handled by hybrid_discretize instead.
    """
    if delta_h == 0 or not spec.obstacles:
        return fill
    keep = spec.obstacle_distance(fill.positions) >= delta_h * h_r
    return RegularFill(fill.positions[keep], fill.indices[keep], fill.origin, fill.step, fill.cells)


def _unit_directions(rng: np.random.Generator, dim: int) -> np.ndarray:
    """2d fixed axis directions plus (d+1) random unit directions.

    Examination order is shuffled per node; otherwise the axis candidates
    win every first-fit contest and the fill degenerates to a lattice.
    """
    fixed = np.concatenate([np.eye(dim), -np.eye(dim)])
    rnd = rng.standard_normal((dim + 1, dim))
    norms = np.linalg.norm(rnd, axis=1, keepdims=True)
    norms[norms < 1e-12] = 1.0
    dirs = np.concatenate([fixed, rnd / norms])
    return dirs[rng.permutation(len(dirs))]


class _HashGrid:
    """Uniform background grid for neighbor rejection queries."""

    def __init__(self, cell: float, dim: int):
        self.cell = cell
        self.dim = dim
        self.table: dict[tuple, list[int]] = {}

    def key(self, p) -> tuple:
        return tuple(int(math.floor(c / self.cell)) for c in p)

    def insert(self, idx: int, p) -> None:
        self.table.setdefault(self.key(p), []).append(idx)

    def neighbors(self, p, radius: float) -> list[int]:
        reach = int(math.ceil(radius / self.cell))
        base = self.key(p)
        out: list[int] = []
        for off in np.ndindex(*([2 * reach + 1] * self.dim)):
            cell = tuple(base[a] + off[a] - reach for a in range(self.dim))
            hit = self.table.get(cell)
            if hit:
                out.extend(hit)
        return out


def _wave_candidates(rng, parents, parent_h, spacing, dim):
    """Candidate positions and spacings for one front wave, batched.

    Each parent contributes 2d axis directions plus d+1 random ones in a
    shuffled examination order.  The placement radius tracks the local
    target spacing via a short fixed-point iteration so graded fills can
    grow from fine toward coarse regions.
    """
    k = len(parents)
    n_dir = 3 * dim + 1
    fixed = np.concatenate([np.eye(dim), -np.eye(dim)])
    rnd = rng.standard_normal((k, dim + 1, dim))
    norms = np.linalg.norm(rnd, axis=2, keepdims=True)
    norms[norms < 1e-12] = 1.0
    dirs = np.concatenate([np.broadcast_to(fixed, (k, 2 * dim, dim)), rnd / norms], axis=1)
    order = np.argsort(rng.random((k, n_dir)), axis=1)
    dirs = np.take_along_axis(dirs, order[:, :, None], axis=1)
    dirs = dirs.reshape(k * n_dir, dim)
    base = np.repeat(parents, n_dir, axis=0)
    r = np.repeat(parent_h, n_dir)
    cand = base + r[:, None] * dirs
    for _ in range(3):
        r = spacing(cand)
        cand = base + r[:, None] * dirs
    return cand, spacing(cand)


def scattered_fill(
    spec: DomainSpec,
    seed_positions: np.ndarray,
    spacing,
    rng_seed: int,
    region=None,
    seed_regular_mask: np.ndarray | None = None,
    h_regular: float | None = None,
    queue_filter: np.ndarray | None = None,
) -> np.ndarray:
    """Advancing-front fill of the scattered region.

    Processes the front in FIFO waves: candidates lie on spheres around the
    popped nodes (radius = local target spacing), and are accepted when they
    stay inside the domain, inside `region`, and no closer than their own
    target spacing to any existing node.  Candidates additionally keep
    0.9*h_regular from regular seed nodes so the lattice seam stays
    non-degenerate.  Deterministic for a fixed rng_seed.

    queue_filter optionally marks which seeds join the initial front; all
    seeds participate in rejection regardless.
    """
    seed_positions = np.atleast_2d(np.asarray(seed_positions, dtype=float))
    if len(seed_positions) == 0:
        return np.empty((0, spec.dim))
    dim = spec.dim
    rng = np.random.default_rng(rng_seed)
    seed_h = np.asarray(spacing(seed_positions), dtype=float)
    cell = float(min(np.min(seed_h), getattr(spacing, "h_s", np.min(seed_h))))
    grid = _HashGrid(cell, dim)

    n_seeds = len(seed_positions)
    capacity = max(4 * n_seeds, 1024)
    pts = np.empty((capacity, dim))
    hs = np.empty(capacity)
    is_regular = np.zeros(capacity, dtype=bool)
    pts[:n_seeds] = seed_positions
    hs[:n_seeds] = seed_h
    if seed_regular_mask is not None:
        is_regular[:n_seeds] = seed_regular_mask
    count = n_seeds
    for i in range(n_seeds):
        grid.insert(i, seed_positions[i])

    if queue_filter is None:
        front = np.arange(n_seeds)
    else:
        front = np.nonzero(queue_filter)[0]
    seam = 0.9 * h_regular if h_regular is not None else None
    accepted: list[int] = []

    while len(front):
        cand, h_cand = _wave_candidates(rng, pts[front], hs[front], spacing, dim)
        ok = spec.signed_distance(cand) <= -0.5 * h_cand
        if region is not None:
            ok &= region(cand)
        new_idx: list[int] = []
        for c_idx in np.nonzero(ok)[0]:
            c = cand[c_idx]
            hc = h_cand[c_idx]
            radius = max(hc, seam) if seam is not None else hc
            near = grid.neighbors(c, radius)
            if near:
                nb = np.asarray(near)
                d = np.linalg.norm(pts[nb] - c, axis=1)
                if np.any(d < _ACCEPT * hc):
                    continue
                if seam is not None and np.any(d[is_regular[nb]] < seam):
                    continue
            if count == capacity:
                capacity *= 2
                pts = np.concatenate([pts, np.empty_like(pts)])
                hs = np.concatenate([hs, np.empty_like(hs)])
                is_regular = np.concatenate([is_regular, np.zeros(count, dtype=bool)])
            pts[count] = c
            hs[count] = hc
            grid.insert(count, c)
            new_idx.append(count)
            accepted.append(count)
            count += 1
        front = np.asarray(new_idx, dtype=int)

    if not accepted:
        return np.empty((0, dim))
    return pts[np.asarray(accepted)]


def _scattered_region(config, spec: DomainSpec, step_max: float):
    """(region, near_region) predicates for the case's scattered zone.

    near_region selects the seeds worth queuing on the initial front: the
    region itself dilated by a couple of lattice steps.
    """
    mode = config.discretization
    reach = 2.0 * step_max
    if mode == "pure-regular":
        return None, None
    if mode == "pure-scattered":
        def everywhere(pts):
            return np.ones(len(np.atleast_2d(pts)), dtype=bool)

        return everywhere, everywhere
    if config.case == "dvd":
        center = (spec.lo + spec.hi) / 2.0

        def quarters(pts):
            pts = np.atleast_2d(pts)
            return (pts[:, 0] < center[0]) == (pts[:, 1] < center[1])

        def near_quarters(pts):
            pts = np.atleast_2d(pts)
            seam = np.minimum(np.abs(pts[:, 0] - center[0]), np.abs(pts[:, 1] - center[1]))
            return quarters(pts) | (seam < reach)

        return quarters, near_quarters
    if config.case == "dvd-split":
        axis = 1 if config.split_orientation == "horizontal" else 0
        cut = spec.lo[axis] + config.delta_h * step_max

        def split(pts):
            return np.atleast_2d(pts)[:, axis] < cut

        def near_split(pts):
            return np.atleast_2d(pts)[:, axis] < cut + reach

        return split, near_split
    if not spec.obstacles:
        return None, None
    width = config.delta_h * step_max

    def near_obstacles(pts):
        return spec.obstacle_distance(np.atleast_2d(pts)) < width

    def near_layer(pts):
        return spec.obstacle_distance(np.atleast_2d(pts)) < width + reach

    return near_obstacles, near_layer


def hybrid_discretize(config, spec: DomainSpec | None = None) -> NodeSet:
    """Build the case's full node set: lattice, carve, scattered fill, boundary.

    Region rules: `dvd` fills two diagonal quarters (lower-left/upper-right)
    with scattered nodes at the lattice spacing; `dvd-split` places scattered
    nodes below/left of an axis cut at delta_h*h from the origin; obstacle
    cases scatter within delta_h*h_r of the obstacle surfaces, with spacing
    graded from h_s at the surface to h_r at the layer edge.
    """
    from .config import build_domain  # deferred: config holds the case tables

    if spec is None:
        spec = build_domain(config)

    fill = regular_fill(spec, config.h_r)
    step_max = float(np.max(fill.step))
    h_s = config.h_s if config.h_s < config.h_r else step_max
    spacing = SpacingFunction(step_max, h_s, config.delta_h,
                              spec.obstacle_distance if spec.obstacles else None)

    region, near_region = _scattered_region(config, spec, step_max)
    if config.discretization == "pure-scattered":
        kept = RegularFill(np.empty((0, spec.dim)), np.empty((0, spec.dim), dtype=int),
                           fill.origin, fill.step, fill.cells)
    elif region is None:
        kept = fill
    else:
        keep = ~region(fill.positions)
        kept = RegularFill(fill.positions[keep], fill.indices[keep], fill.origin,
                           fill.step, fill.cells)

    boundary = discretize_boundary(spec, spacing, config.bc_policy(spec))

    if config.discretization == "pure-regular" or region is None:
        scattered = np.empty((0, spec.dim))
    else:
        seeds = np.concatenate([boundary.positions, kept.positions])
        seed_regular = np.concatenate([
            np.zeros(len(boundary.positions), dtype=bool),
            np.ones(len(kept.positions), dtype=bool),
        ])
        scattered = scattered_fill(spec, seeds, spacing, config.rng_seed, region,
                                   seed_regular_mask=seed_regular, h_regular=step_max,
                                   queue_filter=near_region(seeds))

    n_r, n_s, n_b = len(kept), len(scattered), len(boundary)
    if n_r + n_s == 0:
        raise ConfigurationError("discretization produced zero interior nodes")

    positions = np.concatenate([kept.positions, scattered, boundary.positions])
    h = np.concatenate([
        np.full(n_r, step_max),
        spacing(scattered) if n_s else np.empty(0),
        spacing(boundary.positions),
    ])
    kind = np.concatenate([
        np.full(n_r, KIND_REGULAR), np.full(n_s, KIND_SCATTERED), np.full(n_b, KIND_BOUNDARY),
    ])
    role = np.concatenate([
        np.full(n_r + n_s, ROLE_INTERIOR),
        [ROLE_DIRICHLET if k == "dirichlet" else ROLE_NEUMANN for k in boundary.bc_kind],
    ])
    bc_value = np.concatenate([np.full(n_r + n_s, np.nan), boundary.bc_value])
    normals = np.concatenate([np.full((n_r + n_s, spec.dim), np.nan), boundary.normals])
    origin = [""] * (n_r + n_s) + boundary.origin

    lattice = LatticeInfo(fill.origin, fill.step, fill.cells)
    lattice_idx = np.full((len(positions), spec.dim), NodeSet.LATTICE_NONE, dtype=np.int64)
    if n_r:
        lattice_idx[:n_r] = kept.indices
        lattice.grid[tuple(kept.indices[:, a] for a in range(spec.dim))] = np.arange(n_r)
    # Boundary nodes sitting exactly on lattice lines join the index map so
    # wall-adjacent regular nodes keep their full axis stencils.
    frac = (boundary.positions - fill.origin) / fill.step
    rounded = np.round(frac).astype(np.int64)
    on_lattice = np.all(np.abs(frac - rounded) * fill.step < 1e-9 * step_max, axis=1)
    for i in np.nonzero(on_lattice)[0]:
        key = tuple(int(v) for v in rounded[i])
        if lattice.grid[key] < 0:
            lattice.grid[key] = n_r + n_s + i
            lattice_idx[n_r + n_s + i] = rounded[i]

    return NodeSet(positions, h, kind, role, bc_value, normals, origin, lattice, lattice_idx)
