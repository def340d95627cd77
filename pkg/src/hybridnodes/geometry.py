"""Computational domains: axis-aligned boxes minus smooth obstacles.

Signed-distance convention: negative inside the fluid region Omega,
positive outside, zero on the boundary.  Obstacle shapes expose their own
signed distance (negative inside the solid) and the domain composes them
as a CSG difference, sd = max(box_sd, -min_i obstacle_sd_i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigurationError

# Number of parameter samples used to seed Newton refinement of
# point-to-curve distances and to integrate arc length.
_CURVE_TABLE = 1024
_DENSE_ARC = 4096

BCPolicy = Callable[[str, np.ndarray], tuple[str, float]]


def _as_points(x, dim: int) -> tuple[np.ndarray, bool]:
    """Normalize a single point or an array of points to shape (Q, dim)."""
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {pts.shape}")
    return pts, single


@dataclass(frozen=True)
class Circle:
    """Circle in 2D, sphere in 3D; the only shape allowed in 3D domains."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ConfigurationError(f"degenerate obstacle: radius {self.radius} <= 0")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def dim(self) -> int:
        return len(self.center)

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        return np.linalg.norm(pts - np.asarray(self.center), axis=-1) - self.radius


class _ClosedCurve:
    """Shared machinery for smooth closed 2D curves parametrized by angle.

    Subclasses provide _point/_velocity/_acceleration over the parameter and
    an _inside test.  Distances are exact: a dense parameter table brackets
    the nearest point and Newton iteration refines it to machine precision,
    so the resulting signed distance is Lipschitz-1.
    """

    def _build_table(self):
        t = np.linspace(0.0, 2 * np.pi, _CURVE_TABLE, endpoint=False)
        pts = self._point(t)
        object.__setattr__(self, "_table_t", t)
        object.__setattr__(self, "_table_tree", cKDTree(pts))

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        _, idx = self._table_tree.query(pts)
        step = 2 * np.pi / _CURVE_TABLE
        # Three Newton starts around the bracketing table point guard against
        # landing in a neighbouring valley of the distance function.
        t = self._table_t[idx][:, None] + np.array([-step, 0.0, step])
        x = pts[:, None, :]
        for _ in range(6):
            gamma = self._point(t)
            vel = self._velocity(t)
            acc = self._acceleration(t)
            diff = x - gamma
            g = np.sum(diff * vel, axis=-1)
            gp = -np.sum(vel * vel, axis=-1) + np.sum(diff * acc, axis=-1)
            dt = g / np.where(np.abs(gp) > 1e-300, gp, 1.0)
            t = t - np.clip(dt, -2 * step, 2 * step)
        d = np.min(np.linalg.norm(x - self._point(t), axis=-1), axis=1)
        return np.where(self._inside(pts), -d, d)

    def boundary_points(self, spacing) -> tuple[np.ndarray, np.ndarray]:
        """Sample the curve at the local target spacing; returns (points, outward normals)."""
        t = np.linspace(0.0, 2 * np.pi, _DENSE_ARC + 1)
        pts = self._point(t)
        speed = np.linalg.norm(self._velocity(t), axis=-1)
        density = speed / spacing(pts)
        tau = np.concatenate([[0.0], np.cumsum((density[1:] + density[:-1]) / 2 * np.diff(t))])
        n = max(3, round(tau[-1]))
        t_samples = np.interp(np.arange(n) * tau[-1] / n, tau, t)
        p = self._point(t_samples)
        v = self._velocity(t_samples)
        normals = np.stack([v[:, 1], -v[:, 0]], axis=-1)
        normals /= np.linalg.norm(normals, axis=-1, keepdims=True)
        return p, normals


@dataclass(frozen=True)
class Ellipse(_ClosedCurve):
    """Rotated ellipse (2D only)."""

    center: tuple[float, float]
    semi_axes: tuple[float, float]
    angle: float = 0.0

    def __post_init__(self):
        if min(self.semi_axes) <= 0:
            raise ConfigurationError(f"degenerate obstacle: semi-axes {self.semi_axes}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "semi_axes", tuple(float(a) for a in self.semi_axes))
        self._build_table()

    @property
    def dim(self) -> int:
        return 2

    def _rot(self):
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([[c, -s], [s, c]])

    def _point(self, t):
        a, b = self.semi_axes
        w = np.stack([a * np.cos(t), b * np.sin(t)], axis=-1)
        return np.asarray(self.center) + w @ self._rot().T

    def _velocity(self, t):
        a, b = self.semi_axes
        w = np.stack([-a * np.sin(t), b * np.cos(t)], axis=-1)
        return w @ self._rot().T

    def _acceleration(self, t):
        a, b = self.semi_axes
        w = np.stack([-a * np.cos(t), -b * np.sin(t)], axis=-1)
        return w @ self._rot().T

    def _inside(self, pts):
        a, b = self.semi_axes
        z = (pts - np.asarray(self.center)) @ self._rot()
        return (z[:, 0] / a) ** 2 + (z[:, 1] / b) ** 2 < 1.0


@dataclass(frozen=True)
class Star(_ClosedCurve):
    """Smooth star shape: radius mean + amplitude*cos(lobes*theta + phase), 2D only."""

    center: tuple[float, float]
    mean_radius: float
    amplitude: float
    lobes: int
    phase: float = 0.0

    def __post_init__(self):
        if self.mean_radius <= 0:
            raise ConfigurationError(f"degenerate obstacle: radius {self.mean_radius} <= 0")
        if not 0 <= self.amplitude < self.mean_radius:
            raise ConfigurationError("star amplitude must satisfy 0 <= amplitude < mean radius")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        self._build_table()

    @property
    def dim(self) -> int:
        return 2

    def _radius(self, t):
        return self.mean_radius + self.amplitude * np.cos(self.lobes * t + self.phase)

    def _point(self, t):
        u = np.stack([np.cos(t), np.sin(t)], axis=-1)
        return np.asarray(self.center) + self._radius(t)[..., None] * u

    def _velocity(self, t):
        u = np.stack([np.cos(t), np.sin(t)], axis=-1)
        du = np.stack([-np.sin(t), np.cos(t)], axis=-1)
        rp = -self.amplitude * self.lobes * np.sin(self.lobes * t + self.phase)
        return rp[..., None] * u + self._radius(t)[..., None] * du

    def _acceleration(self, t):
        u = np.stack([np.cos(t), np.sin(t)], axis=-1)
        du = np.stack([-np.sin(t), np.cos(t)], axis=-1)
        rp = -self.amplitude * self.lobes * np.sin(self.lobes * t + self.phase)
        rpp = -self.amplitude * self.lobes**2 * np.cos(self.lobes * t + self.phase)
        return (rpp - self._radius(t))[..., None] * u + 2 * rp[..., None] * du

    def _inside(self, pts):
        rel = pts - np.asarray(self.center)
        theta = np.arctan2(rel[:, 1], rel[:, 0])
        return np.linalg.norm(rel, axis=-1) < self._radius(theta)


Shape = Circle | Ellipse | Star


@dataclass(frozen=True)
class Obstacle:
    """A solid obstacle with a Dirichlet wall temperature, or insulated if None."""

    shape: Shape
    temperature: float | None = None

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        return self.shape.signed_distance(pts)


@dataclass(frozen=True)
class BoundarySample:
    position: np.ndarray
    normal: np.ndarray
    bc: tuple[str, float]  # ("dirichlet"|"neumann", value)
    origin: str


class BoundarySet:
    """Array-of-fields container for boundary samples."""

    def __init__(self, positions, normals, bc_kind, bc_value, origin):
        self.positions = np.asarray(positions, dtype=float)
        self.normals = np.asarray(normals, dtype=float)
        self.bc_kind = list(bc_kind)
        self.bc_value = np.asarray(bc_value, dtype=float)
        self.origin = list(origin)

    def __len__(self) -> int:
        return len(self.positions)

    def sample(self, i: int) -> BoundarySample:
        return BoundarySample(
            self.positions[i], self.normals[i], (self.bc_kind[i], self.bc_value[i]), self.origin[i]
        )

    @staticmethod
    def concatenate(parts: list["BoundarySet"]) -> "BoundarySet":
        parts = [p for p in parts if len(p)]
        if not parts:
            raise ValueError("no boundary samples")
        return BoundarySet(
            np.concatenate([p.positions for p in parts]),
            np.concatenate([p.normals for p in parts]),
            sum((p.bc_kind for p in parts), []),
            np.concatenate([p.bc_value for p in parts]),
            sum((p.origin for p in parts), []),
        )


@dataclass
class DomainSpec:
    """Axis-aligned box minus a set of non-overlapping obstacles."""

    lo: np.ndarray
    hi: np.ndarray
    obstacles: tuple[Obstacle, ...] = ()

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if self.lo.shape != self.hi.shape or self.lo.ndim != 1:
            raise ConfigurationError("box corners must be points of equal dimension")
        if not np.all(self.hi > self.lo):
            raise ConfigurationError("box upper corner must exceed lower corner")
        self.obstacles = tuple(self.obstacles)
        d = self.dim
        if d not in (2, 3):
            raise ConfigurationError(f"only 2D and 3D domains supported, got d={d}")
        for obs in self.obstacles:
            if obs.shape.dim != d:
                raise ConfigurationError("obstacle dimension does not match the box")
            if d == 3 and not isinstance(obs.shape, Circle):
                raise ConfigurationError("3D domains support spherical obstacles only")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def extent(self) -> np.ndarray:
        return self.hi - self.lo

    def box_signed_distance(self, x) -> np.ndarray:
        pts, single = _as_points(x, self.dim)
        center = (self.lo + self.hi) / 2
        half = (self.hi - self.lo) / 2
        q = np.abs(pts - center) - half
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(np.max(q, axis=-1), 0.0)
        sd = outside + inside
        return sd[0] if single else sd

    def obstacle_distance(self, x) -> np.ndarray:
        """Signed distance to the nearest obstacle surface (+inf with no obstacles)."""
        pts, single = _as_points(x, self.dim)
        if not self.obstacles:
            d = np.full(len(pts), np.inf)
        else:
            d = np.min([obs.signed_distance(pts) for obs in self.obstacles], axis=0)
        return d[0] if single else d

    def signed_distance(self, x) -> np.ndarray:
        pts, single = _as_points(x, self.dim)
        sd = self.box_signed_distance(pts)
        if self.obstacles:
            sd = np.maximum(sd, -self.obstacle_distance(pts))
        return sd[0] if single else sd

    def contains(self, x, margin: float = 0.0) -> np.ndarray:
        return self.signed_distance(x) <= -margin

    def validate_clearances(self, min_gap: float) -> None:
        """Check obstacles sit strictly inside the box and keep min_gap between surfaces."""
        for i, obs in enumerate(self.obstacles):
            pts = _probe_surface(obs.shape)
            if np.any(self.box_signed_distance(pts) > -min_gap):
                raise ConfigurationError(f"obstacle {i} too close to the box walls")
            for j, other in enumerate(self.obstacles):
                if j != i and np.any(other.signed_distance(pts) < min_gap):
                    raise ConfigurationError(f"obstacles {i} and {j} closer than {min_gap}")


def _probe_surface(shape: Shape, n: int = 512) -> np.ndarray:
    """Dense point sample of a shape surface, for clearance checks."""
    if isinstance(shape, Circle) and shape.dim == 3:
        return _fibonacci_sphere(np.asarray(shape.center), shape.radius, n)
    if isinstance(shape, Circle):
        t = np.linspace(0, 2 * np.pi, n, endpoint=False)
        c = np.asarray(shape.center)
        return c + shape.radius * np.stack([np.cos(t), np.sin(t)], axis=-1)
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return shape._point(t)


def _fibonacci_sphere(center: np.ndarray, radius: float, n: int) -> np.ndarray:
    i = np.arange(n)
    z = 1.0 - 2.0 * (i + 0.5) / n
    phi = i * np.pi * (3.0 - np.sqrt(5.0))
    rho = np.sqrt(1.0 - z * z)
    pts = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)
    return center + radius * pts


def signed_distance(spec: DomainSpec, x) -> np.ndarray:
    """Signed distance to the fluid region: negative inside, zero on the boundary."""
    return spec.signed_distance(x)


def default_bc_policy(spec: DomainSpec) -> BCPolicy:
    """Insulated walls; obstacles Dirichlet at their wall temperature (or insulated)."""

    def policy(origin: str, position) -> tuple[str, float]:
        if origin.startswith("obstacle:"):
            obs = spec.obstacles[int(origin.split(":")[1])]
            if obs.temperature is None:
                return ("neumann", 0.0)
            return ("dirichlet", float(obs.temperature))
        return ("neumann", 0.0)

    return policy


def _sample_segment(a, b, spacing, include_ends=False) -> np.ndarray:
    """Points along segment a->b with local target spacing (cumulative inversion)."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    length = float(np.linalg.norm(b - a))
    s = np.linspace(0.0, 1.0, _DENSE_ARC + 1)
    pts = a + s[:, None] * (b - a)
    density = length / spacing(pts)
    tau = np.concatenate([[0.0], np.cumsum((density[1:] + density[:-1]) / 2 * np.diff(s))])
    n = max(1, round(tau[-1]))
    if include_ends:
        targets = np.arange(n + 1) * tau[-1] / n
    else:
        targets = np.arange(1, n) * tau[-1] / n
    s_samples = np.interp(targets, tau, s)
    return a + s_samples[:, None] * (b - a)


def _box_boundary_2d(spec: DomainSpec, spacing) -> BoundarySet:
    lo, hi = spec.lo, spec.hi
    corners = {
        "x-": [np.array([lo[0], lo[1]]), np.array([lo[0], hi[1]])],
        "x+": [np.array([hi[0], lo[1]]), np.array([hi[0], hi[1]])],
    }
    walls = [
        ("wall:x-", np.array([lo[0], lo[1]]), np.array([lo[0], hi[1]]), np.array([-1.0, 0.0])),
        ("wall:x+", np.array([hi[0], lo[1]]), np.array([hi[0], hi[1]]), np.array([1.0, 0.0])),
        ("wall:y-", np.array([lo[0], lo[1]]), np.array([hi[0], lo[1]]), np.array([0.0, -1.0])),
        ("wall:y+", np.array([lo[0], hi[1]]), np.array([hi[0], hi[1]]), np.array([0.0, 1.0])),
    ]
    positions, normals, origins = [], [], []
    # Corners are owned by the x-walls so Dirichlet side walls keep their corner
    # values (conduction profiles between the x-walls stay exact).
    for tag, pts in corners.items():
        for p in pts:
            positions.append(p)
            normals.append(np.array([-1.0, 0.0]) if tag == "x-" else np.array([1.0, 0.0]))
            origins.append(f"wall:{tag}")
    for tag, a, b, nrm in walls:
        for p in _sample_segment(a, b, spacing):
            positions.append(p)
            normals.append(nrm)
            origins.append(tag)
    return BoundarySet(np.array(positions), np.array(normals), ["neumann"] * len(positions),
                       np.zeros(len(positions)), origins)


def _box_boundary_3d(spec: DomainSpec, spacing) -> BoundarySet:
    lo, hi = spec.lo, spec.hi
    positions, normals, origins = [], [], []

    def add(p, n, tag):
        positions.append(np.asarray(p, float))
        normals.append(np.asarray(n, float))
        origins.append(tag)

    # Corners first, owned by the x-walls.
    for xi, xv in enumerate((lo[0], hi[0])):
        for yv in (lo[1], hi[1]):
            for zv in (lo[2], hi[2]):
                add([xv, yv, zv], [-1.0 if xi == 0 else 1.0, 0.0, 0.0], f"wall:x{'-+'[xi]}")

    def min_spacing(pts):
        return float(np.min(spacing(pts)))

    # Edges, owned by the lowest-axis adjacent wall.
    for axis in range(3):
        u, v = [a for a in range(3) if a != axis]
        for uv in (lo[u], hi[u]):
            for vv in (lo[v], hi[v]):
                a = np.zeros(3)
                b = np.zeros(3)
                a[axis], b[axis] = lo[axis], hi[axis]
                a[u] = b[u] = uv
                a[v] = b[v] = vv
                owner = u  # lowest non-edge axis
                sgn = -1.0 if uv == lo[u] else 1.0
                nrm = np.zeros(3)
                nrm[owner] = sgn
                tag = f"wall:{'xyz'[owner]}{'-' if sgn < 0 else '+'}"
                probe = a + np.linspace(0, 1, 33)[:, None] * (b - a)
                h_edge = min_spacing(probe)
                n = max(1, round(float(np.linalg.norm(b - a)) / h_edge))
                for s in np.arange(1, n) / n:
                    add(a + s * (b - a), nrm, tag)

    # Face interiors.
    for axis in range(3):
        u, v = [a for a in range(3) if a != axis]
        for side, val in ((0, lo[axis]), (1, hi[axis])):
            nrm = np.zeros(3)
            nrm[axis] = -1.0 if side == 0 else 1.0
            tag = f"wall:{'xyz'[axis]}{'-' if side == 0 else '+'}"
            gu = np.linspace(lo[u], hi[u], 17)
            gv = np.linspace(lo[v], hi[v], 17)
            probe = np.zeros((17 * 17, 3))
            probe[:, axis] = val
            probe[:, u] = np.repeat(gu, 17)
            probe[:, v] = np.tile(gv, 17)
            h_face = min_spacing(probe)
            nu = max(1, round((hi[u] - lo[u]) / h_face))
            nv = max(1, round((hi[v] - lo[v]) / h_face))
            su = lo[u] + np.arange(1, nu) * (hi[u] - lo[u]) / nu
            sv = lo[v] + np.arange(1, nv) * (hi[v] - lo[v]) / nv
            for uu in su:
                for vv in sv:
                    p = np.zeros(3)
                    p[axis], p[u], p[v] = val, uu, vv
                    add(p, nrm, tag)

    return BoundarySet(np.array(positions), np.array(normals), ["neumann"] * len(positions),
                       np.zeros(len(positions)), origins)


def _obstacle_boundary(spec: DomainSpec, idx: int, spacing) -> BoundarySet:
    shape = spec.obstacles[idx].shape
    if isinstance(shape, Circle) and shape.dim == 3:
        # Fibonacci lattice sized for hexagonal-packing spacing h_s on the sphere.
        center = np.asarray(shape.center)
        h = float(np.min(spacing(center[None, :] + np.array([[shape.radius, 0.0, 0.0]]))))
        n = max(8, round(8 * np.pi * shape.radius**2 / (np.sqrt(3.0) * h * h)))
        pts = _fibonacci_sphere(center, shape.radius, n)
        nrm = (pts - center) / shape.radius
    elif isinstance(shape, Circle):
        curve = Star(shape.center, shape.radius, 0.0, 1)
        pts, nrm = curve.boundary_points(spacing)
    else:
        pts, nrm = shape.boundary_points(spacing)
    b = len(pts)
    return BoundarySet(pts, nrm, ["neumann"] * b, np.zeros(b), [f"obstacle:{idx}"] * b)


def discretize_boundary(spec: DomainSpec, spacing, bc_policy: BCPolicy | None = None) -> BoundarySet:
    """Sample the whole domain boundary at the local target spacing.

    spacing maps an (Q, d) array of positions to per-position target gaps;
    bc_policy maps (origin tag, position) to the temperature BC.
    """
    for obs in spec.obstacles:
        radius = getattr(obs.shape, "radius", None) or getattr(obs.shape, "mean_radius", 1.0)
        if radius <= 0:
            raise ConfigurationError("degenerate obstacle: radius <= 0")
    if bc_policy is None:
        bc_policy = default_bc_policy(spec)
    parts = [_box_boundary_2d(spec, spacing) if spec.dim == 2 else _box_boundary_3d(spec, spacing)]
    for i in range(len(spec.obstacles)):
        parts.append(_obstacle_boundary(spec, i, spacing))
    merged = BoundarySet.concatenate(parts)
    for i in range(len(merged)):
        kind, value = bc_policy(merged.origin[i], merged.positions[i])
        if kind not in ("dirichlet", "neumann"):
            raise ConfigurationError(f"unknown boundary condition kind {kind!r}")
        merged.bc_kind[i] = kind
        merged.bc_value[i] = value
    return merged
