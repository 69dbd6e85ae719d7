"""Discrete model of an immersed manifold over its parameter box.

A mesh samples the chart on a regular grid and connects each vertex to its
axis and diagonal neighbors.  Edge lengths are induced arc lengths along
parameter segments, integrated with a three-point rule whose midpoint data
comes from a once-refined lattice (so every midpoint is evaluated exactly,
not interpolated).  Graph distances from the basepoint then overestimate
intrinsic distances, converging from above under refinement.

The refined lattice is also what the volume integrators consume: each grid
cell knows the radial values on its 3^m sub-lattice and the volume density
at its center.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .errors import DomainError, GeometryError
from .exprchart import ChartBase
from .immersion import DEFAULT_CHUNK, PointGeometry, ambient_of, grid_geometry
from .reporting import write_csv
from .spaceform import Ambient, euclidean, hyperbolic

__all__ = ["MeshGraph", "BallRegion", "EndsReport", "build_mesh",
           "intrinsic_distances", "extrinsic_ball", "critical_free_radius",
           "count_ends", "ends_stability", "mesh_dump"]

MIN_RESOLUTION = 3
# default threshold on |grad_M r| below which a vertex counts as critical
EPSILON_CRIT = 1e-3
# ends are only probed strictly inside the sampled region
ENDS_WINDOW_FRACTION = 0.8


@dataclass
class MeshGraph:
    """Vertex geometry plus the weighted neighbor graph."""

    chart: ChartBase
    amb: Ambient
    shape: tuple                     # vertices per axis
    origin: np.ndarray               # lower domain corner
    spacing: np.ndarray              # vertex spacing per axis
    points: np.ndarray               # (N, m) chart coordinates
    vertices: PointGeometry          # flat, N entries
    edges: np.ndarray                # (E, 2) vertex indices
    edge_lengths: np.ndarray         # (E,)
    basepoint: int
    rho: np.ndarray = None           # (N,) graph distance to basepoint
    unreachable: int = 0
    refined_r: np.ndarray = field(default=None, repr=False)
    refined_sdg: np.ndarray = field(default=None, repr=False)
    _graph_csr: object = field(default=None, repr=False)
    _cell_sub_r: np.ndarray = field(default=None, repr=False)
    _cell_bounds: tuple = field(default=None, repr=False)

    # -- basic accessors ---------------------------------------------------

    @property
    def m(self) -> int:
        return len(self.shape)

    @property
    def n_vertices(self) -> int:
        return int(np.prod(self.shape, dtype=int))

    @property
    def r(self) -> np.ndarray:
        return self.vertices.r

    @property
    def r_max(self) -> float:
        return float(np.max(self.vertices.r))

    @property
    def periodic(self):
        return self.chart.periodic

    @property
    def refined_shape(self):
        return tuple(2 * k if p else 2 * k - 1
                     for k, p in zip(self.shape, self.periodic))

    def boundary_vertex_mask(self) -> np.ndarray:
        """Vertices on a truncation face.

        Only axes flagged by the chart count; a trimmed coordinate
        singularity (polar margin of a sphere factor) is not a cut toward
        infinity.
        """
        mask = np.zeros(self.shape, dtype=bool)
        for axis, is_trunc in enumerate(self.chart.truncation_axis_flags()):
            if not is_trunc:
                continue
            sl_lo = [slice(None)] * self.m
            sl_lo[axis] = 0
            mask[tuple(sl_lo)] = True
            sl_hi = [slice(None)] * self.m
            sl_hi[axis] = self.shape[axis] - 1
            mask[tuple(sl_hi)] = True
        return mask.reshape(-1)

    @property
    def r_truncation_min(self) -> float:
        """Smallest radial value on a truncation face.

        Beyond this radius the sampled region no longer surrounds the level
        set, so radially global quantities are unreliable there.  Infinite
        when every axis is periodic (no artificial boundary at all).
        """
        mask = self.boundary_vertex_mask()
        if not mask.any():
            return math.inf
        return float(np.min(self.vertices.r[mask]))

    def _graph(self):
        if self._graph_csr is None:
            n = self.n_vertices
            self._graph_csr = csr_matrix(
                (self.edge_lengths, (self.edges[:, 0], self.edges[:, 1])),
                shape=(n, n))
        return self._graph_csr

    # -- cell decomposition (used by the volume integrators) ---------------

    @property
    def cell_shape(self):
        return tuple(k if p else k - 1 for k, p in zip(self.shape, self.periodic))

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cell_shape, dtype=int))

    @property
    def cell_measure(self) -> float:
        """Parameter measure of one grid cell (same for all)."""
        return float(np.prod(self.spacing))

    def _cell_axis_refined(self, axis: int, delta: int) -> np.ndarray:
        """Refined-lattice index of sub-node ``delta`` (0, 1, 2) for every
        cell along one axis."""
        k = self.shape[axis]
        if self.periodic[axis]:
            return (2 * np.arange(k) + delta) % (2 * k)
        return 2 * np.arange(k - 1) + delta

    def cell_subsample_r(self) -> np.ndarray:
        """Radial values on the 3^m sub-lattice of every cell, (C, 3^m)."""
        if self._cell_sub_r is None:
            deltas = list(itertools.product((0, 1, 2), repeat=self.m))
            out = np.empty((self.n_cells, len(deltas)))
            for col, delta in enumerate(deltas):
                ix = np.ix_(*[self._cell_axis_refined(ax, d)
                              for ax, d in enumerate(delta)])
                out[:, col] = self.refined_r[ix].reshape(-1)
            self._cell_sub_r = out
        return self._cell_sub_r

    def cell_r_bounds(self):
        """(min, max) of r over each cell's sub-lattice."""
        if self._cell_bounds is None:
            sub = self.cell_subsample_r()
            self._cell_bounds = (sub.min(axis=1), sub.max(axis=1))
        return self._cell_bounds

    def cell_center_values(self):
        """(r, sqrt_det_g) at every cell center, each (C,)."""
        ix = np.ix_(*[self._cell_axis_refined(ax, 1) for ax in range(self.m)])
        return self.refined_r[ix].reshape(-1), self.refined_sdg[ix].reshape(-1)


@dataclass
class BallRegion:
    """Sublevel set {r < t} of the radial function on the mesh."""

    t: float
    inside: np.ndarray            # (N,) vertex mask
    boundary_cells: np.ndarray    # flat cell indices crossed by {r = t}
    truncated: bool

    @property
    def n_inside(self) -> int:
        return int(np.count_nonzero(self.inside))


@dataclass
class EndsReport:
    R: float
    n_ends: int
    n_bounded: int                # far components not reaching the boundary
    component_sizes: list
    critical_free_radius: float


# ---------------------------------------------------------------------------
# construction

def _axis_layout(chart: ChartBase, resolution):
    m = chart.m
    if np.ndim(resolution) == 0:
        res = [int(resolution)] * m
    else:
        res = [int(k) for k in resolution]
        if len(res) != m:
            raise DomainError(
                f"resolution has {len(res)} entries for an m={m} chart")
    for axis, k in enumerate(res):
        if k < MIN_RESOLUTION:
            raise DomainError(
                f"resolution {k} on axis {axis + 1} is below the minimum "
                f"{MIN_RESOLUTION}")
    origin = np.array([chart.domain[i][0] for i in range(m)])
    spans = np.array([chart.domain[i][1] - chart.domain[i][0] for i in range(m)])
    spacing = np.array([spans[i] / (res[i] if chart.periodic[i] else res[i] - 1)
                        for i in range(m)])
    return tuple(res), origin, spacing


def _canonical_offsets(m: int):
    offs = []
    for delta in itertools.product((-1, 0, 1), repeat=m):
        if not any(delta):
            continue
        if next(x for x in delta if x != 0) > 0:
            offs.append(delta)
    return offs


def _offset_edges(mesh_shape, periodic, delta):
    """Vertex/neighbor/midpoint index arrays for one offset direction.

    Returns per-axis index lists; the caller meshes them into the full
    cartesian product.  None when the offset leaves no room on some axis.
    """
    vert, neigh, mid = [], [], []
    for axis, d in enumerate(delta):
        k = mesh_shape[axis]
        if periodic[axis]:
            i = np.arange(k)
            vert.append(i)
            neigh.append((i + d) % k)
            mid.append((2 * i + d) % (2 * k))
        else:
            if d == 1:
                i = np.arange(k - 1)
            elif d == -1:
                i = np.arange(1, k)
            else:
                i = np.arange(k)
            if i.size == 0:
                return None
            vert.append(i)
            neigh.append(i + d)
            mid.append(2 * i + d)
    return vert, neigh, mid


def _mesh_product(index_lists, shape=None):
    grids = np.meshgrid(*index_lists, indexing="ij")
    cols = tuple(g.reshape(-1) for g in grids)
    if shape is None:
        return cols
    return np.ravel_multi_index(cols, shape)


def ambient_for(chart: ChartBase, pole=None) -> Ambient:
    """Ambient model for a chart, optionally recentered at ``pole``."""
    if pole is None:
        return ambient_of(chart)
    if chart.kappa == 0.0:
        return euclidean(chart.n, pole=pole)
    return hyperbolic(chart.n, chart.kappa, pole=pole)


def build_mesh(chart: ChartBase, resolution, pole=None, threads: int = 0,
               chunk: int = DEFAULT_CHUNK) -> MeshGraph:
    """Sample a chart on a grid and assemble the weighted neighbor graph.

    ``resolution`` is the vertex count per axis (one int broadcasts).
    ``pole`` overrides the radial center, which otherwise sits at the image
    of the chart basepoint.  Periodic axes wrap; the others contribute
    truncation faces.
    """
    shape, origin, spacing = _axis_layout(chart, resolution)
    m = chart.m
    amb = ambient_for(chart, pole)

    refined_axes = [origin[i] + 0.5 * spacing[i] * np.arange(
        2 * shape[i] if chart.periodic[i] else 2 * shape[i] - 1)
        for i in range(m)]
    refined_pts = np.stack(
        np.meshgrid(*refined_axes, indexing="ij"), axis=-1)
    refined = grid_geometry(chart, refined_pts, keep_positions=False,
                            chunk=chunk, threads=threads, amb=amb)
    del refined_pts

    evens = tuple([slice(0, None, 2)] * m)

    def vertex_field(arr, extra_dims):
        if arr is None:
            return None
        sub = arr[evens]
        tail = sub.shape[m:]
        return np.ascontiguousarray(sub.reshape((-1,) + tail))

    vertices = PointGeometry(
        kappa=refined.kappa,
        points=vertex_field(refined.points, 1),
        metric=vertex_field(refined.metric, 2),
        sqrt_det_g=vertex_field(refined.sqrt_det_g, 0),
        r=vertex_field(refined.r, 0),
        grad_r_tan_norm=vertex_field(refined.grad_r_tan_norm, 0),
        grad_r_perp_norm=vertex_field(refined.grad_r_perp_norm, 0),
        norm_alpha_sq=vertex_field(refined.norm_alpha_sq, 0),
        at_pole=vertex_field(refined.at_pole, 0),
    )

    # Simpson arc length over each edge: endpoint metrics from the vertex
    # lattice, midpoint metric from the refined lattice
    edge_blocks, length_blocks = [], []
    metric_flat = vertices.metric
    refined_metric = refined.metric
    for delta in _canonical_offsets(m):
        made = _offset_edges(shape, chart.periodic, delta)
        if made is None:
            continue
        vert, neigh, mid = made
        u = _mesh_product(vert, shape)
        v = _mesh_product(neigh, shape)
        mid_ix = _mesh_product(mid)
        d = np.asarray(delta, dtype=float) * spacing

        def speed(gblock):
            q = np.einsum("...ij,i,j->...", gblock, d, d, optimize=True)
            return np.sqrt(np.maximum(q, 0.0))

        q_u = speed(metric_flat[u])
        q_v = speed(metric_flat[v])
        q_mid = speed(refined_metric[mid_ix])
        lengths = (q_u + 4.0 * q_mid + q_v) / 6.0
        if np.any(lengths <= 0.0):
            k = int(np.argmax(lengths <= 0.0))
            raise GeometryError(
                f"degenerate edge of zero length at vertex index {int(u[k])}")
        edge_blocks.append(np.stack([u, v], axis=1))
        length_blocks.append(lengths)

    edges = np.concatenate(edge_blocks, axis=0)
    edge_lengths = np.concatenate(length_blocks, axis=0)

    mesh = MeshGraph(
        chart=chart,
        amb=amb,
        shape=shape,
        origin=origin,
        spacing=spacing,
        points=vertices.points,
        vertices=vertices,
        edges=edges,
        edge_lengths=edge_lengths,
        basepoint=int(np.argmin(vertices.r)),
        refined_r=np.ascontiguousarray(refined.r),
        refined_sdg=np.ascontiguousarray(refined.sqrt_det_g),
    )
    rho, bad = intrinsic_distances(mesh)
    mesh.rho = rho
    mesh.vertices.rho = rho
    mesh.unreachable = bad
    return mesh


def intrinsic_distances(mesh: MeshGraph, source: int = None):
    """Graph distances from a vertex (default: the basepoint).

    These overestimate true intrinsic distances and do not increase under
    refinement at shared vertices.  Unreachable vertices keep distance inf
    and are reported; downstream consumers skip them.
    """
    if source is None:
        source = mesh.basepoint
    dist = dijkstra(mesh._graph(), directed=False, indices=source)
    bad = int(np.count_nonzero(~np.isfinite(dist)))
    if bad:
        warnings.warn(
            f"{bad} mesh vertices are unreachable from vertex {source}; "
            "they are excluded from distance-based quantities",
            RuntimeWarning, stacklevel=2)
    return dist, bad


# ---------------------------------------------------------------------------
# radial machinery

def extrinsic_ball(mesh: MeshGraph, t: float) -> BallRegion:
    """Vertices of the extrinsic ball {r < t} plus the cells its boundary
    crosses.  Falls back to the basepoint alone when t is below the first
    sampled radius; warns when the ball reaches the truncation faces."""
    if not t > 0.0:
        raise DomainError(f"ball radius must be positive, got {t:g}")
    inside = mesh.vertices.r < t
    if not inside.any():
        inside = np.zeros(mesh.n_vertices, dtype=bool)
        inside[mesh.basepoint] = True
    truncated = t > mesh.r_truncation_min
    if truncated:
        warnings.warn(
            f"ball radius {t:g} exceeds the smallest truncation-face radius "
            f"{mesh.r_truncation_min:g}; the region is cut off by the "
            "parameter box", RuntimeWarning, stacklevel=2)
    rmin, rmax = mesh.cell_r_bounds()
    boundary = np.nonzero((rmin < t) & (t <= rmax))[0]
    return BallRegion(t=float(t), inside=inside, boundary_cells=boundary,
                      truncated=bool(truncated))


def critical_free_radius(mesh: MeshGraph,
                         epsilon_crit: float = EPSILON_CRIT) -> float:
    """Largest sampled radius whose vertex has |grad_M r| below the
    threshold; zero when no vertex is flagged.

    The radial distance is guaranteed critical-point free past this value
    only as far as the sampling can see; the estimate is resolution
    dependent near saddle points that fall between vertices.
    """
    flagged = mesh.vertices.grad_r_tan_norm < epsilon_crit
    flagged &= ~mesh.vertices.at_pole
    if not flagged.any():
        return 0.0
    return float(np.max(mesh.vertices.r[flagged]))


def count_ends(mesh: MeshGraph, R: float,
               epsilon_crit: float = EPSILON_CRIT) -> EndsReport:
    """Number of unbounded components of {r > R}.

    A component counts as an end when it reaches a truncation face (the
    discrete stand-in for being unbounded); components that stay interior
    are bounded pockets and are reported separately, not counted.
    """
    r0 = critical_free_radius(mesh, epsilon_crit)
    if not R > r0:
        raise DomainError(
            f"end counting needs R > critical-free radius estimate "
            f"{r0:g}, got R={R:g}")
    if R >= mesh.r_max:
        raise DomainError(
            f"R={R:g} is not below the largest sampled radius {mesh.r_max:g}")

    far = mesh.vertices.r > R
    keep = far[mesh.edges[:, 0]] & far[mesh.edges[:, 1]]
    sub = csr_matrix(
        (mesh.edge_lengths[keep],
         (mesh.edges[keep, 0], mesh.edges[keep, 1])),
        shape=(mesh.n_vertices, mesh.n_vertices))
    _, labels = connected_components(sub, directed=False)

    face = mesh.boundary_vertex_mask()
    far_labels = labels[far]
    touching_labels = np.unique(labels[far & face])
    uniq, counts = np.unique(far_labels, return_counts=True)
    sizes = []
    n_ends = 0
    n_bounded = 0
    for lab, cnt in zip(uniq, counts):
        is_end = lab in touching_labels
        sizes.append({"vertices": int(cnt), "end": bool(is_end)})
        if is_end:
            n_ends += 1
        else:
            n_bounded += 1
    sizes.sort(key=lambda s: (-s["vertices"], not s["end"]))
    return EndsReport(R=float(R), n_ends=n_ends, n_bounded=n_bounded,
                      component_sizes=sizes, critical_free_radius=r0)


def ends_stability(mesh: MeshGraph, n_samples: int = 5,
                   epsilon_crit: float = EPSILON_CRIT,
                   margin_fraction: float = 0.2) -> dict:
    """End counts across a window of radii clear of both the critical
    region and the truncation faces; stable means all counts agree."""
    r0 = critical_free_radius(mesh, epsilon_crit)
    r_cap = mesh.r_truncation_min
    if not math.isfinite(r_cap):
        r_cap = mesh.r_max
    r_hi = ENDS_WINDOW_FRACTION * r_cap
    r_lo = r0 + margin_fraction * (r_hi - r0)
    if not r_lo < r_hi:
        raise DomainError(
            f"no radius window clear of the critical region: estimate "
            f"{r0:g} against usable maximum {r_hi:g}")
    radii = np.linspace(r_lo, r_hi, n_samples)
    counts = [count_ends(mesh, float(t), epsilon_crit).n_ends for t in radii]
    return {
        "radii": [float(t) for t in radii],
        "counts": counts,
        "stable": len(set(counts)) == 1,
        "n_ends": counts[-1],
    }


def mesh_dump(mesh: MeshGraph, path) -> None:
    """Write per-vertex data as CSV, one row per vertex in grid order."""
    m = mesh.m
    header = (["index"] + [f"u{i + 1}" for i in range(m)]
              + ["r", "rho", "alpha_norm", "grad_r_tan"])
    verts = mesh.vertices
    alpha = verts.norm_alpha

    def rows():
        for k in range(mesh.n_vertices):
            yield ([k] + [mesh.points[k, i] for i in range(m)]
                   + [verts.r[k], mesh.rho[k], alpha[k],
                      verts.grad_r_tan_norm[k]])

    write_csv(path, header, rows())
