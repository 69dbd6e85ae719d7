"""Pointwise geometry of an immersed submanifold.

Everything here is derived from second-order jets of a chart: the induced
metric, the second fundamental form and its norm, and the split of the
ambient radial gradient into parts tangent and normal to the submanifold.
Bulk evaluation over large point sets is chunked and optionally threaded;
results are identical either way.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .errors import (CriticalPointError, DegeneratePlaneError, DomainError,
                     GeometryError)
from .exprchart import ChartBase, eval_chart
from .spaceform import Ambient, c_kappa, euclidean, hyperbolic, s_kappa

__all__ = ["PointGeometry", "ambient_of", "point_geometry", "grid_geometry",
           "sectional_curvature", "extrinsic_sphere_curvature",
           "level_set_tangent_plane", "hypersurface_principal_curvatures"]

# immersion rank tolerance: reject charts whose metric is this close to singular
RANK_TOL = 1e-10
# below this ambient distance a point counts as the pole itself
POLE_TOL = 1e-13
# |grad_M r| below this means the radial function is critical at the point
CRITICAL_TOL = 1e-8
PLANE_TOL = 1e-8

DEFAULT_CHUNK = 32768


@dataclass
class PointGeometry:
    """Geometry of one chart point or a batch of them.

    Arrays share the leading batch shape.  ``alpha`` and the radial
    gradient vectors are kept only when requested; ``rho`` (intrinsic
    distance to the basepoint) starts as None and is filled in by mesh
    post-processing.
    """

    kappa: float
    points: np.ndarray          # (..., m)
    metric: np.ndarray          # (..., m, m)
    sqrt_det_g: np.ndarray      # (...)
    r: np.ndarray               # (...) ambient distance to the pole
    grad_r_tan_norm: np.ndarray
    grad_r_perp_norm: np.ndarray
    norm_alpha_sq: np.ndarray
    position: np.ndarray = None         # (..., ncoords)
    jacobian: np.ndarray = None         # (..., ncoords, m), coordinate-major
    alpha: np.ndarray = None            # (..., ncoords, m, m)
    grad_M_r: np.ndarray = None         # (..., ncoords)
    grad_perp_r: np.ndarray = None      # (..., ncoords)
    rho: np.ndarray = None              # (...) intrinsic distance, mesh-filled
    at_pole: np.ndarray = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return self.points.shape[-1]

    @property
    def batch_shape(self):
        return self.points.shape[:-1]

    @property
    def size(self) -> int:
        return int(np.prod(self.batch_shape, dtype=int))

    @property
    def norm_alpha(self) -> np.ndarray:
        return np.sqrt(self.norm_alpha_sq)

    def take(self, idx) -> "PointGeometry":
        """Subset along a flat batch (flatten first if multi-dimensional)."""
        def pick(arr, extra_dims):
            if arr is None:
                return None
            flat = arr.reshape((-1,) + arr.shape[arr.ndim - extra_dims:]) \
                if extra_dims else arr.reshape(-1)
            return flat[idx]

        return PointGeometry(
            kappa=self.kappa,
            points=pick(self.points, 1),
            metric=pick(self.metric, 2),
            sqrt_det_g=pick(self.sqrt_det_g, 0),
            r=pick(self.r, 0),
            grad_r_tan_norm=pick(self.grad_r_tan_norm, 0),
            grad_r_perp_norm=pick(self.grad_r_perp_norm, 0),
            norm_alpha_sq=pick(self.norm_alpha_sq, 0),
            position=pick(self.position, 1),
            jacobian=pick(self.jacobian, 2),
            alpha=pick(self.alpha, 3),
            grad_M_r=pick(self.grad_M_r, 1),
            grad_perp_r=pick(self.grad_perp_r, 1),
            rho=pick(self.rho, 0),
            at_pole=pick(self.at_pole, 0),
        )


def ambient_of(chart: ChartBase) -> Ambient:
    """Ambient space of a chart, with the pole at the basepoint's image."""
    pole = np.asarray(chart.eval_positions(np.asarray(chart.basepoint)), dtype=float)
    if chart.kappa == 0.0:
        return euclidean(chart.n, pole=pole)
    return hyperbolic(chart.n, chart.kappa, pole=pole)


# ---------------------------------------------------------------------------
# core jet -> geometry pipeline

def _geometry_block(chart, amb, pts, keep_alpha, keep_vectors, keep_positions):
    """All pointwise quantities for a flat (N, m) block of chart points."""
    out_jets = chart.eval_jets(jets.seed_point(pts))
    eta = amb.signature()
    pos = np.stack([j.value for j in out_jets], axis=-1)          # (N, a)
    jac = np.stack([j.grad for j in out_jets], axis=-2)           # (N, a, m)
    hess = np.stack([j.hess for j in out_jets], axis=-3)          # (N, a, m, m)

    g = np.einsum("...ai,...aj,a->...ij", jac, jac, eta, optimize=True)
    g = 0.5 * (g + np.swapaxes(g, -1, -2))
    try:
        chol = np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        bad = _first_rank_defect(g, pts)
        raise GeometryError(
            f"chart '{chart.name}' is not an immersion near {bad}")
    diag = np.diagonal(chol, axis1=-2, axis2=-1)
    if np.any(np.min(diag, axis=-1) <= RANK_TOL * np.max(diag, axis=-1)):
        bad = _first_rank_defect(g, pts)
        raise GeometryError(
            f"chart '{chart.name}' is rank-deficient near {bad}")
    sqrt_det_g = np.prod(diag, axis=-1)

    # second fundamental form: strip the position part (curved ambient only),
    # then the part tangent to the immersion
    if amb.kappa != 0.0:
        hp = np.einsum("...aij,a,...a->...ij", hess, eta, pos, optimize=True)
        work = hess - amb.kappa * hp[..., None, :, :] * pos[..., :, None, None]
    else:
        work = hess
    t_cov = np.einsum("...aij,a,...al->...ijl", work, eta, jac, optimize=True)
    m = pts.shape[-1]
    b = np.moveaxis(t_cov, -1, -3).reshape(pts.shape[:-1] + (m, m * m))
    coeff = np.linalg.solve(g, b).reshape(pts.shape[:-1] + (m, m, m))
    alpha = work - np.einsum("...kij,...ak->...aij", coeff, jac, optimize=True)

    w = np.linalg.solve(g[..., None, :, :], alpha)
    nasq = np.einsum("...aij,...aji,a->...", w, w, eta, optimize=True)
    nasq = np.maximum(nasq, 0.0)

    r, tan_norm, perp_norm, grad_M, grad_perp, at_pole = _radial_split(
        amb, pos, jac, g, keep_vectors)

    return PointGeometry(
        kappa=amb.kappa,
        points=pts,
        metric=g,
        sqrt_det_g=sqrt_det_g,
        r=r,
        grad_r_tan_norm=tan_norm,
        grad_r_perp_norm=perp_norm,
        norm_alpha_sq=nasq,
        position=pos if keep_positions else None,
        jacobian=jac if (keep_alpha or keep_vectors) else None,
        alpha=alpha if keep_alpha else None,
        grad_M_r=grad_M,
        grad_perp_r=grad_perp,
        at_pole=at_pole,
    )


def _first_rank_defect(g, pts):
    eig = np.linalg.eigvalsh(g.reshape((-1,) + g.shape[-2:]))
    ratio = np.sqrt(np.maximum(eig[:, 0], 0.0)
                    / np.maximum(eig[:, -1], np.finfo(float).tiny))
    k = int(np.argmin(ratio))
    return np.array2string(pts.reshape(-1, pts.shape[-1])[k], precision=6)


def _radial_split(amb, pos, jac, g, keep_vectors):
    """Distance to the pole and the tangent/normal split of its gradient.

    At the pole itself the gradient has no limit, but its tangential norm
    tends to 1 and the normal norm to 0; those limits are substituted.
    """
    eta = amb.signature()
    if amb.kappa == 0.0:
        d = pos - amb.pole
        r = np.sqrt(np.einsum("...a,...a->...", d, d))
        at_pole = r <= POLE_TOL
        safe_r = np.where(at_pole, 1.0, r)
        grad_amb = d / safe_r[..., None]
    else:
        c = amb.kappa * np.einsum("...a,a,a->...", pos, eta, amb.pole,
                                  optimize=True)
        c = np.maximum(c, 1.0)
        sk = np.sqrt(-amb.kappa)
        u = c - 1.0
        r = np.log1p(u + np.sqrt(u * (u + 2.0))) / sk
        at_pole = r <= POLE_TOL
        denom = np.sqrt(np.maximum(c * c - 1.0, 0.0))
        safe = np.where(at_pole, 1.0, denom)
        grad_amb = sk * (c[..., None] * pos - amb.pole) / safe[..., None]

    dr = np.einsum("...ai,a,...a->...i", jac, eta, grad_amb, optimize=True)
    coeffs = np.linalg.solve(g, dr[..., None])[..., 0]
    tan_sq = np.einsum("...i,...i->...", dr, coeffs)
    tan_sq = np.clip(tan_sq, 0.0, 1.0)
    tan_norm = np.where(at_pole, 1.0, np.sqrt(tan_sq))
    perp_norm = np.where(at_pole, 0.0, np.sqrt(1.0 - tan_sq))
    r = np.where(at_pole, 0.0, r)

    grad_M = grad_perp = None
    if keep_vectors:
        grad_M = np.einsum("...i,...ai->...a", coeffs, jac, optimize=True)
        grad_perp = grad_amb - grad_M
        mask = at_pole[..., None]
        grad_M = np.where(mask, 0.0, grad_M)
        grad_perp = np.where(mask, 0.0, grad_perp)
    return r, tan_norm, perp_norm, grad_M, grad_perp, at_pole


def point_geometry(chart: ChartBase, point, amb: Ambient = None) -> PointGeometry:
    """Full geometry at a single chart point, vectors and all.

    ``amb`` overrides the default ambient (its pole in particular); it must
    agree with the chart's curvature and dimension.
    """
    point = np.asarray(point, dtype=float)
    if point.ndim != 1:
        raise DomainError("point_geometry expects a single chart point")
    eval_chart(chart, point)  # domain check with a clear error
    amb = _resolve_ambient(chart, amb)
    return _geometry_block(chart, amb, point[None, :], keep_alpha=True,
                           keep_vectors=True, keep_positions=True).take(0)


def _resolve_ambient(chart: ChartBase, amb) -> Ambient:
    if amb is None:
        return ambient_of(chart)
    if amb.kappa != chart.kappa or amb.n != chart.n:
        raise DomainError("ambient does not match the chart's declaration")
    return amb


def grid_geometry(chart: ChartBase, points, keep_alpha=False,
                  keep_vectors=False, keep_positions=True,
                  chunk=DEFAULT_CHUNK, threads=0, amb: Ambient = None) -> PointGeometry:
    """Geometry over a batch of chart points, chunked to bound memory.

    ``threads`` > 1 fans chunks out to a thread pool; the output does not
    depend on the thread count.
    """
    amb = _resolve_ambient(chart, amb)
    points = np.asarray(points, dtype=float)
    batch = points.shape[:-1]
    flat = points.reshape(-1, points.shape[-1])
    n_pts = flat.shape[0]
    if n_pts == 0:
        raise DomainError("grid_geometry needs at least one point")

    spans = [slice(i, min(i + chunk, n_pts)) for i in range(0, n_pts, chunk)]

    def run(sl):
        return _geometry_block(chart, amb, flat[sl], keep_alpha,
                               keep_vectors, keep_positions)

    if threads and threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(run, spans))
    else:
        blocks = [run(sl) for sl in spans]

    def cat(name):
        parts = [getattr(blk, name) for blk in blocks]
        if parts[0] is None:
            return None
        return np.concatenate(parts, axis=0)

    geom = PointGeometry(
        kappa=amb.kappa,
        points=flat,
        metric=cat("metric"),
        sqrt_det_g=cat("sqrt_det_g"),
        r=cat("r"),
        grad_r_tan_norm=cat("grad_r_tan_norm"),
        grad_r_perp_norm=cat("grad_r_perp_norm"),
        norm_alpha_sq=cat("norm_alpha_sq"),
        position=cat("position"),
        jacobian=cat("jacobian"),
        alpha=cat("alpha"),
        grad_M_r=cat("grad_M_r"),
        grad_perp_r=cat("grad_perp_r"),
        at_pole=cat("at_pole"),
    )
    if batch != (n_pts,):
        geom = _reshape_batch(geom, batch)
    return geom


def _reshape_batch(geom: PointGeometry, batch) -> PointGeometry:
    def fix(arr, extra):
        if arr is None:
            return None
        return arr.reshape(batch + arr.shape[1:1 + extra])

    return PointGeometry(
        kappa=geom.kappa,
        points=fix(geom.points, 1),
        metric=fix(geom.metric, 2),
        sqrt_det_g=fix(geom.sqrt_det_g, 0),
        r=fix(geom.r, 0),
        grad_r_tan_norm=fix(geom.grad_r_tan_norm, 0),
        grad_r_perp_norm=fix(geom.grad_r_perp_norm, 0),
        norm_alpha_sq=fix(geom.norm_alpha_sq, 0),
        position=fix(geom.position, 1),
        jacobian=fix(geom.jacobian, 2),
        alpha=fix(geom.alpha, 3),
        grad_M_r=fix(geom.grad_M_r, 1),
        grad_perp_r=fix(geom.grad_perp_r, 1),
        rho=fix(geom.rho, 0),
        at_pole=fix(geom.at_pole, 0),
    )


# ---------------------------------------------------------------------------
# curvature at a point

def _require_single(geom: PointGeometry, what: str):
    if geom.batch_shape != ():
        raise DomainError(f"{what} works on a single-point geometry")
    if geom.alpha is None or geom.jacobian is None:
        raise DomainError(f"{what} needs geometry from point_geometry "
                          "(second fundamental form kept)")


def _alpha_on(geom: PointGeometry, x, y) -> np.ndarray:
    """Second fundamental form on two chart-coefficient vectors."""
    return np.einsum("aij,i,j->a", geom.alpha, x, y, optimize=True)


def _eta(geom: PointGeometry) -> np.ndarray:
    nc = geom.alpha.shape[-3] if geom.alpha is not None else geom.position.shape[-1]
    eta = np.ones(nc)
    if geom.kappa != 0.0:
        eta[-1] = -1.0
    return eta


def sectional_curvature(geom: PointGeometry, x, y) -> float:
    """Intrinsic sectional curvature of the plane spanned by two chart
    tangent vectors, from the ambient curvature plus the second
    fundamental form."""
    _require_single(geom, "sectional_curvature")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    eta = _eta(geom)
    g = geom.metric
    gxx = x @ g @ x
    gyy = y @ g @ y
    gxy = x @ g @ y
    area_sq = gxx * gyy - gxy * gxy
    if area_sq <= PLANE_TOL * max(1.0, gxx * gyy):
        raise DegeneratePlaneError("tangent vectors do not span a plane")
    axx = _alpha_on(geom, x, x)
    ayy = _alpha_on(geom, y, y)
    axy = _alpha_on(geom, x, y)
    num = np.sum(eta * axx * ayy) - np.sum(eta * axy * axy)
    return float(geom.kappa + num / area_sq)


def level_set_tangent_plane(geom: PointGeometry):
    """Two g-orthonormal chart vectors spanning a plane tangent to the
    distance sphere through the point.

    Picks, among the chart basis directions projected off the radial
    gradient, the two of largest metric norm (ties break to the lower
    index), then orthonormalizes.
    """
    _require_single(geom, "level_set_tangent_plane")
    m = geom.m
    if m < 3:
        raise DegeneratePlaneError(
            f"level-set planes need m >= 3, chart has m = {m}")
    if geom.at_pole or geom.grad_r_tan_norm <= CRITICAL_TOL:
        raise CriticalPointError(
            "radial distance is critical here; no transverse sphere")

    eta = _eta(geom)
    g = geom.metric
    dr = np.einsum("ai,a,a->i", geom.jacobian, eta, geom.grad_M_r,
                   optimize=True)
    sharp = np.linalg.solve(g, dr)
    dr_sq = float(dr @ sharp)

    cands = []
    for i in range(m):
        e = np.zeros(m)
        e[i] = 1.0
        v = e - (dr[i] / dr_sq) * sharp
        cands.append((float(v @ g @ v), i, v))
    cands.sort(key=lambda t: (-t[0], t[1]))

    x = cands[0][2]
    x = x / np.sqrt(x @ g @ x)
    y = None
    for _, _, v in cands[1:]:
        w = v - (x @ g @ v) * x
        nsq = float(w @ g @ w)
        if nsq > PLANE_TOL:
            y = w / np.sqrt(nsq)
            break
    if y is None:
        raise DegeneratePlaneError("no second independent level-set direction")
    return x, y


def extrinsic_sphere_curvature(geom: PointGeometry, plane=None,
                               mode: str = "exact"):
    """Sectional curvature of the extrinsic distance sphere through a point.

    ``mode='exact'`` evaluates the curvature of the given tangent plane of
    the sphere (two g-orthonormal chart vectors annihilated by dr; defaults
    to `level_set_tangent_plane`).  ``mode='bounds'`` returns
    ``(lower, upper, valid)`` where the bounds depend only on the norm of
    the second fundamental form and the radial split, and ``valid`` marks
    whether the comparison term dominates.
    """
    _require_single(geom, "extrinsic_sphere_curvature")
    if geom.m < 3:
        raise DegeneratePlaneError(
            "distance spheres have 2-planes only for m >= 3")
    if geom.at_pole or float(geom.r) <= 0.0:
        raise CriticalPointError("the pole has no sphere through it")
    tan = float(geom.grad_r_tan_norm)
    if tan <= CRITICAL_TOL:
        raise CriticalPointError("radial distance is critical here")

    r = float(geom.r)
    ratio = c_kappa(geom.kappa, r) / s_kappa(geom.kappa, r)
    tan_sq = tan * tan

    if mode == "bounds":
        na = float(np.sqrt(geom.norm_alpha_sq))
        perp = float(geom.grad_r_perp_norm)
        upper = geom.kappa + na * na + (ratio + perp * na) ** 2 / tan_sq
        lower = (geom.kappa - 2.0 * na * na
                 + (ratio * ratio - 2.0 * perp * na * ratio) / tan_sq)
        valid = ratio > perp * na
        return float(lower), float(upper), bool(valid)
    if mode != "exact":
        raise DomainError(f"unknown mode {mode!r}")

    if plane is None:
        x, y = level_set_tangent_plane(geom)
    else:
        x, y = (np.asarray(v, dtype=float) for v in plane)
        g = geom.metric
        checks = (abs(x @ g @ x - 1.0), abs(y @ g @ y - 1.0), abs(x @ g @ y))
        if max(checks) > 1e-6:
            raise DegeneratePlaneError("plane vectors must be g-orthonormal")
        eta = _eta(geom)
        dr = np.einsum("ai,a,a->i", geom.jacobian, eta, geom.grad_M_r,
                       optimize=True)
        if max(abs(float(dr @ x)), abs(float(dr @ y))) > 1e-6 * tan:
            raise DegeneratePlaneError("plane is not tangent to the sphere")

    eta = _eta(geom)
    axx = _alpha_on(geom, x, x)
    ayy = _alpha_on(geom, y, y)
    axy = _alpha_on(geom, x, y)
    pxx = float(np.sum(eta * geom.grad_perp_r * axx))
    pyy = float(np.sum(eta * geom.grad_perp_r * ayy))
    pxy = float(np.sum(eta * geom.grad_perp_r * axy))
    gauss = float(np.sum(eta * axx * ayy) - np.sum(eta * axy * axy))
    mixed = ((ratio + pxx) * (ratio + pyy) - pxy * pxy) / tan_sq
    return float(geom.kappa + gauss + mixed)


def hypersurface_principal_curvatures(geom: PointGeometry):
    """Principal curvatures of a codimension-one immersion at one point.

    Returns ``(curvatures, normal)``: the ascending eigenvalues of the
    shape operator, and the unit normal that scalarized the second
    fundamental form.  The normal sign is inherited from the largest
    alpha component; flipping it flips every curvature, so callers fix
    orientation by one known sign.
    """
    _require_single(geom, "hypersurface_principal_curvatures")
    ncoords = geom.alpha.shape[-3]
    n = ncoords if geom.kappa == 0.0 else ncoords - 1
    if geom.m != n - 1:
        raise DomainError(
            f"principal curvatures need codimension one, got m = {geom.m} "
            f"in ambient dimension {n}")
    eta = _eta(geom)
    norms = np.einsum("aij,aij,a->ij", geom.alpha, geom.alpha, eta,
                      optimize=True)
    i0, j0 = np.unravel_index(int(np.argmax(norms)), norms.shape)
    peak = float(norms[i0, j0])
    if peak <= 0.0:
        raise DomainError("second fundamental form vanishes here; "
                          "the normal direction is undetermined")
    nu = geom.alpha[:, i0, j0] / math.sqrt(peak)
    h = np.einsum("aij,a,a->ij", geom.alpha, eta, nu, optimize=True)
    # generalized symmetric problem h v = k g v via the Cholesky factor
    L = np.linalg.cholesky(geom.metric)
    Li = np.linalg.inv(L)
    return np.linalg.eigvalsh(Li @ h @ Li.T), nu
