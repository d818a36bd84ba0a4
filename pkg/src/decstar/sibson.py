"""Sibson (natural-neighbor) coordinates on dual cells and dual Whitney forms.

2D coordinates are exact: every Voronoi region is obtained by half-plane
clipping, and the incremental region of an inserted point reduces to a single
half-plane clip of each precomputed site region, which vectorizes over query
points.  3D coordinates are estimated by regular-grid sampling of the cell.

Dual Whitney forms attach interpolants to dual mesh cells: Sibson coordinates
to dual vertices, antisymmetric gradient pairs to dual edges, a weighted
primal-2-form partition to dual faces (3D), and normalized characteristic
functions to top-dimensional dual cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import DualMesh, SimplicialComplex, barycenter


class SibsonError(ValueError):
    pass


# ---------------------------------------------------------------------------
# polygon primitives (2D)


def polygon_area(loop: np.ndarray) -> float:
    loop = np.asarray(loop, dtype=float)
    x, y = loop[:, 0], loop[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def ensure_ccw(loop: np.ndarray) -> np.ndarray:
    loop = np.asarray(loop, dtype=float)
    return loop if polygon_area(loop) >= 0 else loop[::-1]


def clip_halfplane(loop: np.ndarray, point, normal) -> np.ndarray:
    """Sutherland-Hodgman clip keeping {y : (y - point) . normal <= 0}."""
    point = np.asarray(point, dtype=float)
    normal = np.asarray(normal, dtype=float)
    out = []
    m = len(loop)
    d = (loop - point) @ normal
    for i in range(m):
        a, b = loop[i], loop[(i + 1) % m]
        da, db = d[i], d[(i + 1) % m]
        if da <= 0:
            out.append(a)
        if (da <= 0) != (db <= 0):
            t = da / (da - db)
            out.append(a + t * (b - a))
    return np.array(out) if out else np.empty((0, 2))


def points_in_polygon(loop: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Even-odd crossing test, vectorized over query points."""
    loop = np.asarray(loop, dtype=float)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    x, y = pts[:, 0][:, None], pts[:, 1][:, None]
    ax, ay = loop[:, 0][None, :], loop[:, 1][None, :]
    bx, by = np.roll(loop[:, 0], -1)[None, :], np.roll(loop[:, 1], -1)[None, :]
    straddles = (ay > y) != (by > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = ax + (y - ay) * (bx - ax) / (by - ay)
    crossings = straddles & (x < xint)
    return crossings.sum(axis=1) % 2 == 1


def _clip_areas_batch(loop: np.ndarray, midpts: np.ndarray,
                      normals: np.ndarray) -> np.ndarray:
    """Areas of loop intersected with {y : (y - midpt) . n_hat <= 0}, batched.

    Emits, per polygon edge, a pair of points that equals the Sutherland-
    Hodgman output where the edge interacts with the half-plane and collapses
    to collinear points on the clip line otherwise, so the shoelace sum over
    the emitted cyclic sequence is the exact clipped area.
    """
    loop = np.asarray(loop, dtype=float)
    a = loop
    b = np.roll(loop, -1, axis=0)
    nrm = np.linalg.norm(normals, axis=1, keepdims=True)
    nhat = normals / np.where(nrm == 0.0, 1.0, nrm)
    da = np.einsum("md,qd->qm", a, nhat) - np.einsum("qd,qd->q", midpts, nhat)[:, None]
    db = np.einsum("md,qd->qm", b, nhat) - np.einsum("qd,qd->q", midpts, nhat)[:, None]
    denom = da - db
    t = np.where(np.abs(denom) > 0, da / np.where(denom == 0, 1.0, denom), 0.0)
    inter = a[None] + t[..., None] * (b - a)[None]
    proj_a = a[None] - da[..., None] * nhat[:, None, :]
    proj_b = b[None] - db[..., None] * nhat[:, None, :]
    a_in = (da <= 0)[..., None]
    b_in = (db <= 0)[..., None]
    q1 = np.where(a_in, a[None], np.where(b_in, inter, proj_a))
    q2 = np.where(b_in, b[None], np.where(a_in, inter, proj_b))
    seq = np.empty((len(midpts), 2 * len(loop), 2))
    seq[:, 0::2] = q1
    seq[:, 1::2] = q2
    nxt = np.roll(seq, -1, axis=1)
    return 0.5 * np.sum(seq[..., 0] * nxt[..., 1] - seq[..., 1] * nxt[..., 0],
                        axis=1)


# ---------------------------------------------------------------------------
# cells


@dataclass(frozen=True)
class PolyCell:
    """A polygonal (2D) or polyhedral (3D) cell of the dual mesh.

    2D: `vertices` is the ordered boundary loop (counter-clockwise).
    3D: `faces` lists boundary loops into `vertices`; inside tests use the
    star decomposition around `generator`.
    """

    vertices: np.ndarray
    faces: tuple | None = None
    generator: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "vertices",
                           np.asarray(self.vertices, dtype=float))

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def measure(self) -> float:
        if self.dim == 2:
            return abs(polygon_area(self.vertices))
        return sum(abs(np.linalg.det(t[1:] - t[0])) / 6.0
                   for t in self._star_tets())

    @property
    def diameter(self) -> float:
        v = self.vertices
        return float(max(np.linalg.norm(v[i] - v[j])
                         for i in range(len(v)) for j in range(i + 1, len(v))))

    def _star_tets(self):
        g = self.generator if self.generator is not None else self.vertices.mean(0)
        tets = []
        for face in self.faces:
            pts = self.vertices[list(face)]
            for i in range(1, len(pts) - 1):
                tets.append(np.array([g, pts[0], pts[i], pts[i + 1]]))
        return tets

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.dim == 2:
            return points_in_polygon(self.vertices, pts)
        inside = np.zeros(len(pts), dtype=bool)
        for tet in self._star_tets():
            E = (tet[1:] - tet[0]).T
            try:
                coef = np.linalg.solve(E, (pts - tet[0]).T)
            except np.linalg.LinAlgError:
                continue
            lam = np.vstack([1.0 - coef.sum(axis=0), coef])
            inside |= np.all(lam >= -1e-12, axis=0)
        return inside

    def boundary_distance(self, x) -> float:
        """Distance from x to the cell boundary (2D only)."""
        x = np.asarray(x, dtype=float)
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        d = w - v
        t = np.clip(np.einsum("id,id->i", x - v, d)
                    / np.einsum("id,id->i", d, d), 0.0, 1.0)
        proj = v + t[:, None] * d
        return float(np.linalg.norm(proj - x, axis=1).min())


@dataclass(frozen=True)
class SibsonEvaluation:
    """Sibson coordinates at one point, with the intermediate measures."""

    x: np.ndarray
    coords: np.ndarray  # lambda-bar per site
    site_measures: np.ndarray  # C_i
    inserted_measure: float  # D(x)
    inserted_overlap: np.ndarray  # D(x) cap C_i
    gradients: np.ndarray | None = None


# ---------------------------------------------------------------------------
# clipped Voronoi measures


def is_convex(loop: np.ndarray, tol: float = 1e-12) -> bool:
    loop = ensure_ccw(np.asarray(loop, dtype=float))
    d = np.roll(loop, -1, axis=0) - loop
    cross = d[:, 0] * np.roll(d, -1, axis=0)[:, 1] - d[:, 1] * np.roll(d, -1, axis=0)[:, 0]
    scale = max(abs(polygon_area(loop)), 1e-300)
    return bool(np.all(cross >= -tol * scale))


def _site_regions_within(loop: np.ndarray, domain: np.ndarray) -> list:
    """Voronoi region of each site of `loop`, clipped to `domain`."""
    regions = []
    for i, vi in enumerate(loop):
        region = domain
        for j, vj in enumerate(loop):
            if j == i or np.allclose(vi, vj):
                continue
            mid = 0.5 * (vi + vj)
            region = clip_halfplane(region, mid, vj - vi)
            if len(region) == 0:
                break
        regions.append(region)
    return regions


def voronoi_site_regions(cell: PolyCell) -> list:
    """Per-vertex Voronoi regions of the cell, clipped to the cell (2D)."""
    if cell.dim != 2:
        raise SibsonError("exact site regions are 2D only")
    loop = ensure_ccw(cell.vertices)
    return _site_regions_within(loop, loop)


def _box_loop(center: np.ndarray, half: float) -> np.ndarray:
    cx, cy = center
    return np.array([[cx - half, cy - half], [cx + half, cy - half],
                     [cx + half, cy + half], [cx - half, cy + half]])


def clipped_voronoi_measures(cell: PolyCell, x=None, resolution: int = 64):
    """Measures of the sites' clipped Voronoi regions; with an inserted point
    x, the overlaps D(x) cap C_i instead.

    2D measures are exact; 3D measures are grid-sampled estimates.
    """
    if cell.dim == 3:
        return _sampled_measures(cell, x, resolution)
    loop = ensure_ccw(cell.vertices)
    regions = voronoi_site_regions(cell)
    if x is None:
        return np.array([abs(polygon_area(r)) if len(r) >= 3 else 0.0
                         for r in regions])
    x = np.asarray(x, dtype=float)
    if not cell.contains(x)[0]:
        raise SibsonError("inserted point lies outside the cell")
    dists = np.linalg.norm(loop - x, axis=1)
    if dists.min() <= 1e-12 * cell.diameter:
        raise SibsonError("inserted point coincides with a cell vertex")
    if cell.boundary_distance(x) <= 1e-12 * cell.diameter:
        raise SibsonError("inserted point lies on the cell boundary")
    overlaps = np.empty(len(loop))
    for i, (vi, region) in enumerate(zip(loop, regions)):
        if len(region) < 3:
            overlaps[i] = 0.0
            continue
        mid = (0.5 * (x + vi))[None, :]
        overlaps[i] = max(
            float(_clip_areas_batch(region, mid, (vi - x)[None, :])[0]), 0.0
        )
    return overlaps


def _sampled_measures(cell: PolyCell, x, resolution: int):
    pts, vox = _sample_grid(cell, resolution)
    sites = cell.vertices
    d2 = ((pts[:, None, :] - sites[None, :, :]) ** 2).sum(axis=2)
    nearest = d2.argmin(axis=1)
    if x is None:
        return np.bincount(nearest, minlength=len(sites)) * vox
    x = np.asarray(x, dtype=float)
    dx2 = ((pts - x) ** 2).sum(axis=1)
    taken = dx2 < d2.min(axis=1)
    counts = np.bincount(nearest[taken], minlength=len(sites))
    return counts * vox


def _sample_grid(cell: PolyCell, resolution: int):
    lo = cell.vertices.min(axis=0)
    hi = cell.vertices.max(axis=0)
    axes = [np.linspace(l, h, resolution, endpoint=False)
            + (h - l) / (2 * resolution) for l, h in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, cell.dim)
    vox = np.prod((hi - lo) / resolution)
    inside = cell.contains(grid)
    if inside.sum() < 10:
        raise SibsonError("sampling resolution too coarse for this cell")
    return grid[inside], float(vox)


# ---------------------------------------------------------------------------
# Sibson coordinates


def _pad_regions(regions: list) -> list:
    """Pad region loops to a common length by repeating the last vertex;
    repeated vertices do not change clipped areas."""
    maxlen = max(len(r) for r in regions)
    return [
        np.vstack([r, np.repeat(r[-1:], maxlen - len(r), axis=0)])
        if len(r) >= 3 else None
        for r in regions
    ]


class SibsonCell:
    """Sibson coordinate evaluator on one cell; precomputes site regions.

    Two variants of the area ratios are supported.  `restricted=True`
    intersects every Voronoi region with the cell itself, which keeps the
    construction meaningful on non-convex cells.  `restricted=False` uses the
    classical unrestricted Voronoi diagram of the sites, which is the variant
    with exact linear precision; it is the automatic choice on convex cells.
    """

    def __init__(self, cell: PolyCell, resolution: int = 64,
                 restricted: bool | None = None):
        self.cell = cell
        self.resolution = resolution
        if cell.dim == 2:
            loop = ensure_ccw(cell.vertices)
            self.sites = loop
            if restricted is None:
                restricted = not is_convex(loop)
            self.restricted = restricted
            regions = _site_regions_within(loop, loop)
            self.region_areas = np.array(
                [abs(polygon_area(r)) if len(r) >= 3 else 0.0 for r in regions]
            )
            self.regions = _pad_regions(regions)
            self._box_cache = {}
        else:
            self.sites = cell.vertices
            self.restricted = True

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def _boxed_regions(self, half: float):
        """Site regions clipped to a bounding box, cached by box size."""
        key = math.ceil(math.log2(max(half / self.cell.diameter, 1.0)))
        if key not in self._box_cache:
            center = self.sites.mean(axis=0)
            box = _box_loop(center, self.cell.diameter * 2.0 ** key
                            + self.cell.diameter)
            self._box_cache[key] = _pad_regions(
                _site_regions_within(self.sites, box)
            )
        return self._box_cache[key]

    def coords_batch(self, pts: np.ndarray) -> np.ndarray:
        """Sibson coordinates for a batch of strictly interior points (2D).

        The area formula extends continuously to points slightly outside the
        cell, so stencil points of finite-difference gradients need no
        special casing.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.restricted:
            regions = self.regions
        else:
            # the inserted region of a point at distance d from the site hull
            # can reach roughly diam^2 / (2 d) beyond it; size the box so the
            # batch's closest point is still covered
            margin = max(min(self.cell.boundary_distance(p) for p in pts),
                         1e-9 * self.cell.diameter)
            regions = self._boxed_regions(
                self.cell.diameter ** 2 / (2.0 * margin) + self.cell.diameter
            )
        overlaps = np.zeros((len(pts), self.n_sites))
        for i, region in enumerate(regions):
            if region is None:
                continue
            vi = self.sites[i]
            mid = 0.5 * (pts + vi)
            areas = _clip_areas_batch(region, mid, vi - pts)
            overlaps[:, i] = np.maximum(areas, 0.0)
        total = overlaps.sum(axis=1)
        return overlaps / total[:, None]

    def _exact_overlaps(self, x: np.ndarray):
        """Exact overlap areas D(x) cap C_i and the directly computed D(x)."""
        if self.restricted:
            overlaps = clipped_voronoi_measures(self.cell, x)
            region = ensure_ccw(self.cell.vertices)
            for v in self.sites:
                region = clip_halfplane(region, 0.5 * (x + v), v - x)
                if len(region) == 0:
                    break
            direct = abs(polygon_area(region - x)) if len(region) >= 3 else 0.0
            return overlaps, direct
        half = 4.0 * self.cell.diameter
        for _ in range(50):
            region = _box_loop(x, half)
            for v in self.sites:
                region = clip_halfplane(region, 0.5 * (x + v), v - x)
            if len(region) >= 3 and np.abs(region - x).max() < half * (1 - 1e-9):
                break
            half *= 4.0
        else:
            raise SibsonError("inserted Voronoi region is unbounded")
        direct = abs(polygon_area(region - x))
        overlaps = np.empty(self.n_sites)
        for i, vi in enumerate(self.sites):
            sub = region
            for j, vj in enumerate(self.sites):
                if j == i:
                    continue
                sub = clip_halfplane(sub, 0.5 * (vi + vj), vj - vi)
                if len(sub) == 0:
                    break
            overlaps[i] = abs(polygon_area(sub - x)) if len(sub) >= 3 else 0.0
        return overlaps, direct

    def _boundary_coords(self, x):
        """Milbradt-Pick limit on the cell boundary: coordinates depend only
        on the vertices of the edge containing x (2D)."""
        v = self.sites
        tol = 1e-12 * self.cell.diameter
        d = np.linalg.norm(v - x, axis=1)
        coords = np.zeros(self.n_sites)
        j = int(d.argmin())
        if d[j] <= tol:
            coords[j] = 1.0
            return coords
        w = np.roll(v, -1, axis=0)
        for i in range(self.n_sites):
            seg = w[i] - v[i]
            t = float(np.clip((x - v[i]) @ seg / (seg @ seg), 0.0, 1.0))
            if np.linalg.norm(v[i] + t * seg - x) <= tol:
                coords[i] = 1.0 - t
                coords[(i + 1) % self.n_sites] = t
                return coords
        raise SibsonError("point not on the cell boundary")

    def evaluate(self, x, with_gradients: bool = False,
                 step: float | None = None) -> SibsonEvaluation:
        x = np.asarray(x, dtype=float)
        if self.cell.dim == 3:
            return self._evaluate_sampled(x)
        tol = 1e-12 * self.cell.diameter
        on_boundary = (self.cell.boundary_distance(x) <= tol
                       or np.linalg.norm(self.sites - x, axis=1).min() <= tol)
        if on_boundary:
            coords = self._boundary_coords(x)
            ev = SibsonEvaluation(x, coords, self.region_areas, 0.0,
                                  np.zeros(self.n_sites))
        else:
            if not self.cell.contains(x)[0]:
                raise SibsonError("point lies outside the cell")
            overlaps, direct = self._exact_overlaps(x)
            total = float(overlaps.sum())
            ev = SibsonEvaluation(x, overlaps / total, self.region_areas,
                                  direct, overlaps)
        if with_gradients:
            g = self.gradients(x, step)
            ev = SibsonEvaluation(ev.x, ev.coords, ev.site_measures,
                                  ev.inserted_measure, ev.inserted_overlap, g)
        return ev

    def _evaluate_sampled(self, x):
        site_meas = clipped_voronoi_measures(self.cell, None, self.resolution)
        overlaps = clipped_voronoi_measures(self.cell, x, self.resolution)
        total = float(overlaps.sum())
        if total == 0.0:
            raise SibsonError("inserted point captured no samples")
        return SibsonEvaluation(x, overlaps / total, site_meas, total, overlaps)

    def gradients(self, x, step: float | None = None,
                  enforce_margin: bool = True) -> np.ndarray:
        """Central-difference gradients of all coordinates at x.

        With enforce_margin=False the stencil may cross the cell boundary;
        the area formula extends smoothly there, so the result is the
        one-sided derivative limit.
        """
        x = np.asarray(x, dtype=float)
        h = step if step is not None else 1e-4 * self.cell.diameter
        if self.cell.dim == 2:
            if enforce_margin and self.cell.boundary_distance(x) < h:
                raise SibsonError("gradient stencil margin violated")
            stencil = np.array([[h, 0], [-h, 0], [0, h], [0, -h]]) + x
            vals = self.coords_batch(stencil)
            return np.stack([(vals[0] - vals[1]) / (2 * h),
                             (vals[2] - vals[3]) / (2 * h)], axis=1)
        grads = np.zeros((self.n_sites, 3))
        for d in range(3):
            e = np.zeros(3)
            e[d] = h
            hi = self._evaluate_sampled(x + e).coords
            lo = self._evaluate_sampled(x - e).coords
            grads[:, d] = (hi - lo) / (2 * h)
        return grads

    def coords_and_gradients_batch(self, pts: np.ndarray,
                                   step: float | None = None):
        """Coordinates and gradients of every site at a batch of points (2D).

        Intended for quadrature: stencils may cross the cell boundary and the
        smooth extension of the area formula is used there.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        h = step if step is not None else 1e-4 * self.cell.diameter
        offsets = np.array([[0.0, 0.0], [h, 0], [-h, 0], [0, h], [0, -h]])
        stacked = (pts[None, :, :] + offsets[:, None, :]).reshape(-1, 2)
        vals = self.coords_batch(stacked).reshape(5, len(pts), self.n_sites)
        grads = np.stack([(vals[1] - vals[2]) / (2 * h),
                          (vals[3] - vals[4]) / (2 * h)], axis=2)
        return vals[0], grads


def sibson(cell: PolyCell, x, resolution: int = 64,
           restricted: bool | None = None) -> SibsonEvaluation:
    return SibsonCell(cell, resolution, restricted).evaluate(x)


def sibson_gradient(cell: PolyCell, x, step: float | None = None,
                    restricted: bool | None = None) -> np.ndarray:
    return SibsonCell(cell, restricted=restricted).gradients(x, step)


# ---------------------------------------------------------------------------
# dual Whitney forms (2D machinery; 3D dual-face form below)


@dataclass(frozen=True)
class DualWhitneyForm:
    """Interpolant attached to the dual cell of a primal k-simplex."""

    k: int  # primal degree of the generator; the dual cell has dim n-k
    generator: int


class DualInterpolation:
    """Dual-mesh interpolation structure for a 2D complex.

    Each primal vertex owns a flat-sided dual polygon whose corners are the
    barycenters of the incident triangles; at the boundary the polygon closes
    through the adjacent boundary-edge midpoints and the vertex itself.
    These polygons partition the domain, and Sibson coordinates on them are
    the building blocks of the dual Whitney forms.
    """

    def __init__(self, complex: SimplicialComplex, dual: DualMesh,
                 restricted: bool = True):
        if complex.dim != 2:
            raise SibsonError("dual interpolation machinery is 2D")
        self.complex = complex
        self.dual = dual
        self.restricted = restricted
        self.cells = []  # PolyCell per primal vertex
        self.site_tags = []  # per vertex: list of tags matching cell loop
        self.site_lookup = []  # per vertex: dict tag -> local index
        centers = np.array([
            barycenter(complex.simplex_points(2, t))
            if dual.rule == "barycentric"
            else dual.cells[2][t].points[0]
            for t in range(len(complex.simplices[2]))
        ])
        for v in range(len(complex.vertices)):
            tags = _vertex_site_tags(complex, v)
            pts = []
            for tag in tags:
                kind, idx = tag
                if kind == "c":
                    pts.append(centers[idx])
                elif kind == "m":
                    pts.append(complex.simplex_points(1, idx).mean(axis=0))
                else:
                    pts.append(complex.vertices[idx])
            loop = ensure_ccw(np.array(pts))
            if not np.allclose(loop, np.array(pts)):
                tags = tags[::-1]
            self.cells.append(PolyCell(loop))
            self.site_tags.append(tags)
            self.site_lookup.append({tag: i for i, tag in enumerate(tags)})
        self._evaluators = [None] * len(self.cells)

    def evaluator(self, v: int) -> SibsonCell:
        if self._evaluators[v] is None:
            self._evaluators[v] = SibsonCell(self.cells[v],
                                             restricted=self.restricted)
        return self._evaluators[v]

    def edge_endpoint_tags(self, e: int):
        """Ordered site-tag pair of the dual edge of primal edge e."""
        tris = self.complex.cofaces(1, e)
        if len(tris) == 2:
            return ("c", int(tris[0])), ("c", int(tris[1]))
        return ("c", int(tris[0])), ("m", e)

    def locate(self, x):
        """Primal vertex whose dual polygon contains x, or None."""
        x = np.asarray(x, dtype=float)
        for v in range(len(self.cells)):
            if self.cells[v].contains(x)[0]:
                return v
        return None

    # -- form evaluation -----------------------------------------------

    def eval_form(self, form: DualWhitneyForm, x, cell_vertex: int | None = None):
        """Dual Whitney form value at x; zero outside its support."""
        x = np.asarray(x, dtype=float)
        if cell_vertex is None:
            cell_vertex = self.locate(x)
        k = form.k
        if k == 0:
            if cell_vertex != form.generator:
                return 0.0
            return 1.0 / self.cells[cell_vertex].measure
        if cell_vertex is None:
            return 0.0 if k == 2 else np.zeros(2)
        lookup = self.site_lookup[cell_vertex]
        if k == 2:
            tag = ("c", form.generator)
            if tag not in lookup:
                return 0.0
            ev = self.evaluator(cell_vertex).evaluate(x)
            return float(ev.coords[lookup[tag]])
        if k == 1:
            tag_a, tag_b = self.edge_endpoint_tags(form.generator)
            if tag_a not in lookup or tag_b not in lookup:
                return np.zeros(2)
            sc = self.evaluator(cell_vertex)
            ev = sc.evaluate(x)
            grads = sc.gradients(x, enforce_margin=False)
            ia, ib = lookup[tag_a], lookup[tag_b]
            return (ev.coords[ia] * grads[ib]
                    - ev.coords[ib] * grads[ia])
        raise SibsonError(f"unsupported dual form degree {k}")

    def interpolate(self, dual_degree: int, cochain):
        """Interpolant of a dual k-cochain over the dual cell mesh.

        The cochain is indexed like the primal (n - k)-simplices whose dual
        cells carry the degrees of freedom.
        """
        n = self.complex.dim
        p = n - dual_degree
        weights = np.asarray(cochain, dtype=float)
        expected = len(self.complex.simplices[p])
        if weights.shape != (expected,):
            raise SibsonError(
                f"dual cochain has length {len(weights)}, expected {expected}"
            )

        def field(x):
            x = np.asarray(x, dtype=float)
            v = self.locate(x)
            if v is None:
                return 0.0 if p in (0, 2) else np.zeros(2)
            if p == 0:
                return weights[v] / self.cells[v].measure
            lookup = self.site_lookup[v]
            sc = self.evaluator(v)
            if p == 2:
                ev = sc.evaluate(x)
                total = 0.0
                for tag, i in lookup.items():
                    if tag[0] == "c":
                        total += weights[tag[1]] * ev.coords[i]
                return total
            ev = sc.evaluate(x)
            grads = sc.gradients(x, enforce_margin=False)
            total = np.zeros(2)
            for e in _vertex_edges(self.complex, v):
                tag_a, tag_b = self.edge_endpoint_tags(e)
                if tag_a in lookup and tag_b in lookup:
                    ia, ib = lookup[tag_a], lookup[tag_b]
                    total += weights[e] * (ev.coords[ia] * grads[ib]
                                           - ev.coords[ib] * grads[ia])
            return total

        return field


def _vertex_edges(complex: SimplicialComplex, v: int):
    return [int(e) for e in complex.cofaces(0, v)]


def _vertex_site_tags(complex: SimplicialComplex, v: int):
    """Sites of the dual polygon of vertex v, walked in ring order."""
    edges = _vertex_edges(complex, v)
    tris_of_edge = {e: complex.cofaces(1, e) for e in edges}
    bdry = [e for e in edges if len(tris_of_edge[e]) == 1]

    def next_edge(tri, e):
        for e2 in complex.face_indices[1][tri]:
            if e2 != e and v in complex.simplices[1][e2]:
                return int(e2)
        raise AssertionError

    tags = []
    if bdry:
        e = bdry[0]
        tags.append(("m", e))
        tri = int(tris_of_edge[e][0])
        prev = e
        while True:
            tags.append(("c", tri))
            nxt = next_edge(tri, prev)
            rest = [int(t) for t in tris_of_edge[nxt] if t != tri]
            if not rest:
                tags.append(("m", nxt))
                break
            tri = rest[0]
            prev = nxt
        tags.append(("v", v))
    else:
        e = edges[0]
        tri = int(tris_of_edge[e][0])
        prev = e
        first = tri
        while True:
            tags.append(("c", tri))
            nxt = next_edge(tri, prev)
            tri = [int(t) for t in tris_of_edge[nxt] if t != tri][0]
            prev = nxt
            if tri == first:
                break
    return tags


# ---------------------------------------------------------------------------
# 3D dual-face form


@dataclass(frozen=True)
class DualFacePartition:
    """Canonical triangle partition of a 3D dual face (the dual of a primal
    edge): fan triangles tau_i around the vertex centroid, each weighted by
    its area share and carrying the Whitney 2-form of the tetrahedron it
    spans with the interior endpoint of the primal edge."""

    ring: np.ndarray  # (m, 3) ordered face vertices
    centroid: np.ndarray
    apex: np.ndarray  # endpoint of the primal edge inside the polyhedron
    weights: np.ndarray  # |tau_i| / |dual face|

    @classmethod
    def build(cls, ring: np.ndarray, apex: np.ndarray) -> "DualFacePartition":
        ring = np.asarray(ring, dtype=float)
        c = ring.mean(axis=0)
        areas = np.array([
            0.5 * np.linalg.norm(np.cross(ring[i] - c,
                                          ring[(i + 1) % len(ring)] - c))
            for i in range(len(ring))
        ])
        return cls(ring, c, np.asarray(apex, dtype=float), areas / areas.sum())

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        m = len(self.ring)
        for i in range(m):
            tet = np.array([self.apex, self.centroid, self.ring[i],
                            self.ring[(i + 1) % m]])
            lam, grads = _tet_barycentric(tet, x)
            if np.all(lam >= -1e-12):
                # Whitney 2-form of the face (centroid, v_i, v_{i+1})
                val = 2.0 * (lam[1] * np.cross(grads[2], grads[3])
                             + lam[2] * np.cross(grads[3], grads[1])
                             + lam[3] * np.cross(grads[1], grads[2]))
                return self.weights[i] * val
        return np.zeros(3)


def _tet_barycentric(tet: np.ndarray, x):
    A = np.column_stack([np.ones(4), tet])
    coeff = np.linalg.inv(A)
    lam = coeff.T @ np.concatenate([[1.0], x])
    return lam, coeff[1:].T
