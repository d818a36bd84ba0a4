"""Discrete Hodge star operators: diagonal, Whitney, and dual-inverse.

Three discretizations of the Hodge star are assembled as sparse symmetric
matrices indexed by primal k-simplices.  The diagonal star is the ratio of
dual to primal measures; the Whitney star is the Gram matrix of primal
Whitney forms; the dual-inverse star is the Gram matrix of dual Whitney
forms, assembled directly (its sparsity is the point: the inverse of the
Whitney star would be dense).
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .mesh import DualMesh, SimplicialComplex, generate_fig8, build_dual
from .whitney import whitney_gram_matrix
from .sibson import DualInterpolation, points_in_polygon


class HodgeError(ValueError):
    pass


@dataclass
class HodgeOperator:
    """A discrete Hodge star matrix with its provenance."""

    degree: int
    kind: str  # "diag" | "whitney" | "dual_inverse"
    matrix: sp.csr_matrix
    space: str  # index space description
    provenance: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.matrix.shape

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass
class ConditionEstimate:
    method: str  # "full" | "leading-block"
    block_size: int | None
    lambda_max: float
    lambda_min: float
    ratio: float
    null_vector: np.ndarray | None = None


# ---------------------------------------------------------------------------
# assembly


def assemble_diag(complex: SimplicialComplex, dual: DualMesh,
                  k: int) -> HodgeOperator:
    """Diagonal Hodge star: entries |dual cell| / |primal simplex|."""
    if dual.rule == "barycentric":
        warnings.warn(
            "diagonal Hodge star with a barycentric dual is uncorrected; "
            "the circumcentric dual is the intended pairing",
            stacklevel=2,
        )
    primal = complex.measures[k]
    dual_m = np.asarray(dual.measures[k], dtype=float)
    bad = np.nonzero(dual_m <= 0)[0]
    if len(bad):
        detail = ", ".join(
            f"simplex {i}: dual measure {dual_m[i]:.3e}" for i in bad[:10]
        )
        raise HodgeError(
            f"nonpositive dual measures for degree {k}: {detail}"
        )
    mat = sp.diags(dual_m / primal).tocsr()
    return HodgeOperator(k, "diag", mat, f"primal {k}-simplices",
                         {"dual_rule": dual.rule})


def assemble_whitney(complex: SimplicialComplex, k: int) -> HodgeOperator:
    """Whitney (Galerkin) Hodge star: Gram matrix of Whitney k-forms."""
    mat = whitney_gram_matrix(complex, k)
    return HodgeOperator(k, "whitney", mat, f"primal {k}-simplices", {})


def _cell_quadrature(cell, resolution: int):
    """Pixel-center quadrature nodes and weight over a polygon's bbox."""
    lo = cell.vertices.min(axis=0)
    hi = cell.vertices.max(axis=0)
    xs = np.linspace(lo[0], hi[0], resolution, endpoint=False) \
        + (hi[0] - lo[0]) / (2 * resolution)
    ys = np.linspace(lo[1], hi[1], resolution, endpoint=False) \
        + (hi[1] - lo[1]) / (2 * resolution)
    pts = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
    inside = points_in_polygon(cell.vertices, pts)
    w = (hi[0] - lo[0]) * (hi[1] - lo[1]) / resolution ** 2
    return pts[inside], w


def assemble_dual_inverse(complex: SimplicialComplex, dual: DualMesh, k: int,
                          resolution: int = 128,
                          interpolation: DualInterpolation | None = None,
                          vertices=None) -> HodgeOperator:
    """Inverse dual Hodge star: Gram matrix of dual Whitney forms.

    Entries are integrated by pixel-grid quadrature over the per-vertex dual
    polygons whose union carries the forms' supports.  `vertices` restricts
    assembly to contributions from the given dual polygons (used when only a
    sub-block is needed).
    """
    if complex.dim != 2:
        raise HodgeError("dual-inverse assembly is implemented for 2D meshes")
    di = interpolation or DualInterpolation(complex, dual)
    n = complex.dim
    N = len(complex.simplices[k])
    mat = sp.lil_matrix((N, N))
    if k == 0:
        for v in range(len(complex.vertices)):
            mat[v, v] = 1.0 / di.cells[v].measure
        return HodgeOperator(k, "dual_inverse", mat.tocsr(),
                             f"dual {n - k}-cells of primal {k}-simplices",
                             {"resolution": resolution, "dual_rule": dual.rule})
    todo = range(len(complex.vertices)) if vertices is None else vertices
    for v in todo:
        cell = di.cells[v]
        pts, w = _cell_quadrature(cell, resolution)
        if len(pts) < 10:
            raise HodgeError(
                f"quadrature resolution {resolution} leaves fewer than 10 "
                f"interior samples in the dual polygon of vertex {v}"
            )
        sc = di.evaluator(v)
        lookup = di.site_lookup[v]
        if k == n:
            vals = sc.coords_batch(pts)
            active = [(tag[1], i) for tag, i in lookup.items() if tag[0] == "c"]
            for a, (ga, ia) in enumerate(active):
                for gb, ib in active[a:]:
                    val = w * float(vals[:, ia] @ vals[:, ib])
                    mat[ga, gb] += val
                    if ga != gb:
                        mat[gb, ga] += val
        elif k == 1:
            vals, grads = sc.coords_and_gradients_batch(pts)
            fields = []
            for e in complex.cofaces(0, v):
                e = int(e)
                tag_a, tag_b = di.edge_endpoint_tags(e)
                if tag_a in lookup and tag_b in lookup:
                    ia, ib = lookup[tag_a], lookup[tag_b]
                    F = (vals[:, ia, None] * grads[:, ib, :]
                         - vals[:, ib, None] * grads[:, ia, :])
                    fields.append((e, F))
            for a, (ea, Fa) in enumerate(fields):
                for eb, Fb in fields[a:]:
                    val = w * float(np.einsum("qd,qd->", Fa, Fb))
                    mat[ea, eb] += val
                    if ea != eb:
                        mat[eb, ea] += val
        else:
            raise HodgeError(f"unsupported degree k={k} for 2D dual forms")
    return HodgeOperator(k, "dual_inverse", mat.tocsr(),
                         f"dual {n - k}-cells of primal {k}-simplices",
                         {"resolution": resolution, "dual_rule": dual.rule})


def hodge_pair(complex: SimplicialComplex, dual: DualMesh, k: int,
               kind: str, resolution: int = 128):
    """A Hodge matrix and its exact inverse, as dense-safe sparse matrices.

    The mixed-system equivalences hold only when M and M^{-1} are exact
    inverse pairs, so both are derived from a single assembly.
    """
    if kind == "diag":
        M = assemble_diag(complex, dual, k).matrix
        Minv = sp.diags(1.0 / M.diagonal()).tocsr()
    elif kind == "whitney":
        M = assemble_whitney(complex, k).matrix
        Minv = sp.csr_matrix(np.linalg.inv(M.toarray()))
    elif kind == "dual_inverse":
        Minv = assemble_dual_inverse(complex, dual, k, resolution).matrix
        M = sp.csr_matrix(np.linalg.inv(Minv.toarray()))
    else:
        raise HodgeError(f"unknown Hodge kind {kind!r}")
    return M, Minv


# ---------------------------------------------------------------------------
# diagnostics


def condition_estimate(operator: HodgeOperator | sp.spmatrix | np.ndarray,
                       method: str = "full",
                       block_size: int = 5) -> ConditionEstimate:
    """Condition number via dense symmetric eigendecomposition.

    method="leading-block" uses the spectrum of the leading block_size x
    block_size submatrix, the estimate used for the parameterized-mesh study.
    """
    A = operator.toarray() if hasattr(operator, "toarray") else np.asarray(operator)
    A = np.asarray(A, dtype=float)
    if method == "leading-block":
        A = A[:block_size, :block_size]
    vals, vecs = np.linalg.eigh(A)
    lmax = float(np.abs(vals).max())
    lmin_idx = int(np.abs(vals).argmin())
    lmin = float(abs(vals[lmin_idx]))
    if lmin <= 1e-12 * max(lmax, 1.0):
        return ConditionEstimate(method,
                                 block_size if method == "leading-block" else None,
                                 lmax, lmin, math.inf, vecs[:, lmin_idx])
    return ConditionEstimate(method,
                             block_size if method == "leading-block" else None,
                             lmax, lmin, lmax / lmin)


def simplex_neighborhood_size(complex: SimplicialComplex, k: int,
                              simplex_id: int) -> int:
    """Number of n-simplices incident on at least one vertex of the simplex."""
    n = complex.dim
    cells = set()
    for v in complex.simplices[k][simplex_id]:
        ids = {int(v)}
        for kk in range(0, n):
            ids = {int(c) for s in ids for c in complex.cofaces(kk, s)}
        cells |= ids
    return len(cells)


@dataclass
class SparsityReport:
    row_nonzeros: np.ndarray
    bounds: np.ndarray
    within_bound: bool


def sparsity_audit(operator: HodgeOperator,
                   complex: SimplicialComplex) -> SparsityReport:
    """Check row-wise nonzero counts against the adjacency bound
    C(n+1, k+1) * A(sigma^k), with A the vertex-incident n-simplex count."""
    k = operator.degree
    n = complex.dim
    csr = operator.matrix.tocsr()
    counts = np.diff(csr.indptr)
    coef = math.comb(n + 1, k + 1)
    bounds = np.array([
        coef * simplex_neighborhood_size(complex, k, i)
        for i in range(csr.shape[0])
    ])
    return SparsityReport(counts, bounds, bool(np.all(counts <= bounds)))


# ---------------------------------------------------------------------------
# closed forms for the parameterized two-fan mesh


def fig8_diag_entries(P: float):
    """Closed-form diagonal star entries (first edge; remaining four)."""
    lead = (4 * P ** 2 - 1) / (4 * P)
    rho = 1 / (4 * P ** 4) + P / math.sqrt(3 + 12 * P ** 2)
    return lead, rho


def fig8_diag_condition(P: float) -> float:
    lead, rho = fig8_diag_entries(P)
    return lead / rho


def fig8_whitney_entries(P: float):
    """Closed-form Whitney block coefficients (alpha, beta, gamma, delta)."""
    alpha = (12 * P ** 2 + 1) / (24 * P)
    beta = (4 * P ** 2 - 1) / (48 * P)
    gamma = (12 * P ** 2 + 20 * math.sqrt(3) * P + 21) / (144 * P)
    delta = (4 * P ** 2 - 5) / (48 * P)
    return alpha, beta, gamma, delta


def fig8_whitney_block(P: float) -> np.ndarray:
    """The published 5x5 Whitney block.  Off-diagonal delta entries appear
    with the sign induced by sorted-vertex edge orientations, which matches
    the published magnitudes; the spectrum is orientation-independent."""
    a, b, g, d = fig8_whitney_entries(P)
    M = np.array([
        [a, b, b, b, b],
        [b, g, 0, d, 0],
        [b, 0, g, 0, d],
        [b, d, 0, g, 0],
        [b, 0, d, 0, g],
    ])
    return M


def fig8_whitney_condition(P: float) -> float:
    s3 = math.sqrt(3)
    num = (24 * P ** 2 + 5 * s3 * P
           + math.sqrt(288 * P ** 4 - 120 * s3 * P ** 3 + 3 * P ** 2 + 9) + 3)
    return num / (10 * s3 * P + 18)


# ---------------------------------------------------------------------------
# condition-number experiment


@dataclass
class Table1Row:
    P: float
    cond_diag: float
    cond_whitney: float
    cond_dual_inverse: float
    seconds: float


def _fig8_ring_entries(comp: SimplicialComplex, resolution: int):
    """Dual-form inner products on the two-fan mesh, patch protocol.

    The two-fan mesh is a neighborhood cut out of a larger triangulation, so
    the hub vertices' dual cells are treated as interior cells: plain rings
    of the four incident triangle barycenters, without boundary closure.
    Returns the inner products (vartheta, zeta, theta_half, kappa) where
    theta_half is the half of theta carried by the first hub cell; the other
    half lives on a fan-tip cell that leaves the patch.
    """
    from .sibson import PolyCell, SibsonCell, ensure_ccw

    centers = {
        tuple(sorted(t)): comp.simplex_points(2, i).mean(axis=0)
        for i, t in enumerate(comp.simplices[2].tolist())
    }

    def center_of(*vs):
        for t, c in centers.items():
            if set(vs) <= set(t):
                return c
        raise HodgeError("two-fan mesh triangle not found")

    gT123 = center_of(0, 1, 2)
    gT124 = center_of(0, 1, 3)
    gEq = {
        (a, b): next(c for t, c in centers.items()
                     if {a, b} <= set(t) and max(t) >= 4)
        for (a, b) in [(0, 2), (0, 3), (1, 2), (1, 3)]
    }

    def cell_products(ring, pairs):
        labels = [l for l, _ in ring]
        orig = np.array([p for _, p in ring])
        loop = ensure_ccw(orig)
        if not np.allclose(loop, orig):
            labels = labels[::-1]
        cell = PolyCell(loop)
        sc = SibsonCell(cell, restricted=True)
        idx = {l: i for i, l in enumerate(labels)}
        pts, w = _cell_quadrature(cell, resolution)
        vals, grads = sc.coords_and_gradients_batch(pts)

        def eta(a, b):
            ia, ib = idx[a], idx[b]
            return (vals[:, ia, None] * grads[:, ib, :]
                    - vals[:, ib, None] * grads[:, ia, :])

        return {
            name: w * float(np.einsum("qd,qd->", eta(a, b), eta(c, d)))
            for name, (a, b, c, d) in pairs.items()
        }

    hub1 = [("e13", gEq[(0, 2)]), ("t123", gT123),
            ("t124", gT124), ("e14", gEq[(0, 3)])]
    hub2 = [("e23", gEq[(1, 2)]), ("t123", gT123),
            ("t124", gT124), ("e24", gEq[(1, 3)])]
    p1 = cell_products(hub1, {
        "vartheta": ("t123", "t124", "t123", "t124"),
        "zeta": ("t123", "t124", "t123", "e13"),
        "theta_half": ("t123", "e13", "t123", "e13"),
        "kappa": ("t123", "e13", "t124", "e14"),
    })
    p2 = cell_products(hub2, {
        "vartheta": ("t123", "t124", "t123", "t124"),
    })
    return (p1["vartheta"] + p2["vartheta"], p1["zeta"],
            p1["theta_half"], p1["kappa"])


def fig8_dual_inverse_block(P: float, resolution: int = 512) -> np.ndarray:
    """The 5x5 dual-inverse block of the two-fan study, with the published
    patch substitutions.

    Every inner product is integrated over the dual cells of its support
    that are complete inside the patch; contributions whose cells leave the
    patch are replaced by their symmetric computable counterparts (theta's
    fan-tip half by its hub half; the cross term xi by zeta), and the
    negligible opposite-edge term kappa is set to zero.
    """
    comp = generate_fig8(P)
    vartheta, zeta, theta_half, _kappa = _fig8_ring_entries(comp, resolution)
    theta = 2.0 * theta_half
    xi = zeta
    kappa = 0.0
    return np.array([
        [vartheta, zeta, zeta, zeta, zeta],
        [zeta, theta, kappa, xi, 0],
        [zeta, kappa, theta, 0, xi],
        [zeta, xi, 0, theta, kappa],
        [zeta, 0, xi, kappa, theta],
    ])


def table1_experiment(P_values, resolution: int = 512) -> list:
    """Condition numbers of the three Hodge stars on the two-fan mesh family.

    Diagonal column: ratio of the closed-form extreme diagonal entries.
    Whitney column: eigenvalue ratio of the assembled leading 5x5 block.
    Dual-inverse column: eigenvalue ratio of the quadrature 5x5 block from
    fig8_dual_inverse_block.
    """
    rows = []
    for P in P_values:
        t0 = time.perf_counter()
        comp = generate_fig8(P)
        cond_diag = fig8_diag_condition(P)

        whit = assemble_whitney(comp, 1)
        cond_whit = condition_estimate(whit, "leading-block", 5).ratio

        block = fig8_dual_inverse_block(P, resolution)
        cond_dual = condition_estimate(block, "full").ratio
        rows.append(Table1Row(P, cond_diag, cond_whit, cond_dual,
                              time.perf_counter() - t0))
    return rows


def table1_csv(rows) -> str:
    lines = ["P,cond_diag,cond_whitney,cond_dual_inverse"]
    for r in rows:
        lines.append(f"{r.P:g},{r.cond_diag:.6g},{r.cond_whitney:.6g},"
                     f"{r.cond_dual_inverse:.6g}")
    return "\n".join(lines) + "\n"
