import numpy as np
import pytest

from decstar import hodge, mesh, whitney
from decstar.hodge import HodgeError


def test_diag_entries_are_measure_ratios():
    comp = mesh.equilateral_grid(3)
    dual = mesh.build_dual(comp, "circumcentric")
    op = hodge.assemble_diag(comp, dual, 1)
    expect = dual.measures[1] / comp.measures[1]
    assert np.abs(op.matrix.diagonal() - expect).max() < 1e-14
    assert op.matrix.nnz == len(comp.simplices[1])


def test_diag_barycentric_warns():
    comp = mesh.structured_grid(3)
    dual = mesh.build_dual(comp, "barycentric")
    with pytest.warns(UserWarning):
        hodge.assemble_diag(comp, dual, 1)


def test_diag_rejects_degenerate_dual():
    comp = mesh.structured_grid(3)  # right triangles: circumcenters on edges
    dual = mesh.build_dual(comp, "circumcentric")
    with pytest.raises(HodgeError, match="nonpositive"):
        hodge.assemble_diag(comp, dual, 1)


def test_whitney_star_matches_gram():
    comp = mesh.random_delaunay(20, 3)
    op = hodge.assemble_whitney(comp, 1)
    G = whitney.whitney_gram_matrix(comp, 1)
    assert np.abs((op.matrix - G).toarray()).max() == 0


def test_whitney_star_sparsity_lemma():
    # entries vanish unless the two simplices share a containing element
    comp = mesh.random_delaunay(25, 12)
    op = hodge.assemble_whitney(comp, 1).matrix.tocoo()
    for i, j in zip(op.row, op.col):
        cells_i = set(comp.cofaces(1, int(i)).tolist())
        cells_j = set(comp.cofaces(1, int(j)).tolist())
        assert cells_i & cells_j


def test_dual_inverse_symmetric_pd_and_sparse():
    comp = mesh.structured_grid(4)
    dual = mesh.build_dual(comp, "barycentric")
    for k in (0, 1, 2):
        op = hodge.assemble_dual_inverse(comp, dual, k, resolution=48)
        A = op.toarray()
        assert np.abs(A - A.T).max() < 1e-12
        assert np.linalg.eigvalsh(A).min() > 0
        report = hodge.sparsity_audit(op, comp)
        assert report.within_bound


def test_dual_inverse_vertex_block_is_inverse_areas():
    comp = mesh.structured_grid(3)
    dual = mesh.build_dual(comp, "barycentric")
    from decstar.sibson import DualInterpolation

    di = DualInterpolation(comp, dual)
    op = hodge.assemble_dual_inverse(comp, dual, 0, interpolation=di)
    expect = np.array([1.0 / c.measure for c in di.cells])
    assert np.abs(op.matrix.diagonal() - expect).max() < 1e-14


def test_dual_inverse_requires_2d():
    comp = mesh.random_delaunay(12, 1, dim=3)
    dual = mesh.build_dual(comp, "barycentric")
    with pytest.raises(HodgeError):
        hodge.assemble_dual_inverse(comp, dual, 1)


def test_dual_inverse_resolution_guard():
    comp = mesh.structured_grid(3)
    dual = mesh.build_dual(comp, "barycentric")
    with pytest.raises(HodgeError, match="resolution"):
        hodge.assemble_dual_inverse(comp, dual, 2, resolution=3)


def test_hodge_pair_exact_inverses():
    comp = mesh.structured_grid(3)
    dual = mesh.build_dual(comp, "barycentric")
    for kind in ("diag", "whitney", "dual_inverse"):
        with np.errstate(all="ignore"):
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                M, Minv = hodge.hodge_pair(comp, dual, 2, kind, resolution=48)
        prod = (M @ Minv).toarray()
        assert np.abs(prod - np.eye(prod.shape[0])).max() < 1e-10


def test_condition_estimate_full_and_block():
    A = np.diag([4.0, 2.0, 1.0])
    est = hodge.condition_estimate(A)
    assert est.ratio == pytest.approx(4.0)
    est2 = hodge.condition_estimate(A, "leading-block", 2)
    assert est2.ratio == pytest.approx(2.0)
    singular = hodge.condition_estimate(np.zeros((2, 2)))
    assert singular.ratio == np.inf
    assert singular.null_vector is not None


def test_neighborhood_size():
    comp = mesh.two_triangle_mesh()
    # the diagonal edge touches all vertices, hence both triangles
    diag_edge = next(
        i for i, e in enumerate(comp.simplices[1].tolist())
        if len(comp.cofaces(1, i)) == 2
    )
    assert hodge.simplex_neighborhood_size(comp, 1, diag_edge) == 2


def test_fig8_diag_closed_forms():
    for P in (2.0, 5.0, 10.0):
        comp = mesh.generate_fig8(P)
        dual = mesh.build_dual(comp, "circumcentric")
        op = hodge.assemble_diag(comp, dual, 1)
        lead, rho = hodge.fig8_diag_entries(P)
        assert op.matrix.diagonal()[0] == pytest.approx(lead, abs=1e-12)
        assert rho > 0
        assert hodge.fig8_diag_condition(P) == pytest.approx(lead / rho,
                                                             abs=1e-12)


def test_fig8_whitney_block_matches_assembly():
    for P in (2.0, 5.0):
        comp = mesh.generate_fig8(P)
        block = hodge.assemble_whitney(comp, 1).toarray()[:5, :5]
        closed = hodge.fig8_whitney_block(P)
        assert np.abs(np.abs(block) - np.abs(closed)).max() < 1e-12
        assert np.abs(np.linalg.eigvalsh(block)
                      - np.linalg.eigvalsh(closed)).max() < 1e-12
        assert hodge.fig8_whitney_condition(P) == pytest.approx(
            hodge.condition_estimate(block).ratio, abs=1e-10
        )


def test_table1_small_resolution_sane():
    rows = hodge.table1_experiment([2.0], resolution=96)
    row = rows[0]
    assert row.cond_diag == pytest.approx(hodge.fig8_diag_condition(2.0))
    assert row.cond_whitney == pytest.approx(
        hodge.fig8_whitney_condition(2.0), rel=1e-8
    )
    assert 1.0 < row.cond_dual_inverse < 2.0
    csv = hodge.table1_csv(rows)
    assert csv.splitlines()[0] == "P,cond_diag,cond_whitney,cond_dual_inverse"
    assert csv.splitlines()[1].startswith("2,")
