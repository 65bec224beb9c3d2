import numpy as np
import pytest
from scipy.linalg import expm

from spraylab.curves import CurveSpec
from spraylab.errors import DimensionError, SpanError, UnknownCatalogEntryError
from spraylab.group_curves import (
    MatrixRep,
    catalog_rep,
    left_invariance_check,
    reconstruct_curve,
    verify_rep,
    word_element,
)
from spraylab.lie_algebra import catalog
from spraylab.spray_model import RandersSpray, RiemannianSpray, ZeroSpray
from spraylab.transport import geodesic_flow

from helpers import e, random_unit


@pytest.mark.parametrize("name", ["su2", "heisenberg3", "sl2r", "e2", "solvable2", "abelian_3"])
def test_catalog_representations_are_homomorphisms(name):
    rep = catalog_rep(name)
    assert verify_rep(catalog(name), rep) <= 1e-15


def test_su2_rep_is_complex():
    rep = catalog_rep("su2")
    assert rep.is_complex and rep.m == 2 and rep.dim == 3


def test_wrong_rep_is_detected():
    assert verify_rep(catalog("su2"), catalog_rep("heisenberg3")) > 0.5
    with pytest.raises(DimensionError):
        verify_rep(catalog("solvable2"), catalog_rep("su2"))


def test_unknown_rep():
    with pytest.raises(UnknownCatalogEntryError, match="no matrix representation"):
        catalog_rep("g2")


def test_rep_shape_validation():
    with pytest.raises(DimensionError):
        MatrixRep(np.zeros((3, 2, 3)))


def test_one_parameter_subgroup_on_su2(su2):
    rep = catalog_rep("su2")
    geodesic = geodesic_flow(ZeroSpray(su2), e(3, 3), (0.0, 2.0))
    curve = reconstruct_curve(rep, geodesic)
    np.testing.assert_allclose(curve.final, np.diag([np.exp(-1j), np.exp(1j)]), atol=1e-8)
    assert curve.unitarity_defect() < 1e-8
    assert curve.determinant_defect() < 1e-8


def test_backward_reconstruction(heisenberg):
    rep = catalog_rep("heisenberg3")
    y0 = np.array([1.0, -0.5, 0.3])
    geodesic = geodesic_flow(ZeroSpray(heisenberg), y0, (0.0, -1.5))
    curve = reconstruct_curve(rep, geodesic)
    np.testing.assert_allclose(curve.final, expm(-1.5 * rep(y0)), atol=1e-8)


def test_reconstruct_piecewise_curve_matches_word():
    rep = catalog_rep("sl2r")
    legs = [(e(3, 1), 0.4), (e(3, 2) + e(3, 3), 0.7), (-e(3, 2), 0.3)]
    curve = reconstruct_curve(rep, CurveSpec.piecewise(legs), t_span=(0.0, 1.4))
    np.testing.assert_allclose(curve.final, word_element(rep, legs), atol=1e-8)
    assert curve.determinant_defect() < 1e-8


def test_reconstruct_from_geodesic_of_metric_spray(su2):
    spray = RiemannianSpray(su2, np.diag([1.0, 2.0, 3.0]))
    geodesic = geodesic_flow(spray, np.array([1.0, 0.3, 0.2]), (0.0, 5.0))
    curve = reconstruct_curve(catalog_rep("su2"), geodesic)
    assert curve.unitarity_defect() < 1e-7
    assert len(curve.times) >= len(geodesic.times)


def test_left_invariance(su2):
    spray = RandersSpray(su2, np.eye(3), [0.2, 0.0, 0.0])
    g0_word = [(e(3, 1), 0.7), (e(3, 2), -1.1)]
    residual = left_invariance_check(catalog_rep("su2"), spray, np.array([0.2, 1.0, 0.4]), g0_word, 3.0)
    assert residual < 1e-7


def test_table_splits_complex_entries(su2):
    geodesic = geodesic_flow(ZeroSpray(su2), e(3, 1), (0.0, 1.0))
    header, rows = reconstruct_curve(catalog_rep("su2"), geodesic).table()
    assert header[:3] == ["t", "c11_re", "c11_im"]
    assert len(header) == 9
    assert rows.shape[1] == 9
    np.testing.assert_allclose(rows[0, 1:], [1, 0, 0, 0, 0, 0, 1, 0])


def test_real_table(solvable2):
    geodesic = geodesic_flow(ZeroSpray(solvable2), e(2, 2), (0.0, 1.0))
    header, rows = reconstruct_curve(catalog_rep("solvable2"), geodesic).table()
    assert header == ["t", "c11", "c12", "c21", "c22"]
    np.testing.assert_allclose(rows[-1, 1:], [1.0, 1.0, 0.0, 1.0], atol=1e-9)


def test_reconstruct_validation(su2):
    rep = catalog_rep("su2")
    with pytest.raises(DimensionError):
        reconstruct_curve(rep, CurveSpec.constant(e(3, 1)), initial=np.eye(3), t_span=(0.0, 1.0))
    with pytest.raises(SpanError, match="t_span"):
        reconstruct_curve(rep, CurveSpec.constant(e(3, 1)))
    with pytest.raises(DimensionError):
        reconstruct_curve(rep, CurveSpec.constant(e(2, 1)), t_span=(0.0, 1.0))


def test_left_invariance_on_heisenberg(heisenberg, rng):
    spray = RiemannianSpray(heisenberg, np.eye(3))
    g0_word = [(rng.standard_normal(3), dt) for dt in (0.8, -0.5, 1.2)]
    residual = left_invariance_check(catalog_rep("heisenberg3"), spray, random_unit(rng, 3), g0_word, 3.0)
    assert residual < 1e-8


def test_reconstruction_composes_at_the_midpoint(su2):
    # C(T) = C(T/2) · C'(T/2) where C' restarts from y(T/2)
    spray = RiemannianSpray(su2, np.diag([1.0, 1.0, 2.0]))
    rep = catalog_rep("su2")
    y0 = np.array([1.0, 0.5, 0.25])
    whole = reconstruct_curve(rep, geodesic_flow(spray, y0, (0.0, 2.0)))
    first = geodesic_flow(spray, y0, (0.0, 1.0))
    second = reconstruct_curve(rep, geodesic_flow(spray, first.final_state, (0.0, 1.0)))
    composed = reconstruct_curve(rep, first).final @ second.final
    np.testing.assert_allclose(whole.final, composed, atol=1e-6)
    assert second.unitarity_defect() < 1e-7
