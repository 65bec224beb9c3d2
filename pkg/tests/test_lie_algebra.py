import numpy as np
import pytest

from spraylab.errors import DimensionError, InvalidAlgebraError, UnknownCatalogEntryError
from spraylab.lie_algebra import CATALOG_NAMES, LieAlgebra, catalog

from helpers import e


@pytest.mark.parametrize("name", ["su2", "heisenberg3", "sl2r", "e2", "solvable2", "abelian_4"])
def test_catalog_satisfies_jacobi(name):
    algebra = catalog(name)
    assert algebra.jacobi_defect() <= 1e-12
    assert algebra.name == name


def test_su2_brackets_are_cyclic(su2):
    np.testing.assert_array_equal(su2.bracket(e(3, 1), e(3, 2)), e(3, 3))
    np.testing.assert_array_equal(su2.bracket(e(3, 2), e(3, 3)), e(3, 1))
    np.testing.assert_array_equal(su2.bracket(e(3, 3), e(3, 1)), e(3, 2))
    np.testing.assert_array_equal(su2.bracket(e(3, 2), e(3, 1)), -e(3, 3))


def test_sl2r_basis_relations():
    sl2 = catalog("sl2r")
    h, x, y = e(3, 1), e(3, 2), e(3, 3)
    np.testing.assert_array_equal(sl2.bracket(h, x), 2 * x)
    np.testing.assert_array_equal(sl2.bracket(h, y), -2 * y)
    np.testing.assert_array_equal(sl2.bracket(x, y), h)


def test_bracket_is_bilinear_and_alternating(su2, rng):
    x, y, z = rng.standard_normal((3, 3))
    a, b = 1.7, -0.3
    np.testing.assert_allclose(su2.bracket(a * x + b * y, z), a * su2.bracket(x, z) + b * su2.bracket(y, z))
    np.testing.assert_allclose(su2.bracket(x, x), 0.0, atol=1e-15)


def test_ad_matrix_matches_bracket(heisenberg, rng):
    x, w = rng.standard_normal((2, 3))
    np.testing.assert_allclose(heisenberg.ad_matrix(x) @ w, heisenberg.bracket(x, w), atol=1e-15)


def test_non_lie_table_is_rejected():
    brackets = [(1, 2, {3: 1.0}), (3, 1, {1: 1.0})]
    with pytest.raises(InvalidAlgebraError, match="Jacobi"):
        LieAlgebra.from_brackets(3, brackets)


def test_jacobi_defect_of_non_lie_table():
    c = np.zeros((3, 3, 3))
    c[0, 1, 2], c[1, 0, 2] = 1.0, -1.0
    c[2, 0, 0], c[0, 2, 0] = 1.0, -1.0
    algebra = LieAlgebra.from_structure_constants(c, validate=False)
    assert algebra.jacobi_defect() > 0.5


def test_from_brackets_fills_antisymmetric_partner():
    algebra = LieAlgebra.from_brackets(2, [(1, 2, {2: 1.0})])
    np.testing.assert_array_equal(algebra.bracket(e(2, 2), e(2, 1)), -e(2, 2))


def test_from_brackets_rejects_bad_index():
    with pytest.raises(InvalidAlgebraError, match="outside"):
        LieAlgebra.from_brackets(2, [(1, 3, {2: 1.0})])


def test_bad_shape_is_rejected():
    with pytest.raises(InvalidAlgebraError):
        LieAlgebra(np.zeros((2, 3, 2)))


def test_dimension_mismatch(su2):
    with pytest.raises(DimensionError, match="dimension 3"):
        su2.bracket(np.ones(2), np.ones(3))


def test_center():
    heis = catalog("heisenberg3")
    (z,) = heis.center()
    np.testing.assert_allclose(np.abs(z), e(3, 3), atol=1e-12)
    assert catalog("su2").center() == []
    assert len(catalog("abelian_2").center()) == 2


def test_killing_form_of_su2(su2):
    np.testing.assert_allclose(su2.killing_form(), -2 * np.eye(3), atol=1e-14)


def test_unimodular():
    assert catalog("su2").is_unimodular()
    assert catalog("heisenberg3").is_unimodular()
    assert not catalog("solvable2").is_unimodular()


def test_ad_invariance(su2):
    assert su2.is_ad_invariant(np.eye(3))
    assert not su2.is_ad_invariant(np.diag([1.0, 1.0, 2.0]))


def test_unknown_catalog_entry():
    with pytest.raises(UnknownCatalogEntryError, match="known: abelian_n"):
        catalog("so7")
    with pytest.raises(UnknownCatalogEntryError):
        catalog("abelian_0")


def test_catalog_names_listed():
    assert set(CATALOG_NAMES) >= {"su2", "heisenberg3", "sl2r", "e2", "solvable2", "abelian_n"}


def test_structure_constants_are_read_only(su2):
    with pytest.raises(ValueError):
        su2.c[0, 1, 2] = 5.0
