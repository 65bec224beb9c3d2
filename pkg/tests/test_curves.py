import numpy as np
import pytest

from spraylab.curves import CurveKind, CurveSpec
from spraylab.errors import DimensionError


def test_constant_curve():
    curve = CurveSpec.constant([1.0, 2.0, 3.0])
    assert curve.kind is CurveKind.CONSTANT and curve.dim == 3
    np.testing.assert_array_equal(curve(17.0), [1.0, 2.0, 3.0])
    assert curve.breakpoints() == []
    with pytest.raises(DimensionError):
        CurveSpec.constant(np.eye(2))


def test_piecewise_is_right_continuous_and_vanishes_after_last_leg():
    curve = CurveSpec.piecewise([([1.0, 0.0], 0.5), ([0.0, 1.0], 1.0)])
    assert curve.duration == pytest.approx(1.5)
    np.testing.assert_array_equal(curve(0.0), [1.0, 0.0])
    np.testing.assert_array_equal(curve(0.5), [0.0, 1.0])
    np.testing.assert_array_equal(curve(1.49), [0.0, 1.0])
    np.testing.assert_array_equal(curve(2.0), [0.0, 0.0])
    np.testing.assert_allclose(curve.breakpoints(), [0.0, 0.5, 1.5])


def test_piecewise_validation():
    with pytest.raises(ValueError, match="positive"):
        CurveSpec.piecewise([([1.0], 0.0)])
    with pytest.raises(ValueError):
        CurveSpec.piecewise([])
    with pytest.raises(DimensionError, match="mixed"):
        CurveSpec.piecewise([([1.0], 1.0), ([1.0, 2.0], 1.0)])


def test_table_interpolates_linearly():
    curve = CurveSpec.table([0.0, 1.0, 3.0], [[0.0, 1.0], [2.0, 1.0], [2.0, -1.0]])
    np.testing.assert_allclose(curve(0.5), [1.0, 1.0])
    np.testing.assert_allclose(curve(2.0), [2.0, 0.0])
    assert curve.breakpoints() == [0.0, 1.0, 3.0]
    with pytest.raises(ValueError, match="increasing"):
        CurveSpec.table([0.0, 0.0], [[1.0], [1.0]])
    with pytest.raises(DimensionError):
        CurveSpec.table([0.0, 1.0], [[1.0], [1.0], [2.0]])


def test_expression_curve():
    curve = CurveSpec.expression(["cos(t)", "sin(2*t)", "1"])
    assert curve.kind is CurveKind.EXPRESSION and curve.dim == 3
    np.testing.assert_allclose(curve(0.3), [np.cos(0.3), np.sin(0.6), 1.0])
    assert curve.source[1] == "sin(2*t)"


def test_expression_rejects_unknown_symbols():
    with pytest.raises(ValueError, match="unknown symbols: x"):
        CurveSpec.expression(["t*x"])
    with pytest.raises(ValueError, match="cannot parse"):
        CurveSpec.expression(["cos(("])


def test_no_duration_outside_piecewise():
    with pytest.raises(ValueError, match="no intrinsic duration"):
        CurveSpec.constant([1.0]).duration


def test_pieces_split_at_breakpoints():
    curve = CurveSpec.piecewise([([1.0], 1.0), ([2.0], 1.0), ([3.0], 1.0)])
    pieces = curve.pieces(0.5, 2.5)
    assert [(a, b) for a, b, _ in pieces] == [(0.5, 1.0), (1.0, 2.0), (2.0, 2.5)]
    # each piece holds its leg even at its closing corner
    assert [float(fn(b)[0]) for _, b, fn in pieces] == [1.0, 2.0, 3.0]


def test_pieces_run_backwards():
    curve = CurveSpec.piecewise([([1.0], 1.0), ([2.0], 1.0)])
    pieces = curve.pieces(2.0, 0.0)
    assert [(a, b) for a, b, _ in pieces] == [(2.0, 1.0), (1.0, 0.0)]
    assert [float(fn(a)[0]) for a, _, fn in pieces] == [2.0, 1.0]


def test_reversed_piecewise():
    curve = CurveSpec.piecewise([([1.0, 0.0], 0.5), ([0.0, 1.0], 1.0)])
    back = curve.reversed(0.0, curve.duration)
    np.testing.assert_array_equal(back(0.2), [0.0, -1.0])
    np.testing.assert_array_equal(back(1.2), [-1.0, 0.0])


def test_reversed_callable():
    curve = CurveSpec.from_callable(lambda t: np.array([t, 1.0]), 2)
    back = curve.reversed(0.0, 2.0)
    np.testing.assert_allclose(back(0.5), [-1.5, -1.0])
    np.testing.assert_array_equal(CurveSpec.constant([2.0]).reversed(0.0, 1.0)(0.3), [-2.0])
