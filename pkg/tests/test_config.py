import json

import numpy as np
import pytest

from spraylab.config import (
    apply_override,
    build_algebra,
    build_curve,
    build_integrator,
    build_spray,
    config_hash,
    load_config,
    parse_override,
    task_scale,
    validate_config,
)
from spraylab.curves import CurveKind
from spraylab.errors import ConfigError, RegularityError
from spraylab.integrators import IntegratorMethod
from spraylab.spray_model import CustomSpray, QuadraticSpray, RandersSpray, RiemannianSpray, ZeroSpray


def geodesic_config(**overrides):
    raw = {
        "algebra": {"catalog": "su2"},
        "spray": {"type": "riemannian", "metric": [[1, 0, 0], [0, 2, 0], [0, 0, 3]]},
        "task": {"type": "geodesic", "y0": [1.0, 0.2, 0.7], "t_span": [0.0, 2.0]},
    }
    raw.update(overrides)
    return raw


@pytest.fixture
def write_config(tmp_path):
    def write(raw, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(raw))
        return path

    return write


def test_load_config(write_config):
    loaded = load_config(write_config(geodesic_config()))
    assert loaded.config.task.type == "geodesic"
    assert loaded.config.spray.type == "riemannian"
    assert loaded.config.seed == 0
    assert len(loaded.config_hash) == 64
    assert loaded.config_hash == config_hash(geodesic_config())


def test_spray_defaults_to_zero(write_config):
    raw = geodesic_config()
    del raw["spray"]
    loaded = load_config(write_config(raw))
    assert loaded.config.spray.type == "zero"


def test_overrides_change_values_and_hash(write_config):
    path = write_config(geodesic_config())
    plain = load_config(path)
    loaded = load_config(path, ["task.t_span.1=5", "seed=3", "output.path=out/run.csv"])
    assert loaded.config.task.t_span == (0.0, 5.0)
    assert loaded.config.seed == 3
    assert loaded.config.output.path == "out/run.csv"
    assert loaded.config_hash != plain.config_hash


def test_override_parsing():
    assert parse_override("a.b=1.5") == (["a", "b"], 1.5)
    assert parse_override("algebra.catalog=heisenberg3") == (["algebra", "catalog"], "heisenberg3")
    assert parse_override("task.y0=[1, 0, 0]") == (["task", "y0"], [1, 0, 0])
    with pytest.raises(ConfigError) as excinfo:
        parse_override("no-equals-sign")
    assert excinfo.value.field_path == "--set"


def test_override_into_missing_list_element():
    tree = {"task": {"t_span": [0, 1]}}
    apply_override(tree, ["task", "t_span", "0"], 2)
    assert tree["task"]["t_span"] == [2, 1]
    with pytest.raises(ConfigError, match="no list element"):
        apply_override(tree, ["task", "t_span", "7"], 0)
    with pytest.raises(ConfigError, match="cannot descend"):
        apply_override(tree, ["task", "t_span", "0", "x"], 0)


def test_invalid_json_names_line(write_config, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"algebra": {"catalog": "su2"},\n "task": }')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.json")


def test_missing_task_names_field(write_config):
    raw = geodesic_config()
    del raw["task"]
    with pytest.raises(ConfigError) as excinfo:
        load_config(write_config(raw))
    assert excinfo.value.field_path == "task"


def test_unknown_keys_are_rejected(write_config):
    raw = geodesic_config(algebra={"catalog": "su2", "colour": "blue"})
    with pytest.raises(ConfigError) as excinfo:
        load_config(write_config(raw))
    assert excinfo.value.field_path == "algebra.colour"


def test_algebra_needs_exactly_one_source():
    with pytest.raises(ConfigError, match="either a catalog"):
        validate_config(geodesic_config(algebra={"catalog": "su2", "dimension": 3}))


def test_unknown_catalog_name():
    with pytest.raises(ConfigError) as excinfo:
        validate_config(geodesic_config(algebra={"catalog": "so7"}))
    assert excinfo.value.field_path == "algebra.catalog"


def test_vector_lengths_are_checked():
    raw = geodesic_config()
    raw["task"]["y0"] = [1.0, 0.0]
    with pytest.raises(ConfigError, match="expected 3 components") as excinfo:
        validate_config(raw)
    assert excinfo.value.field_path == "task.y0"


def test_curve_lengths_are_checked():
    raw = geodesic_config(
        task={
            "type": "transport-nonlinear",
            "y0": [1, 0, 0],
            "curve": {"type": "piecewise", "legs": [{"w": [1, 0, 0], "dt": 1}, {"w": [1, 0], "dt": 1}]},
        }
    )
    with pytest.raises(ConfigError) as excinfo:
        validate_config(raw)
    assert excinfo.value.field_path == "task.curve.legs.1.w"


def test_linear_transport_needs_one_path():
    raw = geodesic_config(task={"type": "transport-linear", "w0": [0, 1, 0], "y0": [1, 0, 0]})
    with pytest.raises(ConfigError, match="needs t_span"):
        validate_config(raw)
    raw["task"]["curve"] = {"type": "constant", "w": [1, 0, 0]}
    with pytest.raises(ConfigError, match="either y0"):
        validate_config(raw)


@pytest.mark.parametrize(
    "curve",
    [{"type": "constant", "w": [0, 0, 1]}, {"type": "expression", "components": ["1", "t", "0"]}],
)
@pytest.mark.parametrize(
    "task",
    [{"type": "transport-nonlinear", "y0": [1, 0, 0]}, {"type": "transport-linear", "w0": [1, 0, 0]}],
)
def test_open_ended_curves_need_t_span(curve, task):
    raw = geodesic_config(task={**task, "curve": curve})
    with pytest.raises(ConfigError, match="no natural span") as excinfo:
        validate_config(raw)
    assert excinfo.value.field_path == "task.t_span"
    raw["task"]["t_span"] = [0.0, 1.0]
    assert validate_config(raw).config.task.t_span == (0.0, 1.0)


def test_piecewise_and_table_curves_carry_their_span():
    legs = {"type": "piecewise", "legs": [{"w": [1, 0, 0], "dt": 0.5}]}
    table = {"type": "table", "times": [0, 1], "values": [[1, 0, 0], [0, 1, 0]]}
    for curve in (legs, table):
        raw = geodesic_config(task={"type": "transport-nonlinear", "y0": [1, 0, 0], "curve": curve})
        assert validate_config(raw).config.task.t_span is None


def test_force_task_replaces_other_task(write_config):
    loaded = load_config(write_config(geodesic_config()), force_task="verify")
    assert loaded.config.task.type == "verify"
    assert loaded.config.task.n_random == 5


def test_custom_algebra():
    raw = geodesic_config(algebra={"dimension": 2, "brackets": [{"i": 1, "j": 2, "coeffs": {"2": 1.0}}]})
    raw["spray"] = {"type": "zero"}
    raw["task"]["y0"] = [1.0, 1.0]
    algebra = build_algebra(validate_config(raw).config.algebra)
    np.testing.assert_array_equal(algebra.bracket([1, 0], [0, 1]), [0, 1])


def test_non_lie_brackets_point_at_brackets():
    raw = geodesic_config(
        algebra={
            "dimension": 3,
            "brackets": [{"i": 1, "j": 2, "coeffs": {"3": 1}}, {"i": 3, "j": 1, "coeffs": {"1": 1}}],
        }
    )
    with pytest.raises(ConfigError) as excinfo:
        build_algebra(validate_config(raw).config.algebra)
    assert excinfo.value.field_path == "algebra.brackets"


def build(raw):
    config = validate_config(raw).config
    return build_spray(config.spray, build_algebra(config.algebra), task_scale(config.task))


def test_build_sprays():
    assert isinstance(build(geodesic_config(spray={"type": "zero"})), ZeroSpray)
    assert isinstance(build(geodesic_config()), RiemannianSpray)
    randers = build(geodesic_config(spray={"type": "randers", "metric": np.eye(3).tolist(), "beta": [0.3, 0, 0]}))
    assert isinstance(randers, RandersSpray)
    quadratic = build(geodesic_config(spray={"type": "quadratic", "coeffs": [{"i": 1, "j": 2, "k": 3, "value": 0.5}]}))
    assert isinstance(quadratic, QuadraticSpray)
    assert quadratic.coefficients[0, 1, 2] == 0.5
    custom = build(
        geodesic_config(
            spray={
                "type": "custom",
                "polynomial": [{"exponents": [1, 1, 0], "target": 3, "coefficient": 2.0}],
                "differentiation": "finite_difference",
            }
        )
    )
    assert isinstance(custom, CustomSpray)
    np.testing.assert_allclose(custom.eta([1.0, 2.0, 0.0]), [0.0, 0.0, 4.0])


def test_y_floor_follows_task_scale():
    raw = geodesic_config()
    raw["task"]["y0"] = [100.0, 0.0, 0.0]
    assert build(raw).y_floor == pytest.approx(1e-6)
    raw["spray"]["y_scale"] = 2.0
    assert build(raw).y_floor == pytest.approx(2e-8)


def test_spray_errors():
    with pytest.raises(ConfigError, match="2-homogeneous") as excinfo:
        build(geodesic_config(spray={"type": "custom", "polynomial": [{"exponents": [1, 0, 0], "target": 1}]}))
    assert excinfo.value.field_path == "spray"
    with pytest.raises(ConfigError) as excinfo:
        build(geodesic_config(spray={"type": "quadratic", "coeffs": [{"i": 4, "j": 1, "k": 1, "value": 1}]}))
    assert excinfo.value.field_path == "spray.coeffs"
    # an irregular metric is a numerical failure, not a config typo
    with pytest.raises(RegularityError):
        build(geodesic_config(spray={"type": "randers", "metric": np.eye(3).tolist(), "beta": [1.5, 0, 0]}))


def test_build_integrator():
    raw = geodesic_config(integrator={"method": "rk4_fixed", "step": 0.05})
    cfg = build_integrator(validate_config(raw).config.integrator)
    assert cfg.method is IntegratorMethod.RK4_FIXED
    assert cfg.step == 0.05
    with pytest.raises(ConfigError) as excinfo:
        validate_config(geodesic_config(integrator={"step": -1}))
    assert excinfo.value.field_path == "integrator.step"


def test_build_curves():
    raw = geodesic_config(
        task={
            "type": "transport-nonlinear",
            "y0": [1, 0, 0],
            "curve": {"type": "expression", "components": ["cos(t)", "sin(t)", "0"]},
        }
    )
    curve = build_curve(validate_config(raw).config.task.curve)
    assert curve.kind is CurveKind.EXPRESSION
    raw["task"]["curve"]["components"] = ["cos(s)", "0", "0"]
    with pytest.raises(ConfigError) as excinfo:
        build_curve(validate_config(raw).config.task.curve)
    assert excinfo.value.field_path == "task.curve"


def test_loop_scales_must_be_positive():
    raw = geodesic_config(
        task={"type": "loop-defect", "w1": [1, 0, 0], "w2": [0, 1, 0], "y0": [0, 0, 1], "scales": [0.1, -0.1]}
    )
    with pytest.raises(ConfigError, match="positive"):
        validate_config(raw)


def test_holonomy_depth_is_bounded():
    raw = geodesic_config(task={"type": "holonomy-dim", "max_depth": 6})
    with pytest.raises(ConfigError):
        validate_config(raw)
