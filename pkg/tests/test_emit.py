import json

import numpy as np
import pytest

from spraylab.emit import Provenance, load_csv, save_csv, save_json, status_path, write_status
from spraylab.errors import ConfigError


@pytest.fixture
def provenance():
    return Provenance("ab" * 32, 7, "geodesic", version="9.9.9")


def test_json_document_has_provenance(tmp_path, provenance):
    path = save_json(tmp_path / "out" / "flag.json", {"flag": 0.25, "y": np.array([1.0, 0.0, 0.0])}, provenance)
    document = json.loads(path.read_text())
    assert document["provenance"] == {
        "config_hash": "ab" * 32,
        "seed": 7,
        "task": "geodesic",
        "version": "9.9.9",
    }
    assert document["result"] == {"flag": 0.25, "y": [1.0, 0.0, 0.0]}


def test_json_rounds_and_nulls_non_finite(tmp_path, provenance):
    result = {"third": 1.0 / 3.0, "bad": [np.nan, np.inf], "count": np.int64(4), "ok": np.bool_(True)}
    path = save_json(tmp_path / "r.json", result, provenance, precision=4)
    document = json.loads(path.read_text())["result"]
    assert document["third"] == 0.3333
    assert document["bad"] == [None, None]
    assert document["count"] == 4
    assert document["ok"] is True


def test_csv_reads_back(tmp_path, provenance):
    rows = np.array([[0.0, 1.0, -2.5], [0.5, 1.0 / 3.0, 1e-12]])
    path = save_csv(tmp_path / "g.csv", ["t", "y1", "y2"], rows, provenance)
    text = path.read_text().splitlines()
    assert text[0] == "# config_hash=" + "ab" * 32
    assert "# seed=7" in text
    header, loaded = load_csv(path)
    assert header == ["t", "y1", "y2"]
    np.testing.assert_array_equal(loaded, rows)


def test_csv_precision(tmp_path, provenance):
    path = save_csv(tmp_path / "g.csv", ["t", "y1"], [[0.0, 2.0 / 3.0]], provenance, precision=3)
    assert path.read_text().splitlines()[-1] == "0,0.667"


def test_unwritable_output_is_a_config_error(tmp_path, provenance):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ConfigError) as excinfo:
        save_json(blocker / "out.json", {}, provenance)
    assert excinfo.value.field_path == "output.path"


def test_status_file(tmp_path, provenance):
    artifact = tmp_path / "transport-nonlinear.csv"
    assert status_path(artifact) == tmp_path / "transport-nonlinear.status.json"
    path = write_status(
        artifact,
        "domain_exit",
        3,
        provenance,
        "spray undefined near 0",
        extra={"terminus": [0.0, 1e-9], "partial": str(artifact)},
    )
    document = json.loads(path.read_text())
    assert document["status"] == "domain_exit"
    assert document["exit_code"] == 3
    assert document["artifact"] == str(artifact)
    assert document["terminus"] == [0.0, 1e-9]
    assert "field" not in document


def test_status_names_the_field(tmp_path):
    path = write_status(tmp_path / "x.json", "error", 2, None, "bad", field="task.y0")
    document = json.loads(path.read_text())
    assert document["field"] == "task.y0"
    assert "provenance" not in document
