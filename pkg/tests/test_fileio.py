import json
import math

import numpy as np
import pytest

from statecp.errors import IngestError
from statecp.fileio import dump_artifact, ingest, jsonable


def write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestIngest:
    def test_single_column_log(self, tmp_path):
        p = write(tmp_path, f"1\n{math.e!r}\n{math.e**2!r}\n")
        ts, rep = ingest(p, transforms=["log"])
        np.testing.assert_allclose(ts.values, [0.0, 1.0, 2.0], atol=1e-15)
        assert rep.header is None and rep.rows_read == 3

    def test_time_value_layout_with_header(self, tmp_path):
        p = write(tmp_path, "day,cases\n1,10\n2,20\n3,40\n")
        ts, rep = ingest(p)
        assert ts.values.tolist() == [10, 20, 40]
        assert rep.header == ["day", "cases"] and rep.column == "cases"

    def test_column_by_name_and_index(self, tmp_path):
        p = write(tmp_path, "a,b,c\n1,2,3\n4,5,6\n")
        assert ingest(p, "c")[0].values.tolist() == [3, 6]
        assert ingest(p, 0)[0].values.tolist() == [1, 4]
        assert ingest(p, "1")[0].values.tolist() == [2, 5]

    def test_drops_are_recorded(self, tmp_path):
        p = write(tmp_path, "v\n1\nx\n0\n3\n")
        ts, rep = ingest(p, transforms=["log"])
        assert ts.values.tolist() == pytest.approx([0.0, math.log(3)])
        assert rep.dropped_non_numeric == [3] and rep.dropped_nonpositive == [4]

    def test_strict(self, tmp_path):
        p = write(tmp_path, "1\nnan\n2\n")
        with pytest.raises(IngestError):
            ingest(p, strict=True)

    def test_log_then_difference(self, tmp_path):
        p = write(tmp_path, "1\n2\n4\n8\n")
        ts, _ = ingest(p, transforms=["log", "difference"])
        np.testing.assert_allclose(ts.values, [math.log(2)] * 3, rtol=1e-15)
        assert ts.transforms == ("log", "difference")

    @pytest.mark.parametrize("text,column", [("", None), ("a,b\n1,2\n", "z"), ("a\nx\ny\n", None), ("1,2\n", 5)])
    def test_bad_inputs(self, tmp_path, text, column):
        with pytest.raises(IngestError):
            ingest(write(tmp_path, text), column)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestError):
            ingest(tmp_path / "absent.csv")

    def test_unknown_transform(self, tmp_path):
        with pytest.raises(IngestError):
            ingest(write(tmp_path, "1\n2\n"), transforms=["sqrt"])


class TestArtifacts:
    def test_floats_round_trip(self):
        vals = np.random.default_rng(0).normal(size=50)
        back = json.loads(dump_artifact({"v": vals}))
        assert np.array(back["v"]).tobytes() == vals.tobytes()
        assert back["schema"] == 1

    def test_non_finite_become_null(self):
        assert jsonable([np.nan, np.inf, 1.5]) == [None, None, 1.5]

    def test_numpy_scalars(self):
        out = jsonable({"a": np.int64(3), "b": np.bool_(True), "c": (np.float32(0.5),)})
        assert out == {"a": 3, "b": True, "c": [0.5]}
        json.dumps(out)

    def test_writes_file(self, tmp_path):
        p = tmp_path / "o.json"
        text = dump_artifact({"x": 1}, p)
        assert p.read_text() == text + "\n"
