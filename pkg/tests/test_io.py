import json
import math

import pytest
from hypothesis import given, strategies as st

from devlab.io import RunManifest, Series, format_value, load_config, read_csv, run_id, svg_plot, write_csv


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip(v):
    assert float(format_value(v)) == v


def test_format_kinds():
    assert format_value(True) == "true"
    assert format_value(3) == "3"
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value("ternary") == "ternary"


def test_csv_layout(tmp_path):
    p = write_csv(tmp_path / "a.csv", ["t", "v"], [(1, 0.5), (2, 1 / 3)], "abc")
    raw = p.read_bytes()
    assert b"\r" not in raw
    assert raw.decode("utf-8").splitlines()[:2] == ["# run_id=abc", "t,v"]
    rid, header, rows = read_csv(p)
    assert rid == "abc" and header == ["t", "v"]
    assert float(rows[1][1]) == 1 / 3


def test_run_id_is_order_free():
    a = run_id({"policy": "ternary", "T": 10})
    assert a == run_id({"T": 10, "policy": "ternary"})
    assert a != run_id({"T": 11, "policy": "ternary"})
    assert len(a) == 16 and int(a, 16) >= 0


def test_manifest(tmp_path):
    m = RunManifest("simulate", {"T": 5}, "0.1.0", 1.5, {"ok": True, "other": False})
    assert not m.passed
    data = json.loads(m.write(tmp_path).read_text())
    assert data["run_id"] == m.run_id and data["checks"] == {"ok": True, "other": False}
    assert data["config"] == {"T": 5}


def test_load_config(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\npolicy = ternary\n--c-eps=0.3  # inline\n\nT=100\n")
    assert load_config(p) == {"policy": "ternary", "c_eps": "0.3", "T": "100"}


@pytest.mark.parametrize("text", ["policy\n", "=3\n", "T=1\nT=2\n"])
def test_load_config_errors(tmp_path, text):
    p = tmp_path / "bad.cfg"
    p.write_text(text)
    with pytest.raises(ValueError):
        load_config(p)


def test_svg(tmp_path):
    import numpy as np
    import xml.etree.ElementTree as ET

    t = np.arange(1, 5001)
    s = Series("a", t, np.log(t), (np.log(t) - 1, np.log(t) + 1))
    p = svg_plot(tmp_path / "p.svg", [s, Series("b", t, np.sqrt(t))], title="x<y", xlabel="t", ylabel="r")
    root = ET.parse(p).getroot()
    assert root.tag.endswith("svg")
    tags = {el.tag.rsplit("}", 1)[-1] for el in root.iter()}
    assert "polyline" in tags
    assert "x&lt;y" in p.read_text()
