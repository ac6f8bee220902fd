import json
import math

import numpy as np

from maxstable_sphere.chain import ChainConfig, StationaryParams, stationary_draw
from maxstable_sphere.reporting import (Report, read_state_snapshot, report_lines,
                                        trajectory_csv_text, write_state_snapshot)
from maxstable_sphere.rng import RngStream
from maxstable_sphere.validation import KsResult

KEYS = {"check", "pass", "params", "estimate", "stderr", "analytic", "n", "seed"}


def test_report_json_is_strict():
    r = Report("x", True, {"a": np.float64(0.5), "v": np.array([1.0, math.inf]),
                           "ok": np.bool_(True)}, math.nan, None, -math.inf, np.int64(3), 7)
    d = json.loads(r.to_json())
    assert set(d) == KEYS
    assert d["estimate"] is None and d["analytic"] is None
    assert d["params"] == {"a": 0.5, "v": [1.0, None], "ok": True}
    assert d["n"] == 3 and d["seed"] == 7 and d["pass"] is True


def test_from_ks():
    r = Report.from_ks("margin", KsResult(0.01, 10_000, 0.0163), {"kappa": 1.0}, 5)
    d = r.to_dict()
    assert d["estimate"] == 0.01 and d["analytic"] == 0.0163 and d["pass"] is True
    assert report_lines([r, r]).count("\n") == 2


def test_trajectory_csv_roundtrips_17_digits():
    nodes = np.array([[0.0, 0.6, 0.8], [1.0, 0.0, 0.0]])
    vals = np.array([[1 / 3, math.pi], [2 / 7, math.e]])
    text = trajectory_csv_text([0, 1], nodes, vals)
    rows = [r.split(",") for r in text.splitlines()[1:]]
    assert [float(r[5]) for r in rows] == vals.reshape(-1).tolist()
    assert [int(r[1]) for r in rows] == [0, 1, 0, 1]


def test_state_snapshot(tmp_path):
    cfg = ChainConfig(a=0.5, theta=0.3, kappa=2.0)
    sp = StationaryParams.derive(cfg)
    st = stationary_draw(cfg, sp, RngStream(1))
    write_state_snapshot(st, tmp_path, J=sp.J)
    side, w, c = read_state_snapshot(tmp_path)
    assert side["J"] == sp.J and side["kappa"] == 2.0 and side["t"] == 0
    np.testing.assert_array_equal(w, st.weights)
    np.testing.assert_array_equal(c, st.centers)
    assert np.all(np.diff(w) <= 0)
