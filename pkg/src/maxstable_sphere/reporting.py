"""Report records and file artifacts.

Reports are JSON lines with the keys ``check, pass, params, estimate,
stderr, analytic, n, seed``.  Non-finite numbers are written as ``null`` so
every line is strict JSON.
"""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ._checks import check_points
from .spectral import events_csv_text

__all__ = [
    "Report",
    "report_lines",
    "write_reports",
    "trajectory_csv_text",
    "write_trajectory_csv",
    "write_state_snapshot",
    "read_state_snapshot",
]


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if x is None or isinstance(x, str):
        return x
    if hasattr(x, "as_array"):
        return _clean(x.as_array())
    return str(x)


@dataclass
class Report:
    """One check outcome.  ``estimate``/``analytic`` compare like with like
    (for KS checks: statistic and threshold)."""

    check: str
    passed: bool
    params: dict = field(default_factory=dict)
    estimate: float = None
    stderr: float = None
    analytic: float = None
    n: int = None
    seed: int = None

    def to_dict(self):
        return {
            "check": self.check,
            "pass": bool(self.passed),
            "params": _clean(self.params),
            "estimate": _clean(self.estimate),
            "stderr": _clean(self.stderr),
            "analytic": _clean(self.analytic),
            "n": _clean(self.n),
            "seed": _clean(self.seed),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), allow_nan=False)

    @classmethod
    def from_ks(cls, check, ks, params=None, seed=None):
        return cls(check, ks.passed, params or {}, ks.statistic, None, ks.threshold, ks.n, seed)


def report_lines(reports):
    return "".join(r.to_json() + "\n" for r in reports)


def write_reports(reports, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(report_lines(reports))


def trajectory_csv_text(times, nodes, values):
    """``t,node_index,x,y,z,value`` rows; ``values`` has shape (len(times), len(nodes))."""
    nodes = check_points(nodes)
    lines = ["t,node_index,x,y,z,value"]
    for t, row in zip(times, values):
        for i, (p, v) in enumerate(zip(nodes, row)):
            lines.append(f"{t},{i},{p[0]:.17g},{p[1]:.17g},{p[2]:.17g},{v:.17g}")
    return "\n".join(lines) + "\n"


def write_trajectory_csv(path, times, nodes, values):
    with open(path, "w", newline="\n") as fh:
        fh.write(trajectory_csv_text(times, nodes, values))


def write_state_snapshot(state, directory, stem="state", J=None):
    """Event CSV of the state's atoms (current evaluation centers and
    weights) plus a JSON sidecar ``{t, a, theta, axis, kappa, scale, J}``.

    Returns the two paths.
    """
    cfg = state.config
    csv_path = os.path.join(directory, stem + ".csv")
    json_path = os.path.join(directory, stem + ".json")
    with open(csv_path, "w", newline="\n") as fh:
        fh.write(events_csv_text(state))
    side = {"t": state.t, "a": cfg.a, "theta": cfg.theta, "axis": list(cfg.axis),
            "kappa": cfg.kappa, "scale": state.scale, "J": J}
    with open(json_path, "w", newline="\n") as fh:
        fh.write(json.dumps(_clean(side), allow_nan=False) + "\n")
    return csv_path, json_path


def read_state_snapshot(directory, stem="state"):
    """Return ``(sidecar dict, weights, centers)``."""
    with open(os.path.join(directory, stem + ".json")) as fh:
        side = json.load(fh)
    arr = np.loadtxt(os.path.join(directory, stem + ".csv"), delimiter=",", skiprows=1, ndmin=2)
    return side, arr[:, 0], arr[:, 1:4]
