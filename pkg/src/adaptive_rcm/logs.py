"""CSV serialization of simulation logs and run summaries."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .estimation import LoadCase
from .simulation import LOG_FIELDS, SimLog

_XYZ = ("x", "y", "z")


def _vec_cols(prefix: str) -> list[str]:
    return [f"{prefix}_{a}" for a in _XYZ]


# normative column order; anything after ``e_ins`` is supplementary
CSV_COLUMNS: list[str] = (
    ["t"] + [f"q{i}" for i in range(1, 8)] + ["eta"]
    + _vec_cols("xee") + _vec_cols("xins") + _vec_cols("xrcm") + _vec_cols("xtrocar")
    + _vec_cols("xdes") + _vec_cols("frcm_true") + _vec_cols("fins_true")
    + _vec_cols("frcm_hat") + _vec_cols("fins_hat")
    + ["gamma_hat", "case", "e_rcm", "e_ins"]
)
EXTRA_COLUMNS: list[str] = (
    [f"qd{i}" for i in range(1, 8)] + ["etadot"]
    + _vec_cols("fb") + _vec_cols("mb") + ["null_residual"]
)

# log field -> CSV column names, in file order
_FIELD_COLUMNS: dict[str, list[str]] = {
    "t": ["t"], "q": [f"q{i}" for i in range(1, 8)], "eta": ["eta"],
    "x_ee": _vec_cols("xee"), "x_ins": _vec_cols("xins"), "x_rcm": _vec_cols("xrcm"),
    "x_trocar": _vec_cols("xtrocar"), "x_desired": _vec_cols("xdes"),
    "f_rcm": _vec_cols("frcm_true"), "f_ins": _vec_cols("fins_true"),
    "f_rcm_hat": _vec_cols("frcm_hat"), "f_ins_hat": _vec_cols("fins_hat"),
    "gamma_hat": ["gamma_hat"], "e_rcm": ["e_rcm"], "e_ins": ["e_ins"],
    "q_dot": [f"qd{i}" for i in range(1, 8)], "eta_dot": ["etadot"],
    "wrench_force": _vec_cols("fb"), "wrench_moment": _vec_cols("mb"),
    "null_residual": ["null_residual"],
}
assert set(_FIELD_COLUMNS) == set(LOG_FIELDS)


class SchemaError(ValueError):
    pass


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_csv(sim_log: SimLog, path: str | Path) -> Path:
    path = Path(path)
    header = CSV_COLUMNS + EXTRA_COLUMNS
    n = len(sim_log)
    table = np.empty((n, len(header)), dtype=object)
    index = {c: i for i, c in enumerate(header)}
    for key, cols in _FIELD_COLUMNS.items():
        data = getattr(sim_log, key).reshape(n, -1)
        for j, c in enumerate(cols):
            table[:, index[c]] = [_fmt(v) for v in data[:, j]]
    table[:, index["case"]] = sim_log.cases
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(table.tolist())
    return path


def read_csv(path: str | Path) -> SimLog:
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file, no records")
    header, body = rows[0], rows[1:]
    if header[: len(CSV_COLUMNS)] != CSV_COLUMNS:
        missing = [c for c in CSV_COLUMNS if c not in header]
        raise SchemaError(f"{path}: column layout mismatch"
                          + (f" (missing {', '.join(missing)})" if missing else ""))
    if not body:
        raise SchemaError(f"{path}: no records")
    index = {c: i for i, c in enumerate(header)}
    case_col = index["case"]
    numeric_cols = [i for i in range(len(header)) if i != case_col]
    values = np.full((len(body), len(header)), np.nan)
    try:
        for r, row in enumerate(body):
            for i in numeric_cols:
                values[r, i] = float(row[i])
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"{path}: bad record {r + 1}: {exc}") from exc
    columns = {}
    for key, cols in _FIELD_COLUMNS.items():
        idx = [index.get(c) for c in cols]
        block = np.column_stack([values[:, i] if i is not None else np.full(len(body), np.nan)
                                 for i in idx])
        columns[key] = block[:, 0] if len(cols) == 1 else block
    return SimLog.from_columns(path.stem, columns, [row[case_col] for row in body])


@dataclass
class RunSummary:
    scenario: str
    steps: int
    terminal_e_rcm: float
    max_e_rcm: float
    terminal_f_rcm: float
    rms_e_ins: float
    gamma_accuracy: float | None  # percent of conclusive steps; None if none were conclusive
    runtime_s: float = 0.0

    def statistics(self) -> dict:
        """Everything except wall-clock time, i.e. what the log alone determines."""
        d = asdict(self)
        d.pop("runtime_s")
        return d

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def summarize(sim_log: SimLog, runtime_s: float = 0.0) -> RunSummary:
    f = np.linalg.norm(sim_log.f_rcm, axis=1)
    truth = np.where(np.any(sim_log.f_ins != 0.0, axis=1),
                     LoadCase.RCM_PLUS_INSTRUMENT.value, LoadCase.SINGLE_RCM.value)
    cases = sim_log.cases
    conclusive = cases != LoadCase.INCONCLUSIVE.value
    accuracy = (100.0 * float(np.mean(cases[conclusive] == truth[conclusive]))
                if conclusive.any() else None)
    return RunSummary(
        scenario=sim_log.name,
        steps=len(sim_log),
        terminal_e_rcm=float(sim_log.e_rcm[-1]),
        max_e_rcm=float(sim_log.e_rcm.max()),
        terminal_f_rcm=float(f[-1]),
        rms_e_ins=float(math.sqrt(np.mean(sim_log.e_ins ** 2))),
        gamma_accuracy=accuracy,
        runtime_s=runtime_s,
    )
