"""
Results Store

This module persists experiment records and fit results as CSV files
that open with a block of "# key: value" comment lines (version, seed,
configuration, optional timestamp). Every CSV written here can be read
back by ``ResultsStore.load`` or ``read_params_csv``.
"""

import io
import logging
import math
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ledfit import __version__
from ledfit.errors import LedFitError
from ledfit.state import PARAM_NAMES, FitResult, ModelParams, RunRecord

logger = logging.getLogger(__name__)

RECORD_COLUMNS = [
    "config",
    "instance",
    "repeat",
    "seed",
    "best_rmsp",
    "best_rms",
    "evaluations",
    "newton_iterations",
    "newton_converged",
    "converged_iterations",
    "pre_newton_rmsp",
    "wall_seconds",
    *PARAM_NAMES,
]

FIT_COLUMNS = [
    "instance",
    "method",
    "rmsp",
    "rms",
    "e",
    "iterations",
    "termination",
    "evaluations",
    *PARAM_NAMES,
]


def comment_header(
    seed: Optional[int],
    config: Dict[str, Any],
    timestamp: bool = True,
) -> List[str]:
    """Comment lines recording version, seed, configuration and time."""
    lines = [f"ledfit {__version__}"]
    if seed is not None:
        lines.append(f"seed: {seed}")
    lines.append("config: " + " ".join(f"{k}={v}" for k, v in config.items()))
    if timestamp:
        lines.append(f"timestamp: {datetime.now().isoformat(timespec='seconds')}")
    return lines


def with_header(header: Iterable[str], frame: pd.DataFrame) -> str:
    comments = "".join(f"# {line}\n" for line in header)
    return comments + frame.to_csv(index=False, lineterminator="\n")


def _read_text(path: Union[str, Path]) -> Tuple[List[str], str]:
    path = Path(path)
    if not path.is_file():
        raise LedFitError(f"{path}: file not found")
    comments, body = [], []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            comments.append(line[1:].strip())
        elif line.strip():
            body.append(line)
    return comments, "\n".join(body) + "\n"


def read_table(path: Union[str, Path]) -> Tuple[List[str], pd.DataFrame]:
    """
    Read a CSV with an optional comment header.

    Semicolon-separated files are accepted, and decimal commas inside
    numeric cells are normalized to points.

    Returns:
        The comment lines and a DataFrame of strings
    """
    comments, body = _read_text(path)
    first = body.split("\n", 1)[0]
    sep = ";" if ";" in first else ","
    frame = pd.read_csv(io.StringIO(body), sep=sep, dtype=str, keep_default_na=False)
    frame.columns = [c.strip() for c in frame.columns]
    return comments, frame


def to_number(column: pd.Series) -> pd.Series:
    text = column.astype(str).str.strip().str.replace(",", ".", regex=False)
    return text.map(lambda v: float(v) if v else math.nan)


class ResultsStore:
    """
    Collects RunRecords and saves them as one results CSV.

    The comment header is kept as the first lines of the file.
    """

    def __init__(self, header: Optional[List[str]] = None):
        """
        Initialize the store.

        Args:
            header: Comment lines written above the table
        """
        self.header: List[str] = list(header or [])
        self.records: List[RunRecord] = []

    def add_record(self, record: RunRecord):
        self.records.append(record)

    def extend(self, records: Iterable[RunRecord]):
        self.records.extend(records)

    def to_frame(self, wall_times: bool = True) -> pd.DataFrame:
        """
        Records as a DataFrame in RECORD_COLUMNS order.

        Args:
            wall_times: Write wall-clock seconds; left empty otherwise so
                repeated runs produce identical files
        """
        rows = []
        for r in self.records:
            rows.append(
                {
                    "config": r.config_name,
                    "instance": r.instance_id,
                    "repeat": r.repeat,
                    "seed": r.seed,
                    "best_rmsp": r.best_rmsp,
                    "best_rms": r.best_rms,
                    "evaluations": r.evaluations,
                    "newton_iterations": r.newton_iterations,
                    "newton_converged": r.newton_converged,
                    "converged_iterations": r.converged_iterations,
                    "pre_newton_rmsp": r.pre_newton_rmsp,
                    "wall_seconds": r.wall_seconds if wall_times else math.nan,
                    **r.best_params.as_dict(),
                }
            )
        return pd.DataFrame(rows, columns=RECORD_COLUMNS)

    def format(self, wall_times: bool = True) -> str:
        return with_header(self.header, self.to_frame(wall_times))

    def save(self, path: Union[str, Path], wall_times: bool = True):
        """Write the header and all records to ``path``."""
        Path(path).write_text(self.format(wall_times), encoding="utf-8")
        logger.info("saved %d records to %s", len(self.records), path)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ResultsStore":
        """Read a results CSV written by ``save``."""
        comments, frame = read_table(path)
        missing = [c for c in ("config", "instance", "best_rmsp") if c not in frame.columns]
        if missing:
            raise LedFitError(f"{path}: missing columns {', '.join(missing)}")

        def numbers(name: str, default: float) -> pd.Series:
            if name not in frame.columns:
                return pd.Series(default, index=frame.index, dtype=float)
            return to_number(frame[name])

        try:
            columns = {
                name: numbers(name, default)
                for name, default in [
                    ("repeat", 0),
                    ("best_rmsp", math.nan),
                    ("best_rms", 0.0),
                    ("evaluations", 0),
                    ("newton_iterations", 0),
                    ("newton_converged", 0),
                    ("converged_iterations", 0),
                    ("pre_newton_rmsp", math.nan),
                    ("wall_seconds", math.nan),
                    *[(p, math.nan) for p in PARAM_NAMES],
                ]
            }
        except ValueError as exc:
            raise LedFitError(f"{path}: {exc}") from exc

        store = cls(comments)
        for i in frame.index:
            params = np.array([columns[p][i] for p in PARAM_NAMES], dtype=float)
            store.add_record(
                RunRecord(
                    config_name=frame.at[i, "config"],
                    instance_id=frame.at[i, "instance"],
                    best_rmsp=float(columns["best_rmsp"][i]),
                    best_params=ModelParams.from_vector(params),
                    evaluations=int(columns["evaluations"][i]),
                    newton_iterations=int(columns["newton_iterations"][i]),
                    wall_seconds=float(columns["wall_seconds"][i]),
                    seed=int(frame.at[i, "seed"] or 0) if "seed" in frame.columns else 0,
                    repeat=int(columns["repeat"][i]),
                    best_rms=float(columns["best_rms"][i]),
                    pre_newton_rmsp=float(columns["pre_newton_rmsp"][i]),
                    newton_converged=int(columns["newton_converged"][i]),
                    converged_iterations=int(columns["converged_iterations"][i]),
                )
            )
        return store

    def clear(self):
        self.records = []

    def get_stats(self) -> Dict[str, Any]:
        """
        Counts over the stored records.

        Returns:
            Dictionary with record, configuration and instance counts and
            the overall best rmsp
        """
        total = len(self.records)
        return {
            "total_records": total,
            "configs": len({r.config_name for r in self.records}),
            "instances": len({r.instance_id for r in self.records}),
            "best_rmsp": min((r.best_rmsp for r in self.records), default=math.nan),
        }


def fit_frame(results: Iterable[Tuple[str, str, FitResult]]) -> pd.DataFrame:
    """One row per (instance, method, result)."""
    rows = []
    for instance, method, result in results:
        rows.append(
            {
                "instance": instance,
                "method": method,
                "rmsp": result.rmsp,
                "rms": result.rms,
                "e": result.e,
                "iterations": result.iterations,
                "termination": result.termination.value,
                "evaluations": result.evaluations,
                **result.params.as_dict(),
            }
        )
    return pd.DataFrame(rows, columns=FIT_COLUMNS)


def read_params_csv(path: Union[str, Path], row: int = 0) -> ModelParams:
    """Read the 9 coefficients a1..c3 from one row of a CSV (fit output works)."""
    _, frame = read_table(path)
    missing = [p for p in PARAM_NAMES if p not in frame.columns]
    if missing:
        raise LedFitError(f"{path}: missing parameter columns {', '.join(missing)}")
    if not 0 <= row < len(frame):
        raise LedFitError(f"{path}: no parameter row {row}")
    try:
        values = [float(to_number(frame[p]).iloc[row]) for p in PARAM_NAMES]
    except ValueError as exc:
        raise LedFitError(f"{path}: {exc}") from exc
    return ModelParams.from_vector(values)


def read_value_list(path: Union[str, Path]) -> Tuple[List[str], np.ndarray]:
    """
    Read an (instance, rmsp) list for the improvement report.

    The value column may be named rmsp, best_rmsp or value; without an
    instance column rows are labelled by position.
    """
    _, frame = read_table(path)
    column = next((c for c in ("rmsp", "best_rmsp", "value") if c in frame.columns), None)
    if column is None:
        raise LedFitError(f"{path}: needs a rmsp, best_rmsp or value column")
    try:
        values = to_number(frame[column]).to_numpy(float)
    except ValueError as exc:
        raise LedFitError(f"{path}: {exc}") from exc
    if "instance" in frame.columns:
        labels = frame["instance"].tolist()
    else:
        labels = [str(i) for i in range(len(frame))]
    return labels, values
