"""Sweep records and their CSV / JSON emission."""

import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, TextIO, Tuple

import numpy as np
import pandas as pd

from src import __version__
from src.errors import Flag, InvalidParameterError
from src.logger import AnalysisLogger

FLOAT_FORMAT = "%.17g"
PARAMETER_COLUMNS = ["lam", "s", "cutoff", "temperature", "f1", "f2", "mode", "omega0"]
OUTPUT_COLUMNS = ["coherence", "v1", "v2", "v3", "negativity_k", "state_negativity"]
RECORD_COLUMNS = PARAMETER_COLUMNS + OUTPUT_COLUMNS + ["flags"]
CONVENTIONS = ("hbar = k_B = 1; frequencies in units of omega0; "
               "J(w) = lam * w^s * cutoff^(1-s) * exp(-w/cutoff); "
               "Bloch vector v_i = <sigma_i>, rho = (I + v.sigma)/2; "
               "Kossakowski basis F_k = sigma_k/sqrt(2)")


@dataclass
class SweepRecord:
    """One evaluated parameter point with its outputs and flags."""
    lam: float
    s: float
    cutoff: float
    temperature: float
    f1: float
    f2: float
    mode: str
    omega0: float = 1.0
    coherence: Optional[float] = None
    v1: Optional[float] = None
    v2: Optional[float] = None
    v3: Optional[float] = None
    negativity_k: Optional[float] = None
    state_negativity: Optional[float] = None
    flags: Tuple[str, ...] = field(default=())
    error_message: Optional[str] = None

    @property
    def parameters(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in PARAMETER_COLUMNS}

    @property
    def failed(self) -> bool:
        return self.coherence is None

    def has_flag(self, flag: str) -> bool:
        return flag in self.flags

    def _placeholder(self) -> str:
        for flag in (Flag.DENOMINATOR_ZERO, Flag.SINGULAR_GENERATOR):
            if flag in self.flags:
                return flag
        return Flag.NUMERICAL_FAILURE

    def to_row(self) -> Dict[str, Any]:
        """Flat row; missing or non-finite outputs become a flag string."""
        row: Dict[str, Any] = dict(self.parameters)
        for name in OUTPUT_COLUMNS:
            value = getattr(self, name)
            if value is None or not math.isfinite(value):
                row[name] = self._placeholder()
            else:
                row[name] = float(value)
        row["flags"] = "|".join(self.flags)
        return row


@dataclass
class SweepResult:
    name: str
    records: List[SweepRecord]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([record.to_row() for record in self.records], columns=RECORD_COLUMNS)

    def flagged(self, flag: str) -> List[SweepRecord]:
        return [record for record in self.records if record.has_flag(flag)]


class ResultWriter:
    """Writes tables as `#`-commented CSV or as a JSON mirror."""

    def __init__(self, config_snapshot: Optional[Dict[str, Any]] = None):
        self.config_snapshot = config_snapshot or {}
        self.logger = AnalysisLogger("results")

    def metadata_block(self, name: str, metadata: Dict[str, Any]) -> Dict[str, Any]:
        block = {
            "table": name,
            "version": __version__,
            "conventions": CONVENTIONS,
            "config": self.config_snapshot,
        }
        block.update(metadata)
        return block

    def render_csv(self, name: str, rows: List[Dict[str, Any]], columns: List[str],
                   metadata: Dict[str, Any]) -> str:
        buffer = io.StringIO()
        for key, value in self.metadata_block(name, metadata).items():
            buffer.write(f"# {key}: {json.dumps(_jsonable(value), sort_keys=True)}\n")
        formatted = [{k: _format_cell(v) for k, v in row.items()} for row in rows]
        pd.DataFrame(formatted, columns=columns).to_csv(buffer, index=False)
        return buffer.getvalue()

    def render_json(self, name: str, rows: List[Dict[str, Any]],
                    metadata: Dict[str, Any]) -> str:
        document = {
            "metadata": _jsonable(self.metadata_block(name, metadata)),
            "records": _jsonable(rows),
        }
        return json.dumps(document, indent=2, sort_keys=True, allow_nan=False)

    def write_rows(self, name: str, rows: List[Dict[str, Any]], columns: List[str],
                   metadata: Optional[Dict[str, Any]] = None, path: Optional[str] = None,
                   fmt: str = "csv", stream: Optional[TextIO] = None) -> None:
        """Emit rows to ``path``, or to ``stream`` (stdout by default)."""
        metadata = metadata or {}
        if fmt == "csv":
            text = self.render_csv(name, rows, columns, metadata)
        elif fmt == "json":
            text = self.render_json(name, rows, metadata) + "\n"
        else:
            raise InvalidParameterError("unknown output format", {"format": fmt})
        if path:
            directory = os.path.dirname(path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(path, "w") as handle:
                handle.write(text)
            self.logger.info("Results written", path=path, records=len(rows), format=fmt)
        else:
            (stream or sys.stdout).write(text)

    def write(self, result: SweepResult, path: Optional[str] = None,
              fmt: str = "csv", stream: Optional[TextIO] = None) -> None:
        rows = [record.to_row() for record in result.records]
        self.write_rows(result.name, rows, RECORD_COLUMNS, result.metadata, path, fmt, stream)


def _format_cell(value: Any) -> Any:
    if isinstance(value, (float, np.floating)) and not isinstance(value, bool):
        return FLOAT_FORMAT % value if math.isfinite(value) else str(value)
    return value


def _jsonable(value: Any) -> Any:
    """Replace non-finite floats and tuples so json.dumps(allow_nan=False) succeeds."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if hasattr(value, "item") and callable(value.item):
        return _jsonable(value.item())
    return value
