import io
import json

import pandas as pd
import pytest

from src import __version__
from src.errors import Flag, InvalidParameterError
from src.results import RECORD_COLUMNS, ResultWriter, SweepRecord, SweepResult

PARAMETERS = dict(lam=0.01, s=1.0, cutoff=10.0, temperature=1.0, f1=1.0, f2=1.0,
                  mode="nonsecular")


@pytest.fixture
def result():
    good = SweepRecord(**PARAMETERS, coherence=0.1 / 3.0, v1=-0.1 / 3.0, v2=0.0, v3=-0.46,
                       negativity_k=0.002, state_negativity=0.0)
    singular = SweepRecord(**{**PARAMETERS, "f1": 0.0}, flags=(Flag.SINGULAR_GENERATOR,))
    divergent = SweepRecord(**PARAMETERS, coherence=float("inf"), v1=float("nan"),
                            flags=(Flag.DENOMINATOR_ZERO, Flag.WEAK_COUPLING_WARNING))
    return SweepResult("sweep-lambda", [good, singular, divergent], {"coherence_slope": 1.0})


def _data_lines(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


class TestSweepRecord:
    def test_placeholders_replace_missing_values(self, result):
        rows = [record.to_row() for record in result.records]
        assert rows[1]["coherence"] == Flag.SINGULAR_GENERATOR
        assert rows[2]["coherence"] == Flag.DENOMINATOR_ZERO
        assert rows[2]["flags"] == "DenominatorZero|WeakCouplingWarning"

    def test_flag_lookup(self, result):
        assert len(result.flagged(Flag.SINGULAR_GENERATOR)) == 1
        assert result.records[1].failed and not result.records[0].failed


class TestCSV:
    def test_metadata_header_and_columns(self, result):
        stream = io.StringIO()
        ResultWriter({"bath": {"lambda": 0.01}}).write(result, stream=stream)
        text = stream.getvalue()
        comments = [line for line in text.splitlines() if line.startswith("#")]
        assert comments[0] == '# table: "sweep-lambda"'
        assert f'# version: "{__version__}"' in comments
        assert "# coherence_slope: 1.0" in comments
        assert _data_lines(text)[0].split(",") == RECORD_COLUMNS

    def test_full_precision_and_no_nan(self, result):
        stream = io.StringIO()
        ResultWriter().write(result, stream=stream)
        text = stream.getvalue()
        assert "%.17g" % (0.1 / 3.0) in text
        data = "\n".join(_data_lines(text)).lower()
        assert "nan" not in data
        assert "inf" not in data

    def test_parses_back(self, result, tmp_path):
        path = tmp_path / "out" / "sweep.csv"
        ResultWriter().write(result, path=str(path))
        frame = pd.read_csv(path, comment="#")
        assert list(frame.columns) == RECORD_COLUMNS
        assert len(frame) == 3

    def test_identical_inputs_give_identical_bytes(self, result):
        first, second = io.StringIO(), io.StringIO()
        ResultWriter({"a": 1}).write(result, stream=first)
        ResultWriter({"a": 1}).write(result, stream=second)
        assert first.getvalue() == second.getvalue()


class TestJSON:
    def test_mirror(self, result):
        stream = io.StringIO()
        ResultWriter().write(result, fmt="json", stream=stream)
        document = json.loads(stream.getvalue())
        assert document["metadata"]["table"] == "sweep-lambda"
        assert len(document["records"]) == 3
        assert document["records"][1]["coherence"] == Flag.SINGULAR_GENERATOR

    def test_non_finite_metadata_is_stringified(self):
        stream = io.StringIO()
        ResultWriter().write_rows("t", [], [], {"bound": float("inf")}, fmt="json", stream=stream)
        assert json.loads(stream.getvalue())["metadata"]["bound"] == "inf"

    def test_unknown_format(self, result):
        with pytest.raises(InvalidParameterError):
            ResultWriter().write(result, fmt="xml", stream=io.StringIO())
