import json
import math

import numpy as np
import pandas as pd
import pytest

from components.report_writer import OutputDirectory, to_plain
from components.tables import sign_report


def test_to_plain_values():
    payload = to_plain({"a": np.float64(1.5), "b": np.int64(3), "c": math.nan, "d": -math.inf,
                        "e": np.array([1.0, math.inf]), "f": (np.bool_(True),)})
    assert payload == {"a": 1.5, "b": 3, "c": None, "d": "-inf", "e": [1.0, "inf"], "f": [True]}
    json.dumps(payload, allow_nan=False)


def test_directory_appears_only_on_success(tmp_path):
    target = tmp_path / "run"
    with OutputDirectory(target) as out:
        out.write_json("summary.json", {"b": 1, "a": 2})
        out.write_table("table.csv", pd.DataFrame({"x": [1.0, math.nan]}))
        assert not target.exists()
    assert (target / "summary.json").read_text() == '{\n  "a": 2,\n  "b": 1\n}\n'
    assert (target / "table.csv").read_text() == "x\n1.0\n\n"
    assert [p.name for p in tmp_path.iterdir()] == ["run"]


def test_failure_leaves_previous_output(tmp_path):
    target = tmp_path / "run"
    with OutputDirectory(target) as out:
        out.write_text("old.txt", "old\n")
    with pytest.raises(RuntimeError):
        with OutputDirectory(target) as out:
            out.write_text("new.txt", "new\n")
            raise RuntimeError("interrupted")
    assert sorted(p.name for p in target.iterdir()) == ["old.txt"]
    assert [p.name for p in tmp_path.iterdir()] == ["run"]


def test_sign_report_verdicts():
    frame = pd.DataFrame({"outcome": ["a", "b", "c"], "sign_match": [True, False, None]})
    report = sign_report(frame, "outcome")
    assert list(report["verdict"]) == ["match", "mismatch", "no target"]
