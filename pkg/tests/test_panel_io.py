import numpy as np
import pandas as pd
import pytest

from utils.errors import OutputError, SchemaError
from utils.microsim import PANEL_COLUMNS
from utils.panel_io import panel_to_csv, read_panel, typed_header


def test_header_carries_types():
    header = typed_header()
    assert header[0] == "worker_id:int"
    assert "household_weight:float" in header
    assert "ltc_conditional:float" in header
    assert len(header) == len(PANEL_COLUMNS)


def test_write_then_read_is_exact(small_panel, tmp_path):
    path = tmp_path / "panel.csv"
    path.write_text(panel_to_csv(small_panel), encoding="utf-8")
    back = read_panel(path)
    pd.testing.assert_frame_equal(back.frame, small_panel.frame, check_dtype=False, check_exact=True)
    assert back.frame["worker_id"].dtype == np.int64
    assert back.frame["household_weight"].dtype == np.float64
    # second write is byte-identical
    assert panel_to_csv(back) == path.read_text(encoding="utf-8")


def test_missing_values_are_empty_fields(hand_panel):
    text = panel_to_csv(hand_panel)
    lines = text.splitlines()
    assert lines[0].split(",")[0] == "worker_id:int"
    fields = lines[3].split(",")
    assert fields[PANEL_COLUMNS.index("ltc_conditional")] == ""
    assert text.endswith("\n")


def test_missing_weight_column(hand_panel, tmp_path):
    path = tmp_path / "panel.csv"
    lines = panel_to_csv(hand_panel).splitlines()
    drop = PANEL_COLUMNS.index("household_weight")
    rows = [",".join(f for i, f in enumerate(line.split(",")) if i != drop) for line in lines]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    with pytest.raises(SchemaError) as e:
        read_panel(path)
    assert e.value.column == "household_weight"
    assert e.value.row == 1
    assert "household_weight" in str(e.value)


def test_bad_value_is_located(hand_panel, tmp_path):
    path = tmp_path / "panel.csv"
    lines = panel_to_csv(hand_panel).splitlines()
    fields = lines[2].split(",")
    fields[PANEL_COLUMNS.index("age")] = "forty"
    lines[2] = ",".join(fields)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(SchemaError) as e:
        read_panel(path)
    assert e.value.row == 3
    assert e.value.column == "age"


def test_fractional_integer_is_rejected(hand_panel, tmp_path):
    path = tmp_path / "panel.csv"
    lines = panel_to_csv(hand_panel).splitlines()
    fields = lines[1].split(",")
    fields[PANEL_COLUMNS.index("tenure_months")] = "2.5"
    lines[1] = ",".join(fields)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(SchemaError) as e:
        read_panel(path)
    assert (e.value.row, e.value.column) == (2, "tenure_months")


def test_empty_required_field(hand_panel, tmp_path):
    path = tmp_path / "panel.csv"
    lines = panel_to_csv(hand_panel).splitlines()
    fields = lines[4].split(",")
    fields[PANEL_COLUMNS.index("monthly_wage")] = ""
    lines[4] = ",".join(fields)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(SchemaError) as e:
        read_panel(path)
    assert (e.value.row, e.value.column) == (5, "monthly_wage")


def test_wrong_type_in_header(hand_panel, tmp_path):
    path = tmp_path / "panel.csv"
    text = panel_to_csv(hand_panel).replace("age:int", "age:float", 1)
    path.write_text(text, encoding="utf-8")
    with pytest.raises(SchemaError) as e:
        read_panel(path)
    assert e.value.column == "age"


def test_missing_file(tmp_path):
    with pytest.raises(OutputError, match="not found") as e:
        read_panel(tmp_path / "absent.csv")
    assert e.value.exit_code == 4


def test_directory_is_not_a_panel(tmp_path):
    with pytest.raises(OutputError):
        read_panel(tmp_path)
