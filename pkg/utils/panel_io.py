"""Panel files: comma-delimited UTF-8 text whose header row carries each column's type."""

import logging

import numpy as np
import pandas as pd

from utils.errors import OutputError, SchemaError
from utils.microsim import PANEL_COLUMNS, SurveyPanel

logger = logging.getLogger(__name__)

FLOAT_COLUMNS = {"household_weight", "ltc_conditional", "nonemp_spell_years", "monthly_wage"}
# columns that may be left empty
OPTIONAL_COLUMNS = {"ltc_conditional"}

PANEL_TYPES = {name: ("float" if name in FLOAT_COLUMNS else "int") for name in PANEL_COLUMNS}


def typed_header():
    return [f"{name}:{PANEL_TYPES[name]}" for name in PANEL_COLUMNS]


def panel_to_csv(panel):
    """Serialize a panel to text; missing values are empty fields"""
    frame = panel.frame[list(PANEL_COLUMNS)].copy()
    for name, kind in PANEL_TYPES.items():
        if kind == "int":
            frame[name] = frame[name].astype(np.int64)
    frame.columns = typed_header()
    return frame.to_csv(index=False, na_rep="", lineterminator="\n")


def _parse_header(header):
    names = {}
    for position, entry in enumerate(header):
        name, sep, kind = entry.partition(":")
        if not sep or kind not in ("int", "float"):
            raise SchemaError(f"header entry '{entry}' must read name:int or name:float", row=1, column=entry)
        if name not in PANEL_TYPES:
            raise SchemaError(f"unknown column '{name}'", row=1, column=name)
        if kind != PANEL_TYPES[name]:
            raise SchemaError(f"column '{name}' must be typed {PANEL_TYPES[name]}", row=1, column=name)
        names[name] = entry
    for name in PANEL_COLUMNS:
        if name not in names:
            raise SchemaError(f"required column '{name}' is missing", row=1, column=name)
    return names


def read_panel(path):
    """
    Read and type-check a panel file

    Returns:
        SurveyPanel

    Raises:
        OutputError: the file cannot be opened
        SchemaError: with the 1-based line number and column of the first violation
    """
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError:
        raise OutputError(f"panel file not found: {path}", path=str(path))
    except OSError as e:
        raise OutputError(f"could not open panel file {path}: {e}", path=str(path))
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise SchemaError(f"unreadable panel file {path}: {e}")

    names = _parse_header(list(raw.columns))
    frame = pd.DataFrame(index=raw.index)
    for name in PANEL_COLUMNS:
        text = raw[names[name]]
        values = pd.to_numeric(text.where(text != "", None), errors="coerce")
        bad = values.isna() & ((text != "") | (name not in OPTIONAL_COLUMNS))
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise SchemaError(
                f"invalid {PANEL_TYPES[name]} value '{text.iloc[row]}' in column '{name}'",
                row=row + 2,
                column=name,
            )
        if PANEL_TYPES[name] == "int":
            if not np.all(values == np.round(values)):
                row = int(np.flatnonzero((values != np.round(values)).to_numpy())[0])
                raise SchemaError(f"non-integer value in column '{name}'", row=row + 2, column=name)
            values = values.round().astype(np.int64)
        else:
            # numpy string conversion round-trips the written repr exactly
            values = text.where(text != "", "nan").to_numpy(dtype=str).astype(float)
        frame[name] = values
    logger.info(f"Read {len(frame)} panel records from {path}")
    return SurveyPanel(frame=frame, metadata={"source": str(path)})
