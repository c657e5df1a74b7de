"""Atomic output directories with deterministic JSON and CSV writers."""

import json
import logging
import math
import os
import shutil
import tempfile

import numpy as np
import pandas as pd

from utils.errors import OutputError

logger = logging.getLogger(__name__)


def to_plain(value):
    """
    Convert numpy scalars and arrays to JSON-ready Python values

    Infinite values become the strings "inf" / "-inf", NaN becomes null.
    """
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


class OutputDirectory:
    """
    Stage files in a temporary sibling directory and move it into place on success

    On any exception the staging directory is removed and an existing
    target is left untouched.
    """

    def __init__(self, target):
        self.target = os.path.abspath(str(target))
        self.staging = None
        self.written = []

    def __enter__(self):
        parent = os.path.dirname(self.target)
        try:
            os.makedirs(parent, exist_ok=True)
            self.staging = tempfile.mkdtemp(prefix=f".{os.path.basename(self.target)}.", dir=parent)
        except OSError as e:
            raise OutputError(f"cannot create output directory {self.target}: {e}", path=self.target)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            shutil.rmtree(self.staging, ignore_errors=True)
            logger.error(f"Discarded partial output for {self.target}")
            return False
        try:
            if os.path.isdir(self.target):
                shutil.rmtree(self.target)
            os.replace(self.staging, self.target)
        except OSError as e:
            shutil.rmtree(self.staging, ignore_errors=True)
            raise OutputError(f"cannot move output into {self.target}: {e}", path=self.target)
        logger.info(f"Wrote {len(self.written)} files to {self.target}")
        return False

    def path(self, name):
        return os.path.join(self.staging, name)

    def write_text(self, name, text):
        try:
            with open(self.path(name), "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as e:
            raise OutputError(f"cannot write {name}: {e}", path=name)
        self.written.append(name)
        return os.path.join(self.target, name)

    def write_json(self, name, payload):
        text = json.dumps(to_plain(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"
        return self.write_text(name, text)

    def write_table(self, name, frame, index=False):
        if not isinstance(frame, pd.DataFrame):
            frame = pd.DataFrame(frame)
        return self.write_text(name, frame.to_csv(index=index, na_rep="", lineterminator="\n"))
