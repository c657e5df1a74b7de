"""Report tables shared by the commands."""

import pandas as pd

from utils.model_core import MARKETS


def equilibrium_table(eq, steady):
    """
    Long-format summary of one solved economy

    Returns:
        pd.DataFrame: columns section, quantity, value
    """
    rows = []
    for name, value in eq.thresholds.as_dict().items():
        rows.append(("thresholds", name, value))
    for market in MARKETS:
        rows.append(("tightness", market, getattr(eq.tightness, market)))
        rows.append(("expected_profit", market, eq.profits[market]))
        rows.append(("entry_probability", market, eq.search_probs[market]))
    for name, value in steady.to_dict().items():
        rows.append(("steady_state", name, value))
    diag = eq.diagnostics
    rows.append(("diagnostics", "outer_iterations", diag.outer_iterations))
    rows.append(("diagnostics", "inner_iterations", diag.inner_iterations))
    rows.append(("diagnostics", "theta_gap", diag.theta_gap))
    rows.append(("diagnostics", "bellman_residual", eq.bellman_residual()))
    for market, value in eq.free_entry_residuals().items():
        rows.append(("diagnostics", f"free_entry_residual_{market}", value))
    for market, value in eq.threshold_residuals().items():
        rows.append(("diagnostics", f"threshold_residual_{market}", value))
    return pd.DataFrame(rows, columns=["section", "quantity", "value"])


def sign_report(frame, name_col, match_col="sign_match"):
    """Verdict per row: match, mismatch or no target"""
    def verdict(value):
        if value is None or (isinstance(value, float) and pd.isna(value)):
            return "no target"
        return "match" if value else "mismatch"

    return pd.DataFrame({name_col: frame[name_col], "verdict": [verdict(v) for v in frame[match_col]]})


def console(title, frame, max_rows=40):
    """Plain-text block for standard output"""
    with pd.option_context("display.max_rows", max_rows, "display.width", 120, "display.float_format", "{:.6g}".format):
        return f"{title}\n{frame.to_string(index=False)}\n"
