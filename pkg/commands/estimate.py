import logging

import pandas as pd

from components.report_writer import OutputDirectory
from components.tables import console
from utils.econometrics import OUTCOMES, RegressionSpec, estimate_outcomes, event_study
from utils.errors import ConfigError
from utils.microsim import analysis_frame
from utils.panel_io import read_panel

logger = logging.getLogger(__name__)

# outcomes traced period by period
EVENT_OUTCOMES = ("formal", "informal", "ltc_conditional", "ltc_unconditional")


def base_spec(config):
    est = config.estimation
    return RegressionSpec(
        outcome="formal",
        fixed_effects=tuple(est["fixed_effects"]),
        covariates=tuple(est["covariates"]),
        weight=est["weight"],
        cluster=est["cluster"],
    )


def estimation_outputs(panel, config, threads=1):
    """
    Treatment estimates over the outcome battery and event-study paths

    Returns:
        tuple: (estimates DataFrame, event-study long DataFrame)
    """
    frame = analysis_frame(panel)
    spec = base_spec(config)
    estimates = estimate_outcomes(frame, spec, threads=threads)

    paths = []
    by_name = {o.name: o for o in OUTCOMES}
    for name in EVENT_OUTCOMES:
        outcome = by_name[name]
        result = event_study(frame, spec.with_outcome(outcome.column, outcome.subset),
                             reference_period=int(config.estimation["reference_period"]))
        path = result.path()
        path.insert(0, "outcome", name)
        paths.append(path)
    return estimates, pd.concat(paths, ignore_index=True)


def run(config, threads=1, panel_path=None):
    """Estimate the treatment regressions on an existing panel file"""
    path = panel_path or config.estimation.get("panel")
    if not path:
        raise ConfigError("no panel file given: pass --panel or set [estimation] panel")
    panel = read_panel(path)
    estimates, paths = estimation_outputs(panel, config, threads)

    with OutputDirectory(config.output_dir) as out:
        out.write_json("config.json", config.echo())
        out.write_table("estimates.csv", estimates)
        out.write_table("event_study.csv", paths)
    return console(f"Treatment estimates ({path})", estimates[["outcome", "pre_mean", "estimate", "std_error", "target_sign", "sign_match"]])
