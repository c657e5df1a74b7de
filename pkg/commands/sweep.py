import logging

from components.report_writer import OutputDirectory
from components.tables import console
from utils.policy_lab import check_predictions, sweep_firing_cost

logger = logging.getLogger(__name__)


def run(config, threads=1):
    """Solve the firing-cost grid and check the comparative-statics claims"""
    sweep = sweep_firing_cost(config.sweep_params, config.firing_costs, threads=threads)
    report = check_predictions(sweep)
    claims = report.to_frame()

    with OutputDirectory(config.output_dir) as out:
        out.write_json("config.json", config.echo())
        out.write_table("sweep.csv", sweep.to_frame())
        out.write_table("predictions.csv", claims)
        out.write_json("predictions.json", {
            "f_low": report.f_low,
            "f_high": report.f_high,
            "all_hold": report.all_hold,
            "claims": {c.name: c.status for c in report.claims},
        })
    return console(f"Comparative statics ({config.name})", claims[["claim", "value_at_f_low", "value_at_f_high", "status"]])
