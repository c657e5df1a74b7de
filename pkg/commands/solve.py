import logging

from components.report_writer import OutputDirectory
from components.tables import console, equilibrium_table
from utils.bellman import solve_equilibrium
from utils.flows import build_transition_matrix, stationary_stocks, summarize, tenure_frame, transition_frame

logger = logging.getLogger(__name__)


def run(config, threads=1):
    """
    Solve the scenario's [model] economy and write its equilibrium report

    Returns:
        str: console summary
    """
    eq = solve_equilibrium(config.model)
    T = build_transition_matrix(eq)
    stocks = stationary_stocks(T)
    steady = summarize(eq, T=T, stocks=stocks)
    table = equilibrium_table(eq, steady)

    summary = eq.summary()
    summary["steady_state"] = steady.to_dict()
    tenure = tenure_frame(eq, T, stocks)
    summary["tenure_pmf"] = {state: tenure[f"{state.lower()}_cohort"].to_numpy() for state in ("STC", "LTC", "INF")}

    with OutputDirectory(config.output_dir) as out:
        out.write_json("config.json", config.echo())
        out.write_json("equilibrium.json", summary)
        out.write_table("equilibrium.csv", table)
        out.write_table("transition.csv", transition_frame(T, stocks), index=True)
        out.write_table("tenure.csv", tenure, index=True)
    logger.info(f"Equilibrium report for '{config.name}' written to {config.output_dir}")
    return console(f"Equilibrium ({config.name})", table)
