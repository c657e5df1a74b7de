import logging

from components.report_writer import OutputDirectory
from components.tables import console
from utils.bellman import solve_equilibrium
from utils.microsim import panel_summary, simulate_panel
from utils.panel_io import panel_to_csv

logger = logging.getLogger(__name__)


def solve_arms(config):
    """
    Equilibria of the treated economy before and after the reform and of the control economy

    Returns:
        tuple: (pre, post, control) EquilibriumSolution
    """
    pre = solve_equilibrium(config.model)
    post = pre if config.post == config.model else solve_equilibrium(config.post)
    control = pre if config.control == config.model else solve_equilibrium(config.control)
    return pre, post, control


def build_panel(config, pre, post, control, threads=1):
    settings = config.microsim
    return simulate_panel(
        pre, post, control,
        n_workers=settings.n_workers,
        wave_months=settings.wave_months,
        seed=config.require_seed(),
        settings=settings,
        threads=threads,
    )


def run(config, threads=1):
    """Simulate the treated and control surveys and write the panel file"""
    config.require_seed()
    pre, post, control = solve_arms(config)
    panel = build_panel(config, pre, post, control, threads)
    summary = panel_summary(panel).reset_index()

    with OutputDirectory(config.output_dir) as out:
        out.write_json("config.json", config.echo())
        out.write_text("panel.csv", panel_to_csv(panel))
        out.write_json("panel_meta.json", panel.metadata)
        out.write_table("panel_summary.csv", summary)
    return console(f"Survey panel ({config.name}, {len(panel)} records)", summary)
