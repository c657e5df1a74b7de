import logging

from commands.estimate import estimation_outputs
from commands.simulate import build_panel
from components.report_writer import OutputDirectory
from components.tables import console, sign_report
from utils.bellman import solve_equilibrium
from utils.econometrics import coef_difference_test
from utils.microsim import panel_summary
from utils.panel_io import panel_to_csv
from utils.policy_lab import ReformScenario, cap_frame, reform_effects, stc_cap_mechanics

logger = logging.getLogger(__name__)

# printed permanent-contract coefficients for the gender pair, with the reported t
GENDER_PAIR = ((0.211, 0.023), (0.280, 0.038))
GENDER_PAIR_REPORTED_T = -1.48
# renewal caps the pre-reform economy is re-solved under, besides its own and unbounded
CAP_LADDER = (1, 6, 12, 48)


def cap_ladder(params):
    caps = sorted((set(CAP_LADDER) | {params.stc_renewal_cap}) - {None})
    return caps + [None]


def difference_note():
    t = coef_difference_test(*GENDER_PAIR)
    return {
        "coefficient_difference_test": {
            "first": {"coefficient": GENDER_PAIR[0][0], "std_error": GENDER_PAIR[0][1]},
            "second": {"coefficient": GENDER_PAIR[1][0], "std_error": GENDER_PAIR[1][1]},
            "t_formula": t,
            "t_reported": GENDER_PAIR_REPORTED_T,
            "note": "the formula (c1 - c2) / sqrt(se1^2 + se2^2) applied to the printed "
                    "coefficients gives the value reported here, not the printed t",
        }
    }


def run(config, threads=1):
    """Steady-state reform effects, simulated survey, estimates and sign checks end to end"""
    config.require_seed()
    effects = reform_effects(ReformScenario(config.model, config.post), threads=threads)
    pre, post = effects.pre_solution, effects.post_solution
    control = pre if config.control == config.model else solve_equilibrium(config.control)

    caps = stc_cap_mechanics(config.model, cap_ladder(config.model), threads=threads)
    panel = build_panel(config, pre, post, control, threads)
    estimates, paths = estimation_outputs(panel, config, threads)
    verdicts = sign_report(estimates, "outcome")

    with OutputDirectory(config.output_dir) as out:
        out.write_json("config.json", config.echo())
        out.write_table("reform_effects.csv", effects.to_frame())
        out.write_table("cap_mechanics.csv", cap_frame(caps))
        out.write_text("panel.csv", panel_to_csv(panel))
        out.write_json("panel_meta.json", panel.metadata)
        out.write_table("panel_summary.csv", panel_summary(panel).reset_index())
        out.write_table("estimates.csv", estimates)
        out.write_table("event_study.csv", paths)
        out.write_table("signs.csv", verdicts)
        out.write_json("notes.json", difference_note())

    mismatched = verdicts[verdicts["verdict"] == "mismatch"]["outcome"].tolist()
    if mismatched:
        logger.warning(f"Estimated signs differ from targets for: {', '.join(mismatched)}")
    return console(f"Reform estimates ({config.name})", estimates[["outcome", "pre_mean", "estimate", "std_error", "target_sign", "sign_match"]])
