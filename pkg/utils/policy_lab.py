"""Firing-cost sweeps, comparative-statics checks, reform counterfactuals and renewal-cap mechanics."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd

from utils.bellman import solve_equilibrium
from utils.errors import InsufficientPoints, ScenarioMismatch, SegmarketError
from utils.flows import build_transition_matrix, stationary_stocks, summarize

logger = logging.getLogger(__name__)

# parameters a reform may change; everything else must match
REFORM_FIELDS = ("firing_cost", "stc_renewal_cap", "unfair_dismissal_cost")


@dataclass(frozen=True)
class SweepPoint:
    firing_cost: float
    params: object
    success: bool
    message: str
    solution: object = None
    steady_state: object = None

    def record(self):
        """Flat row for the sweep table"""
        row = {"firing_cost": self.firing_cost, "success": self.success, "message": self.message}
        if self.success:
            eq = self.solution
            row.update(eq.thresholds.as_dict())
            row.update({"theta_ltc": eq.tightness.ltc, "theta_stc": eq.tightness.stc, "theta_informal": eq.tightness.informal})
            row.update({f"entry_prob_{m}": v for m, v in eq.search_probs.items()})
            row.update(self.steady_state.to_dict())
        return row


@dataclass(frozen=True)
class SweepResult:
    base: object
    points: tuple

    @property
    def successful(self):
        return [p for p in self.points if p.success]

    @property
    def firing_costs(self):
        return [p.firing_cost for p in self.points]

    def to_frame(self):
        return pd.DataFrame([p.record() for p in self.points])


@dataclass(frozen=True)
class Claim:
    name: str
    description: str
    low_f_value: float
    high_f_value: float
    verdict: bool | None

    @property
    def status(self):
        if self.verdict is None:
            return "not testable"
        return "holds" if self.verdict else "fails"


@dataclass(frozen=True)
class PredictionReport:
    f_low: float
    f_high: float
    claims: tuple

    @property
    def all_hold(self):
        return all(c.verdict is True for c in self.claims)

    def to_frame(self):
        return pd.DataFrame([
            {
                "claim": c.name,
                "description": c.description,
                "f_low": self.f_low,
                "f_high": self.f_high,
                "value_at_f_low": c.low_f_value,
                "value_at_f_high": c.high_f_value,
                "status": c.status,
            }
            for c in self.claims
        ])


@dataclass(frozen=True)
class ReformScenario:
    """Pre- and post-reform economies that differ only in dismissal rules and the renewal cap"""

    pre_params: object
    post_params: object

    def __post_init__(self):
        pre = self.pre_params.to_dict()
        post = self.post_params.to_dict()
        changed = sorted(k for k in pre if pre[k] != post[k] and k not in REFORM_FIELDS)
        if changed:
            raise ScenarioMismatch(
                f"pre and post economies differ outside the reform fields: {', '.join(changed)}",
                fields=changed,
            )


@dataclass(frozen=True)
class EffectRecord:
    pre: object
    post: object
    deltas: dict
    targets: dict
    matches: dict
    pre_solution: object = None
    post_solution: object = None

    def to_frame(self):
        pre, post = _reform_measures(self.pre), _reform_measures(self.post)
        return pd.DataFrame([
            {
                "measure": name,
                "pre": pre[name],
                "post": post[name],
                "delta": self.deltas[name],
                "target_sign": _sign_label(self.targets[name]),
                "sign_match": self.matches[name],
            }
            for name in self.deltas
        ])


@dataclass(frozen=True)
class CapPoint:
    cap: int | None
    solution: object
    transition: object
    stc_spell_months: float
    forced_conversion_share: float
    ltc_conditional: float
    mean_stc_tenure: float
    final_renewal_prob: float

    def record(self):
        return {
            "stc_renewal_cap": "unbounded" if self.cap is None else self.cap,
            "stc_spell_months": self.stc_spell_months,
            "forced_conversion_share": self.forced_conversion_share,
            "ltc_conditional": self.ltc_conditional,
            "mean_stc_tenure": self.mean_stc_tenure,
            "final_renewal_prob": self.final_renewal_prob,
        }


# sign each reform delta should carry; None means no directional target
REFORM_TARGETS = {
    "formal_share": 1,
    "informal_share": -1,
    "employment": None,
    "ltc_conditional": 1,
    "ltc_unconditional": 1,
    "mean_tenure_stc": -1,
    "mean_tenure_ltc": None,
    "formal_tenure_unconditional": 1,
    "stc_tenure_unconditional": -1,
    "mean_wage_formal": 1,
    "mean_wage_ltc": 1,
    "mean_wage_stc": 1,
}


def _solve_point(params):
    try:
        eq = solve_equilibrium(params)
        steady = summarize(eq)
    except SegmarketError as e:
        logger.warning(f"Sweep point f={params.firing_cost} failed: {e}")
        return SweepPoint(params.firing_cost, params, False, str(e))
    logger.info(f"Sweep point f={params.firing_cost} solved")
    return SweepPoint(params.firing_cost, params, True, "solved", eq, steady)


def sweep_firing_cost(base, f_values, threads=1):
    """
    Solve the economy at every firing cost in f_values

    Args:
        base: ModelParams shared by every point
        f_values: firing costs; sorted ascending, duplicates kept. A single
            distinct value gives a sweep whose claims are not testable
        threads: worker threads for the independent solves

    Returns:
        SweepResult: failed points carry success=False and the error message
    """
    values = sorted(float(f) for f in f_values)
    if not values:
        raise InsufficientPoints("a sweep needs at least one firing cost")
    params = [base.with_changes(firing_cost=f) for f in values]
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        points = tuple(pool.map(_solve_point, params))
    failed = [p.firing_cost for p in points if not p.success]
    if failed:
        logger.warning(f"{len(failed)} sweep point(s) failed: {failed}")
    return SweepResult(base=base, points=points)


def _claim_inputs(point):
    eq, steady = point.solution, point.steady_state
    return {
        "ltc_threshold": eq.thresholds.z_tilde_L,
        "stc_threshold": eq.thresholds.z_tilde_S,
        "ltc_tightness": eq.tightness.ltc,
        "stc_tenure": steady.mean_tenure["stc"],
        "ltc_conditional_share": steady.ltc_conditional,
        "formal_wage": steady.mean_wage["formal"],
    }


_CLAIMS = (
    ("ltc_threshold", "LTC separation threshold higher at low f", "strict"),
    ("stc_threshold", "STC separation threshold weakly higher at low f", "weak"),
    ("ltc_tightness", "LTC market tightness higher at low f", "strict"),
    ("stc_tenure", "mean STC tenure lower at low f", "lower"),
    ("ltc_conditional_share", "LTC share of formal employment higher at low f", "strict"),
    ("formal_wage", "mean formal wage higher at low f", "strict"),
)


def check_predictions(sweep):
    """
    Compare the lowest-f and highest-f equilibria against the comparative-statics claims

    Args:
        sweep: SweepResult

    Returns:
        PredictionReport

    Raises:
        InsufficientPoints: failed solves leave fewer than two distinct firing costs
        ScenarioMismatch: the points differ in anything besides firing_cost
    """
    points = sweep.successful
    distinct = len(set(sweep.firing_costs))
    if not points or (distinct > 1 and len({p.firing_cost for p in points}) < 2):
        raise InsufficientPoints(f"prediction check needs two solved sweep points, got {len(points)}")

    reference = points[0].params.with_changes(firing_cost=0.0)
    for p in points[1:]:
        if p.params.with_changes(firing_cost=0.0) != reference:
            raise ScenarioMismatch("sweep points differ in parameters other than firing_cost")

    low = min(points, key=lambda p: p.firing_cost)
    high = max(points, key=lambda p: p.firing_cost)
    testable = high.firing_cost > low.firing_cost
    at_low, at_high = _claim_inputs(low), _claim_inputs(high)

    claims = []
    for name, description, rule in _CLAIMS:
        a, b = at_low[name], at_high[name]
        if not testable:
            verdict = None
        elif any(isinstance(v, float) and math.isnan(v) for v in (a, b)):
            verdict = False
        elif rule == "strict":
            verdict = bool(a > b)
        elif rule == "weak":
            verdict = bool(a >= b)
        else:
            verdict = bool(a < b)
        claims.append(Claim(name, description, float(a), float(b), verdict))
    report = PredictionReport(f_low=low.firing_cost, f_high=high.firing_cost, claims=tuple(claims))
    logger.info(f"Prediction check: {sum(c.verdict is True for c in claims)}/{len(claims)} claims hold")
    return report


def _unconditional(share, tenure):
    """Tenure counting everyone outside the sector as zero; an empty sector contributes nothing"""
    return 0.0 if math.isnan(tenure) else share * tenure


def _reform_measures(steady):
    return {
        "formal_share": steady.formal_share,
        "informal_share": steady.informal_share,
        "employment": steady.employment,
        "ltc_conditional": steady.ltc_conditional,
        "ltc_unconditional": steady.ltc_unconditional,
        "mean_tenure_stc": steady.mean_tenure["stc"],
        "mean_tenure_ltc": steady.mean_tenure["ltc"],
        "formal_tenure_unconditional": _unconditional(steady.formal_share, steady.mean_tenure["formal"]),
        "stc_tenure_unconditional": _unconditional(steady.stc_share, steady.mean_tenure["stc"]),
        "mean_wage_formal": steady.mean_wage["formal"],
        "mean_wage_ltc": steady.mean_wage["ltc"],
        "mean_wage_stc": steady.mean_wage["stc"],
    }


def _sign_label(sign):
    return {1: "+", -1: "-", None: ""}[sign]


def reform_effects(scenario, threads=1):
    """
    Steady-state effect of moving from the pre- to the post-reform economy

    Args:
        scenario: ReformScenario
        threads: 2 solves both economies concurrently

    Returns:
        EffectRecord: deltas (post minus pre) with sign flags against the targets
    """
    with ThreadPoolExecutor(max_workers=max(1, min(2, int(threads)))) as pool:
        pre_eq, post_eq = pool.map(solve_equilibrium, (scenario.pre_params, scenario.post_params))
    pre, post = summarize(pre_eq), summarize(post_eq)
    before, after = _reform_measures(pre), _reform_measures(post)

    deltas, matches = {}, {}
    for name, target in REFORM_TARGETS.items():
        delta = after[name] - before[name]
        deltas[name] = delta
        if target is None or math.isnan(delta):
            matches[name] = None
        else:
            matches[name] = bool(np.sign(delta) == target)
    logger.info(
        f"Reform: formal {deltas['formal_share']:+.4f}, informal {deltas['informal_share']:+.4f}, "
        f"LTC share {deltas['ltc_conditional']:+.4f}"
    )
    return EffectRecord(
        pre=pre,
        post=post,
        deltas=deltas,
        targets=dict(REFORM_TARGETS),
        matches=matches,
        pre_solution=pre_eq,
        post_solution=post_eq,
    )


def _stc_spell(T):
    """Expected months a fresh STC hire spends in STC before upgrading or separating"""
    stc = T.group("STC")
    Q = T.matrix[np.ix_(stc, stc)]
    if np.any(np.isclose(Q.sum(axis=1), 1.0, atol=1e-14)):
        return math.inf
    months = np.linalg.solve(np.eye(len(stc)) - Q, np.ones(len(stc)))
    return float(months[0])


def stc_cap_mechanics(params, caps, threads=1):
    """
    Solve the economy under each STC renewal cap and report how the cap bites

    Args:
        params: ModelParams
        caps: renewal caps; None stands for unbounded renewals

    Returns:
        list[CapPoint]: in the order given
    """
    variants = [params.with_changes(stc_renewal_cap=cap) for cap in caps]
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        solutions = list(pool.map(solve_equilibrium, variants))

    out = []
    for cap, eq in zip(caps, solutions):
        T = build_transition_matrix(eq)
        stocks = stationary_stocks(T)
        steady = summarize(eq, T=T, stocks=stocks)
        pi = stocks.distribution
        stc, ltc = T.group("STC"), T.index("LTC")
        upgrades = pi[stc] * T.matrix[stc, ltc]
        total = upgrades.sum()
        forced = float(upgrades[-1] / total) if cap is not None and total > 0 else 0.0
        # the last counter state has no renewal branch when capped
        renew_last = float(T.matrix[stc[-1], stc[-1]])
        out.append(CapPoint(
            cap=cap,
            solution=eq,
            transition=T,
            stc_spell_months=_stc_spell(T),
            forced_conversion_share=forced,
            ltc_conditional=steady.ltc_conditional,
            mean_stc_tenure=steady.mean_tenure["stc"],
            final_renewal_prob=renew_last,
        ))
        logger.info(f"Cap {cap}: STC spell {out[-1].stc_spell_months:.3f} months, LTC share {steady.ltc_conditional:.4f}")
    return out


def cap_frame(points):
    return pd.DataFrame([p.record() for p in points])
