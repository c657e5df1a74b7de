"""Weighted two-way fixed-effects and event-study regressions with household-clustered errors."""

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
import pyfixest as pf

from utils.errors import (
    EmptyCluster,
    FewerClustersThanParams,
    InsufficientPoints,
    MissingReferencePeriod,
    SchemaError,
    SingularDesign,
    ValidationError,
    ZeroVariance,
)
from utils.microsim import SurveyPanel, analysis_frame

logger = logging.getLogger(__name__)

CI_Z = 1.96
FIXEF_TOL = 1e-10


@dataclass(frozen=True)
class RegressionSpec:
    outcome: str
    treatment: tuple = ("treat_post",)
    fixed_effects: tuple = ("country_id", "event_month")
    covariates: tuple = ()
    weight: str = "household_weight"
    cluster: str = "household_id"
    subset: str | None = None

    def __post_init__(self):
        if isinstance(self.treatment, str):
            object.__setattr__(self, "treatment", (self.treatment,))
        object.__setattr__(self, "fixed_effects", tuple(self.fixed_effects))
        object.__setattr__(self, "covariates", tuple(self.covariates))

    @property
    def regressors(self):
        return tuple(self.treatment) + tuple(self.covariates)

    def columns(self):
        cols = [self.outcome, *self.regressors, *self.fixed_effects, self.weight, self.cluster]
        if self.subset:
            cols.append(self.subset)
        return cols

    def formula(self):
        """pyfixest formula; fixed effects are absorbed after the bar"""
        rhs = " + ".join(self.regressors)
        if self.fixed_effects:
            return f"{self.outcome} ~ {rhs} | {' + '.join(self.fixed_effects)}"
        return f"{self.outcome} ~ {rhs}"

    def with_outcome(self, outcome, subset=None):
        return replace(self, outcome=outcome, subset=subset)


@dataclass(frozen=True)
class EstimateResult:
    outcome: str
    terms: tuple
    coef: np.ndarray
    std_error: np.ndarray
    n_obs: int
    n_clusters: int
    residual_ss: float
    degenerate: bool

    @property
    def ci_low(self):
        return self.coef - CI_Z * self.std_error

    @property
    def ci_high(self):
        return self.coef + CI_Z * self.std_error

    @property
    def coefficient(self):
        """Coefficient on the first treatment term"""
        return float(self.coef[0])

    @property
    def se(self):
        return float(self.std_error[0])

    def term(self, name):
        i = self.terms.index(name)
        return float(self.coef[i]), float(self.std_error[i])

    def to_frame(self):
        return pd.DataFrame({
            "outcome": self.outcome,
            "term": list(self.terms),
            "estimate": self.coef,
            "std_error": self.std_error,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n_obs": self.n_obs,
            "n_clusters": self.n_clusters,
        })


@dataclass(frozen=True)
class EventStudyResult:
    estimate: EstimateResult
    periods: tuple
    reference_period: int

    def path(self):
        """Long-format lead/lag table without the reference period"""
        rows = []
        for k in self.periods:
            if k == self.reference_period:
                continue
            coef, se = self.estimate.term(event_term(k))
            rows.append({
                "period": k,
                "estimate": coef,
                "std_error": se,
                "ci_low": coef - CI_Z * se,
                "ci_high": coef + CI_Z * se,
            })
        return pd.DataFrame(rows)


@dataclass(frozen=True)
class Outcome:
    name: str
    column: str
    label: str
    target: int | None
    subset: str | None = None


# target: +1 / -1 expected sign, 0 means no detectable effect (within 2 SEs of zero)
OUTCOMES = (
    Outcome("formal", "formal", "Probability of working, formal", 1),
    Outcome("informal", "informal", "Probability of working, informal", -1),
    Outcome("employed", "employed", "Probability of working, overall", 0),
    Outcome("ltc_conditional", "ltc_conditional", "Permanent contract (conditional)", 1, subset="formal"),
    Outcome("ltc_unconditional", "ltc_unconditional", "Permanent contract (unconditional)", 1),
    Outcome("tenure_all", "tenure_months", "Tenure, all workers", None),
    Outcome("tenure_formal_conditional", "tenure_months", "Tenure, formal (conditional)", None, subset="formal"),
    Outcome("tenure_formal", "tenure_formal", "Tenure, formal (unconditional)", 1),
    Outcome("tenure_formal_stc_conditional", "tenure_months", "Tenure, formal STC (conditional)", None, subset="formal_stc"),
    Outcome("tenure_formal_stc", "tenure_formal_stc", "Tenure, formal STC (unconditional)", -1),
    Outcome("nonemp_spell_conditional", "nonemp_spell", "Non-employment spell in years (conditional)", 0, subset="nonemployed"),
    Outcome("nonemp_spell", "nonemp_spell_years", "Non-employment spell in years (unconditional)", 0),
    Outcome("wage_formal", "wage_formal", "Monthly earnings, formal (conditional)", 1, subset="formal"),
    Outcome("wage_formal_unconditional", "monthly_wage", "Monthly earnings, formal (unconditional)", 0),
    Outcome("wage_stc", "wage_stc", "Monthly earnings, STC (conditional)", None, subset="formal_stc"),
    Outcome("wage_stc_unconditional", "wage_stc_unconditional", "Monthly earnings, STC (unconditional)", None),
    Outcome("wage_ltc", "wage_ltc", "Monthly earnings, LTC (conditional)", None, subset="ltc_unconditional"),
    Outcome("wage_ltc_unconditional", "wage_ltc_unconditional", "Monthly earnings, LTC (unconditional)", None),
)


def event_term(k):
    # formula-safe names: event_minus_3, event_0, event_4
    return f"event_minus_{-k}" if k < 0 else f"event_{k}"


def _as_frame(data):
    return analysis_frame(data) if isinstance(data, SurveyPanel) else data


def _prepare(frame, spec):
    missing = [c for c in spec.columns() if c not in frame.columns]
    if missing:
        raise SchemaError(f"column '{missing[0]}' is missing", column=missing[0])
    data = frame
    if spec.subset:
        data = data[data[spec.subset] == 1]
    data = data.dropna(subset=[spec.outcome, *spec.regressors])
    if len(data) == 0:
        raise EmptyCluster(f"no observations left for '{spec.outcome}'")
    if data[spec.cluster].isna().any():
        raise EmptyCluster(f"cluster column '{spec.cluster}' has empty entries")
    weights = data[spec.weight].to_numpy(dtype=float)
    if not np.all(weights > 0):
        raise ValidationError(f"weight column '{spec.weight}' must be strictly positive", column=spec.weight)
    return data


def _check_clusters(frame, spec):
    """Cluster and degrees-of-freedom guards run before handing the sample to pyfixest"""
    n = len(frame)
    n_clusters = int(frame[spec.cluster].nunique())
    absorbed = 1 + sum(int(frame[fe].nunique()) - 1 for fe in spec.fixed_effects)
    n_params = len(spec.regressors) + absorbed
    if n_clusters < 2:
        raise EmptyCluster("cluster-robust errors need at least two clusters")
    if n <= n_params:
        raise InsufficientPoints(f"{n} observations for {n_params} parameters")
    if n_clusters < n_params:
        warnings.warn(f"{n_clusters} clusters for {n_params} parameters", FewerClustersThanParams)
    return n_clusters


def twfe_estimate(data, spec, ssc=None):
    """
    Weighted least squares with absorbed fixed effects and clustered errors

    Args:
        data: SurveyPanel or DataFrame with the columns the RegressionSpec names
        spec: RegressionSpec
        ssc: pyfixest small-sample correction; defaults to pf.ssc(), the CR1
            factor G/(G-1) * (n-1)/(n-k)

    Returns:
        EstimateResult
    """
    frame = _prepare(_as_frame(data), spec)
    n_clusters = _check_clusters(frame, spec)
    names = list(spec.regressors)
    y = frame[spec.outcome].to_numpy(dtype=float)

    if np.ptp(y) == 0.0 and spec.fixed_effects:
        # a constant outcome is absorbed entirely by the fixed effects
        zeros = np.zeros(len(names))
        return EstimateResult(spec.outcome, tuple(names), zeros, zeros.copy(), len(frame), n_clusters, 0.0, True)

    fit = pf.feols(
        spec.formula(),
        data=frame,
        vcov={"CRV1": spec.cluster},
        weights=spec.weight,
        ssc=ssc if ssc is not None else pf.ssc(),
        fixef_rm="none",
        fixef_tol=FIXEF_TOL,
    )
    coef = fit.coef()
    dropped = [name for name in names if name not in coef.index]
    if dropped:
        raise SingularDesign(dropped[0])

    beta = coef[names].to_numpy(dtype=float)
    se = fit.se()[names].to_numpy(dtype=float)
    resid = y - np.asarray(fit.predict(), dtype=float)
    rss = float(frame[spec.weight].to_numpy(dtype=float) @ resid**2)
    logger.debug(f"{spec.outcome}: {len(frame)} observations, {n_clusters} clusters")
    return EstimateResult(
        outcome=spec.outcome,
        terms=tuple(names),
        coef=beta,
        std_error=se,
        n_obs=len(frame),
        n_clusters=n_clusters,
        residual_ss=rss,
        degenerate=bool(rss == 0.0),
    )


def event_study(data, spec, reference_period=-1, group="treated", time="event_month"):
    """
    Lead and lag effects relative to a reference period

    Args:
        data: SurveyPanel or DataFrame
        spec: RegressionSpec; its treatment terms are replaced by period dummies
        reference_period: event month normalized to zero
        group: 0/1 column marking the treated arm

    Returns:
        EventStudyResult
    """
    frame = _as_frame(data).copy()
    periods = tuple(sorted(int(k) for k in frame[time].unique()))
    if reference_period not in periods:
        raise MissingReferencePeriod(f"reference period {reference_period} is not among the event months {list(periods)}")
    terms = []
    for k in periods:
        if k == reference_period:
            continue
        frame[event_term(k)] = ((frame[time] == k) & (frame[group] == 1)).astype(float)
        terms.append(event_term(k))
    estimate = twfe_estimate(frame, replace(spec, treatment=tuple(terms)))
    return EventStudyResult(estimate=estimate, periods=periods, reference_period=reference_period)


def coef_difference_test(result_a, result_b):
    """
    t statistic for the difference of two independently estimated coefficients

    Args:
        result_a: EstimateResult or (coefficient, standard error)
        result_b: EstimateResult or (coefficient, standard error)

    Returns:
        float: (c1 - c2) / sqrt(se1^2 + se2^2)
    """
    c1, se1 = _coef_se(result_a)
    c2, se2 = _coef_se(result_b)
    denom = math.sqrt(se1**2 + se2**2)
    if denom == 0:
        raise ZeroVariance("both standard errors are zero")
    return (c1 - c2) / denom


def _coef_se(result):
    if isinstance(result, EstimateResult):
        return result.coefficient, result.se
    coef, se = result
    return float(coef), float(se)


def sign_verdict(outcome, result):
    if outcome.target is None:
        return None
    if outcome.target == 0:
        return bool(abs(result.coefficient) <= 2.0 * result.se)
    return bool(np.sign(result.coefficient) == outcome.target)


def pre_treatment_mean(frame, outcome, weight="household_weight", group="treated", period="post"):
    """Weighted mean of an outcome in the treated arm before the reform"""
    if group not in frame.columns or period not in frame.columns:
        return math.nan
    rows = frame[(frame[group] == 1) & (frame[period] == 0)]
    if outcome.subset:
        rows = rows[rows[outcome.subset] == 1]
    values = rows[outcome.column].to_numpy(dtype=float)
    ok = ~np.isnan(values)
    if not ok.any():
        return math.nan
    return float(np.average(values[ok], weights=rows[weight].to_numpy(dtype=float)[ok]))


def estimate_outcomes(data, base_spec, outcomes=OUTCOMES, threads=1):
    """
    Run the treatment regression for every outcome in the battery

    Returns:
        pd.DataFrame: one row per outcome with estimate, CI, treated-arm
        pre-reform mean and sign verdict; failed regressions are reported
        with their error message
    """
    frame = _as_frame(data)

    def run(outcome):
        spec = base_spec.with_outcome(outcome.column, outcome.subset)
        try:
            return outcome, twfe_estimate(frame, spec), None
        except (SingularDesign, EmptyCluster, InsufficientPoints) as e:
            logger.warning(f"Outcome {outcome.name} not estimated: {e}")
            return outcome, None, str(e)

    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        results = list(pool.map(run, outcomes))

    rows = []
    for outcome, result, error in results:
        row = {
            "outcome": outcome.name,
            "label": outcome.label,
            "target_sign": _target_label(outcome.target),
            "pre_mean": pre_treatment_mean(frame, outcome, weight=base_spec.weight),
        }
        if result is None:
            row.update({"estimate": math.nan, "std_error": math.nan, "ci_low": math.nan, "ci_high": math.nan,
                        "n_obs": 0, "n_clusters": 0, "sign_match": None, "message": error})
        else:
            row.update({
                "estimate": result.coefficient,
                "std_error": result.se,
                "ci_low": float(result.ci_low[0]),
                "ci_high": float(result.ci_high[0]),
                "n_obs": result.n_obs,
                "n_clusters": result.n_clusters,
                "sign_match": sign_verdict(outcome, result),
                "message": "",
            })
        rows.append(row)
    return pd.DataFrame(rows)


def _target_label(target):
    return {1: "+", -1: "-", 0: "0", None: ""}[target]
