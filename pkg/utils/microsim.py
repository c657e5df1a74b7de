"""
Synthetic repeated cross-section surveys drawn from simulated worker careers

Workers in a treated and a control economy are simulated month by month on
the equilibrium transition structure. The treated economy switches to the
post-reform equilibrium at the policy date; each worker is interviewed once,
in one survey wave, so waves are independent cross-sections.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from utils.bellman import EquilibriumSolution
from utils.errors import InvalidWaveMonths, UnsolvedEquilibrium, ValidationError
from utils.flows import TENURE_HORIZON, build_transition_matrix

logger = logging.getLogger(__name__)

DEFAULT_WAVE_MONTHS = (-6, -5, -4, -3, -2, -1, 0, 1, 2, 3, 4, 5, 6)
TREATED, CONTROL = 0, 1
ID_STRIDE = 10**9
BLOCK_STRIDE = 10**6

PANEL_COLUMNS = (
    "worker_id",
    "country_id",
    "household_id",
    "survey_wave",
    "event_month",
    "household_weight",
    "employed",
    "formal",
    "informal",
    "ltc_conditional",
    "tenure_months",
    "nonemp_spell_years",
    "monthly_wage",
    "urban",
    "age",
    "gender",
    "education",
    "household_size",
    "married",
)


@dataclass(frozen=True)
class WorkerRecord:
    """One interview. ltc_conditional is NaN unless the worker holds a formal job."""

    worker_id: int
    country_id: int
    household_id: int
    survey_wave: int
    event_month: int
    household_weight: float
    employed: int
    formal: int
    informal: int
    ltc_conditional: float
    tenure_months: int
    nonemp_spell_years: float
    monthly_wage: float
    urban: int
    age: int
    gender: int
    education: int
    household_size: int
    married: int

    def violations(self):
        """Names of the record invariants this record breaks"""
        broken = []
        if self.employed != self.formal + self.informal or self.formal + self.informal > 1:
            broken.append("employed = formal + informal")
        if (self.tenure_months == 0) != (self.employed == 0):
            broken.append("tenure_months = 0 iff not employed")
        if not 0 <= self.tenure_months <= TENURE_HORIZON:
            broken.append("tenure capped at 12")
        if self.monthly_wage > 0 and self.formal != 1:
            broken.append("wage > 0 implies formal")
        if self.monthly_wage < 0 or self.nonemp_spell_years < 0:
            broken.append("non-negative wage and spell")
        if self.employed and self.nonemp_spell_years != 0:
            broken.append("spell is 0 when employed")
        if not self.household_weight > 0:
            broken.append("weight > 0")
        if self.formal == 1 and math.isnan(self.ltc_conditional):
            broken.append("ltc_conditional defined for formal workers")
        return broken


@dataclass
class SurveyPanel:
    frame: pd.DataFrame
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.frame)

    def records(self):
        for row in self.frame.itertuples(index=False):
            yield WorkerRecord(**row._asdict())

    def validate(self):
        """
        Check panel-level and record-level invariants

        Raises:
            ValidationError: first broken invariant with its row
        """
        if self.frame[["worker_id", "survey_wave"]].duplicated().any():
            raise ValidationError("duplicate (worker_id, survey_wave) pair in panel")
        for i, record in enumerate(self.records()):
            broken = record.violations()
            if broken:
                raise ValidationError(f"record {i} breaks: {'; '.join(broken)}", row=i)
        return self

    @classmethod
    def from_records(cls, records, metadata=None):
        frame = pd.DataFrame([asdict(r) for r in records], columns=list(PANEL_COLUMNS))
        return cls(frame=frame, metadata=dict(metadata or {}))


@dataclass(frozen=True)
class MicrosimSettings:
    n_workers: int = 20_000
    wave_months: tuple = DEFAULT_WAVE_MONTHS
    seed: int = 0
    wage_usd_scale: float = 1.0
    burn_in_months: int = 120
    household_mean_size: float = 5.0
    block_size: int = 10_000
    post_wave_lag_months: int = 0


class _Sampler:
    """Per-origin categorical over (destination state, productivity node) pairs"""

    def __init__(self, T):
        self.T = T
        self.labels = T.labels
        self.tables = []
        for i in range(len(T.labels)):
            moves = sorted(((j, mass) for (origin, j), mass in T.draws.items() if origin == i), key=lambda m: m[0])
            if moves:
                masses = np.concatenate([m for _, m in moves])
                dest = np.concatenate([np.full(len(m), j) for j, m in moves])
                nodes = np.concatenate([np.arange(len(m)) for _, m in moves])
                keep = np.concatenate([np.full(len(m), T.continuing[i, j]) for j, m in moves])
            else:
                masses, dest, nodes, keep = np.zeros(0), np.zeros(0, int), np.zeros(0, int), np.zeros(0, bool)
            self.tables.append((np.cumsum(masses), dest.astype(int), nodes.astype(int), keep))

    def step(self, states, rng):
        """
        Draw next-month states

        Returns:
            tuple: (states, nodes, continuing) with node -1 for unemployment
        """
        u = rng.random(len(states))
        new_state = np.zeros(len(states), dtype=int)
        new_node = np.full(len(states), -1, dtype=int)
        same_job = np.zeros(len(states), dtype=bool)
        for origin in np.unique(states):
            sel = np.flatnonzero(states == origin)
            cum, dest, nodes, keep = self.tables[origin]
            if len(cum) == 0:
                continue
            pick = np.searchsorted(cum, u[sel], side="right")
            hit = pick < len(cum)
            rows, pick = sel[hit], pick[hit]
            new_state[rows] = dest[pick]
            new_node[rows] = nodes[pick]
            same_job[rows] = keep[pick]
        return new_state, new_node, same_job


def _check_equilibrium(eq, name):
    if not isinstance(eq, EquilibriumSolution):
        raise UnsolvedEquilibrium(f"{name} is not a solved equilibrium")


def check_wave_months(wave_months):
    try:
        months = [int(m) for m in wave_months]
    except (TypeError, ValueError):
        raise InvalidWaveMonths("wave months must be integers")
    if any(m != w for m, w in zip(months, wave_months)):
        raise InvalidWaveMonths("wave months must be integers")
    if len(set(months)) != len(months):
        raise InvalidWaveMonths("wave months must be distinct")
    if not any(m < 0 for m in months) or not any(m >= 0 for m in months):
        raise InvalidWaveMonths("wave months need at least one pre-reform (< 0) and one post-reform (>= 0) month")
    return sorted(months)


def _calendar(event_month, lag):
    """Months relative to the policy switch at which an event month is interviewed"""
    return event_month if event_month < 0 else event_month + lag


def _relabel(states, from_labels, to_labels):
    """Carry states across a switch of transition structure; STC counters collapse onto the first STC state"""
    lookup = np.empty(len(from_labels), dtype=int)
    for i, label in enumerate(from_labels):
        if label in to_labels:
            lookup[i] = to_labels.index(label)
        else:
            sector = "STC" if label.startswith("STC") else label
            lookup[i] = next(k for k, other in enumerate(to_labels) if other.startswith(sector))
    return lookup[states]


def _simulate_block(arm, block, n, regimes, waves, settings, start_month):
    """
    Simulate one block of workers and return their interview rows

    regimes is a list of (first calendar month, sampler, wage table) in time order.
    """
    rng = np.random.default_rng(np.random.SeedSequence([settings.seed, arm, block]))
    lag = settings.post_wave_lag_months
    wave_index = rng.integers(len(waves), size=n)
    order = np.argsort(wave_index, kind="stable")
    wave_index = wave_index[order]
    interview = np.array([_calendar(waves[w], lag) for w in wave_index], dtype=int)

    # households: consecutive workers within a wave, geometric sizes
    household = np.empty(n, dtype=np.int64)
    size = np.empty(n, dtype=int)
    pos, h = 0, 0
    while pos < n:
        wave = wave_index[pos]
        members = int(rng.geometric(1.0 / settings.household_mean_size))
        end = pos + members
        end = min(end, n, pos + int(np.searchsorted(wave_index[pos:], wave, side="right")))
        household[pos:end] = arm * ID_STRIDE + block * BLOCK_STRIDE + h
        size[pos:end] = end - pos
        pos, h = end, h + 1
    hh_ids, hh_index = np.unique(household, return_inverse=True)
    hh_weight = rng.uniform(0.5, 2.0, size=len(hh_ids))[hh_index]
    hh_urban = (rng.random(len(hh_ids)) < 0.45).astype(int)[hh_index]

    state = np.zeros(n, dtype=int)
    node = np.full(n, -1, dtype=int)
    job_start = np.full(n, start_month, dtype=int)
    last_end = np.full(n, start_month - 1, dtype=int)
    out_state = np.zeros(n, dtype=int)
    out_node = np.full(n, -1, dtype=int)
    out_tenure = np.zeros(n, dtype=int)
    out_spell = np.zeros(n, dtype=int)
    out_labels = [None] * n
    out_wage = np.zeros(n)

    regime = 0
    sampler, wages = regimes[0][1], regimes[0][2]
    for t in range(start_month, int(interview.max()) + 1):
        if regime + 1 < len(regimes) and t >= regimes[regime + 1][0]:
            regime += 1
            new_sampler = regimes[regime][1]
            state = _relabel(state, sampler.labels, new_sampler.labels)
            sampler, wages = new_sampler, regimes[regime][2]

        was_employed = state != 0
        state, node, same_job = sampler.step(state, rng)
        employed = state != 0
        job_start = np.where(employed & ~same_job, t, job_start)
        last_end = np.where(was_employed & ~employed, t, last_end)

        now = np.flatnonzero(interview == t)
        if len(now):
            out_state[now] = state[now]
            out_node[now] = node[now]
            out_tenure[now] = np.where(employed[now], np.minimum(TENURE_HORIZON, t - job_start[now] + 1), 0)
            out_spell[now] = np.where(employed[now], 0, t - last_end[now] + 1)
            for i in now:
                label = sampler.labels[state[i]]
                out_labels[i] = label
                if label != "U":
                    out_wage[i] = wages[_sector(label)][node[i]]

    sectors = np.array([_sector(label) for label in out_labels])
    formal = np.isin(sectors, ("STC", "LTC")).astype(int)
    informal = (sectors == "INF").astype(int)
    frame = pd.DataFrame({
        "worker_id": arm * ID_STRIDE + block * settings.block_size + np.arange(n),
        "country_id": arm,
        "household_id": household,
        "survey_wave": wave_index,
        "event_month": np.array([waves[w] for w in wave_index], dtype=int),
        "household_weight": hh_weight,
        "employed": formal + informal,
        "formal": formal,
        "informal": informal,
        "ltc_conditional": np.where(formal == 1, (sectors == "LTC").astype(float), np.nan),
        "tenure_months": out_tenure,
        "nonemp_spell_years": out_spell / 12.0 * (formal + informal == 0),
        "monthly_wage": np.where(formal == 1, out_wage * settings.wage_usd_scale, 0.0),
        "urban": hh_urban,
        "age": rng.integers(15, 65, size=n),
        "gender": rng.integers(0, 2, size=n),
        "education": rng.integers(0, 4, size=n),
        "household_size": size,
        "married": (rng.random(n) < 0.5).astype(int),
    })
    return frame


def _sector(label):
    return "STC" if label.startswith("STC") else label


def _regime(eq):
    T = build_transition_matrix(eq)
    wages = {"STC": eq.wages.stc, "LTC": eq.wages.ltc, "INF": eq.wages.informal}
    return _Sampler(T), wages


def simulate_panel(treated_eq_pre, treated_eq_post, control_eq, n_workers, wave_months=DEFAULT_WAVE_MONTHS,
                   seed=0, settings=None, threads=1):
    """
    Interview simulated workers of a treated and a control economy

    Args:
        treated_eq_pre: EquilibriumSolution of the treated economy before the reform
        treated_eq_post: EquilibriumSolution after the reform
        control_eq: EquilibriumSolution of the control economy
        n_workers: workers per arm
        wave_months: event months of the survey waves
        seed: root seed
        settings: optional MicrosimSettings for the remaining knobs
        threads: worker threads over blocks; output does not depend on it

    Returns:
        SurveyPanel
    """
    for eq, name in ((treated_eq_pre, "treated_eq_pre"), (treated_eq_post, "treated_eq_post"), (control_eq, "control_eq")):
        _check_equilibrium(eq, name)
    if int(n_workers) < 1:
        raise ValidationError("n_workers must be at least 1")
    waves = check_wave_months(wave_months)
    base = settings or MicrosimSettings()
    settings = MicrosimSettings(
        n_workers=int(n_workers),
        wave_months=tuple(waves),
        seed=int(seed),
        wage_usd_scale=base.wage_usd_scale,
        burn_in_months=base.burn_in_months,
        household_mean_size=base.household_mean_size,
        block_size=base.block_size,
        post_wave_lag_months=base.post_wave_lag_months,
    )
    if not 1 <= settings.block_size <= BLOCK_STRIDE:
        raise ValidationError(f"block_size must lie in [1, {BLOCK_STRIDE}]")
    start = _calendar(waves[0], settings.post_wave_lag_months) - settings.burn_in_months

    pre_sampler, pre_wages = _regime(treated_eq_pre)
    post_sampler, post_wages = _regime(treated_eq_post)
    control_sampler, control_wages = _regime(control_eq)
    arms = {
        TREATED: [(start, pre_sampler, pre_wages), (0, post_sampler, post_wages)],
        CONTROL: [(start, control_sampler, control_wages)],
    }

    jobs = []
    for arm, regimes in arms.items():
        for block, first in enumerate(range(0, settings.n_workers, settings.block_size)):
            size = min(settings.block_size, settings.n_workers - first)
            jobs.append((arm, block, size, regimes))

    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        frames = list(pool.map(lambda job: _simulate_block(*job, waves, settings, start), jobs))
    frame = pd.concat(frames, ignore_index=True).sort_values("worker_id", kind="stable").reset_index(drop=True)
    frame = frame[list(PANEL_COLUMNS)]

    metadata = {
        "seed": settings.seed,
        "n_workers": settings.n_workers,
        "wave_months": list(waves),
        "post_wave_lag_months": settings.post_wave_lag_months,
        "burn_in_months": settings.burn_in_months,
        "wage_usd_scale": settings.wage_usd_scale,
    }
    logger.info(f"Simulated {len(frame)} interviews across {len(waves)} waves (seed {settings.seed})")
    return SurveyPanel(frame=frame, metadata=metadata)


def analysis_frame(panel):
    """
    Estimation columns derived from a survey panel

    Conditional outcomes are NaN outside their subpopulation; unconditional
    ones are zero there.
    """
    df = panel.frame.copy()
    formal = df["formal"] == 1
    ltc = formal & (df["ltc_conditional"] == 1)
    stc = formal & (df["ltc_conditional"] == 0)
    informal = df["informal"] == 1

    df["treated"] = (df["country_id"] == TREATED).astype(int)
    df["post"] = (df["event_month"] >= 0).astype(int)
    df["treat_post"] = df["treated"] * df["post"]
    df["ltc_unconditional"] = ltc.astype(int)
    df["formal_stc"] = stc.astype(int)
    df["tenure_formal"] = np.where(formal, df["tenure_months"], 0)
    df["tenure_formal_stc"] = np.where(stc, df["tenure_months"], 0)
    df["tenure_formal_ltc"] = np.where(ltc, df["tenure_months"], 0)
    df["tenure_informal"] = np.where(informal, df["tenure_months"], 0)
    df["wage_formal"] = np.where(formal, df["monthly_wage"], np.nan)
    df["wage_ltc"] = np.where(ltc, df["monthly_wage"], np.nan)
    df["wage_stc"] = np.where(stc, df["monthly_wage"], np.nan)
    df["wage_ltc_unconditional"] = np.where(ltc, df["monthly_wage"], 0.0)
    df["wage_stc_unconditional"] = np.where(stc, df["monthly_wage"], 0.0)
    df["nonemployed"] = (df["employed"] == 0).astype(int)
    df["nonemp_spell"] = np.where(df["employed"] == 0, df["nonemp_spell_years"], np.nan)
    return df


def _weighted_mean(values, weights):
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    ok = ~np.isnan(values)
    if not ok.any() or weights[ok].sum() <= 0:
        return math.nan
    return float(np.average(values[ok], weights=weights[ok]))


# (row label, column, subpopulation filter)
SUMMARY_ROWS = (
    ("Total employment", "employed", None),
    ("Formal employment", "formal", None),
    ("Informal employment", "informal", None),
    ("Permanent contract (conditional)", "ltc_conditional", "formal"),
    ("Permanent contract (unconditional)", "ltc_unconditional", None),
    ("Tenure, all workers", "tenure_months", None),
    ("Tenure, formal workers", "tenure_months", "formal"),
    ("Tenure, informal workers", "tenure_months", "informal"),
    ("Non-employment spell (years)", "nonemp_spell", None),
    ("Monthly earnings, formal", "wage_formal", None),
)


def panel_summary(panel):
    """
    Weighted means by arm and period

    Returns:
        pd.DataFrame: one row per outcome, columns treated_pre, treated_post, control_pre, control_post
    """
    df = analysis_frame(panel)
    columns = {}
    for arm, arm_name in ((TREATED, "treated"), (CONTROL, "control")):
        for post, period in ((0, "pre"), (1, "post")):
            cell = df[(df["country_id"] == arm) & (df["post"] == post)]
            column = {}
            for label, col, subset in SUMMARY_ROWS:
                rows = cell if subset is None else cell[cell[subset] == 1]
                column[label] = _weighted_mean(rows[col], rows["household_weight"])
            columns[f"{arm_name}_{period}"] = column
    table = pd.DataFrame(columns)
    table.index.name = "outcome"
    return table
