"""Stationary stocks, transition matrices, tenure and wage distributions of a solved economy."""

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from utils.errors import StationaryNonConvergence

logger = logging.getLogger(__name__)

SECTOR_STATES = ("U", "INF", "STC", "LTC")
TENURE_HORIZON = 12
STATIONARY_TOL = 1e-12
STATIONARY_MAX_ITER = 1_000_000


@dataclass(frozen=True)
class TransitionMatrix:
    """
    Row-stochastic monthly transition matrix over labor market states

    STC is split into STC_1..STC_K when renewals are capped. draws maps an
    (origin, destination) index pair to the per-node mass of the fresh
    productivity draw behind that move; continuing marks moves that keep
    the same job.
    """

    labels: tuple
    matrix: np.ndarray
    draws: dict = field(default_factory=dict)
    continuing: np.ndarray = None

    def index(self, label):
        return self.labels.index(label)

    def sector_of(self, label):
        return "STC" if label.startswith("STC") else label

    def group(self, sector):
        """Indices of every state belonging to a sector (U, INF, STC or LTC)"""
        return [i for i, label in enumerate(self.labels) if self.sector_of(label) == sector]

    def collapse(self, weights=None):
        """
        Aggregate the STC counter states into one

        Args:
            weights: distribution over states used to weight rows inside a group

        Returns:
            ndarray: 4x4 matrix over (U, INF, STC, LTC)
        """
        weights = np.ones(len(self.labels)) if weights is None else np.asarray(weights, dtype=float)
        out = np.zeros((4, 4))
        for a, sector_a in enumerate(SECTOR_STATES):
            rows = self.group(sector_a)
            w = weights[rows]
            w = np.full(len(rows), 1.0 / len(rows)) if w.sum() <= 0 else w / w.sum()
            for b, sector_b in enumerate(SECTOR_STATES):
                cols = self.group(sector_b)
                out[a, b] = w @ self.matrix[np.ix_(rows, cols)].sum(axis=1)
        return out


@dataclass(frozen=True)
class StationaryStocks:
    distribution: np.ndarray
    labels: tuple

    def _share(self, sector):
        return float(sum(self.distribution[i] for i, label in enumerate(self.labels)
                         if (label.startswith("STC") and sector == "STC") or label == sector))

    @property
    def u(self):
        return self._share("U")

    @property
    def e_inf(self):
        return self._share("INF")

    @property
    def e_stc(self):
        return self._share("STC")

    @property
    def e_ltc(self):
        return self._share("LTC")

    @property
    def formal_share(self):
        return self.e_stc + self.e_ltc

    @property
    def employment(self):
        return 1.0 - self.u


@dataclass(frozen=True)
class SteadyStateSummary:
    unemployment: float
    informal_share: float
    stc_share: float
    ltc_share: float
    formal_share: float
    employment: float
    ltc_conditional: float
    ltc_unconditional: float
    mean_tenure: dict
    mean_wage: dict
    mean_nonemp_years: float

    def to_dict(self):
        data = {name: getattr(self, name) for name in self.__dataclass_fields__ if name not in ("mean_tenure", "mean_wage")}
        for key, value in self.mean_tenure.items():
            data[f"mean_tenure_{key}"] = value
        for key, value in self.mean_wage.items():
            data[f"mean_wage_{key}"] = value
        return data


def state_labels(stc_states, capped):
    if capped:
        stc = tuple(f"STC_{k}" for k in range(1, stc_states + 1))
    else:
        stc = ("STC",)
    return ("U", "INF") + stc + ("LTC",)


def build_transition_matrix(eq):
    """
    Monthly transition probabilities implied by the equilibrium decision rules

    Args:
        eq: EquilibriumSolution

    Returns:
        TransitionMatrix
    """
    params, rules = eq.params, eq.rules
    capped = params.stc_renewal_cap is not None
    n_stc = params.stc_states
    labels = state_labels(n_stc, capped)
    n = len(labels)
    u, inf, ltc = 0, 1, n - 1
    stc = list(range(2, 2 + n_stc))
    target = {"ltc": ltc, "stc": stc[0], "informal": inf}

    matrix = np.zeros((n, n))
    continuing = np.zeros((n, n), dtype=bool)
    draws = {}

    def put(i, j, mass, same_job):
        draws[(i, j)] = draws.get((i, j), 0.0) + mass
        matrix[i, j] += float(mass.sum())
        continuing[i, j] = same_job

    for market, j in target.items():
        if market == "informal" and not params.informal_enabled:
            continue
        if rules.contact[market] > 0:
            put(u, j, rules.contact[market] * rules.hire[market], False)

    if params.informal_enabled:
        put(inf, inf, rules.informal_stay, True)
        if rules.informal_move.sum() > 0:
            put(inf, target[rules.informal_move_market], rules.informal_move, False)

    for k, i in enumerate(stc):
        if capped:
            if k + 1 < n_stc:
                put(i, stc[k + 1], rules.stc_renew[k], True)
        else:
            put(i, i, rules.stc_renew[k], True)
        put(i, ltc, rules.stc_upgrade[k], True)

    put(ltc, ltc, rules.ltc_stay, True)

    # whatever is not kept returns to unemployment
    matrix[:, u] += np.clip(1.0 - matrix.sum(axis=1), 0.0, None)
    return TransitionMatrix(labels=labels, matrix=matrix, draws=draws, continuing=continuing)


def stationary_stocks(T, tol=STATIONARY_TOL, max_iter=STATIONARY_MAX_ITER):
    """
    Left eigenvector of T for eigenvalue one, by power iteration from the uniform vector

    Args:
        T: TransitionMatrix, or a square row-stochastic array over (U, INF, STC, LTC)
        tol: sup-norm change that declares convergence
        max_iter: iteration cap; past it the last two iterates are averaged

    Returns:
        StationaryStocks
    """
    if isinstance(T, TransitionMatrix):
        matrix, labels = T.matrix, T.labels
    else:
        matrix, labels = np.asarray(T, dtype=float), SECTOR_STATES
    pi = np.full(matrix.shape[0], 1.0 / matrix.shape[0])
    for iteration in range(max_iter):
        nxt = pi @ matrix
        if np.max(np.abs(nxt - pi)) < tol:
            logger.debug(f"Stationary distribution reached after {iteration + 1} iterations")
            return StationaryStocks(distribution=nxt / nxt.sum(), labels=tuple(labels))
        pi = nxt
    warnings.warn(
        f"power iteration did not converge in {max_iter} iterations; averaging successive iterates",
        StationaryNonConvergence,
    )
    avg = 0.5 * (pi + pi @ matrix)
    return StationaryStocks(distribution=avg / avg.sum(), labels=tuple(labels))


def capped_tenure_pmf(s, horizon=TENURE_HORIZON):
    """
    Tenure over the last `horizon` months for a stationary renewal process

    Args:
        s: per-period continuation probability
        horizon: cap in months

    Returns:
        ndarray: probabilities over tenure 0..horizon (zero mass at 0)
    """
    pmf = np.zeros(horizon + 1)
    ages = np.arange(1, horizon)
    pmf[1:horizon] = (1.0 - s) * np.power(s, ages - 1)
    pmf[horizon] = s ** (horizon - 1)
    return pmf


def tenure_distribution(eq, state, horizon=TENURE_HORIZON, T=None, stocks=None):
    """
    Job tenure over the trailing `horizon` months among workers currently in a state

    Jobs are followed from hire through renewals and upgrades; a cohort
    hired a-1 months ago contributes its surviving mass to tenure a, and
    everything older sits at the cap.

    Args:
        eq: EquilibriumSolution
        state: "STC", "LTC", "INF" or "formal"
        horizon: cap in months

    Returns:
        ndarray: probabilities over 0..horizon
    """
    T = T if T is not None else build_transition_matrix(eq)
    stocks = stocks if stocks is not None else stationary_stocks(T)
    members = T.group("STC") + T.group("LTC") if state == "formal" else T.group(state)
    return _cohort_tenure(T, stocks.distribution, members, horizon)


def _cohort_tenure(T, pi, members, horizon):
    matrix = T.matrix
    within = np.where(T.continuing, matrix, 0.0)
    hires = pi @ np.where(T.continuing, 0.0, matrix)
    hires[0] = 0.0
    stock = float(pi[members].sum())
    pmf = np.zeros(horizon + 1)
    if stock <= 0:
        return pmf
    cohort = hires
    for age in range(1, horizon):
        pmf[age] = cohort[members].sum()
        cohort = cohort @ within
    # no hire ever reaches the state: its stock is what power iteration has not yet drained
    if pmf[1:horizon].sum() <= 0:
        return np.zeros(horizon + 1)
    pmf[horizon] = max(stock - pmf[1:horizon].sum(), 0.0)
    return pmf / pmf.sum()


def mean_tenure(pmf):
    total = pmf.sum()
    return float(np.arange(len(pmf)) @ pmf / total) if total > 0 else math.nan


def survivor_wage(eq, T, pi, sector):
    """Mean wage in a sector over the productivity draws of the workers currently there"""
    wages = {"STC": eq.wages.stc, "LTC": eq.wages.ltc, "INF": eq.wages.informal}
    cols = T.group(sector)
    num = den = 0.0
    for (i, j), mass in T.draws.items():
        if j in cols and pi[i] > 0:
            num += pi[i] * float(mass @ wages[sector])
            den += pi[i] * float(mass.sum())
    return num / den if den > 0 else math.nan


def summarize(eq, T=None, stocks=None):
    """
    Steady-state shares, tenure and wages of a solved economy

    Returns:
        SteadyStateSummary
    """
    T = T if T is not None else build_transition_matrix(eq)
    stocks = stocks if stocks is not None else stationary_stocks(T)
    pi = stocks.distribution
    formal = stocks.formal_share

    tenure = {
        "stc": mean_tenure(_cohort_tenure(T, pi, T.group("STC"), TENURE_HORIZON)),
        "ltc": mean_tenure(_cohort_tenure(T, pi, T.group("LTC"), TENURE_HORIZON)),
        "formal": mean_tenure(_cohort_tenure(T, pi, T.group("STC") + T.group("LTC"), TENURE_HORIZON)),
        "informal": mean_tenure(_cohort_tenure(T, pi, T.group("INF"), TENURE_HORIZON)),
    }
    wage_stc = survivor_wage(eq, T, pi, "STC")
    wage_ltc = survivor_wage(eq, T, pi, "LTC")
    if formal > 0:
        parts = [(stocks.e_stc, wage_stc), (stocks.e_ltc, wage_ltc)]
        wage_formal = sum(share * w for share, w in parts if share > 0) / formal
    else:
        wage_formal = math.nan
    wages = {"stc": wage_stc, "ltc": wage_ltc, "formal": wage_formal, "informal": survivor_wage(eq, T, pi, "INF")}

    stay_u = T.matrix[0, 0]
    spell = 1.0 / (12.0 * (1.0 - stay_u)) if stay_u < 1 else math.nan

    return SteadyStateSummary(
        unemployment=stocks.u,
        informal_share=stocks.e_inf,
        stc_share=stocks.e_stc,
        ltc_share=stocks.e_ltc,
        formal_share=formal,
        employment=stocks.employment,
        ltc_conditional=stocks.e_ltc / formal if formal > 0 else math.nan,
        ltc_unconditional=stocks.e_ltc,
        mean_tenure=tenure,
        mean_wage=wages,
        mean_nonemp_years=spell,
    )


def transition_frame(T, stocks):
    """Collapsed 4x4 matrix as a labelled DataFrame"""
    collapsed = T.collapse(stocks.distribution)
    return pd.DataFrame(collapsed, index=list(SECTOR_STATES), columns=list(SECTOR_STATES))


def continuation_prob(T, stocks, state):
    """Share of a state's workers whose job survives the next reassessment"""
    members = T.group(state)
    pi = stocks.distribution
    stock = float(pi[members].sum())
    if stock <= 0:
        return math.nan
    kept = np.where(T.continuing, T.matrix, 0.0)[members].sum(axis=1)
    return float(pi[members] @ kept / stock)


def tenure_frame(eq, T, stocks, horizon=TENURE_HORIZON):
    """
    Tenure pmf per state from the job cohorts, next to the renewal formula at the state's continuation probability

    The two columns agree for a state whose jobs survive with the same
    probability every month (informal jobs without on-the-job search); the
    gap for STC and LTC is the effect of upgrades carrying tenure over.
    """
    columns = {}
    for state in ("STC", "LTC", "INF"):
        key = state.lower()
        columns[f"{key}_cohort"] = tenure_distribution(eq, state, horizon, T=T, stocks=stocks)
        s = continuation_prob(T, stocks, state)
        columns[f"{key}_renewal"] = capped_tenure_pmf(s, horizon) if math.isfinite(s) else np.full(horizon + 1, np.nan)
    frame = pd.DataFrame(columns)
    frame.index.name = "tenure_months"
    return frame
