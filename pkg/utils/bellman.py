"""
Joint fixed point of match values, separation thresholds and free-entry tightness

Match values are joint (worker plus firm) values on the productivity grid.
Every match value has the form V_j(z) = g_j(z) + beta * C_j, where C_j is the
search-sub-period value of the match before next period's productivity
draw, so the solver iterates on the scalars (U, C_L, C_INF, C_S[k]).
"""

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from utils.errors import (
    BracketFailure,
    Divergence,
    MaxIterations,
    NonMonotoneValues,
    OscillationDetected,
)
from utils.model_core import (
    MARKETS,
    Tightness,
    build_grid,
    fill_prob,
    find_prob,
    match_output,
    validate_params,
)

logger = logging.getLogger(__name__)

INNER_TOL = 1e-10
INNER_MAX_ITER = 100_000
OUTER_TOL = 1e-8
OUTER_MAX_ITER = 10_000
DAMPING = 0.5
OSCILLATION_WINDOW = 500
FREE_ENTRY_TOL = 1e-10
THETA_MAX = 1e6
MONOTONE_TOL = 1e-9


@dataclass(frozen=True)
class ValueFunctions:
    """
    Value of unemployment and of each match type on the grid

    V_S has one row per STC renewal count (a single row when renewals are
    unbounded); row k is the value of a job in its (k+1)-th STC cycle.
    """

    U: float
    U_hat: float
    V_L: np.ndarray
    V_INF: np.ndarray
    V_S: np.ndarray
    V_hat_L: float
    V_hat_INF: float
    V_hat_S: np.ndarray
    stc_capped: bool = False

    @property
    def stc_count(self):
        return self.V_S.shape[0]


@dataclass(frozen=True)
class Thresholds:
    """
    Productivity cutoffs; -inf means never separate, +inf means always separate

    stc_renewal[k] and stc_upgrade[k] are the cutoffs applied when a job in
    STC cycle k+1 is reassessed: draws in [stc_renewal, stc_upgrade) renew,
    draws at or above stc_upgrade convert to LTC, the rest separate.
    """

    z_tilde_S: float
    z_tilde_L: float
    z_tilde_INF: float
    z_upgrade: float
    ltc_accept: float
    stc_renewal: np.ndarray
    stc_upgrade: np.ndarray

    @property
    def upgrade_raised(self):
        """True when the dominance rule lifts the upgrade cutoff above the LTC firing threshold"""
        finite = np.isfinite(self.stc_upgrade)
        if not finite.any():
            return False
        return bool(np.any(self.stc_upgrade[finite] > self.z_tilde_L + 1e-12))

    def as_dict(self):
        return {
            "z_tilde_S": self.z_tilde_S,
            "z_tilde_L": self.z_tilde_L,
            "z_tilde_INF": self.z_tilde_INF,
            "z_upgrade": self.z_upgrade,
            "ltc_accept": self.ltc_accept,
        }


@dataclass(frozen=True)
class WageSchedule:
    stc: np.ndarray
    ltc: np.ndarray
    informal: np.ndarray

    def for_market(self, market):
        return getattr(self, market)


@dataclass(frozen=True)
class DecisionRules:
    """
    Per-node probability masses of every reassessment outcome

    Each array gives, per grid node of the fresh draw, the probability that
    a match of the given type ends up continuing at that node. Scalars are
    separation probabilities.
    """

    ltc_stay: np.ndarray
    ltc_sep: float
    informal_stay: np.ndarray
    informal_move: np.ndarray
    informal_move_market: str
    informal_sep: float
    stc_renew: np.ndarray
    stc_upgrade: np.ndarray
    stc_sep: np.ndarray
    hire: dict
    contact: dict


@dataclass
class SolverDiagnostics:
    outer_iterations: int = 0
    inner_iterations: int = 0
    theta_gap: float = math.nan
    gap_trace: list = field(default_factory=list)
    inner_residuals: list = field(default_factory=list)
    upgrade_raised: bool = False
    solve_seconds: float = 0.0


@dataclass(frozen=True)
class EquilibriumSolution:
    params: object
    grid: object
    values: ValueFunctions
    thresholds: Thresholds
    tightness: Tightness
    wages: WageSchedule
    profits: dict
    search_probs: dict
    rules: DecisionRules
    diagnostics: SolverDiagnostics

    @property
    def chosen_market(self):
        """Market the unemployed enter with the highest probability (ties toward LTC, STC, INF)"""
        probs = [self.search_probs[m] for m in MARKETS]
        return MARKETS[int(np.argmax(probs))]

    @property
    def find_probs(self):
        return {m: find_prob(getattr(self.tightness, m), self.params) for m in MARKETS}

    @property
    def fill_probs(self):
        return {m: fill_prob(getattr(self.tightness, m), self.params) for m in MARKETS}

    def bellman_residual(self):
        """Sup-norm change of one further Bellman application at the reported solution"""
        thresholds = solve_thresholds(self.values, self.values.U, self.params.severance, self.grid)
        updated = worker_value_update(self.values, self.tightness, thresholds, self.params, self.grid)
        return _sup_change(self.values, updated)

    def threshold_residuals(self):
        """Value gap at each interior threshold against its indifference target"""
        v, t, z = self.values, self.thresholds, self.grid.nodes
        targets = {
            "stc": (t.z_tilde_S, v.V_S[0], v.U),
            "ltc": (t.z_tilde_L, v.V_L, v.U - self.params.severance),
            "informal": (t.z_tilde_INF, v.V_INF, v.U),
        }
        out = {}
        for name, (cut, vec, target) in targets.items():
            if math.isfinite(cut):
                out[name] = abs(float(np.interp(cut, z, vec)) - target)
        return out

    def free_entry_residuals(self):
        """|c - q(theta) E[Pi]| for every active market"""
        out = {}
        for market in MARKETS:
            theta = getattr(self.tightness, market)
            if theta > 0:
                out[market] = abs(self.params.vacancy_cost - fill_prob(theta, self.params) * self.profits[market])
        return out

    def summary(self):
        """Scalar record of the solution for reports"""
        return {
            "thresholds": self.thresholds.as_dict(),
            "tightness": {m: getattr(self.tightness, m) for m in MARKETS},
            "expected_profit": dict(self.profits),
            "search_probs": dict(self.search_probs),
            "chosen_market": self.chosen_market,
            "U": self.values.U,
            "diagnostics": {
                "outer_iterations": self.diagnostics.outer_iterations,
                "inner_iterations": self.diagnostics.inner_iterations,
                "theta_gap": self.diagnostics.theta_gap,
                "bellman_residual": self.bellman_residual(),
                "threshold_residuals": self.threshold_residuals(),
                "free_entry_residuals": self.free_entry_residuals(),
                "upgrade_cutoff_raised": self.diagnostics.upgrade_raised,
            },
        }


def initial_values(params, grid):
    """Start every value at the autarky level b / (1 - beta)"""
    beta = params.discount_factor
    u0 = params.unemployment_flow / (1.0 - beta) if beta < 1 else 0.0
    return _assemble(u0, u0, u0, u0, np.full(params.stc_states, u0), params, grid)


def _assemble(U, U_hat, C_L, C_INF, C_S, params, grid):
    beta = params.discount_factor
    z = grid.nodes
    C_S = np.asarray(C_S, dtype=float)
    return ValueFunctions(
        U=float(U),
        U_hat=float(U_hat),
        V_L=match_output(z, "ltc", params) + beta * C_L,
        V_INF=match_output(z, "informal", params) + beta * C_INF,
        V_S=match_output(z, "formal", params)[None, :] + beta * C_S[:, None],
        V_hat_L=float(C_L),
        V_hat_INF=float(C_INF),
        V_hat_S=C_S,
        stc_capped=params.stc_renewal_cap is not None,
    )


def crossing(grid, values, target):
    """
    Lowest z where a non-decreasing value vector reaches target

    Args:
        grid: ProductivityGrid
        values: array over nodes, or 2-D with one vector per row
        target: scalar, or one target per row

    Returns:
        float or ndarray: interpolated crossing; -inf if the first node already
        meets the target, +inf if the last node falls short
    """
    single = np.ndim(values) == 1
    values = np.atleast_2d(np.asarray(values, dtype=float))
    target = np.broadcast_to(np.asarray(target, dtype=float), (values.shape[0],))
    if np.any(np.diff(values, axis=1) < -MONOTONE_TOL):
        raise NonMonotoneValues("value function decreases in productivity")

    z = grid.nodes
    reached = values >= target[:, None]
    first = np.argmax(reached, axis=1)
    out = np.empty(values.shape[0])
    for row in range(values.shape[0]):
        if not reached[row, -1]:
            out[row] = math.inf
        elif first[row] == 0:
            out[row] = -math.inf
        else:
            i = first[row]
            v0, v1 = values[row, i - 1], values[row, i]
            out[row] = z[i - 1] + (target[row] - v0) * (z[i] - z[i - 1]) / (v1 - v0)
    return float(out[0]) if single else out


def solve_thresholds(values, U, f, grid):
    """
    Separation, firing and upgrade cutoffs implied by the current values

    Args:
        values: ValueFunctions
        U: value of unemployment
        f: severance of an LTC dismissal
        grid: ProductivityGrid

    Returns:
        Thresholds
    """
    z_s = crossing(grid, values.V_S[0], U)
    z_l = crossing(grid, values.V_L, U - f)
    z_inf = crossing(grid, values.V_INF, U)
    ltc_accept = crossing(grid, values.V_L, U)

    n_states = values.stc_count
    renewal = np.full(n_states, math.inf)
    upgrade = np.full(n_states, ltc_accept)
    if values.stc_capped:
        # cycle k+1 renews into cycle k+2; the last cycle cannot renew
        if n_states > 1:
            nxt = values.V_S[1:]
            renewal[:-1] = crossing(grid, nxt, U)
            dominance = np.minimum(values.V_L[None, :] - nxt, values.V_L[None, :] - U)
            upgrade[:-1] = crossing(grid, dominance, 0.0)
    else:
        nxt = values.V_S[0]
        renewal[0] = z_s
        upgrade[0] = crossing(grid, np.minimum(values.V_L - nxt, values.V_L - U), 0.0)

    return Thresholds(
        z_tilde_S=z_s,
        z_tilde_L=z_l,
        z_tilde_INF=z_inf,
        z_upgrade=float(upgrade[0]),
        ltc_accept=ltc_accept,
        stc_renewal=renewal,
        stc_upgrade=upgrade,
    )


def search_gains(values, thresholds, tightness, params, grid):
    """Per-market gain p(theta_j) * phi * E[(V_j - U) over accepted draws]"""
    U = values.U
    cutoffs = {"ltc": thresholds.z_tilde_L, "stc": thresholds.z_tilde_S, "informal": thresholds.z_tilde_INF}
    vectors = {"ltc": values.V_L, "stc": values.V_S[0], "informal": values.V_INF}
    gains = {}
    hires = {}
    for market in MARKETS:
        accepted = grid.mass_above(cutoffs[market])
        hires[market] = accepted
        surplus = float(accepted @ (vectors[market] - U))
        gains[market] = find_prob(getattr(tightness, market), params) * params.bargaining_weight * surplus
    if not params.informal_enabled:
        gains["informal"] = None
    return gains, hires


def market_choice(gains, dispersion):
    """
    Search value and entry probabilities of the unemployed

    Args:
        gains: dict market -> search gain, None for a disabled market
        dispersion: logit scale; 0 picks the best market outright

    Returns:
        tuple: (option value of search, dict market -> probability)
    """
    active = [m for m in MARKETS if gains[m] is not None]
    d = np.array([gains[m] for m in active])
    probs = {m: 0.0 for m in MARKETS}
    if dispersion <= 0:
        best = int(np.argmax(d))
        probs[active[best]] = 1.0
        return float(d[best]), probs
    option = dispersion * (logsumexp(d / dispersion) - math.log(len(active)))
    weights = np.exp(d / dispersion - logsumexp(d / dispersion))
    for market, w in zip(active, weights):
        probs[market] = float(w)
    return float(option), probs


def _otj_masses(values, thresholds, tightness, params, grid, gains, hires):
    """Informal reassessment with on-the-job offers from the best formal market"""
    U = values.U
    stay_base = grid.mass_above(thresholds.z_tilde_INF)
    sep_base = 1.0 - stay_base.sum()
    market = "ltc" if gains["ltc"] >= gains["stc"] else "stc"
    offer = params.otj_search_rate * find_prob(getattr(tightness, market), params)
    if offer <= 0:
        return stay_base, np.zeros(grid.size), market, sep_base

    outside = values.V_L if market == "ltc" else values.V_S[0]
    acceptable = hires[market]
    no_offer = 1.0 - acceptable.sum()
    v_inf = values.V_INF
    # move iff the outside match value beats the current one
    beats_stay = outside[None, :] > v_inf[:, None]
    beats_sep = outside > U
    p_move = stay_base @ beats_stay + sep_base * beats_sep
    move = offer * acceptable * p_move
    keep = no_offer + (~beats_stay).astype(float) @ acceptable
    stay = (1.0 - offer) * stay_base + offer * stay_base * keep
    sep = (1.0 - offer) * sep_base + offer * sep_base * (no_offer + acceptable @ (~beats_sep))
    return stay, move, market, float(sep)


def decision_rules(values, thresholds, tightness, params, grid):
    """
    Assemble reassessment and hiring masses from values and cutoffs

    Returns:
        tuple: (DecisionRules, option value of search, market entry probabilities)
    """
    gains, hires = search_gains(values, thresholds, tightness, params, grid)
    option, probs = market_choice(gains, params.search_dispersion)

    ltc_stay = grid.mass_above(thresholds.z_tilde_L)
    if params.informal_enabled and params.otj_search_rate > 0:
        inf_stay, inf_move, move_market, inf_sep = _otj_masses(values, thresholds, tightness, params, grid, gains, hires)
    else:
        inf_stay = grid.mass_above(thresholds.z_tilde_INF)
        inf_move, move_market, inf_sep = np.zeros(grid.size), "ltc", float(1.0 - inf_stay.sum())

    renew_from = grid.mass_above(thresholds.stc_renewal)
    upgrade = grid.mass_above(thresholds.stc_upgrade)
    renew = np.clip(renew_from - grid.mass_above(np.maximum(thresholds.stc_renewal, thresholds.stc_upgrade)), 0.0, None)
    kept = grid.mass_above(np.minimum(thresholds.stc_renewal, thresholds.stc_upgrade)).sum(axis=1)

    contact = {m: find_prob(getattr(tightness, m), params) * probs[m] for m in MARKETS}
    rules = DecisionRules(
        ltc_stay=ltc_stay,
        ltc_sep=float(1.0 - ltc_stay.sum()),
        informal_stay=inf_stay,
        informal_move=inf_move,
        informal_move_market=move_market,
        informal_sep=inf_sep,
        stc_renew=np.atleast_2d(renew),
        stc_upgrade=np.atleast_2d(upgrade),
        stc_sep=1.0 - np.atleast_1d(kept),
        hire=hires,
        contact=contact,
    )
    return rules, option, probs


def worker_value_update(values, tightness, thresholds, params, grid):
    """
    One synchronous application of the Bellman operator

    Args:
        values: current ValueFunctions
        tightness: Tightness per market
        thresholds: cutoffs consistent with values
        params: ModelParams
        grid: ProductivityGrid

    Returns:
        ValueFunctions: updated values
    """
    beta = params.discount_factor
    U = values.U
    rules, option, _ = decision_rules(values, thresholds, tightness, params, grid)

    C_L = rules.ltc_sep * (U - params.severance) + rules.ltc_stay @ values.V_L
    outside = values.V_L if rules.informal_move_market == "ltc" else values.V_S[0]
    C_INF = rules.informal_sep * U + rules.informal_stay @ values.V_INF + rules.informal_move @ outside

    if values.stc_capped:
        nxt = np.vstack([values.V_S[1:], np.zeros((1, grid.size))])
    else:
        nxt = values.V_S
    C_S = rules.stc_sep * U + np.einsum("kn,kn->k", rules.stc_renew, nxt) + rules.stc_upgrade @ values.V_L

    U_hat = U + option
    U_new = params.unemployment_flow + beta * U_hat
    updated = _assemble(U_new, U_hat, C_L, C_INF, C_S, params, grid)
    if not (np.isfinite(updated.U) and np.isfinite(updated.V_hat_S).all() and np.isfinite([C_L, C_INF]).all()):
        raise Divergence("non-finite value encountered in the Bellman update")
    return updated


def _sup_change(old, new):
    diffs = np.concatenate((
        [new.U - old.U],
        (new.V_L - old.V_L)[:1],
        (new.V_INF - old.V_INF)[:1],
        (new.V_S[:, 0] - old.V_S[:, 0]),
    ))
    return float(np.max(np.abs(diffs)))


def _extrapolate(old, new, params, grid):
    """MacQueen-Porteus bound extrapolation: shift every value by the midpoint of the error bounds"""
    beta = params.discount_factor
    if beta <= 0:
        return new
    diffs = np.concatenate((
        [new.U - old.U],
        [beta * (new.V_hat_L - old.V_hat_L), beta * (new.V_hat_INF - old.V_hat_INF)],
        beta * (new.V_hat_S - old.V_hat_S),
    ))
    shift = beta / (1.0 - beta) * 0.5 * (diffs.max() + diffs.min())
    return _assemble(
        new.U + shift,
        new.U_hat + shift / beta,
        new.V_hat_L + shift / beta,
        new.V_hat_INF + shift / beta,
        new.V_hat_S + shift / beta,
        params,
        grid,
    )


def solve_worker_values(tightness, params, grid, start=None, tol=INNER_TOL, max_iter=INNER_MAX_ITER,
                        accelerate=True, history=None):
    """
    Iterate the Bellman operator to its fixed point at fixed tightness

    Args:
        tightness: Tightness
        params: ModelParams
        grid: ProductivityGrid
        start: optional ValueFunctions to warm-start from
        tol: sup-norm change that declares convergence
        max_iter: iteration cap
        accelerate: apply bound extrapolation after each pass
        history: optional list that receives the sup-norm change of every pass

    Returns:
        tuple: (ValueFunctions, Thresholds, iterations)
    """
    values = start if start is not None else initial_values(params, grid)
    change = math.inf
    for iteration in range(1, max_iter + 1):
        thresholds = solve_thresholds(values, values.U, params.severance, grid)
        updated = worker_value_update(values, tightness, thresholds, params, grid)
        if accelerate:
            updated = _extrapolate(values, updated, params, grid)
        change = _sup_change(values, updated)
        values = updated
        if history is not None:
            history.append(change)
        if change < tol:
            thresholds = solve_thresholds(values, values.U, params.severance, grid)
            return values, thresholds, iteration
    raise MaxIterations(f"worker values did not converge in {max_iter} iterations", residual=change)


def wage_schedule(values, params, grid):
    """Nash-sharing wage w = b + phi * (g - b), floored at zero"""
    b, phi = params.unemployment_flow, params.bargaining_weight
    formal = np.maximum(0.0, b + phi * (match_output(grid.nodes, "formal", params) - b))
    informal = np.maximum(0.0, b + phi * (match_output(grid.nodes, "informal", params) - b))
    ltc = np.maximum(0.0, b + phi * (match_output(grid.nodes, "ltc", params) - b))
    return WageSchedule(stc=formal, ltc=ltc, informal=informal)


def expected_profit(regime, values, thresholds, wages, params, grid):
    """
    Expected first-period profit of a filled vacancy

    Args:
        regime: "stc", "ltc" or "informal"
        values: ValueFunctions (unused beyond consistency of thresholds)
        thresholds: Thresholds
        wages: WageSchedule
        params: ModelParams
        grid: ProductivityGrid

    Returns:
        float: weighted partial sum of flow profit above the regime cutoff,
        net of expected severance for LTC
    """
    if regime == "stc":
        flow = match_output(grid.nodes, "formal", params) - wages.stc
        return float(grid.mass_above(thresholds.z_tilde_S) @ flow)
    if regime == "ltc":
        flow = match_output(grid.nodes, "ltc", params) - wages.ltc
        dismissal = float(grid.cdf(thresholds.z_tilde_L))
        return float(grid.mass_above(thresholds.z_tilde_L) @ flow) - params.severance * dismissal
    if regime == "informal":
        flow = match_output(grid.nodes, "informal", params) - wages.informal
        return float(grid.mass_above(thresholds.z_tilde_INF) @ flow)
    raise ValueError(f"unknown regime '{regime}'")


def free_entry_tightness(expected_profit_at, params, tol=FREE_ENTRY_TOL, theta_max=THETA_MAX):
    """
    Largest tightness at which posting a vacancy still breaks even

    Args:
        expected_profit_at: expected profit, or a callable of theta returning it
        params: ModelParams

    Returns:
        float: theta*, zero when the profit cannot cover the vacancy cost
    """
    def profit(theta):
        return expected_profit_at(theta) if callable(expected_profit_at) else float(expected_profit_at)

    c = params.vacancy_cost

    def residual(theta):
        return fill_prob(theta, params) * profit(theta) - c

    if residual(0.0) < 0:
        return 0.0
    lo, hi = 0.0, 1.0
    while residual(hi) >= 0:
        lo, hi = hi, hi * 2.0
        if hi > theta_max:
            raise BracketFailure(f"free-entry residual keeps its sign up to theta = {theta_max:g}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if residual(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _market_profits(values, thresholds, params, grid):
    wages = wage_schedule(values, params, grid)
    profits = {m: expected_profit(m, values, thresholds, wages, params, grid) for m in MARKETS}
    return wages, profits


def solve_equilibrium(params, grid=None, initial_tightness=None, accelerate=True):
    """
    Damped fixed point between worker values and free entry

    Args:
        params: ModelParams
        grid: optional ProductivityGrid (built from params when omitted)
        initial_tightness: optional starting Tightness (0.5 in every market)
        accelerate: bound extrapolation in the inner solve

    Returns:
        EquilibriumSolution
    """
    validate_params(params)
    grid = grid if grid is not None else build_grid(params.productivity_spec, params.grid_size)
    theta = (initial_tightness or Tightness(0.5, 0.5, 0.5)).as_array()
    if not params.informal_enabled:
        theta[2] = 0.0

    diagnostics = SolverDiagnostics()
    values = None
    best_gap, since_best = math.inf, 0
    started = time.perf_counter()

    for outer in range(1, OUTER_MAX_ITER + 1):
        tightness = Tightness.from_array(theta)
        values, thresholds, inner = solve_worker_values(tightness, params, grid, start=values, accelerate=accelerate)
        diagnostics.inner_iterations += inner
        wages, profits = _market_profits(values, thresholds, params, grid)
        target = np.array([free_entry_tightness(profits[m], params) for m in MARKETS])
        if not params.informal_enabled:
            target[2] = 0.0

        gap = float(np.max(np.abs(target - theta)))
        diagnostics.gap_trace.append(gap)
        logger.debug(f"outer {outer}: theta={theta.round(8).tolist()} gap={gap:.3e}")

        if gap < OUTER_TOL:
            diagnostics.solve_seconds = time.perf_counter() - started
            solution = _finish(params, grid, values, thresholds, tightness, wages, profits, diagnostics, outer, gap)
            residuals = solution.free_entry_residuals()
            if all(r < OUTER_TOL for r in residuals.values()):
                logger.info(
                    f"Equilibrium converged in {outer} outer iterations "
                    f"({diagnostics.solve_seconds:.2f}s), theta={np.round(theta, 6).tolist()}"
                )
                return solution

        if gap < best_gap:
            best_gap, since_best = gap, 0
        else:
            since_best += 1
            if since_best >= OSCILLATION_WINDOW:
                raise OscillationDetected(
                    f"tightness gap stalled at {best_gap:.3e} for {OSCILLATION_WINDOW} iterations",
                    trace=diagnostics.gap_trace[-OSCILLATION_WINDOW:],
                )
        theta = theta + DAMPING * (target - theta)
        # an inactive market closes outright once it is within tolerance of zero
        theta = np.where((target == 0.0) & (theta < OUTER_TOL), 0.0, theta)

    raise MaxIterations(
        f"equilibrium did not converge in {OUTER_MAX_ITER} outer iterations",
        residual=diagnostics.gap_trace[-1],
        trace=diagnostics.gap_trace[-50:],
    )


def _finish(params, grid, values, thresholds, tightness, wages, profits, diagnostics, outer, gap):
    rules, _, probs = decision_rules(values, thresholds, tightness, params, grid)
    diagnostics.outer_iterations = outer
    diagnostics.theta_gap = gap
    diagnostics.upgrade_raised = thresholds.upgrade_raised
    if thresholds.upgrade_raised:
        logger.debug(f"Upgrade cutoff {thresholds.z_upgrade:.4g} sits above the LTC firing threshold {thresholds.z_tilde_L:.4g}")
    return EquilibriumSolution(
        params=params,
        grid=grid,
        values=values,
        thresholds=thresholds,
        tightness=tightness,
        wages=wages,
        profits=profits,
        search_probs=probs,
        rules=rules,
        diagnostics=diagnostics,
    )
