"""Structural primitives: parameters, productivity distribution and grid, matching technology."""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from utils.errors import ParameterError

logger = logging.getLogger(__name__)

# Search-market order; ties in the unemployed's market choice go to the first entry.
MARKETS = ("ltc", "stc", "informal")

MAX_STC_CAP = 480
QUANTILE_LOW = 1e-4
QUANTILE_HIGH = 1.0 - 1e-4


@dataclass(frozen=True)
class ProductivitySpec:
    """
    Distribution F of match productivity z

    family is "lognormal" (location = mean of log z, scale = sd of log z)
    or "uniform" (lower, upper).
    """

    family: str = "lognormal"
    location: float = 0.0
    scale: float = 0.4
    lower: float = 0.0
    upper: float = 1.0

    def distribution(self):
        """Frozen scipy.stats distribution for this spec"""
        if self.family == "lognormal":
            return stats.lognorm(s=self.scale, scale=math.exp(self.location))
        if self.family == "uniform":
            return stats.uniform(loc=self.lower, scale=self.upper - self.lower)
        raise ParameterError("productivity_spec.family", f"unknown productivity family '{self.family}'")

    def cdf(self, x):
        return self.distribution().cdf(x)

    def ppf(self, q):
        return self.distribution().ppf(q)

    def mean(self):
        return float(self.distribution().mean())

    def sample(self, rng, size):
        """Draw from F truncated to the grid quantile range"""
        u = rng.uniform(QUANTILE_LOW, QUANTILE_HIGH, size=size)
        return self.ppf(u)


@dataclass(frozen=True)
class ModelParams:
    """All structural primitives of the three-sector economy."""

    discount_rate: float = 0.004
    unemployment_flow: float = 0.4
    vacancy_cost: float = 0.3
    firing_cost: float = 2.0
    informal_penalty: float = 0.7
    otj_search_rate: float = 0.0
    bargaining_weight: float = 0.5
    matching_efficiency: float = 0.45
    matching_elasticity: float = 0.5
    productivity_spec: ProductivitySpec = field(default_factory=ProductivitySpec)
    # None means unbounded renewals
    stc_renewal_cap: int | None = None
    grid_size: int = 501
    search_dispersion: float = 0.0
    unfair_dismissal_cost: float = 0.0
    informal_enabled: bool = True
    # proportional output gain of a long-term match over a short-term one
    ltc_output_premium: float = 0.0

    @property
    def discount_factor(self):
        return 1.0 / (1.0 + self.discount_rate)

    @property
    def severance(self):
        """Total dismissal cost of an LTC match"""
        return self.firing_cost + self.unfair_dismissal_cost

    @property
    def stc_states(self):
        """Number of STC renewal-counter states (one when renewals are unbounded)"""
        return 1 if self.stc_renewal_cap is None else int(self.stc_renewal_cap)

    def with_changes(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        """Plain mapping used for output provenance"""
        data = {name: getattr(self, name) for name in self.__dataclass_fields__ if name != "productivity_spec"}
        data["productivity_spec"] = dict(vars(self.productivity_spec))
        return data


@dataclass(frozen=True)
class Tightness:
    """Vacancy/unemployment ratio per sub-market; zero marks an inactive market."""

    ltc: float = 0.0
    stc: float = 0.0
    informal: float = 0.0

    def as_array(self):
        return np.array([self.ltc, self.stc, self.informal], dtype=float)

    @classmethod
    def from_array(cls, values):
        ltc, stc, informal = (float(v) for v in values)
        return cls(ltc=ltc, stc=stc, informal=informal)


@dataclass(frozen=True)
class ProductivityGrid:
    """
    Quantile-spaced discretization of F

    Node i carries the probability mass of the cell [edges[i], edges[i+1]].
    The outer edges sit on the outer nodes, so the end cells absorb the tails.
    """

    nodes: np.ndarray
    weights: np.ndarray
    edges: np.ndarray
    cumulative: np.ndarray

    @property
    def size(self):
        return len(self.nodes)

    def cdf(self, x):
        """F(x) with linear interpolation inside cells; 0 below the grid, 1 above"""
        return np.interp(x, self.edges, self.cumulative, left=0.0, right=1.0)

    def mass_above(self, x):
        """
        Per-node mass of draws at or above x

        Args:
            x: threshold (may be -inf or +inf) or an array of thresholds

        Returns:
            ndarray: node masses, the cell containing x split linearly;
            one row per threshold when x is an array
        """
        x = np.asarray(x, dtype=float)[..., None]
        lo = self.edges[:-1]
        hi = self.edges[1:]
        share = np.clip((hi - np.maximum(x, lo)) / (hi - lo), 0.0, 1.0)
        return self.weights * share

    def expectation(self, values):
        return float(self.weights @ np.asarray(values, dtype=float))

    @classmethod
    def from_nodes(cls, nodes, weights=None):
        """Grid on given nodes (uniform weights by default), cells bounded by midpoints"""
        nodes = np.asarray(nodes, dtype=float)
        if weights is None:
            weights = np.full(len(nodes), 1.0 / len(nodes))
        weights = np.asarray(weights, dtype=float)
        mids = 0.5 * (nodes[1:] + nodes[:-1])
        edges = np.concatenate(([nodes[0]], mids, [nodes[-1]]))
        cumulative = np.concatenate(([0.0], np.cumsum(weights)))
        cumulative[-1] = 1.0
        return cls(nodes=nodes, weights=weights, edges=edges, cumulative=cumulative)


def validate_params(params):
    """
    Check every parameter invariant

    Args:
        params: ModelParams

    Returns:
        ModelParams: the same object, unchanged

    Raises:
        ParameterError: naming the first field out of range
    """
    checks = [
        ("discount_rate", params.discount_rate > 0 and math.isfinite(params.discount_rate)),
        ("unemployment_flow", params.unemployment_flow > 0),
        ("vacancy_cost", params.vacancy_cost > 0),
        ("firing_cost", params.firing_cost >= 0),
        ("informal_penalty", 0 < params.informal_penalty <= 1),
        ("otj_search_rate", 0 <= params.otj_search_rate <= 1),
        ("bargaining_weight", 0 < params.bargaining_weight < 1),
        ("matching_efficiency", params.matching_efficiency > 0),
        ("matching_elasticity", 0 < params.matching_elasticity < 1),
        ("grid_size", int(params.grid_size) == params.grid_size and params.grid_size >= 3),
        ("search_dispersion", params.search_dispersion >= 0),
        ("unfair_dismissal_cost", params.unfair_dismissal_cost >= 0),
        ("ltc_output_premium", params.ltc_output_premium >= 0 and math.isfinite(params.ltc_output_premium)),
    ]
    for name, ok in checks:
        if not ok:
            raise ParameterError(name)

    cap = params.stc_renewal_cap
    if cap is not None:
        if int(cap) != cap or cap < 1:
            raise ParameterError("stc_renewal_cap")
        if cap > MAX_STC_CAP:
            raise ParameterError("stc_renewal_cap", f"stc_renewal_cap out of range: {cap} exceeds {MAX_STC_CAP} states")

    spec = params.productivity_spec
    if spec.family == "lognormal":
        if not spec.scale > 0:
            raise ParameterError("productivity_spec.scale")
    elif spec.family == "uniform":
        if not spec.lower < spec.upper:
            raise ParameterError("productivity_spec.lower")
    else:
        raise ParameterError("productivity_spec.family", f"unknown productivity family '{spec.family}'")
    return params


def build_grid(spec, n):
    """
    Discretize F on n nodes at equally spaced quantiles

    Args:
        spec: ProductivitySpec
        n: number of nodes, at least 3

    Returns:
        ProductivityGrid: weights sum to one
    """
    if n < 3:
        raise ParameterError("grid_size")
    dist = spec.distribution()
    nodes = dist.ppf(np.linspace(QUANTILE_LOW, QUANTILE_HIGH, n))
    mids = 0.5 * (nodes[1:] + nodes[:-1])
    cumulative = np.concatenate(([0.0], dist.cdf(mids), [1.0]))
    weights = np.diff(cumulative)
    edges = np.concatenate(([nodes[0]], mids, [nodes[-1]]))
    logger.debug(f"Built {spec.family} grid with {n} nodes on [{nodes[0]:.4g}, {nodes[-1]:.4g}]")
    return ProductivityGrid(nodes=nodes, weights=weights, edges=edges, cumulative=cumulative)


def match_output(z, sector, params):
    """Flow output of a match: z under an STC, (1 + kappa)*z under an LTC, a*z in the informal sector"""
    if sector == "formal":
        return z
    if sector == "ltc":
        return (1.0 + params.ltc_output_premium) * z
    if sector == "informal":
        return params.informal_penalty * z
    raise ValueError(f"unknown sector '{sector}'")


def fill_prob(theta, params):
    """Vacancy filling probability q(theta) = min(1, chi * theta^-eta), q(0) = 1"""
    theta = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore"):
        q = np.minimum(1.0, params.matching_efficiency * np.power(np.where(theta > 0, theta, 1.0), -params.matching_elasticity))
    q = np.where(theta > 0, q, 1.0)
    return float(q) if q.ndim == 0 else q


def find_prob(theta, params):
    """Job finding probability p(theta) = min(1, chi * theta^(1-eta)), p(0) = 0"""
    theta = np.asarray(theta, dtype=float)
    p = np.minimum(1.0, params.matching_efficiency * np.power(np.maximum(theta, 0.0), 1.0 - params.matching_elasticity))
    p = np.where(theta > 0, p, 0.0)
    return float(p) if p.ndim == 0 else p
