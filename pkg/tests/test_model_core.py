import math

import numpy as np
import pytest

from utils.errors import ParameterError
from utils.model_core import (
    ModelParams,
    ProductivityGrid,
    ProductivitySpec,
    build_grid,
    fill_prob,
    find_prob,
    match_output,
    validate_params,
)


def test_baseline_parameters_are_valid():
    params = ModelParams()
    assert validate_params(params) is params
    assert params.discount_factor == pytest.approx(1 / 1.004)
    assert params.stc_states == 1


@pytest.mark.parametrize("changes, field", [
    ({"informal_penalty": 1.2}, "informal_penalty"),
    ({"informal_penalty": 0.0}, "informal_penalty"),
    ({"discount_rate": 0.0}, "discount_rate"),
    ({"vacancy_cost": -0.1}, "vacancy_cost"),
    ({"firing_cost": -1.0}, "firing_cost"),
    ({"bargaining_weight": 1.0}, "bargaining_weight"),
    ({"matching_elasticity": 0.0}, "matching_elasticity"),
    ({"otj_search_rate": 1.5}, "otj_search_rate"),
    ({"grid_size": 2}, "grid_size"),
    ({"stc_renewal_cap": 0}, "stc_renewal_cap"),
    ({"stc_renewal_cap": 481}, "stc_renewal_cap"),
    ({"ltc_output_premium": -0.1}, "ltc_output_premium"),
])
def test_out_of_range_parameter_is_named(changes, field):
    with pytest.raises(ParameterError) as e:
        validate_params(ModelParams(**changes))
    assert e.value.field == field
    assert e.value.exit_code == 2
    assert field in str(e.value)


def test_largest_renewal_cap_is_accepted():
    validate_params(ModelParams(stc_renewal_cap=480))


def test_unknown_productivity_family():
    with pytest.raises(ParameterError):
        validate_params(ModelParams(productivity_spec=ProductivitySpec(family="pareto")))


def test_grid_weights_and_nodes():
    spec = ProductivitySpec()
    grid = build_grid(spec, 501)
    assert grid.size == 501
    assert grid.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(grid.nodes) > 0)
    assert np.all(grid.weights > 0)
    assert grid.nodes[0] == pytest.approx(spec.ppf(1e-4))
    assert grid.nodes[-1] == pytest.approx(spec.ppf(1 - 1e-4))
    # grid mean close to the distribution mean
    assert grid.expectation(grid.nodes) == pytest.approx(spec.mean(), rel=1e-3)


def test_uniform_grid():
    spec = ProductivitySpec(family="uniform", lower=1.0, upper=3.0)
    grid = build_grid(spec, 101)
    assert grid.weights.sum() == pytest.approx(1.0)
    assert grid.expectation(grid.nodes) == pytest.approx(2.0, abs=1e-6)


def test_three_node_uniform_quadrature():
    grid = build_grid(ProductivitySpec(family="uniform", lower=0.0, upper=1.0), 3)
    np.testing.assert_allclose(grid.nodes, [1e-4, 0.5, 1 - 1e-4])
    # cell edges sit halfway between nodes
    np.testing.assert_allclose(grid.weights, [0.25, 0.5, 0.25], atol=1e-4)
    assert grid.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_grid_needs_three_nodes():
    with pytest.raises(ParameterError):
        build_grid(ProductivitySpec(), 2)


def test_mass_above_limits(tiny_grid):
    np.testing.assert_allclose(tiny_grid.mass_above(-math.inf), tiny_grid.weights)
    np.testing.assert_allclose(tiny_grid.mass_above(math.inf), 0.0)
    # cells are [1, 1.5], [1.5, 2.5], [2.5, 3]
    np.testing.assert_allclose(tiny_grid.mass_above(2.0), [0.0, 1 / 6, 1 / 3])
    rows = tiny_grid.mass_above(np.array([-math.inf, 2.0]))
    assert rows.shape == (2, 3)
    assert tiny_grid.cdf(2.0) == pytest.approx(0.5)
    assert tiny_grid.cdf(0.0) == 0.0
    assert tiny_grid.cdf(5.0) == 1.0


def test_from_nodes_custom_weights():
    grid = ProductivityGrid.from_nodes([0.0, 1.0], weights=[0.25, 0.75])
    assert grid.expectation(grid.nodes) == pytest.approx(0.75)


def test_matching_probabilities():
    params = ModelParams()
    assert fill_prob(0.0, params) == 1.0
    assert find_prob(0.0, params) == 0.0
    for theta in (0.5, 4.0, 25.0):
        q = fill_prob(theta, params)
        p = find_prob(theta, params)
        assert 0 < q <= 1
        assert 0 < p <= 1
    # interior of both caps: p = theta * q
    assert find_prob(4.0, params) == pytest.approx(4.0 * fill_prob(4.0, params))
    assert fill_prob(0.1, params) == 1.0
    assert find_prob(100.0, params) == 1.0
    np.testing.assert_allclose(fill_prob(np.array([0.0, 4.0]), params), [1.0, 0.225])


def test_match_output_sectors():
    params = ModelParams(informal_penalty=0.7, ltc_output_premium=0.1)
    z = np.array([1.0, 2.0])
    np.testing.assert_allclose(match_output(z, "formal", params), z)
    np.testing.assert_allclose(match_output(z, "ltc", params), [1.1, 2.2])
    np.testing.assert_allclose(match_output(z, "informal", params), 0.7 * z)
    with pytest.raises(ValueError):
        match_output(z, "public", params)
