import textwrap

import numpy as np
import pandas as pd
import pytest

from utils.bellman import solve_equilibrium
from utils.microsim import MicrosimSettings, SurveyPanel, simulate_panel
from utils.model_core import ModelParams, ProductivityGrid, ProductivitySpec

# interior parameter point where STC, LTC and informal jobs coexist
REFERENCE = dict(
    discount_rate=0.1,
    unemployment_flow=5.0,
    vacancy_cost=0.17,
    firing_cost=2.0,
    informal_penalty=0.95,
    ltc_output_premium=0.05,
    bargaining_weight=0.5,
    matching_efficiency=0.45,
    matching_elasticity=0.5,
    search_dispersion=0.4,
    grid_size=201,
    productivity_spec=ProductivitySpec(family="lognormal", location=1.0, scale=1.2),
)

SMALL_SCENARIO = """
[model]
stc_renewal_cap = "unbounded"
grid_size = 51

[sweep]
firing_costs = [2.0]

[microsim]
n_workers = 400
block_size = 200
"""

REFERENCE_SCENARIO = """
[model]
discount_rate = 0.1
unemployment_flow = 5.0
vacancy_cost = 0.17
firing_cost = 2.0
informal_penalty = 0.95
ltc_output_premium = 0.05
search_dispersion = 0.4
stc_renewal_cap = 12
grid_size = 61

[model.productivity]
location = 1.0
scale = 1.2

[post]
firing_cost = 0.5
stc_renewal_cap = "unbounded"

[microsim]
n_workers = 1500
block_size = 500
post_wave_lag_months = 17
"""


@pytest.fixture(scope="session")
def baseline_params():
    return ModelParams(stc_renewal_cap=None, grid_size=101)


@pytest.fixture(scope="session")
def baseline_eq(baseline_params):
    return solve_equilibrium(baseline_params)


@pytest.fixture(scope="session")
def reference_params():
    return ModelParams(stc_renewal_cap=48, **REFERENCE)


@pytest.fixture(scope="session")
def reference_eq(reference_params):
    return solve_equilibrium(reference_params)


@pytest.fixture(scope="session")
def reference_post_eq(reference_params):
    return solve_equilibrium(reference_params.with_changes(firing_cost=0.5, stc_renewal_cap=None))


@pytest.fixture(scope="session")
def idle_eq():
    """Economy where no vacancy is ever worth posting"""
    return solve_equilibrium(ModelParams(vacancy_cost=1e6, stc_renewal_cap=None, grid_size=51))


@pytest.fixture(scope="session")
def small_panel(reference_eq, reference_post_eq):
    settings = MicrosimSettings(post_wave_lag_months=17, block_size=1000)
    return simulate_panel(reference_eq, reference_post_eq, reference_eq, n_workers=3000, seed=11, settings=settings)


@pytest.fixture
def tiny_grid():
    return ProductivityGrid.from_nodes([1.0, 2.0, 3.0])


@pytest.fixture
def hand_panel():
    """Four interviews with hand-checkable means"""
    frame = pd.DataFrame({
        "worker_id": [1, 2, 3, 4],
        "country_id": [0, 0, 0, 0],
        "household_id": [10, 10, 11, 11],
        "survey_wave": [0, 0, 0, 0],
        "event_month": [-1, -1, -1, -1],
        "household_weight": [1.0, 1.0, 3.0, 3.0],
        "employed": [1, 1, 1, 0],
        "formal": [1, 1, 0, 0],
        "informal": [0, 0, 1, 0],
        "ltc_conditional": [1.0, 0.0, np.nan, np.nan],
        "tenure_months": [12, 4, 2, 0],
        "nonemp_spell_years": [0.0, 0.0, 0.0, 1.5],
        "monthly_wage": [300.0, 200.0, 0.0, 0.0],
        "urban": [1, 1, 0, 0],
        "age": [30, 40, 25, 50],
        "gender": [0, 1, 0, 1],
        "education": [2, 1, 0, 3],
        "household_size": [2, 2, 2, 2],
        "married": [1, 1, 0, 0],
    })
    return SurveyPanel(frame=frame, metadata={})


@pytest.fixture
def write_scenario(tmp_path):
    def write(text, name="scenario.toml"):
        path = tmp_path / name
        path.write_text(textwrap.dedent(text), encoding="utf-8")
        return str(path)
    return write
