import numpy as np
import pytest

from aquatwin.config import ExperimentConfig, GenConfig, LstmHyperparams, SolverConfig
from aquatwin.network.fixtures import hanoi_builtin
from aquatwin.network.inp import parse_inp

TWO_NODE_INP = """\
[JUNCTIONS]
J1 0 10
[RESERVOIRS]
R1 100
[PIPES]
P1 R1 J1 1000 300 130
[END]
"""

LOOP_INP = """\
[TITLE]
Three junction loop
[JUNCTIONS]
J1 10 5
J2 12 4
J3 8 6
[RESERVOIRS]
R1 80
[PIPES]
P1 R1 J1 500 400 120
P2 J1 J2 400 250 110
P3 J2 J3 450 200 110
P4 J3 J1 300 250 120
[COORDINATES]
J1 0 0
J2 1 0
J3 1 1
R1 -1 0
[END]
"""


class ConstantForecaster:
    """Forecaster returning the same value whatever the history"""

    def __init__(self, value: float, lookback: int = 4):
        self.value = value
        self.lookback = lookback

    def predict(self, history) -> float:
        return float(self.value)


@pytest.fixture
def two_node_net():
    return parse_inp(TWO_NODE_INP)


@pytest.fixture
def loop_net():
    return parse_inp(LOOP_INP)


@pytest.fixture
def hanoi():
    return hanoi_builtin()


@pytest.fixture
def constant_bank():
    """Forecasters predicting each loop junction's base demand exactly"""

    def build(net, lookback: int = 4):
        return {
            k: ConstantForecaster(d, lookback) for k, d in enumerate(net.base_demands)
        }

    return build


@pytest.fixture
def tiny_hyper():
    return LstmHyperparams(
        lookback=4,
        layers=1,
        hidden=3,
        dropout=0.0,
        learning_rate=1e-2,
        batch_size=4,
        max_epochs=3,
        patience=2,
        l2=0.0,
        seed=0,
    )


@pytest.fixture
def tiny_gen():
    return GenConfig(n_scenarios=5, horizon_hours=48, seed=3)


@pytest.fixture
def tiny_config(tmp_path, tiny_gen, tiny_hyper):
    """Pipeline configuration small enough to run every stage in a test"""
    inp = tmp_path / "loop.inp"
    inp.write_text(LOOP_INP)
    return ExperimentConfig(
        network=str(inp),
        gen=tiny_gen,
        hyper=tiny_hyper,
        solver=SolverConfig(),
        alpha=0.2,
        budgets=(0.34, 0.67),
        sensor_sigmas=(0.0,),
        seeds=(0,),
        output_dir=str(tmp_path / "out"),
        sweep_alphas=(0.2,),
        sweep_lookbacks=(4,),
        progress=False,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
