from __future__ import annotations

import numpy as np
import pytest

from metaeq.colonization import ColonizationFunction
from metaeq.config import Config, build_landscape
from metaeq.fields import Kernel, constant_field, make_field
from metaeq.geometry import Box, Torus
from metaeq.landscape import Landscape

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def const_land(dim=2, e=0.5, a=1.0, sigma=1.0, r=0.2, kind="box", side=1.0, profile="uniform", height=1.0):
    if kind == "box":
        dom = Box(np.zeros(dim), np.full(dim, side))
    else:
        dom = Torus(np.full(dim, side))
    return Landscape(dom, constant_field(e, dim), constant_field(a, dim), constant_field(sigma, dim),
                     Kernel(profile, constant_field(height, dim)), r)


def varying_land(r=0.1, quad_n=32):
    box = (np.zeros(2), np.ones(2))
    e = make_field("affine", {"value": 0.3, "gradient": [0.1, 0.05]}, 2, box, name="e")
    a = make_field("bump", {"base": 1.0, "amplitude": 0.5, "width": 0.4, "center": [0.5, 0.5]}, 2, box, name="a")
    sigma = make_field("gaussians", {"base": 1.0, "centers": [[0.3, 0.7]], "amplitudes": [0.4], "scales": [0.2]},
                       2, box, name="sigma")
    return Landscape(Box(*box), e, a, sigma, Kernel("linear", constant_field(1.0, 2)), r, quad_n=quad_n)


RING_CFG = """
dimension = 1
domain.kind = torus
domain.params.side = [1.0]
e.kind = constant
e.params.value = 0.01
a.kind = constant
a.params.value = 0.01
sigma.kind = constant
sigma.params.value = 1.0
kernel.kind = uniform
r = 0.0025
f.kind = saturating
n = 5000
replicates = 200
seed = 11

[bounds]
center = [0.5]
t = 0.49
alpha1 = 0.55
alpha2 = auto
beta = 1.01
beta_prime = 1.225
"""


@pytest.fixture
def ring_cfg():
    return Config.from_text(RING_CFG)


@pytest.fixture
def ring_land(ring_cfg):
    return build_landscape(ring_cfg)


@pytest.fixture
def f_sat():
    return ColonizationFunction("saturating", 1.0)


@pytest.fixture
def f_lin():
    return ColonizationFunction("linear", 1.0)
