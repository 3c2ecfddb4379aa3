"""Shared fixtures: scenarios, end-to-end reports, and pipeline products.

The expensive artifacts (full-grid scenario runs, holomorphization products)
are session-scoped so the acceptance criteria and the module tests share
them.
"""
from types import SimpleNamespace

import pytest

from cfharm.algebra import hefer_decompose
from cfharm.geometry import trace_boundary, attach_reference_points
from cfharm.harmonic import period_a, build_h, primitive_f
from cfharm.harness import boundary_field, make_scenario, run_scenario


@pytest.fixture(scope="session")
def line_scenario():
    return make_scenario("line-rational")


@pytest.fixture(scope="session")
def conic_scenario():
    return make_scenario("conic-log")


@pytest.fixture(scope="session")
def fermat_scenario():
    return make_scenario("fermat-mixed")


def build_pipeline(scenario, h_mode="auto"):
    """Run the pre-quadrature pipeline stages and return all products."""
    curve = scenario.curve
    trace = trace_boundary(curve, scenario.n_theta)
    attach_reference_points(curve, trace)
    fld = boundary_field(scenario, trace)
    a = period_a(fld, trace)
    H = build_h(curve, trace, a, mode=h_mode)
    F = primitive_f(fld, H, trace)
    return SimpleNamespace(curve=curve, trace=trace, fld=fld, a=a, H=H, F=F,
                           hefer=hefer_decompose(curve.P))


@pytest.fixture(scope="session")
def line_pipeline(line_scenario):
    return build_pipeline(line_scenario)


@pytest.fixture(scope="session")
def conic_pipeline(conic_scenario):
    return build_pipeline(conic_scenario)


@pytest.fixture(scope="session")
def fermat_pipeline(fermat_scenario):
    return build_pipeline(fermat_scenario)


@pytest.fixture(scope="session")
def line_report(line_scenario):
    return run_scenario(line_scenario)


@pytest.fixture(scope="session")
def conic_report(conic_scenario):
    return run_scenario(conic_scenario)


@pytest.fixture(scope="session")
def fermat_report(fermat_scenario):
    return run_scenario(fermat_scenario)
