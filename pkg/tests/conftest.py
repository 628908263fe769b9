"""Shared fixtures: reference curves and their invariant series."""

import pytest

from billiards.billiard import BilliardMap
from billiards.curves import CurveSpec, build_curve
from billiards.normal_form import build_normal_chart
from billiards.series import build_invariant_series


@pytest.fixture(scope="session")
def circle():
    return build_curve(CurveSpec.circle(1.0))


@pytest.fixture(scope="session")
def ellipse():
    return build_curve(CurveSpec.ellipse(2.0, 1.0))


@pytest.fixture(scope="session")
def circle_map(circle):
    return BilliardMap(circle)


@pytest.fixture(scope="session")
def ellipse_map(ellipse):
    return BilliardMap(ellipse)


@pytest.fixture(scope="session")
def circle_series(circle):
    return build_invariant_series(circle, 3)


@pytest.fixture(scope="session")
def ellipse_series(ellipse):
    return build_invariant_series(ellipse, 3)


@pytest.fixture(scope="session")
def circle_chart(circle, circle_series):
    return build_normal_chart(circle, circle_series)


@pytest.fixture(scope="session")
def ellipse_chart(ellipse, ellipse_series):
    return build_normal_chart(ellipse, ellipse_series)
