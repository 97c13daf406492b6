import math

import numpy as np
import pytest

from isoheat.measure import RadialWeight


@pytest.fixture(scope="session")
def w21():
    return RadialWeight(2, 1.0)


@pytest.fixture(scope="session")
def w22():
    return RadialWeight(2, 2.0)


@pytest.fixture(scope="session")
def w32():
    return RadialWeight(3, 2.0)


@pytest.fixture(scope="session")
def J21(w21):
    from isoheat.profiles import solve_glued_J

    return solve_glued_J(w21)


@pytest.fixture(scope="session")
def tildeI21(w21):
    from isoheat.profiles import build_global_profile

    return build_global_profile(w21)


@pytest.fixture(scope="session")
def fk21(tildeI21):
    from isoheat.heat_bounds import FaberKrahnFunction

    return FaberKrahnFunction(tildeI21)


@pytest.fixture(scope="session")
def oracle21(w21):
    from isoheat.heat_oracle import build_model

    return build_model(w21)


@pytest.fixture(scope="session")
def oracle22(w22):
    from isoheat.heat_oracle import build_model

    return build_model(w22)
