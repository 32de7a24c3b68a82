import pytest

from sinetract.cauchy import CauchyEngine
from sinetract.logdyn import calibrate
from sinetract.tract import TractSpec


@pytest.fixture(scope="session")
def engine():
    return CauchyEngine.for_tract()


@pytest.fixture(scope="session")
def model(engine):
    return calibrate(engine=engine)


@pytest.fixture(scope="session")
def control_model():
    return calibrate(spec=TractSpec(wiggle_coeff=0.0))
