import pytest

from periodic_rk.basis import BasisSet, uniform_basis
from periodic_rk.expr import UnivariateFunction
from periodic_rk.kernel import KernelConvention, resolve_convention
from periodic_rk.parser import parse

PERIODIC_TEST_FUNCTIONS = (
    "1",
    "sin(2*pi*t)",
    "cos(2*pi*t)",
    "t^2*(1-t)^2",
    "exp(sin(2*pi*t))",
)


@pytest.fixture(scope="session")
def convention() -> KernelConvention:
    return resolve_convention()


@pytest.fixture(scope="session")
def basis11(convention: KernelConvention) -> BasisSet:
    return uniform_basis(11, convention)


@pytest.fixture(scope="session")
def periodic_functions() -> dict[str, UnivariateFunction]:
    return {text: UnivariateFunction(parse(text)) for text in PERIODIC_TEST_FUNCTIONS}
