import pytest

from dislocade.layer import solve_corrector, solve_layer
from dislocade.potential import make_cosine_potential


@pytest.fixture(scope="session")
def cosine_potential():
    return make_cosine_potential()


@pytest.fixture(scope="session")
def layer_half(cosine_potential):
    return solve_layer(cosine_potential, 0.5)


@pytest.fixture(scope="session")
def layer_quarter(cosine_potential):
    return solve_layer(cosine_potential, 0.25, dx=0.05)


@pytest.fixture(scope="session")
def layer_threequarters(cosine_potential):
    return solve_layer(cosine_potential, 0.75, dx=0.05)


@pytest.fixture(scope="session")
def corrector_half(layer_half):
    return solve_corrector(layer_half)


@pytest.fixture(scope="session")
def corrector_threequarters(layer_threequarters):
    return solve_corrector(layer_threequarters)
