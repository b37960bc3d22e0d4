import pytest

from bundlejc.model import ModelParams, at_resonance


@pytest.fixture(scope="session")
def unitary_n2():
    # two-photon super-Rabi point, unitary (rates in units of J)
    return at_resonance(
        ModelParams(n=2, j=1.0, omega_l=70.0, delta_n=-165.0, delta_a=0.0, n_max=8)
    )


@pytest.fixture(scope="session")
def unitary_n3():
    # three-photon super-Rabi point
    return at_resonance(
        ModelParams(n=3, j=1.0, omega_l=80.0, delta_n=-265.0, delta_a=0.0, n_max=8)
    )


@pytest.fixture(scope="session")
def dissipative_n2():
    # two-photon dissipative point (rates in units of kappa)
    return at_resonance(
        ModelParams(
            n=2, j=0.3, omega_l=21.0, delta_n=-49.5, delta_a=0.0,
            kappa=1.0, gamma=0.1, n_max=12,
        )
    )


@pytest.fixture(scope="session")
def dissipative_n3():
    # three-photon dissipative point
    return at_resonance(
        ModelParams(
            n=3, j=0.3, omega_l=24.0, delta_n=-79.5, delta_a=0.0,
            kappa=1.0, gamma=0.1, n_max=15,
        )
    )
