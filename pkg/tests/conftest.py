import numpy as np
import pytest

from hubspoke import FormationKind, FormationSpec, SystemParams


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture
def geo_params():
    """Reference design: N=3 deputies at the 1:2 frequency pair, stiff tethers."""
    return SystemParams.from_design(n_deputies=3, mass_ratio=8.0, rigidity=1000.0)


def random_params(rng, n_deputies=None, damping_ratio=None):
    """Random but physical parameter set, log-uniform in the interesting knobs."""
    n = int(n_deputies if n_deputies is not None else rng.integers(2, 7))
    ratio = float(np.exp(rng.uniform(np.log(0.3), np.log(50.0))))
    rigidity = float(np.exp(rng.uniform(np.log(0.05), np.log(3000.0))))
    zeta = float(rng.uniform(0.01, 1.5)) if damping_ratio is None else damping_ratio
    m_dep = float(np.exp(rng.uniform(np.log(1.0), np.log(300.0))))
    return SystemParams.from_design(
        n_deputies=n,
        mass_ratio=ratio,
        rigidity=rigidity,
        m_deputy=m_dep,
        damping_ratio=zeta,
    )


def spec_from_phi0(kind, p, q, n, phi0, amplitude=1.0):
    return FormationSpec.from_phi0(FormationKind(kind), p, q, n, amplitude, phi0)
