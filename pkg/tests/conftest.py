import pytest

from d2dee import BandParams, SystemParams


BAND1 = dict(
    bandwidth_hz=20e6,
    pathloss_exponent=4.0,
    sir_threshold_d2d=1.0,
    sir_threshold_cell=1.0,
    density_d2d=1e-4,
    density_cell=1.5e-5,
    d2d_link_distance_m=10.0,
    cell_link_distance_m=50.0,
    outage_cap_d2d=0.05,
    outage_cap_cell=0.05,
    max_power_d2d_w=0.02,
    max_power_cell_w=0.3,
)


@pytest.fixture
def make_band():
    def _make(**overrides) -> BandParams:
        params = dict(BAND1)
        params.update(overrides)
        return BandParams(**params)

    return _make


@pytest.fixture
def band1(make_band) -> BandParams:
    return make_band()


@pytest.fixture
def make_system(make_band):
    def _make(bands=None, budget_d2d_w=0.06, budget_cell_w=1.0, **band_overrides):
        if bands is None:
            bands = [make_band(**band_overrides)]
        return SystemParams(bands=bands, budget_d2d_w=budget_d2d_w,
                            budget_cell_w=budget_cell_w)

    return _make
