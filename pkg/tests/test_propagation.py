import numpy as np
import pytest

from sciame.errori import ConfigError
from sciame.propagation import (MIN_DISTANCE_M, SPEED_OF_LIGHT, LinkCache, LinkModel, Variant, friis_rssi,
                                link_pdr, los_blocked, rssi_to_pdr)


def distanza_per_rssi(rssi, frequency=2.4e9):
    return 10 ** (-rssi / 20.0) * SPEED_OF_LIGHT / (4 * np.pi * frequency)


def test_friis_decade_law():
    assert abs(friis_rssi(10.0) - friis_rssi(100.0) - 20.0) < 1e-9
    assert abs(friis_rssi(1.0) - friis_rssi(10.0) - 20.0) < 1e-9


def test_friis_reference_value():
    assert friis_rssi(1.0) == pytest.approx(-40.05, abs=0.01)


def test_friis_minimum_distance():
    assert friis_rssi(0.0) == friis_rssi(MIN_DISTANCE_M)


def test_friis_on_arrays():
    out = friis_rssi(np.array([1.0, 10.0]))
    assert out.shape == (2,)
    assert out[0] - out[1] == pytest.approx(20.0)


def test_waterfall():
    assert rssi_to_pdr(-97.0) == 0.0
    assert rssi_to_pdr(-87.0) == 1.0
    assert rssi_to_pdr(-92.0) == pytest.approx(0.5)
    assert rssi_to_pdr(-120.0) == 0.0
    assert rssi_to_pdr(-30.0) == 1.0


def test_unit_disk_boundary_is_inclusive():
    model = LinkModel(variant="unit_disk", radius=10.0)
    assert link_pdr(model, [0, 0], [10.0, 0]).pdr == 1.0
    assert link_pdr(model, [0, 0], [10.0001, 0]).pdr == 0.0


def test_full_connectivity_ignores_distance():
    model = LinkModel(variant=Variant.FULL_CONNECTIVITY)
    state = link_pdr(model, [0, 0], [1000.0, 0])
    assert state.pdr == 1.0
    assert state.rssi == pytest.approx(friis_rssi(1000.0))


def test_probabilistic_disk():
    model = LinkModel(variant="probabilistic_disk")
    assert link_pdr(model, [0, 0], [10.0, 0]).pdr == 0.0
    # -80 dBm è sopra la soglia alta
    assert link_pdr(model, [0, 0], [1.0, 0]).pdr == 1.0
    d = distanza_per_rssi(-52.0)
    assert link_pdr(model, [0, 0], [d, 0]).pdr == pytest.approx(0.5, abs=1e-9)


def test_line_of_sight():
    wall = (((1.0, -1.0), (1.0, 1.0)),)
    model = LinkModel(variant="line_of_sight", obstacles=wall)
    assert link_pdr(model, [0, 0], [2, 0]).pdr == 0.0
    assert link_pdr(model, [0, 2], [2, 2]).pdr == 1.0
    assert los_blocked([0, 0], [2, 0], wall)
    assert not los_blocked([0, 0], [2, 0], ())


def test_experimental_randomness_bounds():
    model = LinkModel(variant="experimental_randomness")
    rng = np.random.default_rng(0)
    friis = friis_rssi(5.0)
    samples = np.array([link_pdr(model, [0, 0], [5.0, 0], rng=rng).rssi for _ in range(10_000)])
    assert np.all(samples >= friis - 40.0)
    assert np.all(samples <= friis)
    assert samples.std() > 5.0


def test_experimental_randomness_resamples_only_after_displacement():
    model = LinkModel(variant="experimental_randomness")
    rng = np.random.default_rng(1)
    first = link_pdr(model, [0, 0], [5.0, 0], rng=rng)
    near = link_pdr(model, [0.4, 0], [5.0, 0], prior=first, rng=rng)
    assert near.loss_db == first.loss_db
    np.testing.assert_array_equal(near.last_sample_position_i, [0.0, 0.0])
    far = link_pdr(model, [0.6, 0], [5.0, 0], prior=first, rng=rng)
    assert far.loss_db != first.loss_db
    np.testing.assert_array_equal(far.last_sample_position_i, [0.6, 0.0])


def test_swapped_pair_keeps_anchors_in_pair_order():
    model = LinkModel(variant="experimental_randomness")
    rng = np.random.default_rng(5)
    state = link_pdr(model, [7.0, 1.0], [0.0, 0.0], rng=rng, pair=(3, 1))
    assert state.pair == (1, 3)
    np.testing.assert_array_equal(state.last_sample_position_i, [0.0, 0.0])
    np.testing.assert_array_equal(state.last_sample_position_j, [7.0, 1.0])
    # Stesse posizioni in ordine inverso: nessun ricampionamento
    again = link_pdr(model, [7.0, 1.0], [0.0, 0.0], prior=state, rng=rng, pair=(3, 1))
    assert again.loss_db == state.loss_db
    moved = link_pdr(model, [7.0, 1.0], [0.0, 0.6], prior=state, rng=rng, pair=(3, 1))
    assert moved.loss_db != state.loss_db
    np.testing.assert_array_equal(moved.last_sample_position_i, [0.0, 0.6])


def test_experimental_randomness_mean_loss():
    model = LinkModel(variant="experimental_randomness")
    rng = np.random.default_rng(6)
    losses = np.array([link_pdr(model, [0, 0], [5.0, 0], rng=rng).loss_db for _ in range(20_000)])
    assert losses.mean() == pytest.approx(model.random_loss_max / 2, rel=0.02)
    assert losses.min() >= 0.0 and losses.max() <= model.random_loss_max


@pytest.mark.parametrize("distance", [0.5, 1.0, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 7.0, 10.0, 20.0])
def test_probabilistic_disk_bounds_expected_pdr(distance):
    rng = np.random.default_rng(7)
    lower = link_pdr(LinkModel(variant="probabilistic_disk"), [0, 0], [distance, 0]).pdr
    model = LinkModel(variant="experimental_randomness")
    samples = np.array([link_pdr(model, [0, 0], [distance, 0], rng=rng).pdr for _ in range(10_000)])
    assert np.all(samples >= lower)
    assert samples.mean() >= lower


def test_unknown_variant_rejected():
    with pytest.raises(ConfigError, match="link_model.variant"):
        LinkModel(variant="ray_tracing")


def test_model_validate():
    with pytest.raises(ConfigError):
        LinkModel(random_loss_max=-1.0).validate()
    with pytest.raises(ConfigError):
        LinkModel(pdr_low_dbm=-80.0, pdr_high_dbm=-90.0).validate()


def test_cache_matches_scalar_model():
    rng = np.random.default_rng(2)
    pos = rng.uniform(0, 15, size=(6, 2))
    model = LinkModel(variant="probabilistic_disk")
    cache = LinkCache(model, 6)
    cache.refresh(pos)
    np.testing.assert_array_equal(cache.pdr, cache.pdr.T)
    for i in range(6):
        for j in range(i + 1, 6):
            assert cache.pdr[i, j] == pytest.approx(link_pdr(model, pos[i], pos[j]).pdr, abs=1e-12)


def test_cache_row_refresh_touches_only_rows():
    pos = np.array([[0.0, 0.0], [2.0, 0.0], [4.0, 0.0], [6.0, 0.0]])
    cache = LinkCache(LinkModel(variant="unit_disk"), 4)
    cache.refresh(pos, rows=[0])
    assert cache.pdr[0, 1] == 1.0 and cache.pdr[1, 0] == 1.0
    assert cache.pdr[2, 3] == 0.0


def test_cache_experimental_randomness_keeps_loss_until_moved():
    rng = np.random.default_rng(4)
    pos = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]])
    cache = LinkCache(LinkModel(variant="experimental_randomness"), 3)
    cache.refresh(pos, rng)
    before = cache.rssi.copy()
    pos2 = pos.copy()
    pos2[2] += [0.0, 0.3]
    cache.refresh(pos2, rng)
    assert cache.state(0, 1).loss_db is not None
    assert cache.rssi[0, 1] == before[0, 1]
    pos3 = pos2.copy()
    pos3[1] += [1.0, 0.0]
    cache.refresh(pos3, rng)
    np.testing.assert_array_equal(cache.state(0, 1).last_sample_position_j, [4.0, 0.0])
    friis = friis_rssi(4.0)
    assert friis - 40.0 <= cache.rssi[0, 1] <= friis


def test_mean_pdr_single_agent():
    assert LinkCache(LinkModel(), 1).mean_pdr() == 1.0
