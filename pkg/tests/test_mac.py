import numpy as np
import pytest

from sciame.errori import ConfigError
from sciame.mac import (HOPPING_SEQUENCE, Slotframe, SlotAssignment, can_advertise, deliver_slot,
                        formation_failed, join_assignment, join_step, network_formed, new_join_state,
                        rrsf_assignment)
from sciame.metrics import network_stats
from sciame.propagation import SPEED_OF_LIGHT, LinkCache, LinkModel
from sciame.world import Swarm


def _cache(positions, variant="unit_disk"):
    cache = LinkCache(LinkModel(variant=variant), len(positions))
    cache.refresh(np.asarray(positions, dtype=float))
    return cache


def test_rrsf_each_agent_once_per_frame():
    n = 7
    frame = Slotframe(length=n)
    for start in range(0, 3 * n):
        senders = [next(iter(rrsf_assignment(n, asn, frame).tx)) for asn in range(start, start + n)]
        assert sorted(senders) == list(range(n))


def test_rrsf_single_transmitter_and_rx_complement():
    frame = Slotframe(length=4)
    a = rrsf_assignment(4, 6, frame)
    assert a.tx == frozenset({2})
    assert a.rx == frozenset({0, 1, 3})


def test_rrsf_idle_slots_when_frame_longer_than_swarm():
    a = rrsf_assignment(3, 4, Slotframe(length=5))
    assert a.tx == frozenset()


def test_channel_hopping():
    frame = Slotframe(length=10, channel_offset=3)
    assert frame.channel(0) == HOPPING_SEQUENCE[3]
    assert frame.channel(13) == HOPPING_SEQUENCE[0]
    assert rrsf_assignment(10, 13, frame).channel == frame.channel(13)


def test_slotframe_validate():
    with pytest.raises(ConfigError, match="mac.slotframe_length"):
        Slotframe(length=0).validate()
    with pytest.raises(ConfigError):
        Slotframe(length=4, hopping_sequence=(1, 1)).validate()


def test_two_agents_form_network_in_first_slot():
    swarm = Swarm([[0.0, 0.0], [2.0, 0.0]])
    cache = _cache(swarm.positions)
    frame = Slotframe(length=2)
    js = new_join_state(2, np.random.default_rng(0), 2)
    assert not network_formed(js)
    a = join_assignment(2, 0, frame, js)
    assert a.tx == frozenset({0})
    deliveries = deliver_slot(a, swarm, cache, np.random.default_rng(0))
    assert len(deliveries) == 1 and deliveries[0].success
    join_step(js, deliveries, frame)
    assert js.formation_asn == 0
    assert js.join_asn[1] == 0


def test_single_agent_is_formed():
    assert new_join_state(1).formation_asn == 0


def test_unjoined_agents_scan_first_frame():
    js = new_join_state(4, np.random.default_rng(5), 4)
    frame = Slotframe(length=4)
    for asn in range(4):
        assert join_assignment(4, asn, frame, js).tx <= {0}


def test_unjoined_agents_announce_once_per_frame():
    js = new_join_state(4, np.random.default_rng(5), 4)
    frame = Slotframe(length=4)
    announced = {u: 0 for u in (1, 2, 3)}
    for asn in range(4, 8):
        for u in join_assignment(4, asn, frame, js).tx - {0}:
            announced[u] += 1
    assert announced == {1: 1, 2: 1, 3: 1}


def test_can_advertise_waits_for_next_frame():
    frame = Slotframe(length=5)
    js = new_join_state(3)
    js.joined.add(1)
    js.join_asn[1] = 3
    assert can_advertise(js, 0, 2, frame)
    assert not can_advertise(js, 1, 4, frame)
    assert can_advertise(js, 1, 5, frame)
    assert not can_advertise(js, 2, 9, frame)


def test_concurrent_transmitters_collide():
    swarm = Swarm([[0.0, 0.0], [2.0, 0.0], [1.0, 1.0]])
    cache = _cache(swarm.positions)
    a = SlotAssignment(0, frozenset({0, 1}), frozenset({2}), 11)
    deliveries = deliver_slot(a, swarm, cache, np.random.default_rng(0))
    assert len(deliveries) == 2
    assert all(d.collision and not d.success for d in deliveries)
    assert network_stats(deliveries).collisions == 2


def test_out_of_range_receiver_not_logged():
    swarm = Swarm([[0.0, 0.0], [50.0, 0.0]])
    cache = _cache(swarm.positions)
    deliveries = deliver_slot(rrsf_assignment(2, 0, Slotframe(length=2)), swarm, cache, np.random.default_rng(0))
    assert deliveries == []


def test_packet_carries_sender_state():
    swarm = Swarm([[0.0, 0.0], [2.0, 0.0]], [[1.0, 0.5], [0.0, 0.0]])
    cache = _cache(swarm.positions)
    (dl,) = deliver_slot(rrsf_assignment(2, 4, Slotframe(length=2)), swarm, cache, np.random.default_rng(0))
    assert dl.packet.src == 0 and dl.packet.asn == 4
    np.testing.assert_array_equal(dl.packet.velocity, [1.0, 0.5])


def test_empirical_pdr_matches_model():
    d = 10 ** (52 / 20.0) * SPEED_OF_LIGHT / (4 * np.pi * 2.4e9)
    swarm = Swarm([[0.0, 0.0], [d, 0.0]])
    cache = _cache(swarm.positions, "probabilistic_disk")
    assert cache.pdr[0, 1] == pytest.approx(0.5, abs=1e-9)
    frame = Slotframe(length=2)
    rng = np.random.default_rng(11)
    deliveries = []
    for asn in range(4000):
        deliveries += deliver_slot(rrsf_assignment(2, asn, frame), swarm, cache, rng)
    stats = network_stats(deliveries)
    assert stats.attempts[(0, 1)] == 2000
    assert stats.collisions == 0
    for pdr in stats.link_pdr.values():
        assert abs(pdr - 0.5) <= 0.05


def test_formation_failed_after_timeout():
    js = new_join_state(3)
    assert not formation_failed(js, 9_999)
    assert formation_failed(js, 10_000)
    js.formation_asn = 5
    assert not formation_failed(js, 20_000)
