import math
import os

import numpy as np
import pytest

from sciame.configurazione import config_from_dict
from sciame.harness import FullNetworkSimulation, PropagationSimulation, run_batch, run_sweep, run_trial
from sciame.metrics import orthogonal_residual
from sciame.rng import trial_streams
from sciame.tracce import SUMMARY_FILE, read_summary


def _files(root):
    out = {}
    for d, _, names in os.walk(root):
        for name in names:
            path = os.path.join(d, name)
            with open(path, "rb") as f:
                out[os.path.relpath(path, root)] = f.read()
    return out


def test_two_agents_network_and_beliefs(config_due_agenti):
    sim = FullNetworkSimulation(config_from_dict(config_due_agenti))
    sim.step()
    assert sim.join.formation_asn == 0
    assert sim.beliefs.stamp[1, 0] == 0
    np.testing.assert_array_equal(sim.commands, np.zeros((2, 2)))
    sim.step()
    assert sim.beliefs.stamp[0, 1] == 1
    assert sim.commands[0, 0] == pytest.approx(10.0)


def test_rrsf_after_formation_has_no_collisions():
    cfg = config_from_dict({"world.n_agents": 5, "harness.horizon": 200})
    trace, summary = run_trial(cfg, 0)
    assert trace.formation_asn is not None
    after = [d for d in trace.deliveries if d.asn > trace.formation_asn]
    assert after
    assert not any(d.collision for d in after)
    assert all(d.src == d.asn % 5 for d in after)
    assert summary.collisions == sum(d.collision for d in trace.deliveries)


def test_collinear_formation_converges_immediately():
    cfg = config_from_dict({
        "mode": "propagation_only",
        "world.n_agents": 5,
        "world.spawn": "line",
        "link_model.variant": "full_connectivity",
        "controller.type": "formation",
        "harness.horizon": 20,
    })
    trace, summary = run_trial(cfg, 0)
    assert summary.convergence_steps == 0
    assert summary.formation_residual == pytest.approx(math.log(1e-12))
    assert summary.mean_link_pdr == 1.0
    assert len(trace) == 20


def test_formation_controller_reduces_residual(config_propagazione):
    config_propagazione.update({"link_model.variant": "full_connectivity", "world.n_agents": 10,
                                "harness.horizon": 200})
    cfg = config_from_dict(config_propagazione)
    sim = PropagationSimulation(cfg)
    sim.run()
    trace = sim.finish()
    assert orthogonal_residual(trace.positions[-1]) < orthogonal_residual(trace.positions[0])


def test_run_trial_is_deterministic(config_propagazione):
    cfg = config_from_dict(config_propagazione)
    t1, s1 = run_trial(cfg, 1)
    t2, s2 = run_trial(cfg, 1)
    assert s1 == s2
    np.testing.assert_array_equal(np.stack(t1.positions), np.stack(t2.positions))


def test_full_network_trial_is_deterministic():
    cfg = config_from_dict({"world.n_agents": 4, "link_model.variant": "experimental_randomness",
                            "harness.horizon": 80})
    t1, s1 = run_trial(cfg, 0)
    t2, s2 = run_trial(cfg, 0)
    assert s1 == s2
    assert t1.deliveries == t2.deliveries
    np.testing.assert_array_equal(np.stack(t1.velocities), np.stack(t2.velocities))


def test_trials_use_independent_streams():
    a, b = trial_streams(0, 0), trial_streams(0, 1)
    assert a.seed != b.seed
    assert a.spawn.random() != b.spawn.random()
    assert trial_streams(0, 0).join.random() != trial_streams(0, 0).spawn.random()


def test_batch_outputs_are_byte_identical(tmp_path, config_propagazione):
    cfg = config_from_dict(config_propagazione)
    run_batch(cfg, str(tmp_path / "a"))
    run_batch(cfg, str(tmp_path / "b"))
    a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert a == b
    assert set(a) >= {"summary.jsonl", "config.json", os.path.join("trial_0000", "trace.csv"),
                      os.path.join("trial_0001", "deliveries.csv"), os.path.join("trial_0001", "joins.csv")}


def test_trace_csv_rows(tmp_path, config_propagazione):
    config_propagazione["harness.trials"] = 1
    run_batch(config_from_dict(config_propagazione), str(tmp_path))
    with open(tmp_path / "trial_0000" / "trace.csv") as f:
        lines = f.read().splitlines()
    assert lines[0] == "step,agent,x,y,vx,vy"
    assert len(lines) == 1 + 4 * 30


def test_single_trial_batch_equals_trial(tmp_path, config_propagazione):
    config_propagazione["harness.trials"] = 1
    batch = run_batch(config_from_dict(config_propagazione), str(tmp_path))
    records = read_summary(str(tmp_path / SUMMARY_FILE))
    assert [r["kind"] for r in records] == ["trial", "batch"]
    trial = records[0]
    for name in ("flock_speed", "formation_residual", "mean_link_pdr"):
        assert batch[name]["median"] == trial[name]
        assert batch[name]["min"] == batch[name]["max"] == trial[name]
        assert batch[name]["std"] == 0.0
    assert records[1] == batch


def test_parallel_batch_matches_serial(tmp_path, config_propagazione):
    serial = run_batch(config_from_dict(config_propagazione), str(tmp_path / "s"))
    config_propagazione["harness.workers"] = 2
    parallel = run_batch(config_from_dict(config_propagazione), str(tmp_path / "p"))
    assert serial == parallel
    s, p = _files(tmp_path / "s"), _files(tmp_path / "p")
    s.pop("config.json")
    p.pop("config.json")
    assert s == p


def test_singularity_is_recorded_failure():
    cfg = config_from_dict({
        "mode": "propagation_only",
        "world.n_agents": 3,
        "world.spawn": "line",
        "link_model.variant": "full_connectivity",
        "controller.potential": "original",
        "controller.r_collision": 0.5,
        "controller.r_flock": 1.5,
        "harness.horizon": 10,
    })
    _, summary = run_trial(cfg, 0)
    assert summary.failure == "singularity"
    assert summary.flock_speed == 0.0


def test_formation_timeout_is_recorded_failure():
    cfg = config_from_dict({"world.n_agents": 3, "world.spacing": 20.0, "mac.join_timeout": 50,
                            "harness.horizon": 100})
    trace, summary = run_trial(cfg, 0)
    assert summary.failure == "formation_timeout"
    assert summary.network_formation_steps is None
    assert summary.flock_speed == 0.0
    assert len(trace) == 50


def test_stop_after_formation():
    cfg = config_from_dict({"world.n_agents": 3, "controller.type": "none",
                            "harness.stop_after_formation": True})
    trace, summary = run_trial(cfg, 0)
    assert summary.network_formation_steps == 0
    assert len(trace) == 1


def test_per_slotframe_timing_holds_commands():
    cfg = config_from_dict({"world.n_agents": 4, "control.timing": "per_slotframe", "harness.horizon": 40})
    trace, _ = run_trial(cfg, 0)
    first = trace.formation_asn + 1
    v = np.stack(trace.velocities)
    for asn in range(first + 1, 40):
        if asn % 4 != 0:
            np.testing.assert_array_equal(v[asn, 1:], v[asn - 1, 1:])


def test_per_packet_timing_skips_last_transmitter():
    cfg = config_from_dict({"world.n_agents": 4, "control.timing": "per_packet", "harness.horizon": 40})
    trace, _ = run_trial(cfg, 0)
    first = trace.formation_asn + 1
    v = np.stack(trace.velocities)
    for asn in range(first + 1, 40):
        sender = (asn - 1) % 4
        if sender != 0:
            np.testing.assert_array_equal(v[asn, sender], v[asn - 1, sender])


def test_every_k_slots_timing_in_propagation_mode(config_propagazione):
    cfg = config_from_dict(dict(config_propagazione, **{"control.timing": "every_k_slots", "control.k": 3}))
    trace, _ = run_trial(cfg, 0)
    v = np.stack(trace.velocities)
    for k in range(1, len(trace)):
        if k % 3 != 0:
            np.testing.assert_array_equal(v[k], v[k - 1])


def test_sweep_writes_one_directory_per_value(tmp_path):
    cfg = config_from_dict({"world.n_agents": 3, "harness.horizon": 20, "harness.trials": 1})
    records = run_sweep(cfg, "link_model.variant", ["unit_disk", "experimental_randomness"], str(tmp_path))
    assert len(records) == 2
    for value in ("unit_disk", "experimental_randomness"):
        assert (tmp_path / f"link_model.variant={value}" / SUMMARY_FILE).exists()
    assert records[1]["sweep"] == {"key": "link_model.variant", "value": "experimental_randomness"}


def test_far_flung_line_keeps_flock_finite():
    cfg = config_from_dict({
        "mode": "propagation_only",
        "world.n_agents": 300,
        "world.spawn": "line",
        "world.spacing": 2.0,
        "link_model.variant": "full_connectivity",
        "controller.type": "flocking",
        "controller.r_flock": 2.0,
        "harness.horizon": 3,
    })
    trace, summary = run_trial(cfg, 0)
    assert np.all(np.isfinite(np.stack(trace.positions)))
    assert np.all(np.linalg.norm(np.stack(trace.velocities), axis=2) <= cfg.world.v_max)
    assert math.isfinite(summary.flock_speed)
    assert summary.failure is None


# --- Andamenti degli esperimenti, con poche prove ---

FLOCKING = {
    "mode": "full_network",
    "world.n_agents": 10,
    "world.spawn": "line",
    "world.spacing": 2.0,
    "link_model.radius": 10.0,
    "controller.type": "flocking",
    "controller.r_flock": 10.0,
    "harness.horizon": 2000,
    "harness.trials": 2,
}


@pytest.mark.parametrize("r_flock", [10.0, 20.0])
def test_feedforward_flock_keeps_pace_at_any_radius(r_flock):
    cfg = config_from_dict(dict(FLOCKING, **{"link_model.variant": "full_connectivity",
                                             "controller.alignment": "feedforward",
                                             "controller.r_flock": r_flock}))
    batch = run_batch(cfg, write=False)
    assert batch["failures"] == 0
    assert batch["flock_speed"]["median"] >= 0.9 * cfg.flock.leader_speed


def test_flock_speed_ordering_across_link_models():
    cfg = config_from_dict(FLOCKING)
    records = run_sweep(cfg, "link_model.variant",
                        ["full_connectivity", "experimental_randomness", "probabilistic_disk"], write=False)
    full, er, pd = (r["flock_speed"]["median"] for r in records)
    tolerance = 0.05 * cfg.flock.leader_speed
    assert full >= er - tolerance
    assert er >= pd - tolerance


def test_formation_full_connectivity_is_the_reference():
    cfg = config_from_dict({
        "mode": "propagation_only",
        "world.n_agents": 100,
        "world.spawn": "disk",
        "world.density": 5.0,
        "controller.type": "formation",
        "harness.horizon": 300,
        "harness.trials": 6,
    })
    records = run_sweep(cfg, "link_model.variant",
                        ["full_connectivity", "experimental_randomness", "probabilistic_disk"], write=False)
    full, er, pd = records
    assert full["convergence_steps"]["median"] <= pd["convergence_steps"]["median"] + 1
    assert abs(er["formation_residual"]["median"] - full["formation_residual"]["median"]) <= 1.0


def test_network_formation_grows_with_swarm_size():
    cfg = config_from_dict({
        "mode": "full_network",
        "world.spawn": "line",
        "world.spacing": 2.0,
        "link_model.variant": "unit_disk",
        "link_model.radius": 10.0,
        "controller.type": "none",
        "harness.horizon": 10000,
        "harness.trials": 10,
        "harness.stop_after_formation": True,
    })
    records = run_sweep(cfg, "world.n_agents", [5, 25, 50], write=False)
    steps = [r["network_formation_steps"] for r in records]
    assert all(r["failures"] == 0 for r in records)
    medians = [s["median"] for s in steps]
    assert medians == sorted(medians) and len(set(medians)) == 3
    # Ogni salto oltre i 10 m del root costa almeno una slotframe
    assert medians[1] >= 4 * 25
    assert medians[2] >= 9 * 50
    assert steps[2]["std"] > steps[0]["std"]
