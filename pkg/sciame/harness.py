# ---
# File: harness.py
# Directory: sciame/
# Ultima Modifica: 2026-10-17
# Versione: 1.30 (Prove in parallelo)
# ---

"""
ORCHESTRAZIONE ESPERIMENTI - le due modalità di simulazione, batch e sweep.

full_network: un passo = uno slot TSCH (dt = slot_duration). Ordine in ogni
slot: scarto credenze scadute -> controllo (secondo control.timing) ->
integrazione -> riga di traccia -> comunicazione (pacchetto = stato dopo
l'integrazione, marcato con l'asn corrente). Prima della formazione della
rete ogni comando è nullo.

propagation_only: un passo = un giro in cui ogni agente offre il proprio
pacchetto a tutti gli altri con probabilità pdr (dt = control_period).

V 1.30:
- harness.workers > 1 distribuisce le prove su un pool di processi; i
  risultati sono ordinati per indice di prova e identici all'esecuzione seriale.
"""

import logging
import os
from multiprocessing import Pool

import numpy as np

from .configurazione import (FLOCKING, NO_CONTROLLER, PER_PACKET, PER_SLOTFRAME,
                             value_label, with_override)
from .control import BeliefTable, flock_controls, formation_controls
from .errori import SingularityError
from .mac import deliver_slot, formation_failed, join_assignment, join_step, new_join_state, rrsf_assignment
from .metrics import (FULL_NETWORK, PROPAGATION_ONLY, JoinEvent, TrialTrace, batch_summary, summarize_trial)
from .propagation import LinkCache
from .rng import trial_streams
from .tracce import write_config_echo, write_summary, write_trial_files
from .world import LEADER_ID, Swarm, spawn_agents

logger = logging.getLogger(__name__)


class _Simulation:
    """Parte comune: stato dello sciame, credenze, comandi, traccia."""

    mode = None

    def __init__(self, config, trial_index=0):
        self.config = config
        self.trial_index = trial_index
        self.streams = trial_streams(config.master_seed, trial_index)
        self.swarm = Swarm.from_agents(spawn_agents(config.world, self.streams.spawn))
        n = self.swarm.n
        self.links = LinkCache(config.link_model, n)
        self.beliefs = BeliefTable(n)
        self.commands = np.zeros((n, 2))
        self.received = np.zeros(n, dtype=bool)
        self.trace = TrialTrace(n, self.mode, self.streams.seed, config.to_dict())
        self.step_index = 0
        self.failure = None

    @property
    def n(self):
        return self.swarm.n

    def _controls(self, asn):
        cfg = self.config
        if cfg.controller_type == FLOCKING:
            return flock_controls(self.beliefs, self.swarm, cfg.flock, asn)
        return formation_controls(self.beliefs, self.swarm, cfg.formation, asn)

    def _timing_due(self, step, frame_tick):
        cfg = self.config
        if cfg.control_timing == PER_PACKET:
            due = self.received.copy()
        elif cfg.control_timing == PER_SLOTFRAME:
            due = np.full(self.n, frame_tick)
        else:
            due = np.full(self.n, step % cfg.control_k == 0)
        if cfg.controller_type == FLOCKING:
            due[LEADER_ID] = True
        return due

    def _control_phase(self, step, first, frame_tick):
        if self.config.controller_type == NO_CONTROLLER:
            return
        due = np.ones(self.n, dtype=bool) if step == first else self._timing_due(step, frame_tick)
        self.received[:] = False
        if due.any():
            u = self._controls(step)
            self.commands[due] = u[due]

    def _integrate_and_trace(self, step):
        self.swarm.step(self.commands, self.config.world.dt, self.config.world.v_max)
        self.trace.append(step, self.swarm.positions, self.swarm.velocities)

    def run(self):
        logger.debug("🚀 Prova %d (%s, %d agenti)", self.trial_index, self.mode, self.n)
        while self.step_index < self.config.horizon and not self.done():
            self.step()
        return self.finish()

    def done(self):
        return self.failure is not None

    def finish(self):
        return self.trace

    def mean_link_pdr(self):
        return None


class FullNetworkSimulation(_Simulation):
    mode = FULL_NETWORK

    def __init__(self, config, trial_index=0):
        super().__init__(config, trial_index)
        self.slotframe = config.slotframe
        self.join = new_join_state(self.n, self.streams.join, self.slotframe.length)

    @property
    def asn(self):
        return self.step_index

    @property
    def formed(self):
        return self.join.formation_asn is not None

    def done(self):
        if self.failure is not None:
            return True
        return self.config.stop_after_formation and self.formed

    def step(self):
        asn = self.step_index
        cfg = self.config
        self.beliefs.prune(asn, cfg.stale_timeout_slots)
        if self.formed and asn > self.join.formation_asn:
            first = self.join.formation_asn + 1
            self._control_phase(asn, first, asn % self.slotframe.length == 0)
        self._integrate_and_trace(asn)

        if self.formed:
            assignment = rrsf_assignment(self.n, asn, self.slotframe)
        else:
            assignment = join_assignment(self.n, asn, self.slotframe, self.join)
        if assignment.tx:
            self.links.refresh(self.swarm.positions, self.streams.link_sampling, rows=sorted(assignment.tx))
            deliveries = deliver_slot(assignment, self.swarm, self.links, self.streams.delivery_draws)
            self.beliefs.record_deliveries(deliveries, asn)
            got = [dl.dst for dl in deliveries if dl.success]
            self.received[got] = True
            if not self.formed:
                join_step(self.join, deliveries, self.slotframe)
            self.trace.deliveries.extend(dl._replace(packet=None) for dl in deliveries)

        self.step_index += 1
        if formation_failed(self.join, self.step_index, cfg.join_timeout):
            self.failure = "formation_timeout"
            logger.warning("⚠️ Prova %d: rete non formata entro %d slot", self.trial_index, cfg.join_timeout)

    def finish(self):
        self.trace.joins = [JoinEvent(a, u) for a, u in self.join.events]
        self.trace.formation_asn = self.join.formation_asn
        return self.trace


class PropagationSimulation(_Simulation):
    mode = PROPAGATION_ONLY

    def __init__(self, config, trial_index=0):
        super().__init__(config, trial_index)
        self.offered = 0
        self.delivered = 0

    def step(self):
        k = self.step_index
        self.beliefs.prune(k, self.config.stale_timeout_slots)
        # Un passo vale una slotframe
        self._control_phase(k, 0, True)
        self._integrate_and_trace(k)

        self.links.refresh(self.swarm.positions, self.streams.link_sampling)
        delivered = self.streams.delivery_draws.random((self.n, self.n)) < self.links.pdr
        np.fill_diagonal(delivered, False)
        self.beliefs.record_matrix(delivered, self.swarm.positions, self.swarm.velocities, k)
        self.received |= delivered.any(axis=0)
        self.offered += self.n * (self.n - 1)
        self.delivered += int(delivered.sum())
        self.step_index += 1

    def mean_link_pdr(self):
        if self.offered == 0:
            return None
        return self.delivered / self.offered


def make_simulation(config, trial_index=0):
    cls = FullNetworkSimulation if config.mode == FULL_NETWORK else PropagationSimulation
    return cls(config, trial_index)


def run_trial(config, trial_index):
    """Una prova completa: (TrialTrace, TrialSummary). I fallimenti sono esiti, non eccezioni."""
    sim = make_simulation(config, trial_index)
    failure = None
    try:
        sim.run()
    except SingularityError as e:
        failure = "singularity"
        logger.warning("⚠️ Prova %d interrotta: %s", trial_index, e)
    trace = sim.finish()
    summary = summarize_trial(
        trace, trial_index, config.flock.leader_direction,
        convergence_epsilon=config.convergence_epsilon,
        convergence_hold=config.convergence_hold,
        failure=failure or sim.failure,
        mean_link_pdr=sim.mean_link_pdr(),
    )
    return trace, summary


def _trial_job(args):
    config, trial_index, out_dir = args
    trace, summary = run_trial(config, trial_index)
    if out_dir is not None:
        write_trial_files(out_dir, trial_index, trace, config.trace_every)
    return summary


def run_batch(config, out_dir=None, write=True):
    """Esegue harness.trials prove e scrive summary.jsonl; ritorna il record di batch."""
    out = (out_dir or config.output_dir) if write else None
    jobs = [(config, i, out) for i in range(config.trials)]
    logger.info("🚀 Batch: %d prove, modalità %s, %d agenti", config.trials, config.mode, config.n_agents)
    if config.workers > 1 and config.trials > 1:
        with Pool(min(config.workers, config.trials)) as pool:
            summaries = pool.map(_trial_job, jobs)
    else:
        summaries = [_trial_job(job) for job in jobs]

    batch = batch_summary(summaries)
    if out is not None:
        write_config_echo(out, config.to_dict())
        write_summary(out, [s.to_record() for s in summaries], batch)
        logger.info("✅ Batch completato in %s (%d fallimenti)", out, batch["failures"])
    return batch


def sweep_dir(out_dir, key, value):
    return os.path.join(out_dir, f"{key}={value_label(value)}")


def run_sweep(config, key, values, out_dir=None, write=True):
    """Un batch per valore, ciascuno in <out>/<key>=<valore>/."""
    out = out_dir or config.output_dir
    records = []
    for value in values:
        cfg = with_override(config, key, value)
        logger.info("ℹ️ Sweep %s = %s", key, value_label(value))
        batch = run_batch(cfg, sweep_dir(out, key, value) if write else None, write=write)
        batch["sweep"] = {"key": key, "value": value}
        records.append(batch)
    return records
