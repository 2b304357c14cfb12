# ---
# File: rng.py
# Directory: sciame/
# Ultima Modifica: 2026-10-17
# Versione: 1.00
# ---

"""
Flussi casuali per prova.

Ogni prova ha un seme derivato da (master_seed, trial_index) tramite
numpy SeedSequence; da questo derivano sotto-flussi con nome, indipendenti
tra loro. Aggiungere prove non cambia i flussi di quelle precedenti.
"""

from dataclasses import dataclass

import numpy as np

# L'ordine fissa la spawn_key di ciascun sotto-flusso: non riordinare.
STREAM_NAMES = ("spawn", "link_sampling", "delivery_draws", "join")


def trial_seed_sequence(master_seed, trial_index, stream=None):
    key = (int(trial_index),) if stream is None else (int(trial_index), STREAM_NAMES.index(stream))
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=key)


def trial_seed(master_seed, trial_index):
    """Seme intero a 64 bit della prova (registrato nella traccia)."""
    return int(trial_seed_sequence(master_seed, trial_index).generate_state(1, dtype=np.uint64)[0])


@dataclass
class TrialStreams:
    seed: int
    spawn: np.random.Generator
    link_sampling: np.random.Generator
    delivery_draws: np.random.Generator
    join: np.random.Generator


def trial_streams(master_seed, trial_index):
    gens = {
        name: np.random.Generator(np.random.PCG64DXSM(trial_seed_sequence(master_seed, trial_index, name)))
        for name in STREAM_NAMES
    }
    return TrialStreams(seed=trial_seed(master_seed, trial_index), **gens)
