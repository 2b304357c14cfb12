# ---
# File: mac.py
# Directory: sciame/
# Ultima Modifica: 2026-10-17
# Versione: 1.30 (Join semplificato)
# ---

"""
MAC TSCH - slot, slotframe, channel hopping, RRSF, consegna per slot, join.

RRSF: in ogni slot trasmette un solo agente (asn mod L), tutti gli altri
ascoltano; ogni agente trasmette una volta per slotframe.

Join semplificato:
- la radice (agente 0) è nella rete da asn 0;
- un agente non ancora nella rete ascolta per una slotframe intera, poi
  si annuncia nel "suo" slot RRSF secondo il proprio orologio non
  sincronizzato (offset casuale in [0, L));
- entra nella rete alla prima ricezione da un agente che può annunciare
  la rete (radice, oppure entrato prima dell'inizio della slotframe
  corrente); entrando si sincronizza e trasmette da subito nel suo slot.
- Interferenza binaria: due trasmettitori udibili dallo stesso ricevitore
  nello stesso slot -> il ricevitore non riceve nulla.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Set, Tuple

import numpy as np

from .errori import ConfigError

logger = logging.getLogger(__name__)

# --- COSTANTI ---
SLOT_DURATION_S = 0.01
HOPPING_SEQUENCE = tuple(range(16))
JOIN_TIMEOUT_SLOTS = 10_000
ROOT_ID = 0


@dataclass(frozen=True)
class Slotframe:
    length: int
    slot_duration: float = SLOT_DURATION_S
    hopping_sequence: Tuple[int, ...] = HOPPING_SEQUENCE
    channel_offset: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hopping_sequence", tuple(int(c) for c in self.hopping_sequence))

    def validate(self):
        if self.length < 1:
            raise ConfigError(f"mac.slotframe_length deve essere >= 1 (trovato {self.length})")
        if not self.slot_duration > 0:
            raise ConfigError(f"mac.slot_duration deve essere > 0 (trovato {self.slot_duration})")
        if not self.hopping_sequence:
            raise ConfigError("mac.hopping_sequence non può essere vuota")
        if len(set(self.hopping_sequence)) != len(self.hopping_sequence):
            raise ConfigError("mac.hopping_sequence deve avere canali unici")
        return self

    def channel(self, asn):
        return self.hopping_sequence[(asn + self.channel_offset) % len(self.hopping_sequence)]

    def frame_start(self, asn):
        return asn - asn % self.length


@dataclass(frozen=True)
class SlotAssignment:
    asn: int
    tx: frozenset
    rx: frozenset
    channel: int


class Packet(NamedTuple):
    src: int
    position: np.ndarray
    velocity: np.ndarray
    asn: int


class Delivery(NamedTuple):
    """Una riga del log: un tentativo di ricezione su una coppia udibile."""
    asn: int
    src: int
    dst: int
    success: bool
    collision: bool
    rssi: float
    channel: int
    packet: Packet


@dataclass
class JoinState:
    n: int
    joined: Set[int]
    join_asn: Dict[int, int]
    clock_offsets: np.ndarray
    root: int = ROOT_ID
    formation_asn: Optional[int] = None
    events: List[Tuple[int, int]] = field(default_factory=list)


def new_join_state(n, rng=None, frame_length=None, root=ROOT_ID):
    """Radice già nella rete; offset di orologio casuali per gli altri."""
    L = frame_length or n
    offsets = np.zeros(n, dtype=np.int64) if rng is None else rng.integers(0, L, size=n)
    offsets[root] = 0
    state = JoinState(n=n, joined={root}, join_asn={root: 0}, clock_offsets=offsets, root=root)
    state.events.append((0, root))
    if n == 1:
        state.formation_asn = 0
    return state


# --- Schedulazione ---

def rrsf_assignment(n, asn, slotframe):
    s = asn % slotframe.length
    tx = frozenset({s}) if s < n else frozenset()
    return SlotAssignment(asn, tx, frozenset(range(n)) - tx, slotframe.channel(asn))


def join_assignment(n, asn, slotframe, join_state):
    """RRSF per gli agenti nella rete più gli annunci non sincronizzati degli altri."""
    L = slotframe.length
    s = asn % L
    tx = set()
    if s < n and s in join_state.joined:
        tx.add(s)
    if asn >= L and len(join_state.joined) < n:
        for u in range(n):
            if u not in join_state.joined and (asn + int(join_state.clock_offsets[u])) % L == u:
                tx.add(u)
    tx = frozenset(tx)
    return SlotAssignment(asn, tx, frozenset(range(n)) - tx, slotframe.channel(asn))


def can_advertise(join_state, agent, asn, slotframe):
    if agent == join_state.root:
        return True
    ja = join_state.join_asn.get(agent)
    return ja is not None and ja < slotframe.frame_start(asn)


# --- Consegna ---

def deliver_slot(assignment, swarm, link_cache, rng):
    """
    Un tentativo per ogni coppia (trasmettitore, ricevitore) con pdr > 0.
    Un ricevitore che sente due o più trasmettitori subisce collisione;
    gli altri tentativi sono estrazioni di Bernoulli indipendenti.
    """
    tx = sorted(assignment.tx)
    rx = np.array(sorted(assignment.rx), dtype=int)
    if not tx or rx.size == 0:
        return []
    P = link_cache.pdr[np.ix_(tx, rx)]
    R = link_cache.rssi[np.ix_(tx, rx)]
    audible = P > 0
    collided = audible.sum(axis=0) >= 2
    clean = audible & ~collided[None, :]
    draws = rng.random(int(clean.sum()))
    success = np.zeros_like(audible)
    success[clean] = draws < P[clean]

    asn, ch = assignment.asn, assignment.channel
    rows = []
    for a, s in enumerate(tx):
        packet = Packet(s, swarm.positions[s].copy(), swarm.velocities[s].copy(), asn)
        for b in np.nonzero(audible[a])[0]:
            rows.append(Delivery(asn, s, int(rx[b]), bool(success[a, b]), bool(collided[b]),
                                 float(R[a, b]), ch, packet))
    return rows


# --- Join ---

def join_step(join_state, deliveries, slotframe=None):
    """Aggiunge chi ha ricevuto da un agente che può annunciare la rete."""
    newly = set()
    asn = deliveries[0].asn if deliveries else None
    for dl in deliveries:
        if not dl.success or dl.dst in join_state.joined:
            continue
        frame = slotframe or Slotframe(length=join_state.n)
        if can_advertise(join_state, dl.src, dl.asn, frame):
            newly.add(dl.dst)
    for d in sorted(newly):
        join_state.joined.add(d)
        join_state.join_asn[d] = asn
        join_state.clock_offsets[d] = 0
        join_state.events.append((asn, d))
        logger.debug("🔗 Agente %d nella rete (asn %d)", d, asn)
    if join_state.formation_asn is None and len(join_state.joined) == join_state.n:
        join_state.formation_asn = asn if asn is not None else 0
        logger.info("✅ Rete formata all'asn %d", join_state.formation_asn)
    return join_state


def network_formed(join_state):
    return join_state.formation_asn is not None


def formation_failed(join_state, asn, timeout=JOIN_TIMEOUT_SLOTS):
    return not network_formed(join_state) and asn >= timeout
