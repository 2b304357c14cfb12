# ---
# File: control.py
# Directory: sciame/
# Ultima Modifica: 2026-10-17
# Versione: 1.50 (Spaziatura scalata con r_flock)
# ---

"""
CONTROLLORI DECENTRALIZZATI - comandi di velocità dal solo stato di credenza.

- Flocking leader-follower: il leader comanda v*, i follower seguono il
  gradiente del potenziale a coppie (senza singolarità) più un termine di
  allineamento alla velocità del leader, pesato max(1, n/10).
- Flocking emergente: allineamento con tutti i vicini + gradiente; il
  potenziale originale (singolare a r_flock) resta selezionabile.
- Formazione in linea: retta ai minimi quadrati ortogonali (asse
  principale) su sé stesso e vicini creduti, poi proiezione.

Ogni agente vede i vicini solo tramite pacchetti ricevuti; le voci più
vecchie di stale_timeout slotframe vengono scartate.

V 1.40:
- Il termine di allineamento del follower è risolto in forma implicita
  (v_self = velocità comandata): u = (-sum grad + w v*) / (1 + w).
  La forma esplicita resta disponibile con alignment = "explicit".

V 1.50:
- potential = "spacing": stessa forma del potenziale senza singolarità, con
  larghezza repulsiva spacing_ratio * r_flock e K_col scelto perché lo zero
  del gradiente cada esattamente a spacing_ratio * r_flock.
- alignment = "feedforward": u = v* - sum grad / (1 + w); a regime il
  gradiente non deve più "tirare" il follower dietro al leader.
- leader_expiry: l'allineamento al leader decade con la sua voce di credenza.
- Coefficiente a coppie limitato a ±_COEF_CAP: la somma resta finita.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from .errori import CausalityError, ConfigError, SingularityError
from .world import LEADER_ID

logger = logging.getLogger(__name__)

# --- COSTANTI ---
LEADER_FOLLOWER = "leader_follower"
EMERGENT = "emergent"
SINGULARITY_FREE = "singularity_free"
ORIGINAL = "original"
IMPLICIT = "implicit"
EXPLICIT = "explicit"
FEEDFORWARD = "feedforward"
SPACING = "spacing"
MULTIPLICATIVE = "multiplicative"
ADDITIVE = "additive"
STALE_TIMEOUT_FRAMES = 3
# exp(700) è ancora finito in float64
_EXP_CAP = 700.0
_COEF_CAP = 1e12
DEFAULT_SPACING_RATIO = 0.7


@dataclass(frozen=True)
class PotentialConstants:
    k_col: float
    k_conn: float

    @classmethod
    def from_radii(cls, r_collision, r_flock):
        return cls(k_col=r_collision ** 2 + r_flock, k_conn=r_flock)

    @classmethod
    def for_spacing(cls, r_flock, ratio):
        """Zero del gradiente a d = ratio * r_flock con larghezza repulsiva ratio * r_flock."""
        return cls(k_col=r_flock * ratio ** 2 * np.exp(1.0 + ratio ** 2), k_conn=r_flock)


@dataclass(frozen=True)
class FlockParams:
    r_collision: float = 0.8
    r_flock: float = 10.0
    leader_speed: float = 10.0
    leader_direction: tuple = (1.0, 0.0)
    leader_weight: float = 1.0
    variant: str = LEADER_FOLLOWER
    potential: str = SINGULARITY_FREE
    alignment: str = IMPLICIT
    spacing_ratio: float = DEFAULT_SPACING_RATIO
    leader_expiry: bool = False

    def __post_init__(self):
        d = np.asarray(self.leader_direction, dtype=float)
        norm = float(np.linalg.norm(d))
        if norm > 0:
            object.__setattr__(self, "leader_direction", tuple(float(x) for x in d / norm))

    def validate(self):
        if not 0 < self.r_collision < self.r_flock:
            raise ConfigError(
                f"vincolo violato: 0 < controller.r_collision < controller.r_flock "
                f"(r_collision={self.r_collision}, r_flock={self.r_flock})")
        if not self.leader_weight >= 1:
            raise ConfigError(f"vincolo violato: controller.leader_weight >= 1 (trovato {self.leader_weight})")
        if float(np.linalg.norm(self.leader_direction)) == 0:
            raise ConfigError("controller.leader_direction non può essere nullo")
        if self.variant not in (LEADER_FOLLOWER, EMERGENT):
            raise ConfigError(f"controller.variant sconosciuto: '{self.variant}'")
        if self.potential not in (SINGULARITY_FREE, ORIGINAL, SPACING):
            raise ConfigError(f"controller.potential sconosciuto: '{self.potential}'")
        if self.alignment not in (IMPLICIT, EXPLICIT, FEEDFORWARD):
            raise ConfigError(f"controller.alignment sconosciuto: '{self.alignment}'")
        if not 0 < self.spacing_ratio < 1:
            raise ConfigError(f"vincolo violato: 0 < controller.spacing_ratio < 1 (trovato {self.spacing_ratio})")
        return self

    @property
    def constants(self):
        if self.potential == SPACING:
            return PotentialConstants.for_spacing(self.r_flock, self.spacing_ratio)
        return PotentialConstants.from_radii(self.r_collision, self.r_flock)

    @property
    def repulsion_width(self):
        if self.potential == SPACING:
            return self.spacing_ratio * self.r_flock
        return self.r_collision

    @property
    def v_star(self):
        return self.leader_speed * np.asarray(self.leader_direction, dtype=float)

    @staticmethod
    def weight_for(n_agents, mode=MULTIPLICATIVE):
        if mode == ADDITIVE:
            return 1.0 + n_agents / 10.0
        return max(1.0, n_agents / 10.0)


@dataclass(frozen=True)
class FormationParams:
    gain: float = 1.0
    stop_epsilon: float = 0.01

    def validate(self):
        if not self.gain > 0:
            raise ConfigError(f"controller.formation_gain deve essere > 0 (trovato {self.gain})")
        if self.stop_epsilon < 0:
            raise ConfigError("controller.stop_epsilon deve essere >= 0")
        return self


class NeighborEntry(NamedTuple):
    position: np.ndarray
    velocity: np.ndarray
    last_heard_asn: int


@dataclass
class BeliefState:
    owner: int
    neighbors: Dict[int, NeighborEntry] = field(default_factory=dict)
    leader_velocity: Optional[np.ndarray] = None
    leader_id: int = LEADER_ID


class Line(NamedTuple):
    point: np.ndarray
    direction: np.ndarray


# --- Potenziali ---

def _bracket(d2, params):
    """Fattore scalare del gradiente senza singolarità: grad = (x_i - x_j) * bracket(d^2)."""
    c = params.constants
    rc2, rf2 = params.repulsion_width ** 2, params.r_flock ** 2
    coef = (-(2.0 * c.k_col / rc2) * np.exp(-d2 / rc2)
            + (2.0 * c.k_conn / rf2) * np.exp(np.minimum(d2 / rf2, _EXP_CAP)))
    return np.clip(coef, -_COEF_CAP, _COEF_CAP)


def potential(x_i, x_j, params):
    diff = np.asarray(x_i, dtype=float) - np.asarray(x_j, dtype=float)
    d2 = float(np.dot(diff, diff))
    c = params.constants
    return (c.k_col * np.exp(-d2 / params.repulsion_width ** 2)
            + c.k_conn * np.exp(min(d2 / params.r_flock ** 2, _EXP_CAP)))


def potential_gradient(x_i, x_j, params):
    diff = np.asarray(x_i, dtype=float) - np.asarray(x_j, dtype=float)
    d2 = float(np.dot(diff, diff))
    if d2 == 0.0:
        return np.zeros(2)
    return diff * _bracket(d2, params)


def original_potential(x_i, x_j, r_flock):
    diff = np.asarray(x_i, dtype=float) - np.asarray(x_j, dtype=float)
    d2 = float(np.dot(diff, diff))
    if d2 == 0.0 or d2 >= r_flock ** 2:
        raise SingularityError(f"potenziale originale singolare a d={np.sqrt(d2):.6g} (r_flock={r_flock})")
    return 1.0 / d2 + 1.0 / (r_flock ** 2 - d2)


def original_potential_gradient(x_i, x_j, r_flock):
    diff = np.asarray(x_i, dtype=float) - np.asarray(x_j, dtype=float)
    d2 = float(np.dot(diff, diff))
    rf2 = r_flock ** 2
    if d2 == 0.0 or d2 >= rf2:
        raise SingularityError(f"potenziale originale singolare a d={np.sqrt(d2):.6g} (r_flock={r_flock})")
    return diff * (-2.0 / d2 ** 2 + 2.0 / (rf2 - d2) ** 2)


def equilibrium_distance(params):
    """Distanza d* dove il gradiente a coppie si annulla."""
    f = lambda d: _bracket(d * d, params)
    if f(0.0) >= 0:
        return 0.0
    hi = params.r_flock
    while f(hi) <= 0:
        hi *= 2.0
    return brentq(f, 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def _pair_gradient(x_i, x_j, params):
    if params.potential == ORIGINAL:
        return original_potential_gradient(x_i, x_j, params.r_flock)
    return potential_gradient(x_i, x_j, params)


# --- Credenze ---

def _usable(belief, asn):
    if asn is None:
        return list(belief.neighbors.values())
    return [e for e in belief.neighbors.values() if e.last_heard_asn < asn]


def update_belief(belief, packet, asn):
    if packet.src == belief.owner:
        raise ValueError(f"l'agente {belief.owner} non può ricevere un proprio pacchetto")
    if packet.asn > asn:
        raise CausalityError(f"pacchetto di {packet.src} con asn {packet.asn} > asn corrente {asn}")
    vel = np.asarray(packet.velocity, dtype=float).copy()
    belief.neighbors[packet.src] = NeighborEntry(np.asarray(packet.position, dtype=float).copy(), vel, asn)
    if packet.src == belief.leader_id:
        belief.leader_velocity = vel.copy()
    return belief


def prune_belief(belief, asn, timeout_slots):
    for j in [j for j, e in belief.neighbors.items() if asn - e.last_heard_asn > timeout_slots]:
        del belief.neighbors[j]
    return belief


# --- Flocking ---

def _align(u, leader_velocity, velocity, params):
    w = params.leader_weight
    if params.alignment == IMPLICIT:
        return (u + w * leader_velocity) / (1.0 + w)
    if params.alignment == FEEDFORWARD:
        return u / (1.0 + w) + leader_velocity
    return u + w * (leader_velocity - velocity)


def flock_control(belief, agent, params, asn=None):
    if agent.is_leader:
        return params.v_star.copy()
    entries = _usable(belief, asn)
    u = np.zeros(2)
    for e in entries:
        u -= _pair_gradient(agent.position, e.position, params)
    heard = belief.leader_velocity is not None
    if params.leader_expiry:
        heard = heard and belief.leader_id in belief.neighbors
    if heard:
        u = _align(u, belief.leader_velocity, agent.velocity, params)
    return u


def emergent_flock_control(belief, agent, params, asn=None):
    if agent.is_leader:
        return params.v_star.copy()
    u = np.zeros(2)
    for e in _usable(belief, asn):
        u -= agent.velocity - e.velocity
        u -= _pair_gradient(agent.position, e.position, params)
    return u


# --- Formazione in linea ---

def _principal_direction(a, b, c):
    """Autovettore principale di [[a, b], [b, c]], verso normalizzato; (1, 0) se degenere."""
    a, b, c = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float),
                                  np.asarray(c, dtype=float))
    lam = 0.5 * (a + c) + np.hypot(0.5 * (a - c), b)
    wide = a >= c
    vx = np.where(wide, lam - c, b)
    vy = np.where(wide, b, lam - a)
    norm = np.hypot(vx, vy)
    flat = norm == 0
    safe = np.where(flat, 1.0, norm)
    vx = np.where(flat, 1.0, vx / safe)
    vy = np.where(flat, 0.0, vy / safe)
    flip = (vx < 0) | ((vx == 0) & (vy < 0))
    return np.stack([np.where(flip, -vx, vx), np.where(flip, -vy, vy)], axis=-1)


def local_line_fit(points):
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("local_line_fit richiede almeno un punto")
    centroid = pts.mean(axis=0)
    dev = pts - centroid
    a = np.mean(dev[:, 0] ** 2)
    b = np.mean(dev[:, 0] * dev[:, 1])
    c = np.mean(dev[:, 1] ** 2)
    return Line(centroid, _principal_direction(a, b, c))


def project_on_line(point, line):
    rel = np.asarray(point, dtype=float) - line.point
    return line.point + line.direction * float(np.dot(rel, line.direction))


def formation_control(belief, agent, params=FormationParams(), asn=None):
    pts = [agent.position] + [e.position for e in _usable(belief, asn)]
    line = local_line_fit(pts)
    delta = project_on_line(agent.position, line) - agent.position
    if float(np.linalg.norm(delta)) < params.stop_epsilon:
        return np.zeros(2)
    return params.gain * delta


# --- Tabella delle credenze (tutti gli agenti) ---

class BeliefTable:
    """
    Credenze di tutti gli agenti su array: riga = proprietario, colonna = vicino.
    stamp = -1 indica nessuna voce.
    """

    def __init__(self, n, leader_id=LEADER_ID):
        self.n = n
        self.leader_id = leader_id
        self.stamp = np.full((n, n), -1, dtype=np.int64)
        self.position = np.zeros((n, n, 2))
        self.velocity = np.zeros((n, n, 2))
        self.leader_velocity = np.zeros((n, 2))
        self.leader_heard = np.zeros(n, dtype=bool)

    def record(self, packet, receivers, asn):
        if packet.asn > asn:
            raise CausalityError(f"pacchetto di {packet.src} con asn {packet.asn} > asn corrente {asn}")
        dst = np.asarray(receivers, dtype=int)
        dst = dst[dst != packet.src]
        if dst.size == 0:
            return
        self.stamp[dst, packet.src] = asn
        self.position[dst, packet.src] = packet.position
        self.velocity[dst, packet.src] = packet.velocity
        if packet.src == self.leader_id:
            self.leader_velocity[dst] = packet.velocity
            self.leader_heard[dst] = True

    def record_deliveries(self, deliveries, asn):
        by_src = {}
        for dl in deliveries:
            if dl.success:
                by_src.setdefault(dl.src, (dl.packet, []))[1].append(dl.dst)
        for src in sorted(by_src):
            packet, dsts = by_src[src]
            self.record(packet, dsts, asn)

    def record_matrix(self, delivered, positions, velocities, asn):
        """delivered[src, dst]: consegne di un round in cui tutti trasmettono."""
        recv = np.array(delivered, dtype=bool).T
        np.fill_diagonal(recv, False)
        self.stamp[recv] = asn
        np.copyto(self.position, positions[None, :, :], where=recv[:, :, None])
        np.copyto(self.velocity, velocities[None, :, :], where=recv[:, :, None])
        got = recv[:, self.leader_id]
        self.leader_velocity[got] = velocities[self.leader_id]
        self.leader_heard |= got

    def prune(self, asn, timeout_slots):
        expired = (self.stamp >= 0) & (asn - self.stamp > timeout_slots)
        self.stamp[expired] = -1
        return int(expired.sum())

    def usable(self, asn=None):
        mask = self.stamp >= 0
        if asn is not None:
            mask &= self.stamp < asn
        return mask

    def belief(self, owner):
        b = BeliefState(owner=owner, leader_id=self.leader_id)
        for j in np.nonzero(self.stamp[owner] >= 0)[0]:
            b.neighbors[int(j)] = NeighborEntry(self.position[owner, j].copy(),
                                                self.velocity[owner, j].copy(),
                                                int(self.stamp[owner, j]))
        if self.leader_heard[owner]:
            b.leader_velocity = self.leader_velocity[owner].copy()
        return b


def _pair_gradients(positions, table, mask, params):
    diff = positions[:, None, :] - table.position
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    if params.potential == ORIGINAL:
        rf2 = params.r_flock ** 2
        bad = mask & ((d2 == 0) | (d2 >= rf2))
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise SingularityError(
                f"potenziale originale singolare tra {i} e {j} (d={np.sqrt(d2[i, j]):.6g}, r_flock={params.r_flock})")
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(mask, -2.0 / d2 ** 2 + 2.0 / (rf2 - d2) ** 2, 0.0)
        coef = np.clip(coef, -_COEF_CAP, _COEF_CAP)
    else:
        coef = np.where(mask & (d2 > 0), _bracket(d2, params), 0.0)
    return np.einsum("ij,ijk->ik", coef, diff)


def flock_controls(table, swarm, params, asn=None):
    mask = table.usable(asn)
    u = -_pair_gradients(swarm.positions, table, mask, params)
    if params.variant == EMERGENT:
        count = mask.sum(axis=1)[:, None]
        u -= count * swarm.velocities - np.einsum("ij,ijk->ik", mask.astype(float), table.velocity)
    else:
        heard = table.leader_heard.copy()
        if params.leader_expiry:
            heard &= table.stamp[:, table.leader_id] >= 0
        u[heard] = _align(u[heard], table.leader_velocity[heard], swarm.velocities[heard], params)
    u[table.leader_id] = params.v_star
    return u


def formation_controls(table, swarm, params=FormationParams(), asn=None):
    mask = table.usable(asn)
    m = mask.astype(float)
    pos = swarm.positions
    X, Y = table.position[..., 0], table.position[..., 1]
    count = 1.0 + m.sum(axis=1)
    cx = (pos[:, 0] + (m * X).sum(axis=1)) / count
    cy = (pos[:, 1] + (m * Y).sum(axis=1)) / count
    dxn, dyn = m * (X - cx[:, None]), m * (Y - cy[:, None])
    dxs, dys = pos[:, 0] - cx, pos[:, 1] - cy
    a = (dxs ** 2 + (dxn ** 2).sum(axis=1)) / count
    b = (dxs * dys + (dxn * dyn).sum(axis=1)) / count
    c = (dys ** 2 + (dyn ** 2).sum(axis=1)) / count
    direction = _principal_direction(a, b, c)
    centroid = np.column_stack([cx, cy])
    t = np.einsum("ij,ij->i", pos - centroid, direction)
    delta = centroid + direction * t[:, None] - pos
    u = params.gain * delta
    u[np.linalg.norm(delta, axis=1) < params.stop_epsilon] = 0.0
    return u
