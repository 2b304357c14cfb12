# ---
# File: world.py
# Directory: sciame/
# Ultima Modifica: 2026-10-17
# Versione: 1.11 (Clamp su comandi non finiti)
# ---

"""
MONDO - stato fisico degli agenti, disposizione iniziale, integrazione.

Agenti punto-massa 2-D controllati in velocità, con velocità massima.
L'agente 0 è sempre il leader.

V 1.10:
- Il clamp riscala il vettore (non tronca per asse) e garantisce
  ||v|| <= v_max in modo esatto, anche contro l'arrotondamento.

V 1.11:
- Comandi infiniti o con norma fuori scala: direzione conservata, norma v_max.
  Righe NaN diventano velocità nulla.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errori import ConfigError

logger = logging.getLogger(__name__)

# --- COSTANTI ---
LEADER_ID = 0
V_MAX_DEFAULT = 30.0
SPAWN_LINE = "line"
SPAWN_DISK = "disk"


class Role(str, Enum):
    LEADER = "leader"
    FOLLOWER = "follower"


@dataclass
class AgentState:
    id: int
    position: np.ndarray
    velocity: np.ndarray
    role: Role = Role.FOLLOWER

    @property
    def is_leader(self):
        return self.role is Role.LEADER


@dataclass(frozen=True)
class WorldConfig:
    n_agents: int = 10
    v_max: float = V_MAX_DEFAULT
    dt: float = 0.01
    spawn: str = SPAWN_LINE
    spacing: float = 2.0
    density: float = 5.0
    rng_seed: int = 0

    def validate(self):
        if self.n_agents < 1:
            raise ConfigError(f"world.n_agents deve essere >= 1 (trovato {self.n_agents})")
        if not self.dt > 0:
            raise ConfigError(f"world.dt deve essere > 0 (trovato {self.dt})")
        if not self.v_max > 0:
            raise ConfigError(f"world.v_max deve essere > 0 (trovato {self.v_max})")
        if self.spawn not in (SPAWN_LINE, SPAWN_DISK):
            raise ConfigError(f"world.spawn sconosciuto: '{self.spawn}'")
        if not self.spacing > 0:
            raise ConfigError(f"world.spacing deve essere > 0 (trovato {self.spacing})")
        if not self.density > 0:
            raise ConfigError(f"world.density deve essere > 0 (trovato {self.density})")
        return self


def _role(i):
    return Role.LEADER if i == LEADER_ID else Role.FOLLOWER


# --- Disposizione iniziale ---

def spawn_line(n, spacing):
    if n < 1 or not spacing > 0:
        raise ConfigError(f"spawn_line: servono n >= 1 e spacing > 0 (n={n}, spacing={spacing})")
    return [
        AgentState(i, np.array([i * spacing, 0.0]), np.zeros(2), _role(i))
        for i in range(n)
    ]


def disk_radius(n, density):
    """Raggio del disco tale che pi * r^2 * density = n."""
    return math.sqrt(n / (math.pi * density))


def spawn_disk(n, density, rng):
    if n < 1 or not density > 0:
        raise ConfigError(f"spawn_disk: servono n >= 1 e density > 0 (n={n}, density={density})")
    r = disk_radius(n, density)
    # Uniforme in area: raggio con radice di U[0,1)
    rho = r * np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    pts = np.column_stack([rho * np.cos(theta), rho * np.sin(theta)])
    return [AgentState(i, pts[i].copy(), np.zeros(2), _role(i)) for i in range(n)]


def spawn_agents(config, rng):
    config.validate()
    if config.spawn == SPAWN_LINE:
        return spawn_line(config.n_agents, config.spacing)
    return spawn_disk(config.n_agents, config.density, rng)


# --- Dinamica ---

def clamp_velocity(controls, v_max):
    """Riscala le righe con norma > v_max a norma v_max, preservando la direzione."""
    v = np.array(controls, dtype=float).reshape(-1, 2)
    wild = ~np.isfinite(v).all(axis=1)
    if wild.any():
        # Componenti infinite: direzione dal loro segno, norma v_max; NaN: fermo
        w = np.where(np.isinf(v[wild]), np.sign(v[wild]), 0.0)
        n = np.hypot(w[:, 0], w[:, 1])
        w[n > 0] *= (v_max / n[n > 0])[:, None]
        v[wild] = w
    norms = np.hypot(v[:, 0], v[:, 1])
    huge = np.isinf(norms)
    if huge.any():
        # Componenti finite ma norma fuori da float64
        v[huge] /= np.abs(v[huge]).max(axis=1)[:, None]
        norms = np.hypot(v[:, 0], v[:, 1])
    over = (norms > v_max) | huge
    if over.any():
        v[over] *= (v_max / norms[over])[:, None]
        # L'arrotondamento può lasciare la norma un ulp sopra v_max
        shrink = np.nextafter(1.0, 0.0)
        still = np.hypot(v[:, 0], v[:, 1]) > v_max
        while still.any():
            v[still] *= shrink
            still = np.hypot(v[:, 0], v[:, 1]) > v_max
    return v


def integrate_arrays(positions, controls, dt, v_max):
    """Versione su array: ritorna (posizioni', velocità')."""
    if len(controls) != len(positions):
        raise ValueError(f"controlli ({len(controls)}) e agenti ({len(positions)}) non coincidono")
    velocities = clamp_velocity(controls, v_max)
    return positions + velocities * dt, velocities


def integrate_step(agents, controls, dt, v_max):
    if len(controls) != len(agents):
        raise ValueError(f"controlli ({len(controls)}) e agenti ({len(agents)}) non coincidono")
    positions = np.array([a.position for a in agents], dtype=float).reshape(-1, 2)
    new_pos, new_vel = integrate_arrays(positions, np.asarray(controls, dtype=float).reshape(-1, 2), dt, v_max)
    return [
        AgentState(a.id, new_pos[k].copy(), new_vel[k].copy(), a.role)
        for k, a in enumerate(agents)
    ]


class Swarm:
    """Stato dello sciame su array (n, 2), posseduto dal ciclo di simulazione."""

    def __init__(self, positions, velocities=None):
        self.positions = np.array(positions, dtype=float).reshape(-1, 2)
        self.velocities = (np.zeros_like(self.positions) if velocities is None
                           else np.array(velocities, dtype=float).reshape(-1, 2))

    @classmethod
    def from_agents(cls, agents):
        ordered = sorted(agents, key=lambda a: a.id)
        if [a.id for a in ordered] != list(range(len(ordered))):
            raise ValueError("gli id degli agenti devono essere unici e densi in [0, n)")
        return cls([a.position for a in ordered], [a.velocity for a in ordered])

    @property
    def n(self):
        return len(self.positions)

    def agent(self, i):
        return AgentState(i, self.positions[i].copy(), self.velocities[i].copy(), _role(i))

    def agents(self):
        return [self.agent(i) for i in range(self.n)]

    def step(self, controls, dt, v_max):
        self.positions, self.velocities = integrate_arrays(self.positions, controls, dt, v_max)
