# ---
# File: metrics.py
# Directory: sciame/
# Ultima Modifica: 2026-10-17
# Versione: 1.10 (Residuo ortogonale)
# ---

"""
METRICHE - velocità dello stormo, residuo della formazione, convergenza,
statistiche di rete.

Tutto è post-elaborazione sulla traccia in memoria di una prova: nessuna
metrica modifica la traccia.
"""

import logging
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

# --- COSTANTI ---
FULL_NETWORK = "full_network"
PROPAGATION_ONLY = "propagation_only"
SSE_FLOOR = 1e-12
CONVERGENCE_EPSILON = 1e-3
CONVERGENCE_HOLD = 5


class JoinEvent(NamedTuple):
    asn: int
    agent: int


@dataclass
class TrialTrace:
    n_agents: int
    mode: str = FULL_NETWORK
    seed: int = 0
    config: Dict = field(default_factory=dict)
    steps: List[int] = field(default_factory=list)
    positions: List[np.ndarray] = field(default_factory=list)
    velocities: List[np.ndarray] = field(default_factory=list)
    deliveries: List = field(default_factory=list)
    joins: List[JoinEvent] = field(default_factory=list)
    formation_asn: Optional[int] = None

    def append(self, step, positions, velocities):
        if self.steps and step <= self.steps[-1]:
            raise ValueError(f"passo {step} non successivo a {self.steps[-1]}")
        positions = np.array(positions, dtype=float).reshape(-1, 2)
        velocities = np.array(velocities, dtype=float).reshape(-1, 2)
        if len(positions) != self.n_agents or len(velocities) != self.n_agents:
            raise ValueError(f"riga con {len(positions)} agenti, attesi {self.n_agents}")
        self.steps.append(int(step))
        self.positions.append(positions)
        self.velocities.append(velocities)

    def __len__(self):
        return len(self.steps)

    @property
    def post_formation_start(self):
        """Primo passo valido per le metriche; None se la rete non si è mai formata."""
        if self.mode == PROPAGATION_ONLY:
            return self.steps[0] if self.steps else 0
        if self.formation_asn is None:
            return None
        return self.formation_asn + 1

    def post_formation_rows(self):
        start = self.post_formation_start
        if start is None:
            return np.empty(0, dtype=int)
        return np.nonzero(np.asarray(self.steps) >= start)[0]

    def velocity_array(self, rows=None):
        v = np.stack(self.velocities) if self.velocities else np.zeros((0, self.n_agents, 2))
        return v if rows is None else v[rows]

    def final_positions(self):
        return self.positions[-1] if self.positions else None


class Residual(NamedTuple):
    value: float
    degenerate: bool


class NetworkStats(NamedTuple):
    link_pdr: Dict[Tuple[int, int], float]
    attempts: Dict[Tuple[int, int], int]
    collisions: int
    formation_asn: Optional[int]
    mean_pdr: Optional[float]


@dataclass
class TrialSummary:
    trial: int
    seed: int
    mode: str
    flock_speed: float
    formation_residual: Optional[float]
    orthogonal_residual: Optional[float]
    residual_degenerate: bool
    convergence_steps: Optional[int]
    network_formation_steps: Optional[int]
    mean_link_pdr: Optional[float]
    collisions: int = 0
    failure: Optional[str] = None

    def to_record(self):
        record = asdict(self)
        record["kind"] = "trial"
        return record


# --- Stormo ---

def flock_speed(trace, leader_direction):
    """Media temporale della velocità media proiettata su leader_direction; 0 senza passi validi."""
    rows = trace.post_formation_rows()
    if rows.size == 0:
        return 0.0
    d = np.asarray(leader_direction, dtype=float)
    d = d / np.linalg.norm(d)
    per_step = (trace.velocity_array(rows) @ d).mean(axis=1)
    return float(per_step.mean())


# --- Formazione ---

def residual_error(positions):
    """
    ln(max(SSE, 1e-12)) della regressione ordinaria y su x.
    Con x tutte uguali gli assi vengono scambiati e il risultato è marcato degenere.
    """
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        raise ValueError("residual_error richiede almeno due punti")
    x, y = pts[:, 0], pts[:, 1]
    degenerate = bool(np.all(x == x[0]))
    if degenerate:
        x, y = y, x
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    slope = float(np.dot(dx, dy)) / sxx if sxx > 0 else 0.0
    sse = float(np.sum((dy - slope * dx) ** 2))
    return Residual(float(np.log(max(sse, SSE_FLOOR))), degenerate)


def orthogonal_residual(positions):
    """ln della somma dei quadrati delle distanze ortogonali dalla retta principale."""
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        raise ValueError("orthogonal_residual richiede almeno due punti")
    dev = pts - pts.mean(axis=0)
    a = float(np.mean(dev[:, 0] ** 2))
    b = float(np.mean(dev[:, 0] * dev[:, 1]))
    c = float(np.mean(dev[:, 1] ** 2))
    lam_min = 0.5 * (a + c) - np.hypot(0.5 * (a - c), b)
    return float(np.log(max(len(pts) * lam_min, SSE_FLOOR)))


def convergence_time(trace, stop_epsilon=CONVERGENCE_EPSILON, hold_steps=CONVERGENCE_HOLD):
    """Passi dall'inizio della finestra valida al primo tratto di hold_steps passi tutti fermi; None se mai."""
    rows = trace.post_formation_rows()
    if rows.size == 0:
        return None
    speeds = np.linalg.norm(trace.velocity_array(rows), axis=2)
    still = np.all(speeds < stop_epsilon, axis=1)
    window = deque(maxlen=hold_steps)
    for k, ok in enumerate(still):
        window.append(bool(ok))
        if len(window) == hold_steps and all(window):
            first = rows[k - hold_steps + 1]
            return trace.steps[first] - trace.steps[rows[0]]
    return None


# --- Rete ---

def network_stats(deliveries, joins=None, n_agents=None, mode=FULL_NETWORK):
    """
    PDR empirico per coppia ordinata = successi / tentativi senza collisione.
    Le ricezioni distrutte da trasmissioni concorrenti sono contate a parte.
    """
    successes, attempts = {}, {}
    collisions = 0
    for dl in deliveries:
        if dl.collision:
            collisions += 1
            continue
        key = (dl.src, dl.dst)
        attempts[key] = attempts.get(key, 0) + 1
        successes[key] = successes.get(key, 0) + int(dl.success)
    link_pdr = {k: successes[k] / attempts[k] for k in sorted(attempts)}
    mean_pdr = float(np.mean(list(link_pdr.values()))) if link_pdr else None

    formation = None
    if mode == FULL_NETWORK and joins is not None:
        first = {}
        for ev in joins:
            first.setdefault(ev.agent, ev.asn)
        if n_agents is not None and len(first) == n_agents:
            formation = max(first.values())
    return NetworkStats(link_pdr, dict(sorted(attempts.items())), collisions, formation, mean_pdr)


# --- Statistiche ---

def batch_statistics(values):
    """median/min/max/std (popolazione) sui valori presenti; None se nessuno."""
    vals = np.array([v for v in values if v is not None], dtype=float)
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return {"median": None, "min": None, "max": None, "std": None, "count": 0}
    return {
        "median": float(np.median(vals)),
        "min": float(vals.min()),
        "max": float(vals.max()),
        "std": float(vals.std()),
        "count": int(vals.size),
    }


BATCH_METRICS = ("flock_speed", "formation_residual", "orthogonal_residual",
                 "convergence_steps", "network_formation_steps", "mean_link_pdr")


def batch_summary(summaries):
    record = {"kind": "batch", "trials": len(summaries)}
    for name in BATCH_METRICS:
        record[name] = batch_statistics([getattr(s, name) for s in summaries])
    record["failures"] = sum(1 for s in summaries if s.failure is not None)
    record["convergence_failures"] = sum(1 for s in summaries if s.convergence_steps is None)
    record["degenerate_residuals"] = sum(1 for s in summaries if s.residual_degenerate)
    return record


def summarize_trial(trace, trial, leader_direction, convergence_epsilon=CONVERGENCE_EPSILON,
                    convergence_hold=CONVERGENCE_HOLD, failure=None, mean_link_pdr=None):
    final = trace.final_positions()
    residual = ortho = None
    degenerate = False
    if final is not None and len(final) >= 2:
        residual, degenerate = residual_error(final)
        ortho = orthogonal_residual(final)

    stats = network_stats(trace.deliveries, trace.joins, trace.n_agents, trace.mode)
    formation = trace.formation_asn if trace.mode == FULL_NETWORK else None
    if failure is None and trace.mode == FULL_NETWORK and formation is None:
        failure = "formation_timeout"
    if mean_link_pdr is None:
        mean_link_pdr = stats.mean_pdr

    return TrialSummary(
        trial=trial,
        seed=trace.seed,
        mode=trace.mode,
        flock_speed=flock_speed(trace, leader_direction) if failure is None else 0.0,
        formation_residual=residual,
        orthogonal_residual=ortho,
        residual_degenerate=degenerate,
        convergence_steps=convergence_time(trace, convergence_epsilon, convergence_hold),
        network_formation_steps=formation,
        mean_link_pdr=mean_link_pdr,
        collisions=stats.collisions,
        failure=failure,
    )
