# ---
# File: propagation.py
# Directory: sciame/
# Ultima Modifica: 2026-10-17
# Versione: 1.21 (Ancore per coppia normalizzata)
# ---

"""
PROPAGAZIONE RF - RSSI e PDR per collegamento.

Cinque modelli: connettività piena, linea di vista, disco unitario,
disco probabilistico (limite inferiore: Friis - random_loss_max) e
casualità sperimentale (Friis - U(0, random_loss_max), ricampionata solo
quando un estremo si sposta più di resample_displacement).

La curva RSSI -> PDR è una "cascata" lineare tra le due soglie
(default -97 / -87 dBm, tipiche di un ricevitore 802.15.4).

V 1.20:
- LinkCache: stato per coppia su matrici simmetriche, aggiornabile per
  tutte le coppie oppure solo per le righe dei trasmettitori dello slot.

V 1.21:
- link_pdr: se la coppia arriva invertita, posizioni e ancore seguono
  l'ordine (min, max) come nella LinkCache.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .errori import ConfigError

logger = logging.getLogger(__name__)

# --- COSTANTI ---
SPEED_OF_LIGHT = 299_792_458.0
MIN_DISTANCE_M = 0.01  # campo vicino non modellato
DEFAULT_TX_POWER_DBM = 0.0
DEFAULT_FREQUENCY_HZ = 2.4e9
DEFAULT_RANDOM_LOSS_MAX_DB = 40.0
DEFAULT_RESAMPLE_DISPLACEMENT_M = 0.5
PDR_LOW_DBM = -97.0
PDR_HIGH_DBM = -87.0


class Variant(str, Enum):
    FULL_CONNECTIVITY = "full_connectivity"
    LINE_OF_SIGHT = "line_of_sight"
    UNIT_DISK = "unit_disk"
    PROBABILISTIC_DISK = "probabilistic_disk"
    EXPERIMENTAL_RANDOMNESS = "experimental_randomness"


@dataclass(frozen=True)
class LinkModel:
    variant: Variant = Variant.UNIT_DISK
    radius: float = 10.0
    obstacles: Tuple = ()
    tx_power: float = DEFAULT_TX_POWER_DBM
    frequency: float = DEFAULT_FREQUENCY_HZ
    random_loss_max: float = DEFAULT_RANDOM_LOSS_MAX_DB
    resample_displacement: float = DEFAULT_RESAMPLE_DISPLACEMENT_M
    pdr_low_dbm: float = PDR_LOW_DBM
    pdr_high_dbm: float = PDR_HIGH_DBM

    def __post_init__(self):
        try:
            object.__setattr__(self, "variant", Variant(self.variant))
        except ValueError:
            raise ConfigError(f"link_model.variant sconosciuto: '{self.variant}'") from None
        object.__setattr__(self, "obstacles", tuple(
            (tuple(map(float, a)), tuple(map(float, b))) for a, b in self.obstacles))

    def validate(self):
        if self.variant is Variant.UNIT_DISK and not self.radius > 0:
            raise ConfigError(f"link_model.radius deve essere > 0 per unit_disk (trovato {self.radius})")
        if self.random_loss_max < 0:
            raise ConfigError(f"link_model.random_loss_max deve essere >= 0 (trovato {self.random_loss_max})")
        if not self.frequency > 0:
            raise ConfigError(f"link_model.frequency deve essere > 0 (trovato {self.frequency})")
        if self.resample_displacement < 0:
            raise ConfigError("link_model.resample_displacement deve essere >= 0")
        if not self.pdr_low_dbm < self.pdr_high_dbm:
            raise ConfigError("link_model.pdr_low_dbm deve essere < link_model.pdr_high_dbm")
        return self


@dataclass
class LinkState:
    pair: Tuple[int, int]
    rssi: float
    pdr: float
    last_sample_position_i: np.ndarray
    last_sample_position_j: np.ndarray
    loss_db: Optional[float] = field(default=None)


# --- Modelli analitici ---

def friis_rssi(distance, tx_power=DEFAULT_TX_POWER_DBM, frequency=DEFAULT_FREQUENCY_HZ):
    """tx_power - 20 log10(4 pi d f / c), con d limitata a MIN_DISTANCE_M."""
    d = np.maximum(distance, MIN_DISTANCE_M)
    rssi = tx_power - 20.0 * np.log10(4.0 * np.pi * d * frequency / SPEED_OF_LIGHT)
    return float(rssi) if np.ndim(rssi) == 0 else rssi


def rssi_to_pdr(rssi, low=PDR_LOW_DBM, high=PDR_HIGH_DBM):
    pdr = np.clip((np.asarray(rssi, dtype=float) - low) / (high - low), 0.0, 1.0)
    return float(pdr) if pdr.ndim == 0 else pdr


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _blocked_many(p, q, obstacles):
    """Per ogni coppia (p_k, q_k): il segmento aperto p->q tocca un ostacolo?"""
    p = np.asarray(p, dtype=float).reshape(-1, 2)
    q = np.asarray(q, dtype=float).reshape(-1, 2)
    blocked = np.zeros(len(p), dtype=bool)
    r = q - p
    rr = np.einsum("ij,ij->i", r, r)
    for a, b in obstacles:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        s = b - a
        ap = a - p
        denom = _cross(r, s)
        side = _cross(ap, r)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = _cross(ap, s) / denom
            u = side / denom
            crossing = (denom != 0) & (t > 0) & (t < 1) & (u >= 0) & (u <= 1)
            # Paralleli: bloccano solo se collineari e sovrapposti all'interno
            t0 = np.einsum("ij,ij->i", a - p, r) / rr
            t1 = np.einsum("ij,ij->i", b - p, r) / rr
        overlap = (denom == 0) & (side == 0) & (rr > 0) & (np.minimum(t0, t1) < 1) & (np.maximum(t0, t1) > 0)
        blocked |= crossing | overlap
    return blocked


def los_blocked(pos_i, pos_j, obstacles):
    if not obstacles:
        return False
    return bool(_blocked_many(pos_i, pos_j, obstacles)[0])


def _moved(anchor, pos, threshold):
    return float(np.linalg.norm(np.asarray(pos, dtype=float) - np.asarray(anchor, dtype=float))) > threshold


def link_pdr(model, pos_i, pos_j, prior=None, rng=None, pair=(0, 1)):
    """Stato del collegamento (i, j) secondo il modello; prior serve solo alla casualità sperimentale."""
    pos_i = np.asarray(pos_i, dtype=float)
    pos_j = np.asarray(pos_j, dtype=float)
    pair = tuple(pair)
    if pair[0] > pair[1]:
        # Ancore nell'ordine della coppia normalizzata
        pair = pair[::-1]
        pos_i, pos_j = pos_j, pos_i
    distance = float(np.linalg.norm(pos_i - pos_j))
    friis = friis_rssi(distance, model.tx_power, model.frequency)
    v = model.variant
    loss = None
    anchor_i, anchor_j = pos_i.copy(), pos_j.copy()

    if v is Variant.FULL_CONNECTIVITY:
        rssi, pdr = friis, 1.0
    elif v is Variant.LINE_OF_SIGHT:
        rssi, pdr = friis, 0.0 if los_blocked(pos_i, pos_j, model.obstacles) else 1.0
    elif v is Variant.UNIT_DISK:
        rssi, pdr = friis, 1.0 if distance <= model.radius else 0.0
    elif v is Variant.PROBABILISTIC_DISK:
        loss = model.random_loss_max
        rssi = friis - loss
        pdr = rssi_to_pdr(rssi, model.pdr_low_dbm, model.pdr_high_dbm)
    else:
        resample = (prior is None or prior.loss_db is None
                    or _moved(prior.last_sample_position_i, pos_i, model.resample_displacement)
                    or _moved(prior.last_sample_position_j, pos_j, model.resample_displacement))
        if resample:
            loss = float(rng.uniform(0.0, model.random_loss_max))
        else:
            loss = prior.loss_db
            anchor_i = np.asarray(prior.last_sample_position_i, dtype=float)
            anchor_j = np.asarray(prior.last_sample_position_j, dtype=float)
        rssi = friis - loss
        pdr = rssi_to_pdr(rssi, model.pdr_low_dbm, model.pdr_high_dbm)
    return LinkState(pair, float(rssi), float(pdr), anchor_i, anchor_j, loss)


# --- Cache per prova ---

class LinkCache:
    """
    RSSI/PDR di tutte le coppie non ordinate, su matrici simmetriche (n, n).

    _anchor[i, j] è la posizione di i all'ultimo campionamento della coppia
    (i, j); la posizione di j allo stesso campionamento è _anchor[j, i].
    """

    def __init__(self, model, n):
        self.model = model.validate()
        self.n = n
        self.rssi = np.full((n, n), -np.inf)
        self.pdr = np.zeros((n, n))
        self._loss = np.full((n, n), np.nan)
        self._anchor = np.zeros((n, n, 2))

    def _pairs(self, rows):
        if rows is None:
            return np.triu_indices(self.n, 1)
        keys = []
        others = np.arange(self.n)
        for r in rows:
            o = others[others != r]
            keys.append(np.minimum(o, r) * self.n + np.maximum(o, r))
        if not keys:
            return np.empty(0, dtype=int), np.empty(0, dtype=int)
        keys = np.unique(np.concatenate(keys))
        return keys // self.n, keys % self.n

    def refresh(self, positions, rng=None, rows=None):
        """Aggiorna tutte le coppie (rows=None) o quelle che toccano gli agenti in rows."""
        I, J = self._pairs(rows)
        if len(I) == 0:
            return
        m = self.model
        pi, pj = positions[I], positions[J]
        distance = np.linalg.norm(pi - pj, axis=1)
        friis = friis_rssi(distance, m.tx_power, m.frequency)
        v = m.variant

        if v is Variant.FULL_CONNECTIVITY:
            rssi, pdr = friis, np.ones(len(I))
        elif v is Variant.LINE_OF_SIGHT:
            rssi, pdr = friis, (~_blocked_many(pi, pj, m.obstacles)).astype(float)
        elif v is Variant.UNIT_DISK:
            rssi, pdr = friis, (distance <= m.radius).astype(float)
        elif v is Variant.PROBABILISTIC_DISK:
            rssi = friis - m.random_loss_max
            pdr = rssi_to_pdr(rssi, m.pdr_low_dbm, m.pdr_high_dbm)
        else:
            loss = self._loss[I, J]
            thr = m.resample_displacement
            resample = (np.isnan(loss)
                        | (np.linalg.norm(pi - self._anchor[I, J], axis=1) > thr)
                        | (np.linalg.norm(pj - self._anchor[J, I], axis=1) > thr))
            if resample.any():
                k = int(resample.sum())
                fresh = rng.uniform(0.0, m.random_loss_max, size=k)
                RI, RJ = I[resample], J[resample]
                loss[resample] = fresh
                self._loss[RI, RJ] = fresh
                self._loss[RJ, RI] = fresh
                self._anchor[RI, RJ] = positions[RI]
                self._anchor[RJ, RI] = positions[RJ]
                logger.debug("🎲 Ricampionate %d coppie", k)
            rssi = friis - loss
            pdr = rssi_to_pdr(rssi, m.pdr_low_dbm, m.pdr_high_dbm)

        self.rssi[I, J] = rssi
        self.rssi[J, I] = rssi
        self.pdr[I, J] = pdr
        self.pdr[J, I] = pdr

    def state(self, i, j):
        a, b = min(i, j), max(i, j)
        loss = self._loss[a, b]
        return LinkState(
            (a, b), float(self.rssi[a, b]), float(self.pdr[a, b]),
            self._anchor[a, b].copy(), self._anchor[b, a].copy(),
            None if np.isnan(loss) else float(loss),
        )

    def mean_pdr(self):
        if self.n < 2:
            return 1.0
        off = ~np.eye(self.n, dtype=bool)
        return float(self.pdr[off].mean())
