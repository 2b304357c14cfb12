# ---
# File: configurazione.py
# Directory: sciame/
# Ultima Modifica: 2026-10-17
# Versione: 1.30 (Opzioni di spaziatura del flocking)
# ---

"""
CONFIGURAZIONE - documento JSON piatto con chiavi puntate.

Ogni default è una chiave di DEFAULT_CONFIG. Le chiavi mancanti prendono il
default, quelle sconosciute sono rifiutate nominando la chiave, i valori sono
controllati contro il tipo del default (int accettato per float).

V 1.20:
- SCIAME_OUTPUT_DIR sovrascrive harness.output_dir (i flag CLI vincono su entrambi).

V 1.30:
- controller.spacing_ratio e controller.leader_expiry; potential "spacing" e
  alignment "feedforward" tra le scelte ammesse.
"""

import copy
import json
import logging
import os
from dataclasses import dataclass
from typing import Any, Dict

from .control import (ADDITIVE, EMERGENT, EXPLICIT, FEEDFORWARD, IMPLICIT, LEADER_FOLLOWER, MULTIPLICATIVE,
                      ORIGINAL, SINGULARITY_FREE, SPACING, FlockParams, FormationParams)
from .errori import ConfigError
from .mac import Slotframe
from .metrics import FULL_NETWORK, PROPAGATION_ONLY
from .propagation import LinkModel, Variant
from .world import SPAWN_DISK, SPAWN_LINE, WorldConfig

logger = logging.getLogger(__name__)

ENV_OUTPUT_DIR = "SCIAME_OUTPUT_DIR"
SCHEDULABLE_MAX_AGENTS = 100

PER_PACKET = "per_packet"
PER_SLOTFRAME = "per_slotframe"
EVERY_K_SLOTS = "every_k_slots"

FLOCKING = "flocking"
FORMATION = "formation"
NO_CONTROLLER = "none"

DEFAULT_CONFIG: Dict[str, Any] = {
    "mode": FULL_NETWORK,
    "world.n_agents": 10,
    "world.v_max": 30.0,
    "world.dt": None,
    "world.spawn": SPAWN_LINE,
    "world.spacing": 2.0,
    "world.density": 5.0,
    "link_model.variant": Variant.UNIT_DISK.value,
    "link_model.radius": 10.0,
    "link_model.obstacles": [],
    "link_model.tx_power": 0.0,
    "link_model.frequency": 2.4e9,
    "link_model.random_loss_max": 40.0,
    "link_model.resample_displacement": 0.5,
    "link_model.pdr_low_dbm": -97.0,
    "link_model.pdr_high_dbm": -87.0,
    "mac.slotframe_length": None,
    "mac.slot_duration": 0.01,
    "mac.hopping_sequence": list(range(16)),
    "mac.channel_offset": 0,
    "mac.join_timeout": 10000,
    "controller.type": FLOCKING,
    "controller.variant": LEADER_FOLLOWER,
    "controller.potential": SINGULARITY_FREE,
    "controller.r_collision": 0.8,
    "controller.r_flock": 10.0,
    "controller.leader_speed": 10.0,
    "controller.leader_direction": [1.0, 0.0],
    "controller.leader_weight": None,
    "controller.leader_weight_mode": MULTIPLICATIVE,
    "controller.alignment": IMPLICIT,
    "controller.spacing_ratio": 0.7,
    "controller.leader_expiry": False,
    "controller.formation_gain": 1.0,
    "controller.stop_epsilon": 0.01,
    "controller.stale_timeout": 3,
    "control.timing": PER_SLOTFRAME,
    "control.k": 1,
    "harness.horizon": 2000,
    "harness.trials": 10,
    "harness.master_seed": 0,
    "harness.output_dir": "risultati",
    "harness.control_period": 0.1,
    "harness.workers": 1,
    "harness.trace_every": 1,
    "harness.stop_after_formation": False,
    "harness.convergence_epsilon": 1e-3,
    "harness.convergence_hold": 5,
    "log.debug": False,
}

# Tipo delle chiavi con default null
_NULLABLE = {
    "world.dt": float,
    "mac.slotframe_length": int,
    "controller.leader_weight": float,
}

_CHOICES = {
    "mode": (FULL_NETWORK, PROPAGATION_ONLY),
    "world.spawn": (SPAWN_LINE, SPAWN_DISK),
    "link_model.variant": tuple(v.value for v in Variant),
    "controller.type": (FLOCKING, FORMATION, NO_CONTROLLER),
    "controller.variant": (LEADER_FOLLOWER, EMERGENT),
    "controller.potential": (SINGULARITY_FREE, ORIGINAL, SPACING),
    "controller.leader_weight_mode": (MULTIPLICATIVE, ADDITIVE),
    "controller.alignment": (IMPLICIT, EXPLICIT, FEEDFORWARD),
    "control.timing": (PER_PACKET, PER_SLOTFRAME, EVERY_K_SLOTS),
}


def _type_name(t):
    return {float: "numero", int: "intero", bool: "booleano", str: "stringa", list: "lista"}.get(t, t.__name__)


def _check_type(key, value):
    default = DEFAULT_CONFIG[key]
    expected = _NULLABLE.get(key, type(default))
    if value is None:
        if key in _NULLABLE:
            return None
        raise ConfigError(f"{key}: null non ammesso")
    if expected is bool:
        ok = isinstance(value, bool)
    elif expected is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif expected is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    else:
        ok = isinstance(value, expected)
    if not ok:
        raise ConfigError(f"{key}: atteso {_type_name(expected)}, trovato {value!r}")
    if key in _CHOICES and value not in _CHOICES[key]:
        raise ConfigError(f"{key}: valore '{value}' non tra {list(_CHOICES[key])}")
    return value


def _check_obstacles(value):
    try:
        obs = [((float(a[0]), float(a[1])), (float(b[0]), float(b[1]))) for a, b in value]
    except (TypeError, ValueError, IndexError):
        raise ConfigError("link_model.obstacles: attesa lista di segmenti [[x1, y1], [x2, y2]]") from None
    return tuple(obs)


def _check_vector(key, value):
    if len(value) != 2 or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value):
        raise ConfigError(f"{key}: atteso vettore [x, y]")
    return tuple(float(x) for x in value)


def merge_config(data):
    """Default + valori del documento, con controllo di chiavi e tipi."""
    if not isinstance(data, dict):
        raise ConfigError("il documento di configurazione deve essere un oggetto JSON")
    merged = copy.deepcopy(DEFAULT_CONFIG)
    for key in sorted(data):
        if key not in DEFAULT_CONFIG:
            raise ConfigError(f"chiave sconosciuta: '{key}'")
        merged[key] = _check_type(key, data[key])
    return merged


@dataclass(frozen=True)
class ExperimentConfig:
    raw: Dict[str, Any]
    mode: str
    world: WorldConfig
    link_model: LinkModel
    slotframe: Slotframe
    join_timeout: int
    controller_type: str
    flock: FlockParams
    formation: FormationParams
    stale_timeout: int
    control_timing: str
    control_k: int
    horizon: int
    trials: int
    master_seed: int
    output_dir: str
    control_period: float
    workers: int
    trace_every: int
    stop_after_formation: bool
    convergence_epsilon: float
    convergence_hold: int
    debug: bool

    @property
    def n_agents(self):
        return self.world.n_agents

    @property
    def stale_timeout_slots(self):
        """In propagation_only un passo vale una slotframe."""
        if self.mode == PROPAGATION_ONLY:
            return self.stale_timeout
        return self.stale_timeout * self.slotframe.length

    def to_dict(self):
        return dict(sorted(self.raw.items()))


def config_from_dict(data):
    c = merge_config(data)
    n = c["world.n_agents"]
    mode = c["mode"]

    for key in ("world.n_agents", "harness.horizon", "harness.trials", "harness.workers", "harness.trace_every",
                "harness.convergence_hold", "control.k", "controller.stale_timeout", "mac.join_timeout"):
        if c[key] < 1:
            raise ConfigError(f"{key} deve essere >= 1 (trovato {c[key]})")
    if c["harness.master_seed"] < 0:
        raise ConfigError("harness.master_seed deve essere >= 0")
    if not c["harness.control_period"] > 0:
        raise ConfigError("harness.control_period deve essere > 0")
    if c["harness.convergence_epsilon"] < 0:
        raise ConfigError("harness.convergence_epsilon deve essere >= 0")
    if not c["harness.output_dir"]:
        raise ConfigError("harness.output_dir non può essere vuoto")

    slotframe = Slotframe(
        length=c["mac.slotframe_length"] if c["mac.slotframe_length"] is not None else n,
        slot_duration=c["mac.slot_duration"],
        hopping_sequence=tuple(c["mac.hopping_sequence"]),
        channel_offset=c["mac.channel_offset"],
    ).validate()
    if slotframe.length < n:
        raise ConfigError(
            f"vincolo violato: mac.slotframe_length >= world.n_agents ({slotframe.length} < {n})")

    dt = c["world.dt"]
    if dt is None:
        dt = slotframe.slot_duration if mode == FULL_NETWORK else c["harness.control_period"]
    world = WorldConfig(n_agents=n, v_max=c["world.v_max"], dt=dt, spawn=c["world.spawn"],
                        spacing=c["world.spacing"], density=c["world.density"]).validate()

    link_model = LinkModel(
        variant=c["link_model.variant"],
        radius=c["link_model.radius"],
        obstacles=_check_obstacles(c["link_model.obstacles"]),
        tx_power=c["link_model.tx_power"],
        frequency=c["link_model.frequency"],
        random_loss_max=c["link_model.random_loss_max"],
        resample_displacement=c["link_model.resample_displacement"],
        pdr_low_dbm=c["link_model.pdr_low_dbm"],
        pdr_high_dbm=c["link_model.pdr_high_dbm"],
    ).validate()

    weight = c["controller.leader_weight"]
    if weight is None:
        weight = FlockParams.weight_for(n, c["controller.leader_weight_mode"])
    flock = FlockParams(
        r_collision=c["controller.r_collision"],
        r_flock=c["controller.r_flock"],
        leader_speed=c["controller.leader_speed"],
        leader_direction=_check_vector("controller.leader_direction", c["controller.leader_direction"]),
        leader_weight=weight,
        variant=c["controller.variant"],
        potential=c["controller.potential"],
        alignment=c["controller.alignment"],
        spacing_ratio=c["controller.spacing_ratio"],
        leader_expiry=c["controller.leader_expiry"],
    ).validate()
    if flock.leader_speed > world.v_max:
        logger.warning("⚠️ controller.leader_speed %.2f oltre world.v_max %.2f: il leader sarà limitato",
                       flock.leader_speed, world.v_max)
    formation = FormationParams(gain=c["controller.formation_gain"],
                                stop_epsilon=c["controller.stop_epsilon"]).validate()

    if mode == FULL_NETWORK and n > SCHEDULABLE_MAX_AGENTS:
        logger.warning("⚠️ %d agenti in full_network: slotframe da %d slot, schedulabilità a rischio",
                       n, slotframe.length)

    return ExperimentConfig(
        raw=c,
        mode=mode,
        world=world,
        link_model=link_model,
        slotframe=slotframe,
        join_timeout=c["mac.join_timeout"],
        controller_type=c["controller.type"],
        flock=flock,
        formation=formation,
        stale_timeout=c["controller.stale_timeout"],
        control_timing=c["control.timing"],
        control_k=c["control.k"],
        horizon=c["harness.horizon"],
        trials=c["harness.trials"],
        master_seed=c["harness.master_seed"],
        output_dir=c["harness.output_dir"],
        control_period=c["harness.control_period"],
        workers=c["harness.workers"],
        trace_every=c["harness.trace_every"],
        stop_after_formation=c["harness.stop_after_formation"],
        convergence_epsilon=c["harness.convergence_epsilon"],
        convergence_hold=c["harness.convergence_hold"],
        debug=c["log.debug"],
    )


def read_config_file(path):
    if not os.path.exists(path):
        raise ConfigError(f"file di configurazione {path} non trovato")
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"JSON non valido in {path}: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: il documento di configurazione deve essere un oggetto JSON")
    return data


def load_config(path=None, overrides=None, environ=None):
    """File (opzionale) + SCIAME_OUTPUT_DIR + overrides, in quest'ordine."""
    data = read_config_file(path) if path else {}
    env = os.environ if environ is None else environ
    if env.get(ENV_OUTPUT_DIR):
        data["harness.output_dir"] = env[ENV_OUTPUT_DIR]
    if overrides:
        data.update(overrides)
    return config_from_dict(data)


def with_override(config, key, value):
    data = dict(config.raw)
    data[key] = value
    return config_from_dict(data)


def parse_value(text):
    """Valore da riga di comando: JSON se possibile, altrimenti stringa."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def value_label(value):
    if isinstance(value, (list, dict)):
        return json.dumps(value, separators=(",", ":"))
    return str(value)
