#!/usr/bin/env python3
# ---
# File: benchmark_scala.py
# Directory: utils/
# Ultima Modifica: 2026-10-17
# Versione: 1.10
# ---

"""
SCRIPT: TEMPO PER PASSO IN PROPAGATION_ONLY AL CRESCERE DEGLI AGENTI

Misura il tempo medio di un passo (giro di consegne + controllo +
integrazione) per ogni n e stima l'esponente di crescita con una retta
ai minimi quadrati in scala log-log.

    python utils/benchmark_scala.py [--agenti 250,500,1000,2500] [--passi 3]
"""

import argparse
import logging
import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), ".."))

from sciame.configurazione import config_from_dict, read_config_file  # noqa: E402
from sciame.harness import PropagationSimulation  # noqa: E402

logger = logging.getLogger("benchmark_scala")

SCRIPT_DIR = os.path.dirname(os.path.abspath(__file__))
CONFIG_SCALA = os.path.join(SCRIPT_DIR, "..", "config", "scala.json")

AGENTI_DEFAULT = (250, 500, 1000, 2500)
MAX_SECONDI_1000 = 2.0
MAX_ESPONENTE = 2.3


def tempo_per_passo(n, passi, base):
    data = dict(base)
    data["world.n_agents"] = n
    sim = PropagationSimulation(config_from_dict(data))
    sim.step()  # riscaldamento
    t0 = time.perf_counter()
    for _ in range(passi):
        sim.step()
    return (time.perf_counter() - t0) / passi


def esponente(agenti, tempi):
    slope, _ = np.polyfit(np.log(agenti), np.log(tempi), 1)
    return float(slope)


def main(argv=None):
    parser = argparse.ArgumentParser(description="Benchmark di scala della modalità propagation_only")
    parser.add_argument("--agenti", default=",".join(map(str, AGENTI_DEFAULT)))
    parser.add_argument("--passi", type=int, default=3)
    parser.add_argument("--config", default=CONFIG_SCALA)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    base = read_config_file(args.config)
    agenti = [int(x) for x in args.agenti.split(",")]
    tempi = []
    for n in agenti:
        t = tempo_per_passo(n, args.passi, base)
        tempi.append(t)
        logger.info("⏱️ n=%5d  %.1f ms/passo", n, t * 1000)

    ok = True
    if len(agenti) >= 2:
        k = esponente(agenti, tempi)
        logger.info("ℹ️ Esponente log-log: %.2f (limite %.1f)", k, MAX_ESPONENTE)
        ok &= k <= MAX_ESPONENTE
    if 1000 in agenti:
        t1000 = tempi[agenti.index(1000)]
        ok &= t1000 <= MAX_SECONDI_1000
    logger.info("✅ Scala entro i limiti." if ok else "⚠️ Scala oltre i limiti.")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
