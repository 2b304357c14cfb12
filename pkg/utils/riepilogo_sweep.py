#!/usr/bin/env python3
# ---
# File: riepilogo_sweep.py
# Directory: utils/
# Ultima Modifica: 2026-10-17
# Versione: 1.00
# ---

"""
SCRIPT: RACCOGLIE I RECORD DI BATCH DI UNO SWEEP IN UNA TABELLA CSV

Legge <out>/<chiave>=<valore>/summary.jsonl e scrive una riga per valore,
pronta per i grafici (mediana, min, max, std di ogni metrica).

    python utils/riepilogo_sweep.py risultati/flocking [--out riepilogo.csv]
"""

import argparse
import logging
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), ".."))

from sciame.metrics import BATCH_METRICS  # noqa: E402
from sciame.tracce import SUMMARY_FILE, read_summary  # noqa: E402

logger = logging.getLogger("riepilogo_sweep")

STATISTICHE = ("median", "min", "max", "std")


def intestazione():
    cols = ["key", "value", "trials", "failures"]
    cols += [f"{m}_{s}" for m in BATCH_METRICS for s in STATISTICHE]
    return ",".join(cols) + "\n"


def _cella(x):
    return "" if x is None else repr(x) if isinstance(x, float) else str(x)


def raccogli(cartella):
    """Righe (chiave, valore, record di batch) ordinate per nome di cartella."""
    righe = []
    for nome in sorted(os.listdir(cartella)):
        path = os.path.join(cartella, nome, SUMMARY_FILE)
        if "=" not in nome or not os.path.exists(path):
            continue
        records = [r for r in read_summary(path) if r.get("kind") == "batch"]
        if not records:
            logger.warning("⚠️ Nessun record di batch in %s", path)
            continue
        key, _, value = nome.partition("=")
        righe.append((key, value, records[-1]))
    return righe


def scrivi_tabella(righe, path):
    with open(path, "w") as f:
        f.write(intestazione())
        for key, value, rec in righe:
            celle = [key, value, str(rec["trials"]), str(rec["failures"])]
            for m in BATCH_METRICS:
                stats = rec.get(m, {})
                celle += [_cella(stats.get(s)) for s in STATISTICHE]
            f.write(",".join(celle) + "\n")


def main(argv=None):
    parser = argparse.ArgumentParser(description="Riepilogo CSV di uno sweep")
    parser.add_argument("cartella")
    parser.add_argument("--out", default=None)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    righe = raccogli(args.cartella)
    if not righe:
        logger.error("❌ Nessuno sweep trovato in %s", args.cartella)
        return 1
    out = args.out or os.path.join(args.cartella, "riepilogo.csv")
    scrivi_tabella(righe, out)
    logger.info("✅ %d righe scritte in %s", len(righe), out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
