#!/usr/bin/env python3
# ---
# File: simula_sciame.py
# Directory: [root]
# Ultima Modifica: 2026-10-17
# Versione: 1.40 (Sweep e validate)
# ---

"""
SIMULA SCIAME - riga di comando del simulatore.

    python simula_sciame.py run --config config/flocking.json [--trials N] [--seed S] [--out DIR]
    python simula_sciame.py sweep --config config/flocking.json --param controller.r_flock --values 5,10,15,20
    python simula_sciame.py validate --config config/formazione.json

Codici di uscita: 0 ok, 1 errore di configurazione, 2 errore di I/O, 130 interrotto.

V 1.40:
- Aggiunti i sottocomandi sweep e validate.
- --set chiave=valore per sovrascrivere una qualsiasi chiave del file.
"""

import argparse
import json
import logging
import sys

from sciame.configurazione import load_config, parse_value
from sciame.errori import ConfigError, TraceIOError
from sciame.harness import run_batch, run_sweep

logger = logging.getLogger("simula_sciame")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2


def configura_logging(debug=False):
    logging.basicConfig(
        level=logging.DEBUG if debug else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


def parse_values(text):
    """'5,10,15' oppure una lista JSON '[[1,0],[0,1]]'."""
    text = text.strip()
    if text.startswith("["):
        values = parse_value(text)
        if not isinstance(values, list):
            raise ConfigError(f"--values: lista non valida '{text}'")
        return values
    return [parse_value(v.strip()) for v in text.split(",") if v.strip()]


def _overrides(args):
    data = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set richiede chiave=valore (trovato '{item}')")
        data[key.strip()] = parse_value(value)
    if getattr(args, "trials", None) is not None:
        data["harness.trials"] = args.trials
    if getattr(args, "seed", None) is not None:
        data["harness.master_seed"] = args.seed
    if getattr(args, "out", None) is not None:
        data["harness.output_dir"] = args.out
    if getattr(args, "workers", None) is not None:
        data["harness.workers"] = args.workers
    return data


def build_parser():
    parser = argparse.ArgumentParser(description="Simulatore di sciami robotici in rete TSCH")
    parser.add_argument("-v", "--verbose", action="store_true", help="log di debug")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="file JSON di configurazione")
        p.add_argument("--set", action="append", metavar="CHIAVE=VALORE", help="sovrascrive una chiave")

    run = sub.add_parser("run", help="esegue un batch di prove")
    common(run)
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--workers", type=int)

    sweep = sub.add_parser("sweep", help="un batch per ogni valore di un parametro")
    common(sweep)
    sweep.add_argument("--param", required=True, help="chiave puntata da variare")
    sweep.add_argument("--values", required=True, help="valori separati da virgola o lista JSON")
    sweep.add_argument("--trials", type=int)
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--out")
    sweep.add_argument("--workers", type=int)

    validate = sub.add_parser("validate", help="controlla la configurazione senza simulare")
    common(validate)
    return parser


def _log_batch(batch):
    fs = batch["flock_speed"]
    logger.info("ℹ️ Velocità stormo: mediana %s (min %s, max %s)", fs["median"], fs["min"], fs["max"])
    res = batch["formation_residual"]
    if res["count"]:
        logger.info("ℹ️ Residuo formazione: mediana %.4f", res["median"])


def main(argv=None):
    args = build_parser().parse_args(argv)
    configura_logging(args.verbose)
    try:
        config = load_config(args.config, _overrides(args))
        if config.debug:
            configura_logging(True)

        if args.command == "validate":
            logger.info("✅ Configurazione valida: %s", args.config)
            print(json.dumps(config.to_dict(), indent=2, sort_keys=True))
            return EXIT_OK

        if args.command == "run":
            batch = run_batch(config)
            _log_batch(batch)
            return EXIT_OK

        values = parse_values(args.values)
        if not values:
            raise ConfigError("--values non può essere vuoto")
        for batch in run_sweep(config, args.param, values):
            logger.info("ℹ️ %s = %s", args.param, batch["sweep"]["value"])
            _log_batch(batch)
        return EXIT_OK

    except ConfigError as e:
        logger.error("❌ Configurazione non valida: %s", e)
        return EXIT_CONFIG
    except (TraceIOError, OSError) as e:
        logger.error("❌ Errore di I/O: %s", e)
        return EXIT_IO
    except KeyboardInterrupt:
        logger.warning("🛑 Interrotto.")
        return 130


if __name__ == "__main__":
    sys.exit(main())
