# ---
# File: tracce.py
# Directory: sciame/
# Ultima Modifica: 2026-10-17
# Versione: 1.10 (Frequenza di salvataggio)
# ---

"""
TRACCE - file di uscita di prove e batch.

    <out>/config.json
    <out>/summary.jsonl            una riga per prova + una riga di batch
    <out>/trial_XXXX/trace.csv     step,agent,x,y,vx,vy
    <out>/trial_XXXX/deliveries.csv
    <out>/trial_XXXX/joins.csv

Nessun timestamp nei file: stessa configurazione e stesso seme danno gli
stessi byte.
"""

import json
import logging
import os

import numpy as np

from .errori import TraceIOError

logger = logging.getLogger(__name__)

TRACE_HEADER = "step,agent,x,y,vx,vy\n"
DELIVERIES_HEADER = "asn,src,dst,success,collision,rssi,channel\n"
JOINS_HEADER = "asn,agent\n"
SUMMARY_FILE = "summary.jsonl"
CONFIG_FILE = "config.json"


def trial_dir(out_dir, trial):
    return os.path.join(out_dir, f"trial_{trial:04d}")


def _num(x):
    return repr(float(x))


def write_trace_csv(path, trace, every=1):
    rows = range(0, len(trace), every)
    with open(path, "w", newline="") as f:
        f.write(TRACE_HEADER)
        ids = np.arange(trace.n_agents)
        for r in rows:
            step = trace.steps[r]
            block = np.column_stack([ids, trace.positions[r], trace.velocities[r]])
            for row in block:
                f.write(f"{step},{int(row[0])},{_num(row[1])},{_num(row[2])},{_num(row[3])},{_num(row[4])}\n")


def write_deliveries_csv(path, deliveries):
    with open(path, "w", newline="") as f:
        f.write(DELIVERIES_HEADER)
        for dl in deliveries:
            f.write(f"{dl.asn},{dl.src},{dl.dst},{int(dl.success)},{int(dl.collision)},"
                    f"{_num(dl.rssi)},{dl.channel}\n")


def write_joins_csv(path, joins):
    with open(path, "w", newline="") as f:
        f.write(JOINS_HEADER)
        for ev in joins:
            f.write(f"{ev.asn},{ev.agent}\n")


def write_trial_files(out_dir, trial, trace, every=1):
    d = trial_dir(out_dir, trial)
    try:
        os.makedirs(d, exist_ok=True)
        write_trace_csv(os.path.join(d, "trace.csv"), trace, every)
        write_deliveries_csv(os.path.join(d, "deliveries.csv"), trace.deliveries)
        write_joins_csv(os.path.join(d, "joins.csv"), trace.joins)
    except OSError as e:
        raise TraceIOError(f"scrittura tracce in {d} fallita: {e}") from e
    logger.debug("💾 Tracce della prova %d in %s", trial, d)
    return d


def dumps_record(record):
    return json.dumps(record, sort_keys=True)


def write_summary(out_dir, trial_records, batch_record):
    path = os.path.join(out_dir, SUMMARY_FILE)
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(path, "w") as f:
            for rec in trial_records:
                f.write(dumps_record(rec) + "\n")
            f.write(dumps_record(batch_record) + "\n")
    except OSError as e:
        raise TraceIOError(f"scrittura {path} fallita: {e}") from e
    return path


def write_config_echo(out_dir, config_dict):
    path = os.path.join(out_dir, CONFIG_FILE)
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(path, "w") as f:
            json.dump(config_dict, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise TraceIOError(f"scrittura {path} fallita: {e}") from e
    return path


def read_summary(path):
    try:
        with open(path, "r") as f:
            return [json.loads(line) for line in f if line.strip()]
    except OSError as e:
        raise TraceIOError(f"lettura {path} fallita: {e}") from e
