"""Byte-stable run outputs: CSV tables, a JSON-lines event log and a run manifest.

Floats are written with 12 significant digits (``format(x, ".12g")``), keys
are sorted and nothing time-dependent is recorded, so identical runs give
identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, List

from .config import STRATEGY_NAMES
from .engine import TYPE_ORDER, SimResult, SweepRow

_DISC_NAMES = ("disclose", "conceal", "misdirect")
__version_tag__ = "1"


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        s = format(x, ".12g")
        return "0" if s == "-0" else s
    return str(x)


def _round(obj):
    """Floats re-encoded through the fixed format so JSON output is stable too."""
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def _write_csv(path: Path, header: List[str], rows: Iterable[List]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) for x in r])


def population_rows(res: SimResult, thinning: int = 1):
    H = res.horizon
    shares = res.shares
    for t in range(H + 1):
        if t % thinning and t != H:
            continue
        yield ([t] + [int(c) for c in res.counts[t]] + [float(x) for x in shares[t]]
               + [float(x) for x in res.omega[t]])


POPULATION_HEADER = (["episode"] + [f"n_{s}" for s in STRATEGY_NAMES] + [f"pi_{s}" for s in STRATEGY_NAMES]
                     + ["omega_quality", "omega_error_propagation", "omega_capacity"])
AGENT_HEADER = ["agent", "cohort", "user_type", "initial_strategy", "terminal_strategy", "regime", "disclosure",
                "trust", "error_salience", "burden", "payoff", "transitions", "sanctions"]


def agent_rows(res: SimResult):
    for i in range(res.population):
        reg = res.regimes[i]
        yield [i, int(res.agent_cohort[i]), TYPE_ORDER[int(res.agent_type[i])],
               STRATEGY_NAMES[int(res.strategies[0, i])], STRATEGY_NAMES[int(res.strategies[-1, i])],
               reg.value if reg is not None else "none", _DISC_NAMES[int(res.disclosure[i])],
               float(res.signals[i, 0]), float(res.signals[i, 1]), float(res.signals[i, 2]),
               float(res.payoff[i]), int(res.transitions[i]), int(res.sanctions[i])]


def summary(res: SimResult) -> dict:
    from .engine import summary_stats

    cl = res.classification
    regime_counts = {}
    for r in res.regimes:
        key = r.value if r is not None else "none"
        regime_counts[key] = regime_counts.get(key, 0) + 1
    return _round({
        "name": res.name,
        "seed": res.seed,
        "config_hash": res.config_hash,
        "population": res.population,
        "horizon": res.horizon,
        "completed": res.completed,
        "label": cl.label.value if cl else None,
        "predicates": cl.predicates if cl else {},
        "classification_stats": cl.stats if cl else {},
        "cutoffs": cl.cutoffs if cl else {},
        "terminal": summary_stats(res),
        "regime_counts": regime_counts,
        "lockin": res.lockin.as_dict() if res.lockin else None,
        "format_version": __version_tag__,
    })


def write_outputs(res: SimResult, out_dir, thinning: int = 1, events: bool = True) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "population.csv", out / "agents.csv", out / "events.jsonl", out / "summary.json"]
    _write_csv(paths[0], POPULATION_HEADER, population_rows(res, thinning))
    _write_csv(paths[1], AGENT_HEADER, agent_rows(res))
    with open(paths[2], "w") as fh:
        if events:
            for ev in res.events:
                fh.write(json.dumps(_round(ev), sort_keys=True) + "\n")
    paths[3].write_text(json.dumps(summary(res), sort_keys=True, indent=2) + "\n")
    return paths


def write_sweep(rows: List[SweepRow], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pkeys: List[str] = []
    skeys: List[str] = []
    for r in rows:
        pkeys += [k for k in r.params if k not in pkeys]
        skeys += [k for k in r.stats if k not in skeys]
    header = ["point"] + pkeys + ["status", "label"] + skeys + ["error"]
    body = ([r.index] + [r.params.get(k, "") for k in pkeys] + [r.status, r.label or ""]
            + [r.stats.get(k, "") for k in skeys] + [r.error] for r in rows)
    _write_csv(path, header, body)
    return path
