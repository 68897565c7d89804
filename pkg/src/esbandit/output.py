"""CSV and JSON writers for experiment results."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import bounds
from .harness import ExperimentResult

FLOAT_FORMAT = "{:.10g}"


def fmt(x: Optional[float]) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return FLOAT_FORMAT.format(float(x))


def jsonable(obj):
    """Convert numpy values and non-finite floats into plain JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dump_json(data, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(jsonable(data), indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, header: list[str], rows: Iterable[list[str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def regret_table(result: ExperimentResult) -> tuple[list[str], list[list[str]]]:
    """Rows indexed by step s = 1..T; mismatch columns hold the measurement taken before action s-1."""
    trace = result.trace
    T = result.config.horizon
    mean_cum, se_cum = trace.mean_cum_regret(), trace.se_cum_regret()
    header = ["step", "mean_cum_regret", "se_cum_regret"]
    measured = bool(trace.mismatch_steps)
    if measured:
        header += ["kl_mismatch", "hellinger_mismatch"]
        kl = dict(zip(trace.mismatch_steps, trace.mean_kl()))
        hel = dict(zip(trace.mismatch_steps, trace.mean_hellinger()))
    es = result.config.agent == "es"
    if es:
        header.append("lemma5_bound")
    curve = result.bound_curve()
    if curve is not None:
        header.append("regret_bound")
    K, M = result.config.build_instance().K, result.config.ensemble_size
    rows = []
    for s in range(1, T + 1):
        row = [str(s), fmt(mean_cum[s - 1]), fmt(se_cum[s - 1])]
        if measured:
            row += [fmt(kl.get(s - 1)), fmt(hel.get(s - 1))]
        if es:
            row.append(fmt(bounds.lemma5_bound(K, s - 1, M)))
        if curve is not None:
            row.append(fmt(curve[s - 1]))
        rows.append(row)
    return header, rows


def result_json(result: ExperimentResult) -> dict:
    return {"config": result.config.to_dict(), "bound_report": result.report.to_dict()}


def write_outputs(result: ExperimentResult, csv_path: Path, json_path: Path) -> None:
    header, rows = regret_table(result)
    write_csv(csv_path, header, rows)
    dump_json(result_json(result), json_path)


def sweep_table(results: dict[int, ExperimentResult]) -> tuple[list[str], list[list[str]]]:
    header = ["step"]
    columns = []
    for M, res in results.items():
        tr = res.trace
        kl = dict(zip(tr.mismatch_steps, tr.mean_kl()))
        hel = dict(zip(tr.mismatch_steps, tr.mean_hellinger()))
        K = res.config.build_instance().K
        header += [f"mean_cum_regret_M{M}", f"kl_mismatch_M{M}", f"hellinger_mismatch_M{M}", f"lemma5_bound_M{M}"]
        columns.append((tr.mean_cum_regret(), kl, hel, K, M))
    T = next(iter(results.values())).config.horizon
    rows = []
    for s in range(1, T + 1):
        row = [str(s)]
        for cum, kl, hel, K, M in columns:
            row += [fmt(cum[s - 1]), fmt(kl.get(s - 1)), fmt(hel.get(s - 1)), fmt(bounds.lemma5_bound(K, s - 1, M))]
        rows.append(row)
    return header, rows


def write_sweep_outputs(results: dict[int, ExperimentResult], csv_path: Path, json_path: Path) -> None:
    header, rows = sweep_table(results)
    write_csv(csv_path, header, rows)
    first = next(iter(results.values()))
    dump_json({"config": first.config.to_dict(),
               "ensemble_sizes": {str(M): res.report.to_dict() for M, res in results.items()}}, json_path)


def read_csv(path: Path) -> dict[str, list[Optional[float]]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols: dict[str, list[Optional[float]]] = {name: [] for name in reader.fieldnames or []}
        for row in reader:
            for name, value in row.items():
                cols[name].append(float(value) if value not in ("", None) else None)
    return cols
