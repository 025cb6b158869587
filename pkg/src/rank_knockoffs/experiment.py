"""Monte Carlo driver: many seeded replications of generate + run_rank, and the results store."""

import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data_io import format_value, write_csv, write_key_values
from .errors import ReplicationError
from .pipeline import STAGES, run_rank
from .simulate import generate

ROW_FIELDS = ("replication", "data_seed", "rank_seed", "fdp", "power", "reduced_size",
              "selected_size", "threshold")
SUMMARY_FIELDS = ("replications", "mean_fdr", "se_fdr", "mean_power", "se_power",
                  "mean_reduced_size", "mean_selected_size")


@dataclass(frozen=True)
class ExperimentSummary:
    rows: tuple  # one dict per replication, keys ROW_FIELDS
    mean_fdr: float
    se_fdr: float
    mean_power: float | None
    se_power: float | None
    mean_reduced_size: float
    mean_selected_size: float
    config: dict
    wall_clock: float = field(default=0.0, compare=False)
    stage_seconds: dict = field(default_factory=dict, compare=False)

    def aggregates(self):
        return {name: getattr(self, name) for name in SUMMARY_FIELDS if name != "replications"}


def replication_seeds(seed, replications):
    """``(data_seed, rank_seed)`` per replication from independent SeedSequence children."""
    children = np.random.SeedSequence(seed).spawn(replications)
    return [tuple(int(v) for v in child.generate_state(2)) for child in children]


def _mean_se(values):
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return mean, se


def _run_one(task):
    index, gen_spec, config, data_seed, rank_seed, truth_seed = task
    try:
        data = generate(dataclasses.replace(gen_spec, seed=data_seed), truth_seed=truth_seed)
        record = run_rank(data, dataclasses.replace(config, seed=rank_seed))
    except Exception as exc:
        raise ReplicationError(index, data_seed, exc) from exc
    row = {
        "replication": index,
        "data_seed": data_seed,
        "rank_seed": rank_seed,
        "fdp": record.fdp,
        "power": record.power,
        "reduced_size": int(len(record.reduced_model)),
        "selected_size": int(len(record.selection.selected)),
        "threshold": record.selection.threshold,
    }
    return row, record.timings


def config_echo(gen_spec, config, replications, fix_truth):
    echo = {f"generator.{f.name}": getattr(gen_spec, f.name) for f in dataclasses.fields(gen_spec)}
    for f in dataclasses.fields(config):
        if f.name == "omega0":
            continue
        echo[f"rank.{f.name}"] = getattr(config, f.name)
    echo["replications"] = replications
    echo["fix_truth"] = fix_truth
    return echo


def run_experiment(gen_spec, config, replications, workers=1, out=None, fix_truth=False):
    """Run ``replications`` independent datasets through RANK and aggregate FDR and power.

    Replication ``r`` draws its data and pipeline seeds from child ``r`` of
    ``SeedSequence(gen_spec.seed)``, so results do not depend on ``workers``.
    With ``fix_truth`` the support and coefficients come from ``gen_spec.seed``
    in every replication and only the design and noise are redrawn.
    """
    if replications < 1:
        raise ValueError(f"replications must be >= 1, got {replications}")
    start = time.perf_counter()
    truth_seed = gen_spec.seed if fix_truth else None
    tasks = [(r, gen_spec, config, ds, rs, truth_seed)
             for r, (ds, rs) in enumerate(replication_seeds(gen_spec.seed, replications))]
    if workers > 1 and replications > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, tasks))  # map keeps replication order
    else:
        results = [_run_one(t) for t in tasks]

    rows = tuple(row for row, _ in results)
    stage_seconds = {s: sum(t.get(s, 0.0) for _, t in results) for s in STAGES}
    mean_fdr, se_fdr = _mean_se([r["fdp"] for r in rows])
    powers = [r["power"] for r in rows if r["power"] is not None]
    mean_power, se_power = _mean_se(powers) if powers else (None, None)
    summary = ExperimentSummary(
        rows=rows, mean_fdr=mean_fdr, se_fdr=se_fdr, mean_power=mean_power, se_power=se_power,
        mean_reduced_size=float(np.mean([r["reduced_size"] for r in rows])),
        mean_selected_size=float(np.mean([r["selected_size"] for r in rows])),
        config=config_echo(gen_spec, config, replications, fix_truth),
        wall_clock=time.perf_counter() - start, stage_seconds=stage_seconds,
    )
    if out is not None:
        write_results(summary, out)
    return summary


def write_results(summary, out):
    """Write config.txt, replications.csv, summary.csv and timings.csv into ``out``.

    Everything except timings.csv is a deterministic function of the inputs.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_key_values(out / "config.txt", summary.config)
    write_csv(out / "replications.csv", ROW_FIELDS,
              [[format_value(row[k]) for k in ROW_FIELDS] for row in summary.rows])
    write_csv(out / "summary.csv", SUMMARY_FIELDS,
              [[format_value(len(summary.rows))]
               + [format_value(summary.aggregates()[k]) for k in SUMMARY_FIELDS[1:]]])
    write_csv(out / "timings.csv", ("stage", "seconds"),
              [[s, format_value(v)] for s, v in summary.stage_seconds.items()]
              + [["wall_clock", format_value(summary.wall_clock)]])
    return out
