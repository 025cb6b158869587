"""Command line interface: simulate, run, filter, estimate-precision.

Every subcommand accepts ``--config FILE`` with ``key = value`` lines named
like the long flags (``reps = 100``, ``fix-truth = true``). Flags given on the
command line override the file, which overrides the built-in defaults.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data_io import format_value, ingest_csv, read_key_values, write_csv, write_key_values
from .errors import RankError, ReplicationError, StageError
from .experiment import run_experiment
from .pipeline import RankConfig, run_rank
from .precision import estimate_precision_nodewise
from .simulate import Dataset, Family, GeneratorSpec, generate


def _bool(text):
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _cap(text):
    value = str(text).strip().lower()
    return value if value in ("log", "none") else int(value)


# key: (type, default) for every setting a config file may carry
SETTINGS = {
    "family": (str, "linear"),
    "n": (int, 400),
    "p": (int, 200),
    "s": (int, 30),
    "rho": (float, 0.0),
    "amp": (float, 3.5),
    "sigma": (float, 1.0),
    "seed": (int, 0),
    "reps": (int, 100),
    "q": (float, 0.2),
    "plus": (_bool, True),
    "split": (_bool, True),
    "precision": (str, "estimate"),
    "workers": (int, 1),
    "fix_truth": (_bool, False),
    "k_n_cap": (_cap, None),
    "h_slices": (int, 5),
    "degree": (int, 3),
    "log_transform": (_bool, False),
    "x": (str, None),
    "y": (str, None),
    "u": (str, None),
    "out": (str, None),
}


def _add(parser, *names):
    for name in names:
        kind, _ = SETTINGS[name]
        flag = "--" + name.replace("_", "-")
        if kind is _bool:
            parser.add_argument(flag, dest=name, action=argparse.BooleanOptionalAction,
                                default=argparse.SUPPRESS)
        else:
            parser.add_argument(flag, dest=name, type=kind, default=argparse.SUPPRESS)


def build_parser():
    parser = argparse.ArgumentParser(prog="rank-knockoffs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate one synthetic dataset as CSV files")
    _add(sim, "family", "n", "p", "s", "rho", "amp", "sigma", "seed", "out")

    run = sub.add_parser("run", help="Monte Carlo FDR / power experiment")
    _add(run, "family", "n", "p", "s", "rho", "amp", "sigma", "seed", "reps", "q", "plus", "split",
         "precision", "workers", "fix_truth", "k_n_cap", "h_slices", "degree", "out")

    flt = sub.add_parser("filter", help="select features on real data from CSV files")
    _add(flt, "x", "y", "u", "family", "q", "plus", "split", "log_transform", "seed", "k_n_cap",
         "h_slices", "degree", "out")

    est = sub.add_parser("estimate-precision", help="nodewise precision estimate of a CSV design")
    _add(est, "x", "log_transform", "seed", "out")

    for p in (sim, run, flt, est):
        p.add_argument("--config", type=Path, default=None, help="key = value settings file")
    return parser


def resolve_settings(args):
    """Defaults, then the config file, then explicit flags."""
    merged = {k: default for k, (_, default) in SETTINGS.items()}
    if args.config is not None:
        for key, raw in read_key_values(args.config).items():
            if key not in SETTINGS:
                raise ValueError(f"{args.config}: unknown setting {key!r}")
            merged[key] = SETTINGS[key][0](raw)
    for key in SETTINGS:
        if hasattr(args, key):
            merged[key] = getattr(args, key)
    return merged


def _require(settings, *keys):
    missing = [k for k in keys if settings[k] is None]
    if missing:
        raise ValueError("missing required setting(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _generator(settings):
    return GeneratorSpec(Family.parse(settings["family"]), settings["n"], settings["p"], settings["s"],
                         settings["rho"], settings["amp"], settings["sigma"], settings["seed"])


def _rank_config(settings, precision=None):
    return RankConfig(
        q_target=settings["q"], plus_variant=settings["plus"], split=settings["split"],
        k_n_cap=settings["k_n_cap"], model_family=settings["family"], seed=settings["seed"],
        precision_mode=precision or settings["precision"], h_slices=settings["h_slices"],
        degree=settings["degree"],
    )


def _write_matrix(path, matrix, names):
    write_csv(path, names, [[format_value(v) for v in row] for row in matrix])


def cmd_simulate(settings):
    _require(settings, "out")
    spec = _generator(settings)
    data = generate(spec)
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    names = [f"x{j + 1}" for j in range(data.p)]
    _write_matrix(out / "x.csv", data.x, names)
    _write_matrix(out / "y.csv", data.y[:, None], ["y"])
    if data.u is not None:
        _write_matrix(out / "u.csv", data.u[:, None], ["u"])
    beta = data.beta if data.beta is not None else np.full(data.p, np.nan)
    write_csv(out / "truth.csv", ("feature", "name", "beta"),
              [[j, names[j], "" if np.isnan(beta[j]) else format_value(beta[j])]
               for j in data.true_support])
    write_key_values(out / "config.txt", {k: settings[k] for k in
                                          ("family", "n", "p", "s", "rho", "amp", "sigma", "seed")})
    print(f"wrote {data.n} x {data.p} {spec.family.value} dataset to {out}")


def cmd_run(settings):
    spec = _generator(settings)
    config = _rank_config(settings)
    summary = run_experiment(spec, config, settings["reps"], settings["workers"], settings["out"],
                             settings["fix_truth"])
    power_text = "n/a" if summary.mean_power is None else f"{summary.mean_power:.4f} (se {summary.se_power:.4f})"
    print(f"replications={len(summary.rows)} FDR={summary.mean_fdr:.4f} (se {summary.se_fdr:.4f}) "
          f"power={power_text} wall={summary.wall_clock:.1f}s")
    if settings["out"]:
        print(f"results in {settings['out']}")


def cmd_filter(settings):
    _require(settings, "x", "y", "out")
    data = ingest_csv(settings["x"], settings["y"], settings["log_transform"])
    if settings["u"] is not None:
        u = ingest_csv(settings["u"]).x
        if u.shape[1] != 1:
            raise ValueError("--u must have exactly one column")
        data = Dataset(data.x, data.y, u[:, 0], column_names=data.column_names)
    record = run_rank(data, _rank_config(settings, precision="estimate"))
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    selected = set(record.selection.selected.tolist())
    write_csv(out / "statistics.csv", ("feature", "name", "w", "in_reduced_model", "selected"),
              [[j, data.column_names[j], format_value(record.stats.w[j]),
                format_value(bool(record.stats.active_mask[j])), format_value(j in selected)]
               for j in range(data.p)])
    write_csv(out / "selected.csv", ("feature", "name", "w"),
              [[j, data.column_names[j], format_value(record.stats.w[j])]
               for j in record.selection.selected])
    echo = {k: settings[k] for k in ("x", "y", "u", "family", "q", "plus", "split", "log_transform",
                                     "seed", "k_n_cap")}
    echo["threshold"] = record.selection.threshold
    echo["reduced_model_size"] = len(record.reduced_model)
    echo["selected_size"] = len(selected)
    write_key_values(out / "config.txt", echo)
    print(f"selected {len(selected)} of {data.p} features (threshold {record.selection.threshold:g}); "
          f"results in {out}")


def cmd_estimate_precision(settings):
    _require(settings, "x", "out")
    data = ingest_csv(settings["x"], None, settings["log_transform"])
    report = estimate_precision_nodewise(data.x, rng=np.random.default_rng(settings["seed"]))
    out = Path(settings["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_matrix(out, report.model.omega, list(data.column_names))
    print(f"wrote {data.p} x {data.p} precision estimate to {out} (diagonal shift {report.repair_shift:g})")


COMMANDS = {
    "simulate": cmd_simulate,
    "run": cmd_run,
    "filter": cmd_filter,
    "estimate-precision": cmd_estimate_precision,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        settings = resolve_settings(args)
        COMMANDS[args.command](settings)
    except (StageError, ReplicationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RankError, ValueError, OSError) as exc:
        stage = "config" if isinstance(exc, ValueError) and not isinstance(exc, RankError) else "input"
        print(f"error: [{stage}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1 if stage == "input" else 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
