"""Command-line pipelines: ingest, synth, calibrate, simulate, stats, pension.

Each run reads a flat INI config (section per subcommand plus [common]),
applies command-line overrides, writes its outputs under --out, and drops
a manifest.json recording the resolved config, its hash, the seed, and
library versions. Outputs are deterministic given config and seed. Exit
codes: 1 config error, 2 data error, 3 estimation error.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
from pathlib import Path

import numpy as np
import pandas as pd
import scipy

from . import __version__, gmm, lsm, pension, stats
from .errors import ConfigError, DataError, EstimationError, ToolkitError
from .ingest import DeflatorSeries, IngestConfig, LogIncomePanel, load_panel, make_transitions
from .model import AgeProfile
from .noise import NoiseSpec
from .simulate import SimConfig, run
from .synthetic import generate_synthetic_panel, smooth_profile, stationary_initial


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip() != "")


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip() != "")


_COMMON_KEYS = {"seed": int, "out": str}

_SCHEMAS: dict[str, dict[str, object]] = {
    "ingest": {
        "input": str,
        "deflator": str,
        "base_year": int,
        "id_col": str,
        "year_col": str,
        "age_col": str,
        "income_col": str,
        "weight_col": str,
        "floor_wage": float,
        "sentinel_codes": _parse_floats,
        "age_topcodes": _parse_ints,
        "age_min": int,
        "age_max": int,
    },
    "synth": {
        "profile": str,
        "a_min": int,
        "a_max": int,
        "q_start": float,
        "q_end": float,
        "target_mean": float,
        "sigma": float,
        "mean_first": float,
        "std_first": float,
        "count_per_age": int,
        "waves": int,
        "start_year": int,
        "inject": _parse_bool,
    },
    "calibrate": {
        "input": str,
        "method": str,
        "bounds": _parse_floats,
        "bootstrap": int,
        "level": float,
        "a_min": int,
        "a_max": int,
    },
    "simulate": {
        "input": str,
        "profile": str,
        "waves": int,
        "injection_age": int,
        "exit_age": int,
    },
    "stats": {
        "input": str,
        "wave": int,
        "age_min": int,
        "age_max": int,
        "income_bins": int,
        "income_lo": float,
        "income_hi": float,
        "normalize": _parse_bool,
    },
    "pension": {
        "input": str,
        "p": float,
        "alpha": float,
        "alphas": _parse_floats,
        "retirement_age": int,
    },
}


def _load_config(path: str | None, command: str) -> dict:
    """Parse the INI file, validating section and key names."""
    merged: dict = {}
    if path is None:
        return merged
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise DataError(f"config file not found: {path}")
    known_sections = {"common", *_SCHEMAS}
    unknown = [s for s in parser.sections() if s not in known_sections]
    if unknown:
        raise ConfigError(f"unknown config sections {unknown}")
    for section, schema in (("common", _COMMON_KEYS), (command, _SCHEMAS[command])):
        if not parser.has_section(section):
            continue
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            try:
                merged[key] = schema[key](raw)  # type: ignore[operator]
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r} in [{section}]: {exc}") from exc
    return merged


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise ConfigError(f"{message}\n{self.format_usage()}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="ageincome", description=__doc__)
    parser.add_argument("--config", help="INI config file")
    parser.add_argument("--seed", type=int, help="random seed")
    parser.add_argument("--out", default=None, help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="clean a survey CSV into a log-income panel")
    p.add_argument("input", nargs="?", help="survey CSV")
    p.add_argument("--deflator", help="deflator CSV (year,index)")

    p = sub.add_parser("synth", help="generate a synthetic panel with known truth")
    p.add_argument("--waves", type=int, help="number of waves")

    p = sub.add_parser("calibrate", help="estimate an age profile from a panel")
    p.add_argument("input", nargs="?", help="panel CSV")
    p.add_argument("--method", choices=("gmm", "lsm"), help="estimation method")
    p.add_argument("--bounds", help="LO,HI bounds on q (lsm)")
    p.add_argument("--bootstrap", type=int, help="bootstrap replicate count (lsm)")

    p = sub.add_parser("simulate", help="evolve a population under a profile")
    p.add_argument("input", nargs="?", help="panel CSV")
    p.add_argument("--profile", help="profile CSV")
    p.add_argument("--waves", type=int, help="number of waves")

    p = sub.add_parser("stats", help="age curves, joint histogram, pyramid")
    p.add_argument("input", nargs="*", help="panel or wave-dump CSVs")

    p = sub.add_parser("pension", help="pension cash-flow balance per wave")
    p.add_argument("input", nargs="*", help="panel or wave-dump CSVs")

    return parser


def _require(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if cfg.get(k) in (None, "")]
    if missing:
        raise ConfigError(f"missing required settings: {missing}")


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg.get("out") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, command: str, cfg: dict, inputs: list[str], outputs: list[str]) -> None:
    """Reproducibility record; paths are reduced to basenames so two runs of
    the same pipeline in different directories emit identical manifests."""

    def _basename(value):
        if isinstance(value, str):
            return Path(value).name
        if isinstance(value, (list, tuple)):
            return [_basename(v) for v in value]
        return value

    path_keys = {"input", "out", "deflator", "profile"}
    resolved = {
        k: (_basename(v) if k in path_keys else v)
        for k, v in sorted(cfg.items())
        if v is not None and k != "out"
    }
    blob = json.dumps(resolved, sort_keys=True, default=str)
    manifest = {
        "command": command,
        "config": resolved,
        "config_hash": hashlib.sha256(blob.encode()).hexdigest(),
        "seed": cfg.get("seed", 0),
        "inputs": [Path(p).name for p in inputs],
        "outputs": outputs,
        "versions": {
            "ageincome": __version__,
            "numpy": np.__version__,
            "pandas": pd.__version__,
            "scipy": scipy.__version__,
            "python": ".".join(str(v) for v in sys.version_info[:3]),
        },
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str))


def _read_panels(paths: list[str]) -> LogIncomePanel:
    if not paths:
        raise ConfigError("no input files given")
    panels = [LogIncomePanel.read_csv(p) for p in paths]
    return LogIncomePanel(
        ids=np.concatenate([np.asarray(p.ids) for p in panels]),
        years=np.concatenate([p.years for p in panels]),
        ages=np.concatenate([p.ages for p in panels]),
        log_income=np.concatenate([p.log_income for p in panels]),
        weights=np.concatenate([p.weights for p in panels]),
    )


def _cmd_ingest(cfg: dict) -> tuple[list[str], list[str]]:
    _require(cfg, "input", "deflator", "base_year", "id_col", "year_col", "age_col", "income_col")
    deflator = DeflatorSeries.from_csv(cfg["deflator"], base_year=cfg["base_year"])
    ingest_cfg = IngestConfig(
        id_col=cfg["id_col"],
        year_col=cfg["year_col"],
        age_col=cfg["age_col"],
        income_col=cfg["income_col"],
        weight_col=cfg.get("weight_col"),
        floor_wage=cfg.get("floor_wage", 0.0),
        sentinel_codes=tuple(cfg.get("sentinel_codes", ())),
        age_topcodes=tuple(cfg.get("age_topcodes", ())),
        age_min=cfg.get("age_min", 15),
        age_max=cfg.get("age_max", 100),
    )
    panel, drops = load_panel(cfg["input"], ingest_cfg, deflator)
    out = _out_dir(cfg)
    panel.write_csv(out / "panel.csv")
    (out / "drops.json").write_text(json.dumps(drops.as_dict(), indent=2, sort_keys=True))
    return [cfg["input"], cfg["deflator"]], ["panel.csv", "drops.json"]


def _cmd_synth(cfg: dict) -> tuple[list[str], list[str]]:
    inputs: list[str] = []
    if cfg.get("profile"):
        profile = AgeProfile.read_csv(cfg["profile"]).require_complete()
        inputs.append(cfg["profile"])
    else:
        _require(cfg, "a_min", "a_max")
        profile = smooth_profile(
            a_min=cfg["a_min"],
            a_max=cfg["a_max"],
            q_start=cfg.get("q_start", 0.2),
            q_end=cfg.get("q_end", 0.9),
            target_mean=cfg.get("target_mean", 10.0),
            sigma=cfg.get("sigma", 0.3),
        )
    initial = stationary_initial(
        profile,
        mean_first=cfg.get("mean_first", cfg.get("target_mean", 10.0)),
        std_first=cfg.get("std_first", 0.5),
        count_per_age=cfg.get("count_per_age", 100),
    )
    result = generate_synthetic_panel(
        profile,
        initial,
        waves=cfg.get("waves", 18),
        noise=NoiseSpec(seed=cfg.get("seed", 0)),
        start_year=cfg.get("start_year", 1),
        inject=cfg.get("inject", True),
    )
    out = _out_dir(cfg)
    result.panel.write_csv(out / "panel.csv")
    result.truth.write_csv(out / "truth_profile.csv")
    return inputs, ["panel.csv", "truth_profile.csv"]


def _cmd_calibrate(cfg: dict) -> tuple[list[str], list[str]]:
    _require(cfg, "input", "method")
    panel = LogIncomePanel.read_csv(cfg["input"])
    out = _out_dir(cfg)
    outputs: list[str] = []
    method = cfg["method"]
    if method == "lsm":
        transitions = make_transitions(panel)
        bounds = cfg.get("bounds")
        if bounds is not None and len(bounds) != 2:
            raise ConfigError("bounds must be LO,HI")
        B = cfg.get("bootstrap", 0)
        if B:
            report = lsm.bootstrap_ci(
                transitions,
                B=B,
                level=cfg.get("level", 0.95),
                noise=NoiseSpec(seed=cfg.get("seed", 0)),
                bounds=bounds,
            )
            report.write_csv(out / "report.csv")
            outputs.append("report.csv")
            profile = report.profile
        else:
            profile = lsm.fit_all(transitions, bounds=bounds).profile
    elif method == "gmm":
        per_wave = [gmm.compute_wave_moments(panel, y) for y in panel.wave_years()]
        pooled = gmm.pool_moments(per_wave)
        result = gmm.estimate_gmm(pooled, a_min=cfg.get("a_min"), a_max=cfg.get("a_max"))
        result.write_diagnostics_json(out / "diagnostics.json")
        outputs.append("diagnostics.json")
        profile = result.profile
    else:
        raise ConfigError(f"unknown method {method!r}")
    profile.write_csv(out / "profile.csv")
    outputs.append("profile.csv")
    return [cfg["input"]], outputs


def _cmd_simulate(cfg: dict) -> tuple[list[str], list[str]]:
    _require(cfg, "input", "profile", "waves")
    panel = LogIncomePanel.read_csv(cfg["input"])
    profile = AgeProfile.read_csv(cfg["profile"]).require_complete()
    sim_cfg = SimConfig(
        waves=cfg["waves"],
        injection_age=cfg.get("injection_age", 25),
        exit_age=cfg.get("exit_age"),
        seed=cfg.get("seed", 0),
    )
    populations = run(panel, profile, sim_cfg)
    out = _out_dir(cfg)
    outputs = []
    for pop in populations:
        name = f"wave_{pop.wave_year:05d}.csv"
        pop.to_panel().write_csv(out / name)
        outputs.append(name)
    return [cfg["input"], cfg["profile"]], outputs


def _cmd_stats(cfg: dict) -> tuple[list[str], list[str]]:
    paths = cfg.get("input") or []
    panel = _read_panels(paths)
    out = _out_dir(cfg)
    stats.age_curves(panel, wave=cfg.get("wave")).write_csv(out / "curves.csv")
    age_edges = stats.default_age_edges(cfg.get("age_min", 15), cfg.get("age_max", 100))
    income_edges = np.linspace(
        cfg.get("income_lo", stats.DEFAULT_INCOME_RANGE[0]),
        cfg.get("income_hi", stats.DEFAULT_INCOME_RANGE[1]),
        cfg.get("income_bins", stats.DEFAULT_INCOME_BINS) + 1,
    )
    hist = stats.jdf(
        panel,
        age_edges=age_edges,
        income_edges=income_edges,
        normalize=cfg.get("normalize", False),
        wave=cfg.get("wave"),
    )
    hist.write_long_csv(out / "jdf.csv")
    hist.write_json(out / "jdf.json")
    stats.pyramid(panel).write_csv(out / "pyramid.csv")
    return list(paths), ["curves.csv", "jdf.csv", "jdf.json", "pyramid.csv"]


def _cmd_pension(cfg: dict) -> tuple[list[str], list[str]]:
    paths = cfg.get("input") or []
    panel = _read_panels(paths)
    out = _out_dir(cfg)
    p = cfg.get("p", pension.DEFAULT_ANNUAL_PENSION)
    retirement_age = cfg.get("retirement_age", 65)
    outputs = []
    if cfg.get("alphas"):
        for alpha, series in pension.sweep_alpha(panel, p, list(cfg["alphas"]), retirement_age):
            name = f"cashflow_{alpha:g}.csv"
            series.write_csv(out / name)
            outputs.append(name)
    else:
        params = pension.PensionParams(
            p=p, alpha=cfg.get("alpha", pension.DEFAULT_CONTRIBUTION_RATE), retirement_age=retirement_age
        )
        pension.cashflow(panel, params).write_csv(out / "cashflow.csv")
        outputs.append("cashflow.csv")
    return list(paths), outputs


_COMMANDS = {
    "ingest": _cmd_ingest,
    "synth": _cmd_synth,
    "calibrate": _cmd_calibrate,
    "simulate": _cmd_simulate,
    "stats": _cmd_stats,
    "pension": _cmd_pension,
}


def _merge_overrides(cfg: dict, args: argparse.Namespace) -> dict:
    """Command-line values win over config-file values."""
    for key in ("seed", "out", "waves", "bootstrap", "deflator", "profile"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if getattr(args, "method", None) is not None:
        cfg["method"] = args.method
    if getattr(args, "bounds", None) is not None:
        cfg["bounds"] = _parse_floats(args.bounds)
    inputs = getattr(args, "input", None)
    if inputs:
        cfg["input"] = inputs
    if isinstance(cfg.get("input"), str) and args.command in ("stats", "pension"):
        cfg["input"] = [s.strip() for s in cfg["input"].split(",")]
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _load_config(args.config, args.command)
        cfg = _merge_overrides(cfg, args)
        try:
            inputs, outputs = _COMMANDS[args.command](cfg)
        except FileNotFoundError as exc:
            raise DataError(f"input file not found: {exc.filename}") from exc
        _write_manifest(_out_dir(cfg), args.command, cfg, inputs, outputs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except EstimationError as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
