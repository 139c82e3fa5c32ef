"""Command-line entry point.

Commands: check, transfer, sweep-b, sweep-r, oracle. Configuration is a
JSON file with unit-suffixed keys (frequencies as plain GHz/MHz values,
multiplied by 2*pi on ingestion; lifetimes in microseconds); every field
has a working-point default, unknown keys are rejected by JSON path.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 equivalence/threshold failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import transfer_time
from .basis import CompositeBasis
from .device import (
    TWO_PI,
    DecoherenceParams,
    DeviceParams,
    apply_breakage,
    check_conditions,
    effective_params,
)
from .dynamics import photon_time_averages
from .errors import CavityWError, ConfigurationError, IntegrationError
from .experiments import (
    SweepPlan,
    SweepResult,
    oracle_equivalence,
    reference_device,
    run_transfer,
    simulation_basis,
    sweep_b,
    sweep_r,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_THRESHOLD = 4

_DEFAULTS = {
    "system": {
        "n": 3,
        "b": 9.0,
        "g1_mhz": None,
        "delta_ghz": None,  # default: -0.5*j GHz
        "omega10_ghz": 6.5,
        "anharmonicity_mhz": -400.0,
        "crosstalk_multiple": 0.01,
        "crosstalk_mhz": None,  # explicit uniform rate, overrides the multiple
        "qutrit_levels": 3,
        "cavity_levels": 2,
        "e_max": 1,
        "r": 1.0,
    },
    "decoherence": {
        "enabled": True,
        "kappa_us": 5.0,
        "gamma_us": 10.0,
        "gamma21_us": 5.0,
        "gamma20_us": 25.0,
        "gamma_phi1_us": 5.0,
        "gamma_phi2_us": 5.0,
    },
    "run": {
        "grid_start": None,
        "grid_stop": None,
        "grid_step": None,
        "crosstalk_multiples": [0.0, 0.01, 0.1],
        "tolerance": 1e-8,
        "samples": 400,
        "workers": 1,
        "snapshots": False,
    },
}

_B_GRID_DEFAULT = (5.0, 15.0, 0.5)
_R_GRID_DEFAULT = (0.85, 1.15, 0.01)


@dataclass(frozen=True)
class RunConfig:
    """Fully-resolved configuration in internal units."""

    system: dict
    decoherence: dict
    run: dict

    def resolved(self) -> dict:
        return {"system": self.system, "decoherence": self.decoherence, "run": self.run}

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.resolved(), sort_keys=True).encode()
        ).hexdigest()[:16]

    # Builders ---------------------------------------------------------------

    def deltas(self) -> tuple[float, ...] | None:
        d = self.system["delta_ghz"]
        if d is None:
            return None
        return tuple(TWO_PI * v * 1e9 for v in d)

    def device(self) -> DeviceParams:
        sys_blk = self.system
        if sys_blk["g1_mhz"] is not None:
            deltas = self.deltas()
            if deltas is None:
                from .experiments import default_detunings

                deltas = default_detunings(sys_blk["n"])
            b = abs(deltas[0]) / (TWO_PI * sys_blk["g1_mhz"] * 1e6)
        else:
            b = sys_blk["b"]
        params = reference_device(
            b,
            sys_blk["n"],
            self.deltas(),
            TWO_PI * sys_blk["omega10_ghz"] * 1e9,
            TWO_PI * sys_blk["anharmonicity_mhz"] * 1e6,
            crosstalk_multiple=0.0,
        )
        if sys_blk["crosstalk_mhz"] is not None:
            params = params.with_uniform_crosstalk(TWO_PI * sys_blk["crosstalk_mhz"] * 1e6)
        elif sys_blk["crosstalk_multiple"] > 0:
            params = params.with_uniform_crosstalk(
                sys_blk["crosstalk_multiple"] * params.g_max
            )
        if sys_blk["r"] != 1.0:
            params = apply_breakage(params, sys_blk["r"])
        return params

    def decoherence_params(self) -> DecoherenceParams:
        d = self.decoherence
        if not d["enabled"]:
            return DecoherenceParams.zero(self.system["n"])
        return DecoherenceParams.from_lifetimes_us(
            self.system["n"],
            kappa_us=d["kappa_us"],
            gamma_us=d["gamma_us"],
            gamma_21_us=d["gamma21_us"],
            gamma_20_us=d["gamma20_us"],
            gamma_phi1_us=d["gamma_phi1_us"],
            gamma_phi2_us=d["gamma_phi2_us"],
        )

    def basis(self) -> CompositeBasis:
        s = self.system
        return simulation_basis(s["n"], s["qutrit_levels"], s["cavity_levels"], s["e_max"])

    def grid(self, default: tuple[float, float, float]) -> tuple[float, ...]:
        r = self.run
        start = r["grid_start"] if r["grid_start"] is not None else default[0]
        stop = r["grid_stop"] if r["grid_stop"] is not None else default[1]
        step = r["grid_step"] if r["grid_step"] is not None else default[2]
        if step <= 0 or stop < start:
            raise ConfigurationError("run.grid: need step > 0 and stop >= start")
        vals = np.arange(start, stop + step / 2, step)
        if vals.size == 0:
            raise ConfigurationError("run.grid resolves to an empty grid")
        return tuple(float(v) for v in vals)

    def sweep_plan(self, variable: str) -> SweepPlan:
        s, r = self.system, self.run
        dec = self.decoherence
        if dec["enabled"]:
            rates = tuple(
                1.0 / (dec[k] * 1e-6)
                for k in ("kappa_us", "gamma_us", "gamma21_us", "gamma20_us", "gamma_phi1_us", "gamma_phi2_us")
            )
        else:
            rates = (0.0,) * 6
        if variable == "b":
            grid = self.grid(_B_GRID_DEFAULT)
            multiples = tuple(r["crosstalk_multiples"])
        else:
            grid = self.grid(_R_GRID_DEFAULT)
            multiples = (s["crosstalk_multiple"],)
        return SweepPlan(
            variable=variable,
            grid=grid,
            n=s["n"],
            deltas=self.deltas(),
            omega10=TWO_PI * s["omega10_ghz"] * 1e9,
            anharmonicity=TWO_PI * s["anharmonicity_mhz"] * 1e6,
            crosstalk_multiples=multiples,
            base_b=s["b"],
            rates=rates,
            qutrit_levels=s["qutrit_levels"],
            cavity_levels=s["cavity_levels"],
            e_max=s["e_max"],
            tol=r["tolerance"],
            n_samples=r["samples"],
        )


def _merge_block(name: str, given: dict, defaults: dict) -> dict:
    out = dict(defaults)
    for key, val in given.items():
        if key not in defaults:
            raise ConfigurationError(f"unknown config key {name}.{key}")
        out[key] = val
    return out


def _validate(cfg: RunConfig):
    s, d, r = cfg.system, cfg.decoherence, cfg.run
    if not isinstance(s["n"], int) or s["n"] < 1:
        raise ConfigurationError("system.n must be a positive integer")
    if s["b"] is not None and s["b"] <= 1:
        raise ConfigurationError("system.b must be > 1")
    if s["delta_ghz"] is not None:
        if len(s["delta_ghz"]) != s["n"]:
            raise ConfigurationError("system.delta_ghz must list one detuning per cavity pair")
    if s["crosstalk_multiple"] < 0:
        raise ConfigurationError("system.crosstalk_multiple must be >= 0")
    if s["r"] <= 0:
        raise ConfigurationError("system.r must be > 0")
    if s["e_max"] is not None and s["e_max"] < 1:
        raise ConfigurationError("system.e_max must be >= 1 (or null for unrestricted)")
    for key in ("kappa_us", "gamma_us", "gamma21_us", "gamma20_us", "gamma_phi1_us", "gamma_phi2_us"):
        if d[key] <= 0:
            raise ConfigurationError(f"decoherence.{key} must be a positive lifetime in us")
    if not 1e-14 < r["tolerance"] < 1e-3:
        raise ConfigurationError("run.tolerance must lie in (1e-14, 1e-3)")
    if r["samples"] < 2:
        raise ConfigurationError("run.samples must be >= 2")
    if r["workers"] < 1:
        raise ConfigurationError("run.workers must be >= 1")
    if any(m < 0 for m in r["crosstalk_multiples"]):
        raise ConfigurationError("run.crosstalk_multiples must be >= 0")


def parse_config(path: str | os.PathLike | None) -> RunConfig:
    """Load, default-fill, and validate a JSON config file."""
    raw = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigurationError(f"config file not found: {p}")
        try:
            raw = json.loads(p.read_text())
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"config is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be a JSON object")
    for blk in raw:
        if blk not in _DEFAULTS:
            raise ConfigurationError(f"unknown config block {blk!r}")
    cfg = RunConfig(
        system=_merge_block("system", raw.get("system", {}), _DEFAULTS["system"]),
        decoherence=_merge_block("decoherence", raw.get("decoherence", {}), _DEFAULTS["decoherence"]),
        run=_merge_block("run", raw.get("run", {}), _DEFAULTS["run"]),
    )
    _validate(cfg)
    return cfg


# Artifact emission ----------------------------------------------------------


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("CAVITYW_OUT") or "cavityw-out"
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_manifest(out: Path, command: str, cfg: RunConfig, artifacts: list[str], extra=None):
    manifest = {
        "tool": "cavityw",
        "version": __version__,
        "command": command,
        "config_hash": cfg.config_hash(),
        "resolved_config": cfg.resolved(),
        "artifacts": artifacts,
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _sweep_csv(path: Path, result: SweepResult, cavity_order: list[str]):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            [result.variable, "F", "F2", "t_transfer_us"]
            + [f"photon_mean_{c}" for c in cavity_order]
            + ["conditions_ok", "wall_ms"]
        )
        for rec in result.records:
            w.writerow(
                [
                    f"{rec.value:.10g}",
                    f"{rec.fidelity:.12g}",
                    f"{rec.fidelity_sq:.12g}",
                    f"{rec.t_transfer * 1e6:.10g}",
                ]
                + [f"{rec.photon_means[c]:.6g}" for c in cavity_order]
                + [int(rec.conditions_ok), f"{rec.wall_ms:.1f}"]
            )


def _plot_sweep_csvs(csv_files: list[tuple[str, Path]], out_svg: Path, xlabel: str):
    """Plot sweep curves from the emitted CSVs (never from memory)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, path in csv_files:
        xs, ys = [], []
        with path.open() as fh:
            rows = csv.reader(fh)
            next(rows)
            for row in rows:
                xs.append(float(row[0]))
                ys.append(float(row[1]))
        ax.plot(xs, ys, marker="o", markersize=3, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("fidelity")
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_svg, format="svg")
    plt.close(fig)


# Commands -------------------------------------------------------------------


def _cmd_check(cfg: RunConfig, args) -> int:
    out = _out_dir(args)
    params = cfg.device()
    report = check_conditions(params)
    print(report.describe())
    (out / "conditions.json").write_text(json.dumps(report.to_dict(), indent=2))
    _write_manifest(out, "check", cfg, ["conditions.json"])
    return EXIT_OK


def _cmd_transfer(cfg: RunConfig, args) -> int:
    out = _out_dir(args)
    params = cfg.device()
    basis = cfg.basis()
    r = cfg.system["r"]
    if r != 1.0:
        # horizon pinned to the unbroken transfer time
        base_params = RunConfig(
            system={**cfg.system, "r": 1.0},
            decoherence=cfg.decoherence,
            run=cfg.run,
        ).device()
        t_star = transfer_time(effective_params(base_params))
        result, _ = run_transfer(
            params,
            cfg.decoherence_params(),
            basis,
            tol=cfg.run["tolerance"],
            n_samples=cfg.run["samples"],
            horizon=t_star,
            t_transfer_override=t_star,
        )
    else:
        result, t_star = run_transfer(
            params,
            cfg.decoherence_params(),
            basis,
            tol=cfg.run["tolerance"],
            n_samples=cfg.run["samples"],
        )
    cavities = params.cavities
    trace_path = out / "trace.csv"
    with trace_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_us", "F", "F2"] + [f"photon_{c}" for c in cavities])
        for i, t in enumerate(result.times):
            w.writerow(
                [f"{t * 1e6:.8g}", f"{result.fidelity[i]:.12g}", f"{result.fidelity[i]**2:.12g}"]
                + [f"{result.photons[c][i]:.6g}" for c in cavities]
            )
    means = photon_time_averages(result)
    _write_manifest(
        out,
        "transfer",
        cfg,
        ["trace.csv"],
        extra={
            "final_fidelity": float(result.fidelity[-1]),
            "t_transfer_us": t_star * 1e6,
            "photon_means": means,
            "integrator": dataclasses.asdict(result.stats),
        },
    )
    print(f"F = {result.fidelity[-1]:.4f} at t_transfer = {t_star * 1e6:.4f} us")
    return EXIT_OK


def _cmd_sweep_b(cfg: RunConfig, args) -> int:
    out = _out_dir(args)
    plan = cfg.sweep_plan("b")
    results = sweep_b(plan, workers=cfg.run["workers"])
    from .device import cavity_labels

    cavities = cavity_labels(plan.n)
    artifacts, series = [], []
    for res in results:
        name = f"sweep_b_ct{res.crosstalk_multiple:g}.csv"
        _sweep_csv(out / name, res, cavities)
        artifacts.append(name)
        series.append((f"crosstalk {res.crosstalk_multiple:g} g_max", out / name))
    _plot_sweep_csvs(series, out / "sweep_b.svg", "normalized detuning b")
    artifacts.append("sweep_b.svg")
    _write_manifest(out, "sweep-b", cfg, artifacts)
    print(f"wrote {', '.join(artifacts)} to {out}")
    return EXIT_OK


def _cmd_sweep_r(cfg: RunConfig, args) -> int:
    out = _out_dir(args)
    plan = cfg.sweep_plan("r")
    result = sweep_r(plan, workers=cfg.run["workers"])
    from .device import cavity_labels

    name = "sweep_r.csv"
    _sweep_csv(out / name, result, cavity_labels(plan.n))
    _plot_sweep_csvs([(f"b={plan.base_b:g}", out / name)], out / "sweep_r.svg", "breakage ratio r")
    _write_manifest(out, "sweep-r", cfg, [name, "sweep_r.svg"])
    print(f"wrote {name}, sweep_r.svg to {out}")
    return EXIT_OK


def _cmd_oracle(cfg: RunConfig, args) -> int:
    out = _out_dir(args)
    report = oracle_equivalence(b=cfg.system["b"], tol=min(cfg.run["tolerance"], 1e-9))
    payload = dataclasses.asdict(report)
    (out / "oracle.json").write_text(json.dumps(payload, indent=2))
    _write_manifest(out, "oracle", cfg, ["oracle.json"], extra={"oracle": payload})
    for key, val in payload.items():
        print(f"{key}: {val}")
    return EXIT_OK if report.passed else EXIT_THRESHOLD


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavityw",
        description="Coupler-mediated W-state transfer: diagnostics, simulation, sweeps.",
    )
    parser.add_argument("--version", action="version", version=f"cavityw {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("check", "report the parameter matching conditions"),
        ("transfer", "run one lossy transfer and report fidelity"),
        ("sweep-b", "fidelity versus normalized detuning"),
        ("sweep-r", "fidelity versus breakage ratio"),
        ("oracle", "small-instance integrator equivalence checks"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file (defaults used if omitted)")
        p.add_argument("--out", help="output directory (default $CAVITYW_OUT or ./cavityw-out)")
        p.add_argument("--workers", type=int, help="parallel sweep workers")
        p.add_argument("--tol", type=float, help="integrator relative tolerance")
    return parser


_COMMANDS = {
    "check": _cmd_check,
    "transfer": _cmd_transfer,
    "sweep-b": _cmd_sweep_b,
    "sweep-r": _cmd_sweep_r,
    "oracle": _cmd_oracle,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.workers is not None:
            cfg = RunConfig(cfg.system, cfg.decoherence, {**cfg.run, "workers": args.workers})
        if args.tol is not None:
            cfg = RunConfig(cfg.system, cfg.decoherence, {**cfg.run, "tolerance": args.tol})
        _validate(cfg)
        return _COMMANDS[args.command](cfg, args)
    except ConfigurationError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except CavityWError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
