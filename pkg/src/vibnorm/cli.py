"""Command line front end: config ingestion, sweeps, CSV reports, timing.

``run`` executes a damper-position x viscosity x horizon sweep in fast,
reference or both modes and writes a CSV plus a human-readable summary;
``bench`` additionally reports per-position speedups.  The effective
viscosity of a norm-vs-viscosity curve (smallest viscosity at which the value
has dropped below drop_factor times its small-viscosity level) lives here as
well, since it is a reporting notion rather than a norm primitive.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field

import jsonschema

from .engine import NormProblem, horizon_sweep, norm_fast, offline
from .model import ModalSystem, modal_transform, system_from_json
from .oracle import norm_reference
from .quad import QuadratureSpec

THREADS_ENV_VAR = "VIBNORM_THREADS"

CSV_COLUMNS = [
    "position",
    "viscosity",
    "T",
    "fast_value",
    "ref_value",
    "rel_err",
    "fast_ms",
    "ref_ms",
    "inner_nodes_max",
    "adaptive_depth_max",
]

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["system", "problem", "quadrature", "sweep"],
    "additionalProperties": False,
    "properties": {
        "system": {"type": "object", "required": ["type"], "properties": {"type": {"type": "string"}}},
        "problem": {
            "type": "object",
            "additionalProperties": False,
            "required": ["p"],
            "properties": {
                "p": {"type": "number", "minimum": 0, "maximum": 1},
                "r": {"type": "integer", "minimum": 1},
                "r_percent": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "T": {"type": "number", "exclusiveMinimum": 0},
                "T_list": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
        "quadrature": {
            "type": "object",
            "additionalProperties": False,
            "required": ["tol", "tol_s", "n_t", "n_1", "s1_fraction", "b0", "b_max"],
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "tol_s": {"type": "number", "exclusiveMinimum": 0},
                "n_t": {"type": "integer", "minimum": 1},
                "n_1": {"type": "integer", "minimum": 3},
                "s1_fraction": {"type": "number", "exclusiveMinimum": 0},
                "b0": {"type": "integer", "minimum": 1},
                "b_max": {"type": "integer", "minimum": 1},
                "gamma_margin": {"type": "number", "minimum": 1},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["viscosities", "positions"],
            "properties": {
                "viscosities": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "number", "minimum": 0},
                },
                "positions": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
            },
        },
        "mode": {"enum": ["fast", "reference", "both"]},
        "output": {"type": "string"},
        "threads": {"type": "integer", "minimum": 1},
        "drop_factor": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    },
}


class ConfigError(ValueError):
    """Configuration failed schema or semantic validation."""


@dataclass(frozen=True)
class RunConfig:
    """Validated run description: system family, norm problem, quadrature
    knobs, sweep axes and execution options."""

    system: dict
    p: float
    r: int | None
    r_percent: float | None
    horizons: tuple
    tol: float
    tol_s: float
    n_t: int
    n_1: int
    s1_fraction: float
    b0: int
    b_max: int
    gamma_margin: float
    viscosities: tuple
    positions: tuple
    mode: str
    output: str
    threads: int
    drop_factor: float

    def resolve_r(self, n: int) -> int:
        r = self.r if self.r is not None else max(1, round(n * self.r_percent))
        if not 1 <= r <= n:
            raise ConfigError(f"resolved r={r} is outside 1..{n}")
        return r

    def quadrature_spec(self, modal: ModalSystem) -> QuadratureSpec:
        gamma_max = self.gamma_margin * max(self.viscosities) * modal.gamma_per_viscosity
        return QuadratureSpec(
            tol=self.tol,
            tol_s=self.tol_s,
            n_t=self.n_t,
            n_1=self.n_1,
            S1=self.s1_fraction * modal.omega_max,
            b0=self.b0,
            b_max=self.b_max,
            gamma_max=gamma_max,
        )


@dataclass
class SweepRow:
    """One (position, viscosity, T) cell of a sweep report.

    Values that were not computed (mode-dependent or failed) are None; a
    failed cell carries the error message instead.
    """

    position: int
    viscosity: float
    T: float
    fast_value: float | None = None
    ref_value: float | None = None
    rel_err: float | None = None
    fast_ms: float | None = None
    ref_ms: float | None = None
    inner_nodes_max: int | None = None
    adaptive_depth_max: int | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class SweepReport:
    config: RunConfig
    rows: list = field(default_factory=list)
    offline_ms: dict = field(default_factory=dict)  # per position

    @property
    def ok(self) -> bool:
        return all(row.ok for row in self.rows)


def load_config(source, overrides: dict | None = None) -> RunConfig:
    """Parse and validate a JSON config (dict, JSON string or file path)."""
    if isinstance(source, dict):
        raw = dict(source)
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            raw = json.loads(text)
        else:
            with open(text, encoding="utf-8") as fh:
                raw = json.load(fh)
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {path}: {exc.message}") from exc

    prob = raw["problem"]
    if ("r" in prob) == ("r_percent" in prob):
        raise ConfigError("problem needs exactly one of r, r_percent")
    if ("T" in prob) == ("T_list" in prob):
        raise ConfigError("problem needs exactly one of T, T_list")
    horizons = tuple(prob.get("T_list", [prob.get("T")]))
    quad = raw["quadrature"]
    if quad["n_1"] % 2 == 0:
        raise ConfigError("quadrature n_1 must be odd")
    viscosities = tuple(raw["sweep"]["viscosities"])
    if list(viscosities) != sorted(viscosities):
        raise ConfigError("sweep viscosities must be sorted ascending")
    if max(viscosities) <= 0:
        raise ConfigError("at least one viscosity must be positive")
    return RunConfig(
        system=raw["system"],
        p=float(prob["p"]),
        r=prob.get("r"),
        r_percent=prob.get("r_percent"),
        horizons=horizons,
        tol=float(quad["tol"]),
        tol_s=float(quad["tol_s"]),
        n_t=int(quad["n_t"]),
        n_1=int(quad["n_1"]),
        s1_fraction=float(quad["s1_fraction"]),
        b0=int(quad["b0"]),
        b_max=int(quad["b_max"]),
        gamma_margin=float(quad.get("gamma_margin", 1.0)),
        viscosities=viscosities,
        positions=tuple(raw["sweep"]["positions"]),
        mode=raw.get("mode", "both"),
        output=raw.get("output", "."),
        threads=int(raw.get("threads", 1)),
        drop_factor=float(raw.get("drop_factor", 0.5)),
    )


def _system_at_position(system_cfg: dict, position: int) -> dict:
    cfg = dict(system_cfg)
    kind = cfg.get("type")
    if kind == "example1":
        cfg["damper_index"] = position
    elif kind == "example3":
        cfg["damper_i"] = position
    # explicit systems carry their own damper vector; position is a label only
    return cfg


def effective_viscosity(curve, drop_factor: float = 0.5):
    """Smallest viscosity whose value is <= drop_factor times the value at the
    smallest viscosity; None when the curve never drops that far.

    ``curve`` is a sorted list of (viscosity, value) pairs; values may be
    floats or NormValue objects.
    """
    if not 0.0 < drop_factor < 1.0:
        raise ValueError("drop_factor must lie in (0, 1)")
    if len(curve) < 2:
        raise ValueError("curve needs at least two points")
    vs = [v for v, _ in curve]
    if vs != sorted(vs):
        raise ValueError("curve must be sorted by viscosity")
    vals = [getattr(val, "value", val) for _, val in curve]
    threshold = drop_factor * vals[0]
    for v, val in zip(vs, vals):
        if val <= threshold:
            return v
    return None


def run(config: RunConfig) -> SweepReport:
    """Execute the configured sweep; one offline pass per (position, T)."""
    report = SweepReport(config=config)
    for position in config.positions:
        try:
            modal = modal_transform(system_from_json(_system_at_position(config.system, position)))
            r = config.resolve_r(modal.n)
            spec = config.quadrature_spec(modal)
        except Exception as exc:  # configuration-level failure: every cell errors
            for v in config.viscosities:
                for T in config.horizons:
                    report.rows.append(SweepRow(position=position, viscosity=v, T=T, error=str(exc)))
            continue

        if config.mode in ("fast", "both"):
            t0 = time.perf_counter()
            tables = {T: offline(modal, NormProblem(p=config.p, r=r, T=T), spec) for T in config.horizons}
            report.offline_ms[position] = 1e3 * (time.perf_counter() - t0)

        for v in config.viscosities:
            fast_by_T = {}
            fast_err = None
            if config.mode in ("fast", "both"):
                try:
                    if len(config.horizons) > 1:
                        t0 = time.perf_counter()
                        values = horizon_sweep(
                            modal,
                            NormProblem(p=config.p, r=r, T=config.horizons[0]),
                            spec,
                            v,
                            config.horizons,
                            threads=config.threads,
                        )
                        ms_each = 1e3 * (time.perf_counter() - t0) / len(config.horizons)
                        fast_by_T = {T: (nv, ms_each) for T, nv in zip(config.horizons, values)}
                    else:
                        T = config.horizons[0]
                        t0 = time.perf_counter()
                        nv = norm_fast(modal, NormProblem(p=config.p, r=r, T=T), spec, tables[T], v, threads=config.threads)
                        fast_by_T = {T: (nv, 1e3 * (time.perf_counter() - t0))}
                except Exception as exc:
                    fast_err = str(exc)

            for T in config.horizons:
                row = SweepRow(position=position, viscosity=v, T=T)
                if config.mode in ("fast", "both"):
                    if fast_err is None:
                        nv, ms = fast_by_T[T]
                        row.fast_value = nv.value
                        row.fast_ms = ms
                        row.inner_nodes_max = nv.inner_nodes_max
                        row.adaptive_depth_max = nv.adaptive_depth_max
                    else:
                        row.error = fast_err
                if config.mode in ("reference", "both"):
                    try:
                        t0 = time.perf_counter()
                        row.ref_value = norm_reference(modal, NormProblem(p=config.p, r=r, T=T), v)
                        row.ref_ms = 1e3 * (time.perf_counter() - t0)
                    except Exception as exc:
                        row.error = str(exc) if row.error is None else f"{row.error}; {exc}"
                if row.fast_value is not None and row.ref_value is not None:
                    row.rel_err = abs(row.fast_value - row.ref_value) / abs(row.ref_value)
                report.rows.append(row)
    return report


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(report: SweepReport, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in report.rows:
            writer.writerow([_fmt(getattr(row, col)) for col in CSV_COLUMNS])


def read_csv(path: str) -> list:
    """Parse an emitted CSV back into SweepRow objects (round-trip contract)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ConfigError(f"unexpected CSV header {reader.fieldnames}")
        for rec in reader:
            def num(key, cast=float):
                return cast(rec[key]) if rec[key] != "" else None

            rows.append(
                SweepRow(
                    position=int(rec["position"]),
                    viscosity=float(rec["viscosity"]),
                    T=float(rec["T"]),
                    fast_value=num("fast_value"),
                    ref_value=num("ref_value"),
                    rel_err=num("rel_err"),
                    fast_ms=num("fast_ms"),
                    ref_ms=num("ref_ms"),
                    inner_nodes_max=num("inner_nodes_max", int),
                    adaptive_depth_max=num("adaptive_depth_max", int),
                )
            )
    return rows


def _position_stats(report: SweepReport) -> list:
    """Per-position (mean rel err, mean speedup, effective viscosity per T)."""
    stats = []
    for position in report.config.positions:
        rows = [r for r in report.rows if r.position == position and r.ok]
        errs = [r.rel_err for r in rows if r.rel_err is not None]
        speedups = [r.ref_ms / r.fast_ms for r in rows if r.ref_ms and r.fast_ms]
        eff = {}
        for T in report.config.horizons:
            curve = [
                (r.viscosity, r.fast_value if r.fast_value is not None else r.ref_value)
                for r in rows
                if r.T == T and (r.fast_value is not None or r.ref_value is not None)
            ]
            if len(curve) >= 2:
                eff[T] = effective_viscosity(curve, report.config.drop_factor)
        stats.append(
            {
                "position": position,
                "mean_rel_err": sum(errs) / len(errs) if errs else None,
                "mean_speedup": sum(speedups) / len(speedups) if speedups else None,
                "effective_viscosity": eff,
            }
        )
    return stats


def summarize(report: SweepReport) -> str:
    cfg = report.config
    lines = [
        f"mode={cfg.mode} positions={list(cfg.positions)} viscosities={len(cfg.viscosities)} horizons={list(cfg.horizons)}",
        f"threads={cfg.threads} host={platform.platform()} cpu={platform.processor() or 'unknown'}",
    ]
    for st in _position_stats(report):
        err = f"{st['mean_rel_err']:.3e}" if st["mean_rel_err"] is not None else "n/a"
        spd = f"{st['mean_speedup']:.2f}x" if st["mean_speedup"] is not None else "n/a"
        off = report.offline_ms.get(st["position"])
        off_s = f" offline={off:.0f}ms" if off is not None else ""
        lines.append(f"position {st['position']}: mean rel err {err}, mean speedup {spd}{off_s}")
        for T, v in st["effective_viscosity"].items():
            lines.append(f"  T={T}: effective viscosity {v if v is not None else 'none (no drop)'}")
    failures = [r for r in report.rows if not r.ok]
    if failures:
        lines.append(f"{len(failures)} row(s) FAILED:")
        lines.extend(f"  position={r.position} v={r.viscosity} T={r.T}: {r.error}" for r in failures[:20])
    else:
        lines.append(f"all {len(report.rows)} rows ok")
    return "\n".join(lines)


def benchmark(config: RunConfig) -> list:
    """Timing table per position: mean fast/reference milliseconds and speedup."""
    if config.mode != "both":
        raise ConfigError("benchmark requires mode=both")
    report = run(config)
    table = []
    for position in config.positions:
        rows = [r for r in report.rows if r.position == position and r.ok and r.fast_ms and r.ref_ms]
        if not rows:
            table.append({"position": position, "fast_ms": math.nan, "ref_ms": math.nan, "speedup": math.nan})
            continue
        fast = sum(r.fast_ms for r in rows) / len(rows)
        ref = sum(r.ref_ms for r in rows) / len(rows)
        table.append({"position": position, "fast_ms": fast, "ref_ms": ref, "speedup": ref / fast})
    return table


def _resolve_threads(args, config_threads: int) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV_VAR} must be an integer, got {env!r}") from exc
        if n < 1:
            raise ConfigError(f"{THREADS_ENV_VAR} must be >= 1")
        return n
    return config_threads


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="vibnorm", description="Finite horizon p-mixed H2 norm sweeps")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a sweep and write CSV + summary")
    p_run.add_argument("config", help="JSON config file")
    p_run.add_argument("--out", default=None, help="output directory (default from config)")
    p_run.add_argument("--threads", type=int, default=None, help="engine thread count")
    p_run.add_argument("--mode", choices=["fast", "reference", "both"], default=None)
    p_bench = sub.add_parser("bench", help="run in mode=both and report speedups")
    p_bench.add_argument("config", help="JSON config file")
    p_bench.add_argument("--threads", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        overrides = {"mode": getattr(args, "mode", None), "output": getattr(args, "out", None)}
        config = load_config(args.config, overrides)
        threads = _resolve_threads(args, config.threads)
        if threads != config.threads:
            config = RunConfig(**{**config.__dict__, "threads": threads})
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "bench":
        config = RunConfig(**{**config.__dict__, "mode": "both"})
        table = benchmark(config)
        print(f"threads={config.threads} host={platform.platform()} cpu={platform.processor() or 'unknown'}")
        for row in table:
            print(
                f"position {row['position']}: fast {row['fast_ms']:.1f} ms, "
                f"reference {row['ref_ms']:.1f} ms, speedup {row['speedup']:.2f}x"
            )
        return 0

    report = run(config)
    os.makedirs(config.output, exist_ok=True)
    csv_path = os.path.join(config.output, "sweep.csv")
    write_csv(report, csv_path)
    summary = summarize(report)
    with open(os.path.join(config.output, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(summary + "\n")
    print(summary)
    print(f"csv: {csv_path}")
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
