"""Experiment runner: TOML configs in, CSV/JSON reports out.

    multlab correlate --config exp.toml --out report.json --format json
    multlab cache --limit 10000000

Exit codes: 0 on success, 2 for configuration errors, 3 for capacity errors.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

import jsonschema

from . import families, oracles, pretentious, spectral
from . import summation as sm
from .averaging import CorrelationQuery, Mode, WindowSchedule, correlation_series, series_csv_rows
from .expsum import LogPolyPhase, decay_experiment
from .mfunc import CapacityError, build_spf, evaluate_range, load_spf, save_spf, verify_multiplicativity

log = logging.getLogger("multlab")

SCHEMA_VERSION = 1
EXPERIMENTS = ("correlate", "spectrum-scan", "distance", "decompose", "mrt-verify", "expsum-decay",
               "stationarity", "divisibility", "ceslog", "halasz")
EXIT_OK, EXIT_CONFIG, EXIT_CAPACITY = 0, 2, 3


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


# --------------------------------------------------------------------------- schema

_INT_LIST = {"type": "array", "items": {"type": "integer"}, "minItems": 1}
_QUERY = {
    "type": "object",
    "properties": {"shifts": _INT_LIST, "exponents": _INT_LIST},
    "required": ["shifts", "exponents"],
    "additionalProperties": False,
}
_QUERIES = {"oneOf": [{"enum": ["default", "two-point"]}, {"type": "array", "items": _QUERY, "minItems": 1}]}
_MODE = {"enum": [m.value for m in Mode]}
_FAMILY = {
    "type": "object",
    "oneOf": [
        {"properties": {"builtin": {"type": "string"}, "params": {"type": "object"},
                        "kind": {"type": "string"}, "label": {"type": "string"}},
         "required": ["builtin"], "additionalProperties": False},
        {"properties": {"kind": {"enum": ["completely-multiplicative", "multiplicative"]},
                        "label": {"type": "string"},
                        "rules": {"type": "array", "items": {
                            "type": "object",
                            "properties": {"p": {"type": "integer", "minimum": 2},
                                           "s": {"type": "integer", "minimum": 1},
                                           "re": {"type": "number"}, "im": {"type": "number"}},
                            "required": ["p", "re"], "additionalProperties": False}}},
         "required": ["rules"], "additionalProperties": False},
    ],
}


def _params(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


PARAMETER_SCHEMAS: dict[str, dict] = {
    "correlate": _params({"query": _QUERY, "mode": _MODE, "oracle": {"type": "boolean"},
                          "verify_trials": {"type": "integer", "minimum": 0}}, ["query"]),
    "spectrum-scan": _params({"Q_max": {"type": "integer", "minimum": 2}, "queries": _QUERIES, "mode": _MODE},
                             ["Q_max"]),
    "distance": _params({"g": _FAMILY, "P": {"type": "array", "items": {"type": "integer", "minimum": 2},
                                              "minItems": 1}}, ["g", "P"]),
    "decompose": _params({"eps": {"type": "number", "exclusiveMinimum": 0},
                          "P_max": {"type": "integer", "minimum": 2}}, ["eps", "P_max"]),
    "mrt-verify": _params({"levels": {"type": "integer", "minimum": 1},
                           "delta": {"type": "number", "exclusiveMinimum": 0},
                           "max_primes": {"type": "integer", "minimum": 1},
                           "s2": {"type": "integer", "minimum": 2},
                           "t": _INT_LIST, "s": _INT_LIST}),
    "expsum-decay": _params({"phase": _params({"c0": {"type": "number"},
                                               "c": {"type": "array", "items": {"type": "number"}}}),
                             "N": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                                   "minItems": 1},
                             "gamma": {"type": "number", "exclusiveMinimum": 0},
                             "L": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                             "c": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                             "mode": _MODE, "q": {"type": "integer", "minimum": 2}},
                            ["phase", "N"]),
    "stationarity": _params({"query": _QUERY, "r": {"type": "integer", "minimum": 1}, "mode": _MODE},
                            ["query", "r"]),
    "divisibility": _params({"alpha": {"type": ["string", "number"]}, "r": {"type": "integer", "minimum": 1},
                             "queries": _QUERIES, "mode": _MODE}, ["alpha", "r"]),
    "ceslog": _params({"queries": _QUERIES}),
    "halasz": _params({"t": {"type": "number"}}),
}

_SCHEDULE = {
    "type": "object",
    "properties": {
        "generator": {"enum": ["explicit", "geometric", "power-of-scale"]},
        "windows": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "start": {"type": "integer", "minimum": 1},
        "base": {"type": "number", "exclusiveMinimum": 1},
        "count": {"type": "integer", "minimum": 1},
        "a": {"type": "number", "exclusiveMinimum": 0},
        "scales": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "d": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer"},
        "threads": {"type": "integer", "minimum": 1},
        "function": _FAMILY,
        "parameters": {"type": "object"},
        "schedule": _SCHEDULE,
        "output": _params({"path": {"type": "string"}, "format": {"enum": ["csv", "json"]}}),
    },
    "required": ["experiment"],
    "additionalProperties": False,
}

NEEDS_FUNCTION = {"correlate", "spectrum-scan", "distance", "decompose", "stationarity", "divisibility",
                  "ceslog", "halasz"}
NEEDS_SCHEDULE = {"correlate", "spectrum-scan", "stationarity", "divisibility", "ceslog", "halasz"}


def _field(path) -> str:
    return ".".join(str(p) for p in path) or "<root>"


def _check(instance, schema, prefix=()) -> None:
    errors = sorted(jsonschema.Draft7Validator(schema).iter_errors(instance), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise ConfigError(f"{_field(tuple(prefix) + tuple(err.absolute_path))}: {err.message}")


def validate_config(cfg: dict) -> dict:
    """Schema-check a config dict; raises :class:`ConfigError` naming the field."""
    _check(cfg, CONFIG_SCHEMA)
    exp = cfg["experiment"]
    _check(cfg.get("parameters", {}), PARAMETER_SCHEMAS[exp], ("parameters",))
    if exp in NEEDS_FUNCTION and "function" not in cfg:
        raise ConfigError("function: required for this experiment")
    if exp in NEEDS_SCHEDULE:
        if "schedule" not in cfg:
            raise ConfigError("schedule: required for this experiment")
        make_schedule(cfg["schedule"])
    return cfg


def make_schedule(doc: dict) -> WindowSchedule:
    gen = doc.get("generator", "explicit")
    try:
        if gen == "explicit":
            if "windows" not in doc:
                raise ConfigError("schedule.windows: required for an explicit schedule")
            return WindowSchedule(tuple(doc["windows"]))
        if gen == "geometric":
            return WindowSchedule.geometric(doc["start"], doc["base"], doc["count"])
        return WindowSchedule.power_of_scale(doc["a"], doc["scales"], doc["d"])
    except KeyError as exc:
        raise ConfigError(f"schedule.{exc.args[0]}: required for generator {gen!r}") from None
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"schedule.windows: {exc}") from None


def load_config(path: str | os.PathLike) -> dict:
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"<file>: {exc}") from None


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


# --------------------------------------------------------------------------- reports


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    config_hash: str
    series: list[dict]
    oracle: dict | None = None
    defect: float | None = None
    runtime_ms: int = 0
    seed: int = 0
    schema_version: int = SCHEMA_VERSION
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.series:
            raise ValueError("report series is empty")
        if (self.oracle is None) != (self.defect is None):
            raise ValueError("defect must be present exactly when an oracle is")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentReport":
        return cls(**doc)


def report_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=1) + "\n"


def report_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    buf.write(f"# multlab-report schema_version={report.schema_version} experiment={report.experiment} "
              f"config_hash={report.config_hash} seed={report.seed}\n")
    cols: list[str] = []
    for row in report.series:
        cols += [c for c in row if c not in cols]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for row in report.series:
        w.writerow({k: _csv_cell(v) for k, v in row.items()})
    return buf.getvalue()


def _csv_cell(v):
    return repr(v) if isinstance(v, float) else v


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary sibling and rename, so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    finally:
        with contextlib.suppress(FileNotFoundError):
            tmp.unlink()


def report_emit(report: ExperimentReport, fmt: str, path: str | os.PathLike | None) -> str:
    text = report_json(report) if fmt == "json" else report_csv(report)
    if path is None:
        sys.stdout.write(text)
    else:
        atomic_write(path, text)
    return text


# --------------------------------------------------------------------------- experiments


def _query(doc: dict, mode) -> CorrelationQuery:
    return CorrelationQuery(tuple(doc["shifts"]), tuple(doc["exponents"]), mode)


def _queries(spec, mode) -> list[CorrelationQuery]:
    if spec is None or spec == "default":
        return spectral.default_queries(mode=mode)
    if spec == "two-point":
        return spectral.two_point_queries(mode=mode)
    return [_query(q, mode) for q in spec]


def _alpha(v):
    if isinstance(v, str):
        return Fraction(v)
    return Fraction(v) if float(v).is_integer() else float(v)


def _cx(z: complex) -> dict:
    return {"re": z.real, "im": z.imag, "abs": abs(z)}


def mrt_prediction(s: float, N: int, mode: Mode, k, n) -> oracles.LimitPrediction:
    """Closed-form limit for ``n -> n**(is)`` on the window ``[N]``.

    Logarithmic windows use ``c = log s / log N``.  Cesàro windows within 2%
    of an integer ``d = log s / log N`` are treated as ``N = alpha s**(1/d)``;
    other windows use the band limit with ``d = floor(log s / log N)``.
    """
    x = math.log(s) / math.log(N)
    if mode is Mode.LOGARITHMIC:
        return oracles.exact(oracles.mrt_log_limit(x, k, n))
    d = round(x)
    if d >= 1 and abs(x - d) < 0.02:
        return oracles.mrt_cesaro_alpha_limit(N / s ** (1.0 / d), d, k, n)
    return oracles.exact(oracles.mrt_cesaro_band_limit(math.floor(x), k, n))


def _mrt_s(fdoc: dict) -> float | None:
    if fdoc.get("builtin") == "mrt-phase":
        return float(fdoc["params"]["s"])
    return None


def _oracle_block(pred: oracles.LimitPrediction) -> tuple[dict, complex]:
    val = pred.value(tol=1e-10)
    return {**pred.to_dict(), "value_re": val.real, "value_im": val.imag}, val


def _run_correlate(cfg, P, spec, sched, seed):
    mode = Mode(P.get("mode", "cesaro"))
    q = _query(P["query"], mode)
    series = correlation_series(spec, q, sched, mode)
    rows = series_csv_rows(series)
    extra = {}
    if P.get("verify_trials", 0):
        if seed is None:
            raise ConfigError("seed: required when parameters.verify_trials > 0")
        rep = verify_multiplicativity(evaluate_range(spec, min(sched.last, 10**7)), P["verify_trials"], seed)
        extra["multiplicativity_max_defect"] = rep.max_defect
    oracle = None
    s = _mrt_s(cfg["function"])
    if s is not None and P.get("oracle", True):
        pred = mrt_prediction(s, sched.last, mode, q.exponents, q.shifts)
        oracle, val = _oracle_block(pred)
        for r, (_, z) in zip(rows, series):
            r["defect"] = abs(z - val)
        if pred.kind == "oscillatory-integral":
            extra["variant_defects"] = {name: float(abs(series[-1][1] - oracles.oscillatory_integral(b, pred.d, 1e-10)))
                                        for name, b in pred.variants.items()}
    return rows, oracle, extra


def _run_spectrum(cfg, P, spec, sched, seed):
    mode = Mode(P.get("mode", "cesaro"))
    res = spectral.rational_scan(spec, P["Q_max"], _queries(P.get("queries"), mode), sched, mode)
    return [{**r.to_dict(), "lights_up": r.lights_up} for r in res], None, {}


def _run_distance(cfg, P, spec, sched, seed):
    g = families.from_json(P["g"])
    return [{"P": Pc, "distance_sq": v} for Pc, v in pretentious.distance_sq_series(spec, g, P["P"])], None, {}


def _run_decompose(cfg, P, spec, sched, seed):
    res = pretentious.decompose(spec, P["eps"], P["P_max"])
    fams = {}
    for part, f in (("f1", res.f1), ("f2", res.f2)):
        fams[part] = families.to_json(f) if f.source is not None else families.to_json(f, rules_upto=P["P_max"])
    return [res.manifest()], None, {"families": fams}


def _run_mrt_verify(cfg, P, spec, sched, seed):
    delta = P.get("delta", 0.05)
    if "t" in P or "s" in P:
        if not ("t" in P and "s" in P):
            raise ConfigError("parameters.t: t and s must be given together")
        try:
            mrt = families.mrt_assemble(families.MRTScaleData(tuple(P["t"]), tuple(P["s"]), delta))
        except ValueError as exc:
            raise ConfigError(f"parameters.s: {exc}") from None
    else:
        mrt = families.mrt_build(P.get("levels", 2), delta, P.get("max_primes", 8), P.get("s2", 2))
    rows = [{"m": c.level, "t_m": c.t_m, "s_next": c.s_next, "defect": c.defect, "delta": c.delta, "ok": c.ok}
            for c in mrt.checks]
    return rows, None, {"scales": {"t": list(mrt.scales.t), "s": list(mrt.scales.s)}}


def _run_decay(cfg, P, spec, sched, seed):
    ph = P["phase"]
    g = LogPolyPhase(ph.get("c0", 0.0), tuple(ph.get("c", ())))
    Ns = [float(x) for x in P["N"]]
    if "L" in P:
        if len(P["L"]) != len(Ns):
            raise ConfigError("parameters.L: needs one entry per N")
        pairs = list(zip(Ns, P["L"]))
    elif "gamma" in P:
        pairs = [(N, int(math.floor(N ** P["gamma"]))) for N in Ns]
    else:
        raise ConfigError("parameters.gamma: give gamma or L")
    rep = decay_experiment(g, pairs, P.get("c", 0.5), P.get("mode", "cesaro"), P.get("q", 2))
    rows = [{**r.to_dict(), "defect": r.abs_empirical} for r in rep.rows]
    oracle, _ = _oracle_block(oracles.exact(0))
    return rows, oracle, {"C3": rep.C3, "max_ratio": rep.max_ratio}


def _run_stationarity(cfg, P, spec, sched, seed):
    mode = Mode(P.get("mode", "cesaro"))
    q = _query(P["query"], mode)
    rows = [{"N": N, "defect_empirical": spectral.stationarity_defect(spec, q, P["r"], N, mode)} for N in sched]
    s = _mrt_s(cfg["function"])
    oracle = None
    if s is not None:
        dq = q.dilated(P["r"])
        a = mrt_prediction(s, sched.last, mode, q.exponents, q.shifts).value(tol=1e-10)
        b = mrt_prediction(s, sched.last, mode, dq.exponents, dq.shifts).value(tol=1e-10)
        oracle, val = _oracle_block(oracles.exact(abs(a - b)))
        for r in rows:
            r["defect"] = abs(r["defect_empirical"] - val.real)
    return rows, oracle, {}


def _run_divisibility(cfg, P, spec, sched, seed):
    mode = Mode(P.get("mode", "cesaro"))
    res = spectral.divisibility_probe(spec, _alpha(P["alpha"]), P["r"], _queries(P.get("queries"), mode),
                                      sched, mode)
    return [{**r.to_dict(), "lights_up": r.lights_up} for r in res], None, {}


def _run_ceslog(cfg, P, spec, sched, seed):
    qs = _queries(P.get("queries", "two-point"), Mode.CESARO)
    return [{"N": N, "gap": spectral.ceslog_agreement(spec, qs, N)} for N in sched], None, {}


def _run_halasz(cfg, P, spec, sched, seed):
    h = spectral.halasz_drift(spec, P.get("t", 0.0), sched)
    inc = [0.0] + h.phase_increments
    return [{"N": N, **_cx(z), "phase_increment": d} for N, z, d in zip(h.windows, h.residuals, inc)], None, {}


RUNNERS: dict[str, Callable] = {
    "correlate": _run_correlate, "spectrum-scan": _run_spectrum, "distance": _run_distance,
    "decompose": _run_decompose, "mrt-verify": _run_mrt_verify, "expsum-decay": _run_decay,
    "stationarity": _run_stationarity, "divisibility": _run_divisibility, "ceslog": _run_ceslog,
    "halasz": _run_halasz,
}


def run(cfg: dict, seed: int | None = None) -> ExperimentReport:
    """Validate, dispatch and time one experiment."""
    validate_config(cfg)
    exp = cfg["experiment"]
    seed = cfg.get("seed") if seed is None else seed
    P = cfg.get("parameters", {})
    t0 = time.perf_counter()
    try:
        spec = families.from_json(cfg["function"]) if "function" in cfg else None
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"function: {exc}") from None
    sched = make_schedule(cfg["schedule"]) if "schedule" in cfg else None
    try:
        rows, oracle, extra = RUNNERS[exp](cfg, P, spec, sched, seed)
    except CapacityError as exc:
        raise CapacityError(f"{exp}: {exc}") from exc
    runtime = int(round((time.perf_counter() - t0) * 1000))
    defect = rows[-1]["defect"] if oracle is not None else None
    return ExperimentReport(exp, cfg, config_hash(cfg), rows, oracle, defect, runtime,
                            0 if seed is None else int(seed), SCHEMA_VERSION, extra)


def write_decomposition(report: ExperimentReport, out: str | os.PathLike) -> list[Path]:
    """Side files for a decomposition: both family documents and the manifest."""
    base = Path(out)
    paths = []
    for part in ("f1", "f2"):
        p = base.with_name(f"{base.stem}.{part}.json")
        atomic_write(p, json.dumps(report.extra["families"][part], sort_keys=True, indent=1) + "\n")
        paths.append(p)
    p = base.with_name(f"{base.stem}.manifest.json")
    atomic_write(p, json.dumps(report.series[0], sort_keys=True, indent=1) + "\n")
    return paths + [p]


# --------------------------------------------------------------------------- cache


def cache_dir() -> Path:
    return Path(os.environ.get("MULTLAB_CACHE", Path.home() / ".cache" / "multlab"))


def cache(limit: int, directory: str | os.PathLike | None = None) -> tuple[Path, str]:
    """Build or reuse the SPF file for ``limit``; returns ``(path, "cache hit" | "built" | "rebuilt")``."""
    import fcntl

    d = Path(directory) if directory is not None else cache_dir()
    d.mkdir(parents=True, exist_ok=True)
    path = d / f"spf-{int(limit)}.bin"
    with open(d / f"spf-{int(limit)}.lock", "w") as lock:
        fcntl.flock(lock, fcntl.LOCK_EX)
        status = "built"
        if path.exists():
            try:
                load_spf(path, int(limit))
                return path, "cache hit"
            except ValueError as exc:
                log.warning("SPF cache %s unusable (%s); rebuilding", path, exc)
                status = "rebuilt"
        save_spf(build_spf(int(limit)), path)
        return path, status


# --------------------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="multlab", description="Multiplicative-function correlation experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML experiment file")
        p.add_argument("--out", help="report path (stdout if omitted)")
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--threads", type=int)
        p.add_argument("--seed", type=int)
    b = sub.add_parser("batch", help="run every config listed in a manifest")
    b.add_argument("--config", required=True, help="TOML manifest with configs = [paths]")
    b.add_argument("--threads", type=int)
    b.add_argument("--seed", type=int)
    c = sub.add_parser("cache")
    c.add_argument("--limit", type=int, required=True)
    c.add_argument("--dir")
    return ap


def _run_one(cfg: dict, command: str | None, out, fmt, seed) -> None:
    if command is not None:
        cfg.setdefault("experiment", command)
        if cfg["experiment"] != command:
            raise ConfigError(f"experiment: config says {cfg['experiment']!r} but subcommand is {command!r}")
    with sm.threads(cfg.get("threads", sm.get_threads())):
        report = run(cfg, seed)
    outcfg = cfg.get("output", {})
    out = out or outcfg.get("path")
    fmt = fmt or outcfg.get("format") or (Path(out).suffix.lstrip(".") if out else "json")
    if fmt not in ("csv", "json"):
        fmt = "json"
    report_emit(report, fmt, out)
    if report.experiment == "decompose" and out:
        write_decomposition(report, out)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "cache":
            path, status = cache(args.limit, args.dir)
            print(json.dumps({"path": str(path), "status": status, "bytes": path.stat().st_size}))
            return EXIT_OK
        if args.threads:
            sm.set_threads(args.threads)
        if args.command == "batch":
            manifest = load_config(args.config)
            root = Path(args.config).parent
            for entry in manifest.get("configs", []):
                _run_one(load_config(root / entry), None, None, None, args.seed)
            return EXIT_OK
        _run_one(load_config(args.config), args.command, args.out, args.format, args.seed)
        return EXIT_OK
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
