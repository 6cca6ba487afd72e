"""Config-driven experiment runner.

Configs are INI files whose sections name the module a key belongs to, so
``[kernel] alpha = 3`` reads as ``kernel.alpha``::

    [kernel]
    alpha = 3
    [reaction]
    beta = 1.4
    [run]
    t_end = 200

Every run writes ``summary.json`` to the output directory plus the CSVs of
the mode (``trace.csv``, ``profile.csv``, ``sweep.csv``).
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import cauchy, certificates, waves
from .errors import BadParameter, ConfigError, FrontsError, InsufficientData
from .fronts import classify_regime, estimate_speed, fit_exponent
from .grid import Grid, make_front_datum
from .kernel import first_moment, make_kernel
from .reaction import make_nonlinearity

MODES = ("simulate", "wave", "probe", "classify", "certify", "sweep")


def _floats(text):
    return tuple(float(v) for v in re.split(r"[,\s]+", text.strip()) if v)


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> (parser, default)
SCHEMA = {
    "experiment": {"mode": (str, None)},
    "kernel": {"family": (str, "algebraic"), "alpha": (float, 4.0), "mu": (float, None),
               "a": (float, 1.0), "b": (float, 0.5)},
    "reaction": {"family": (str, "power"), "r": (float, 1.0), "beta": (float, 2.0),
                 "theta": (float, None)},
    "initial": {"kind": (str, "step"), "c0": (float, 0.9), "R0": (float, 0.0),
                "d": (float, 0.1), "exponent": (float, 2.0), "plateau": (float, 0.9),
                "width": (float, 1.0), "x0": (float, 0.0)},
    "grid": {"x_min": (float, -100.0), "x_max": (float, 100.0), "h": (float, 0.5)},
    "run": {"t_end": (float, 20.0), "dt": (float, None), "eta": (float, 0.9),
            "lambdas": (_floats, (0.5,)), "regrid_margin": (float, 0.25),
            "snapshot_times": (_floats, ()), "tail_level": (float, 1e-6),
            "fit_window": (_floats, None), "max_points": (int, 1 << 22)},
    "wave": {"c": (float, 1.0), "length": (float, 400.0), "h": (float, 0.25),
             "tol": (float, 1e-9), "max_length": (float, 25600.0), "rungs": (int, 2)},
    "probe": {"c_min": (float, None), "c_max": (float, 2.0), "tol_c": (float, 1e-2),
              "scan_points": (int, 5)},
    "certify": {"epsilons": (_floats, (0.0, 0.5, 1.0)), "x_lo": (float, -200.0),
                "x_hi": (float, 2000.0), "h": (float, 0.25), "tol": (float, 1e-8),
                "times": (_floats, (0.0, 1.0, 10.0, 100.0)), "d": (float, 0.1),
                "p": (float, None), "tail_x_min": (float, 10.0), "tail_x_max": (float, 1e4),
                "lower": (_bool, True)},
    "sweep": {"alphas": (_floats, ()), "betas": (_floats, ()), "task": (str, "classify")},
}


@dataclass
class ExperimentConfig:
    mode: str
    values: dict
    lines: dict = dc_field(default_factory=dict)

    def get(self, section, key):
        return self.values[section][key]

    def line_of(self, section, key):
        return self.lines.get((section, key))

    def canonical(self) -> str:
        """Order-independent text of every setting (defaults included), used for hashing."""
        parts = [f"mode={self.mode}"]
        for sec in sorted(self.values):
            for key in sorted(self.values[sec]):
                val = self.values[sec][key]
                parts.append(f"{sec}.{key}={_canon_value(val)}")
        return "\n".join(parts)

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def with_values(self, updates: dict) -> "ExperimentConfig":
        values = {s: dict(v) for s, v in self.values.items()}
        for (sec, key), val in updates.items():
            values[sec][key] = val
        return ExperimentConfig(self.mode, values, dict(self.lines))


def _canon_value(val):
    if isinstance(val, float):
        return format(val, ".17g")
    if isinstance(val, tuple):
        return "(" + ",".join(_canon_value(v) for v in val) + ")"
    return repr(val)


def _key_lines(text):
    lines = {}
    section = None
    for num, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            lines[(section, None)] = num
            continue
        m = re.match(r"([^=:\s]+)\s*[=:]", line)
        if m and section is not None:
            lines[(section, m.group(1).strip())] = num
    return lines


def parse_config(text: str, mode: str | None = None) -> ExperimentConfig:
    """Parse and type-check a config; unknown sections or keys are errors."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unparseable config: {exc}", line=getattr(exc, "lineno", None)) from None
    lines = _key_lines(text)
    values = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]", key=sec, line=lines.get((sec, None)))
        for key, raw in parser.items(sec):
            where = lines.get((sec, key))
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {sec}.{key}", key=f"{sec}.{key}", line=where)
            conv = SCHEMA[sec][key][0]
            try:
                values[sec][key] = conv(raw)
            except ValueError:
                raise ConfigError(
                    f"{sec}.{key}: cannot read {raw!r} as {getattr(conv, '__name__', conv)}",
                    key=f"{sec}.{key}", line=where,
                ) from None
    cfg_mode = values["experiment"]["mode"]
    mode = mode or cfg_mode or "simulate"
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}", key="experiment.mode",
                          line=lines.get(("experiment", "mode")))
    values["experiment"]["mode"] = mode
    cfg = ExperimentConfig(mode, values, lines)
    _check_preconditions(cfg)
    return cfg


def load_config(path, mode=None) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), mode)


def _check_preconditions(cfg: ExperimentConfig):
    """Build the kernel and reaction once so bad parameters surface with a line."""
    for sec, builder in (("kernel", _kernel), ("reaction", _reaction)):
        try:
            builder(cfg)
        except BadParameter as exc:
            key = _blame(str(exc), cfg.values[sec])
            raise ConfigError(str(exc), key=f"{sec}.{key}" if key else sec,
                              line=cfg.line_of(sec, key) or cfg.line_of(sec, None)) from None


def _blame(message, section_values):
    for key in section_values:
        if re.search(rf"\b{re.escape(key)}\b", message):
            return key
    return None


def _kernel(cfg: ExperimentConfig, alpha=None):
    k = cfg.values["kernel"]
    if k["family"] == "algebraic":
        a = k["alpha"] if alpha is None else alpha
        mu = k["mu"] if k["mu"] is not None else a
        return make_kernel("algebraic", alpha=a, mu=mu)
    return make_kernel(k["family"], a=k["a"], b=k["b"])


def _reaction(cfg: ExperimentConfig, beta=None):
    r = cfg.values["reaction"]
    params = {"r": r["r"]}
    if r["family"] in ("power", "ignition"):
        params["beta"] = r["beta"] if beta is None else beta
    if r["theta"] is not None:
        params["theta"] = r["theta"]
    return make_nonlinearity(r["family"], **params)


def _alpha_beta(cfg: ExperimentConfig):
    kernel = _kernel(cfg)
    nl = _reaction(cfg)
    alpha = kernel.alpha
    beta = nl.leading_exponent
    return kernel, nl, alpha, beta


# -- modes -----------------------------------------------------------------------

def _regime_fields(alpha, beta):
    if not math.isfinite(alpha):
        return {"regime": "waves", "threshold": None}
    reg = classify_regime(alpha, beta)
    return {"regime": reg.kind.value, "threshold": reg.threshold}


def _initial(cfg, grid):
    ini = dict(cfg.values["initial"])
    kind = ini.pop("kind")
    keys = {"step": ("c0", "R0"), "algebraic": ("d", "exponent"),
            "smooth": ("plateau", "width", "x0")}.get(kind)
    if keys is None:
        raise ConfigError(f"unknown initial.kind {kind!r}", key="initial.kind",
                          line=cfg.line_of("initial", "kind"))
    return make_front_datum(grid, kind, **{k: ini[k] for k in keys})


def run_simulate(cfg, out_dir):
    kernel, nl, alpha, beta = _alpha_beta(cfg)
    g = cfg.values["grid"]
    grid = Grid.from_bounds(g["x_min"], g["x_max"], g["h"])
    run = cfg.values["run"]
    problem = cauchy.Problem(
        kernel, nl, _initial(cfg, grid), run["t_end"], dt=run["dt"], eta=run["eta"],
        regrid_margin=run["regrid_margin"], lambdas=run["lambdas"],
        snapshot_times=run["snapshot_times"], tail_level=run["tail_level"],
        max_points=run["max_points"],
    )
    trace = cauchy.run(problem)
    trace.write_csv(os.path.join(out_dir, "trace.csv"))
    summary = _regime_fields(alpha, beta)
    t_end = run["t_end"]
    window = run["fit_window"] or (t_end / 10.0, t_end)
    fits, speeds = {}, {}
    for lam in problem.lambdas:
        key = format(lam, "g")
        level = trace.level(lam)
        try:
            fits[key] = fit_exponent(level, window).to_dict()
        except (InsufficientData, BadParameter) as exc:
            fits[key] = {"error": str(exc)}
        try:
            speeds[key] = estimate_speed(level, window)
        except (InsufficientData, BadParameter):
            speeds[key] = None
    summary["exponent_fit"] = fits
    summary["speed"] = speeds
    summary["regrids"] = len(trace.regrids)
    summary["warnings"] = list(trace.warnings)
    summary["final_u0"] = _value_at(trace.final, 0.0)
    return summary


def _value_at(field, x0):
    x = field.grid.x
    if not x[0] <= x0 <= x[-1]:
        return None
    return float(np.interp(x0, x, field.values))


def _wave_options(cfg):
    w = cfg.values["wave"]
    return waves.WaveOptions(length=w["length"], h=w["h"], tol=w["tol"],
                             max_length=w["max_length"], rungs=w["rungs"])


def run_wave(cfg, out_dir):
    kernel, nl, alpha, beta = _alpha_beta(cfg)
    summary = _regime_fields(alpha, beta)
    opts = _wave_options(cfg)
    if nl.family.value == "ignition":
        prof = waves.solve_ignition_wave(kernel, nl, opts)
    else:
        prof = waves.solve_wave(kernel, nl, cfg.values["wave"]["c"], opts)
    prof.write_csv(os.path.join(out_dir, "profile.csv"))
    summary["wave"] = prof.to_dict()
    return summary


def run_probe(cfg, out_dir):
    kernel, nl, alpha, beta = _alpha_beta(cfg)
    summary = _regime_fields(alpha, beta)
    p = cfg.values["probe"]
    J1 = first_moment(kernel)
    c_min = p["c_min"] if p["c_min"] is not None else J1 + 0.05
    res = waves.minimal_speed_probe(kernel, nl, (c_min, p["c_max"]), tol_c=p["tol_c"],
                                    options=_wave_options(cfg), scan_points=p["scan_points"])
    summary["c_bracket"] = res.to_dict()
    summary["evaluations"] = [
        {"c": c, "converged": ok, "iterations": its, "reason": why} for c, ok, its, why in res.evaluations
    ]
    return summary


def run_classify(cfg, out_dir):
    _, _, alpha, beta = _alpha_beta(cfg)
    summary = _regime_fields(alpha, beta)
    if math.isfinite(alpha) and summary["regime"] == "acceleration":
        reg = classify_regime(alpha, beta)
        summary["margin"] = reg.margin
        summary["exponent_bracket"] = list(reg.exponent_bracket())
    return summary


def run_certify(cfg, out_dir):
    kernel, nl, alpha, beta = _alpha_beta(cfg)
    summary = _regime_fields(alpha, beta)
    c = cfg.values["certify"]
    certs = []
    if summary["regime"] == "waves":
        bar = certificates.build_tw_supersolution(kernel, alpha, beta, nl.r, nonlinearity=nl)
        region = certificates.Region(c["x_lo"], c["x_hi"], c["h"])
        for eps in c["epsilons"]:
            rep = certificates.verify_inequality(bar.with_epsilon(eps), kernel, nl, region,
                                                 certificates.LE, c["tol"])
            certs.append({"barrier": "travelling-wave", "epsilon": eps, "c0": bar.c0,
                          **rep.to_dict()})
        p_default = alpha - 2.0
    else:
        region = certificates.Region(max(c["x_lo"], -50.0), c["x_hi"], c["h"], c["times"])
        bar, rep, _ = certificates.search_upper_barrier(kernel, nl, alpha, beta, region)
        certs.append({"barrier": "upper", "gamma": bar.gamma, **rep.to_dict()})
        if c["lower"] and (beta - 1.0) * (alpha - 1.0) < 1.0:
            bar, rep, _ = certificates.search_lower_barrier(kernel, nl, alpha, beta, c["d"], region)
            certs.append({"barrier": "lower", "B": bar.B, "gamma": bar.gamma, **rep.to_dict()})
        p_default = (alpha - 1.0) / beta
    p = c["p"] if c["p"] is not None else p_default
    est = certificates.check_tail_estimate(kernel, p, (c["tail_x_min"], c["tail_x_max"]))
    certs.append({"barrier": "tail-estimate", "pass": est.holds, **est.to_dict()})
    summary["certificates"] = certs
    return summary


SWEEP_COLUMNS = ("alpha", "beta", "regime", "threshold", "margin", "config_sha256")


def _sweep_cell(args):
    cfg, alpha, beta = args
    cell = cfg.with_values({("kernel", "alpha"): alpha, ("reaction", "beta"): beta})
    reg = classify_regime(alpha, beta)
    row = {"alpha": alpha, "beta": beta, "regime": reg.kind.value,
           "threshold": reg.threshold, "margin": reg.margin,
           "config_sha256": cell.sha256()}
    return row


def run_sweep(cfg, out_dir, threads=1):
    s = cfg.values["sweep"]
    if s["task"] != "classify":
        raise ConfigError(f"unsupported sweep.task {s['task']!r}", key="sweep.task",
                          line=cfg.line_of("sweep", "task"))
    for key in ("alphas", "betas"):
        for v in s[key]:
            if (key == "alphas" and not v > 2.0) or (key == "betas" and not v > 1.0):
                bound = "alpha > 2" if key == "alphas" else "beta > 1"
                raise ConfigError(f"sweep.{key} value {v} violates {bound}",
                                  key=f"sweep.{key}", line=cfg.line_of("sweep", key))
    cells = [(cfg, a, b) for a in s["alphas"] for b in s["betas"]]
    if threads > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]
    with open(os.path.join(out_dir, "sweep.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[k]) for k in SWEEP_COLUMNS])
    return {"rows": rows}


def _fmt(v):
    return format(v, ".17g") if isinstance(v, float) else str(v)


RUNNERS = {"simulate": run_simulate, "wave": run_wave, "probe": run_probe,
           "classify": run_classify, "certify": run_certify}


# -- output ----------------------------------------------------------------------

def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats at 17 significant digits; non-finite floats become null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return format(v, ".17g") if math.isfinite(v) else "null"
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def emit_summary(summary: dict, out_dir: str) -> str:
    path = os.path.join(out_dir, "summary.json")
    with open(path, "w") as fh:
        fh.write(dumps(summary) + "\n")
    return path


def run_experiment(cfg: ExperimentConfig, out_dir: str, threads: int = 1) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    if cfg.mode == "sweep":
        body = run_sweep(cfg, out_dir, threads)
    else:
        body = RUNNERS[cfg.mode](cfg, out_dir)
    summary = {"mode": cfg.mode, "config_sha256": cfg.sha256(), **body}
    emit_summary(summary, out_dir)
    return summary


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nonlocal-fronts", description=__doc__.splitlines()[0])
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", help="INI config file (defaults apply when omitted)")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--threads", type=int, default=1, help="workers for sweeps")
    ap.add_argument("--seed", type=int, default=None, help="reserved; runs are deterministic")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config, args.mode)
        else:
            cfg = parse_config("", args.mode)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1", key="threads")
        run_experiment(cfg, args.out, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FrontsError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    print(os.path.join(args.out, "summary.json"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
