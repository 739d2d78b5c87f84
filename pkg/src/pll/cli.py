"""Command-line entry point.

Every subcommand resolves its settings from (highest first) flags, an
optional ``--config`` file, the ``PLL_SEED`` environment variable (seed
only) and built-in defaults.  The resolved settings are echoed as the
first output line, and that output file can itself be passed back through
``--config`` to reproduce the run.

Exit codes: 0 success, 1 invalid settings or input, 2 a ``verify``
check failed.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import inspect
import io
import json
import os
import sys

import numpy as np

from . import copula as cop_mod
from . import knn, verify
from .compensator import exact_compensator_1d
from .epp import build_scaled_1d, to_csv
from .errors import PLLError
from .rvdist import model_from_params, sample, sample_around, scaling_constants

EXIT_OK, EXIT_INVALID, EXIT_REJECTED = 0, 1, 2


class SettingError(Exception):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


def _float_list(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    parts = [p for p in str(text).replace(";", ",").split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return [float(p) for p in parts]


def _json_value(text):
    return text if not isinstance(text, str) else json.loads(text)


def _choice(*options):
    def conv(text):
        if text not in options:
            raise ValueError(f"choose from {', '.join(options)}")
        return text

    conv.__name__ = "choice"
    return conv


# key -> (converter, default); a default of ``None`` means "unset"
MODEL_KEYS = {
    "model": (_choice("powerlaw", "uniform", "gap", "piecewise"), "powerlaw"),
    "alpha": (float, None),
    "a": (float, None),
    "b": (float, None),
    "g1": (float, None),
    "g2": (float, None),
    "model_params": (_json_value, None),
}
COMMON_KEYS = {
    "seed": (int, None),
    "out": (str, "-"),
    "format": (_choice("csv", "json"), None),
    "threads": (int, None),
}

SUBCOMMANDS = {
    "simulate": {
        **MODEL_KEYS,
        "q": (float, 0.0),
        "n": (int, 1000),
        "rep": (int, 0),
    },
    "compensator": {
        **MODEL_KEYS,
        "q": (float, 0.0),
        "n": (int, 1000),
        "rep": (int, 0),
        "grid": (_float_list, [0.25, 0.5, 0.75, 1.0]),
    },
    "verify": {
        "scenario": (_choice(*verify.SCENARIOS), None),
        "alpha": (float, None),
        "n": (int, None),
        "reps": (int, None),
        "k": (int, None),
        "level": (float, None),
        "rho": (_float_list, None),
    },
    "knn": {
        **MODEL_KEYS,
        "t": (float, None),
        "k": (int, 1),
        "n": (int, None),
        "level": (float, None),
        "rep": (int, 0),
    },
    "gap-test": {
        **MODEL_KEYS,
        "k": (int, 3),
        "n": (int, None),
        "rep": (int, 0),
    },
    "copula": {
        "rho": (float, None),
        "mode": (_choice("tail", "extremes"), "tail"),
        "x_min": (float, 1e-4),
        "x_max": (float, 1e-2),
        "x_points": (int, 9),
        "n": (int, 10_000),
        "rep": (int, 0),
        "reach": (float, 1.0),
    },
}
REQUIRED = {
    "simulate": ("seed",),
    "compensator": ("seed",),
    "verify": ("scenario",),
    "knn": ("seed", "t", "n"),
    "gap-test": ("seed", "n"),
    "copula": ("rho",),
}
MODEL_PARAMS = {
    "powerlaw": ("alpha",),
    "uniform": ("a", "b"),
    "gap": ("g1", "g2"),
    "piecewise": ("breakpoints", "masses", "start_exponents", "end_exponents"),
}
DEFAULT_FORMAT = {"simulate": "csv", "compensator": "csv", "copula": "json"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise SettingError("argv", message)


def build_parser():
    parser = _Parser(prog="pll", description="Scaled empirical point processes: simulation and checks.")
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")
    for name, keys in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"{name} subcommand")
        p.error = parser.error
        p.add_argument("--config", default=None, help="settings file (INI section or echoed output header)")
        for key in {**COMMON_KEYS, **keys}:
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=argparse.SUPPRESS)
    return parser


def _read_config_file(path, subcommand):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SettingError("config", f"cannot read {path}: {exc.strerror}") from exc
    first = text.lstrip().split("\n", 1)[0]
    header = None
    if first.startswith("{"):
        header = json.loads(first).get("config")
    elif first.startswith("# config:"):
        header = json.loads(first[len("# config:"):])
    if header is not None:
        header = dict(header)
        sc = header.pop("subcommand", subcommand)
        if sc != subcommand:
            raise SettingError("config", f"file was written by '{sc}', not '{subcommand}'")
        return {k: v for k, v in header.items() if v is not None}
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise SettingError("config", f"cannot parse {path}: {exc}") from exc
    out = {}
    for section in cp.sections():
        if section not in ("common", subcommand):
            if section in SUBCOMMANDS:
                continue
            raise SettingError("config", f"unknown section [{section}]")
        out.update(dict(cp.items(section)))
    return out


def resolve(subcommand, flags, environ=None):
    """Merge flags, config file, environment and defaults into a typed dict."""
    environ = os.environ if environ is None else environ
    spec = {**COMMON_KEYS, **SUBCOMMANDS[subcommand]}
    raw = {}
    config_path = flags.pop("config", None)
    if config_path:
        raw.update(_read_config_file(config_path, subcommand))
    raw.update(flags)
    unknown = sorted(set(raw) - set(spec))
    if unknown:
        raise SettingError(unknown[0], f"unknown setting for '{subcommand}'")
    if "seed" not in raw and environ.get("PLL_SEED"):
        raw["seed"] = environ["PLL_SEED"]
    settings = {}
    for key, (conv, default) in spec.items():
        if key in raw and raw[key] is not None:
            try:
                settings[key] = conv(raw[key])
            except (TypeError, ValueError) as exc:
                raise SettingError(key, f"invalid value {raw[key]!r} ({exc})") from None
        else:
            settings[key] = default
    if settings["format"] is None:
        settings["format"] = DEFAULT_FORMAT.get(subcommand, "json")
    for key in REQUIRED[subcommand]:
        if settings.get(key) is None:
            hint = " (or PLL_SEED)" if key == "seed" else ""
            raise SettingError(key, f"missing required setting --{key.replace('_', '-')}{hint}")
    if settings["seed"] is not None and settings["seed"] < 0:
        raise SettingError("seed", "must be nonnegative")
    if settings["threads"] is not None and settings["threads"] < 1:
        raise SettingError("threads", "must be at least 1")
    return settings


def _model(settings):
    family = settings["model"]
    params = {"family": family}
    if settings.get("model_params"):
        params.update(settings["model_params"])
    for key in ("alpha", "a", "b", "g1", "g2"):
        if settings.get(key) is not None:
            params[key] = settings[key]
    missing = [name for name in MODEL_PARAMS[family] if name not in params]
    if family != "uniform" and missing:
        raise SettingError(missing[0], f"required for model '{family}'")
    try:
        return model_from_params(params)
    except TypeError as exc:
        raise SettingError("model_params", str(exc)) from None
    except PLLError as exc:
        raise SettingError(exc.context.get("key", "model"), str(exc)) from None


def _records_csv(records, stream):
    if not records:
        return
    writer = csv.DictWriter(stream, fieldnames=list(records[0]), lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in rec.items()})


def _emit_records(records, settings, stream):
    if settings["format"] == "json":
        for rec in records:
            stream.write(json.dumps(verify._jsonable(rec), sort_keys=True) + "\n")
    else:
        _records_csv(records, stream)


# ---------------------------------------------------------------------------
# subcommands: each writes its payload to ``stream`` and returns an exit code


def cmd_simulate(settings, stream):
    model = _model(settings)
    x = sample(model, settings["seed"], settings["n"], settings["rep"])
    proc = build_scaled_1d(x, model, settings["q"], settings["n"])
    if settings["format"] == "csv":
        to_csv(proc, stream)
    else:
        _emit_records([{"orthant": int(p < 0), "x1": float(p)} for p in proc.points], settings, stream)
    return EXIT_OK


def cmd_compensator(settings, stream):
    model = _model(settings)
    x = sample(model, settings["seed"], settings["n"], settings["rep"])
    anchor = float(model.quantile(settings["q"]))
    a_n, b_n = scaling_constants(model, anchor, settings["n"])
    path = exact_compensator_1d(x, model, anchor, a_n, b_n, settings["grid"])
    if settings["format"] == "csv":
        path.to_csv(stream)
    else:
        recs = [{"t": t, "value": v, "limit": lim} for t, v, lim in zip(path.grid, path.values, path.limit)]
        _emit_records(recs, settings, stream)
    return EXIT_OK


_VERIFY_ARGS = {"alpha": "alpha", "n": "n", "reps": "reps", "k": "k", "level": "level", "seed": "seed", "threads": "threads"}


def _verify_call(settings):
    fn = verify.SCENARIOS[settings["scenario"]]
    sig = inspect.signature(fn)
    kwargs = {}
    for key, param in _VERIFY_ARGS.items():
        if param not in sig.parameters:
            # seed and threads are harmless for deterministic scenarios
            if settings.get(key) is not None and key not in ("seed", "threads"):
                raise SettingError(key, f"not used by scenario '{settings['scenario']}'")
            continue
        if settings.get(key) is None:
            # echo the value actually used
            settings[key] = sig.parameters[param].default
        kwargs[param] = settings[key]
    if settings.get("rho") is None:
        if "rhos" in sig.parameters:
            settings["rho"] = list(sig.parameters["rhos"].default)
        elif "rho" in sig.parameters:
            settings["rho"] = [sig.parameters["rho"].default]
    if settings.get("rho") is not None:
        if "rhos" in sig.parameters:
            kwargs["rhos"] = tuple(settings["rho"])
        elif "rho" in sig.parameters:
            if len(settings["rho"]) != 1:
                raise SettingError("rho", "this scenario takes a single value")
            kwargs["rho"] = settings["rho"][0]
        else:
            raise SettingError("rho", f"not used by scenario '{settings['scenario']}'")
    return fn, kwargs


def cmd_verify(settings, stream):
    fn, kwargs = _verify_call(settings)
    reports = fn(**kwargs)
    records = [r.to_record() for r in reports]
    if settings["format"] == "json":
        for r in reports:
            stream.write(r.to_json() + "\n")
    else:
        flat = [{k: (json.dumps(verify._jsonable(v), sort_keys=True) if isinstance(v, dict) else v) for k, v in rec.items()} for rec in records]
        _records_csv(flat, stream)
    failed = [r.test_name for r in reports if r.passed is False]
    return EXIT_REJECTED if failed else EXIT_OK


def cmd_knn(settings, stream):
    model = _model(settings)
    k, t, n = settings["k"], settings["t"], settings["n"]
    if k < 1:
        raise SettingError("k", "must be at least 1")
    if settings["level"] is not None and k == 1:
        raise SettingError("level", "confidence intervals need k > 1")
    win = sample_around(model, settings["seed"], n, t, k, k, settings["rep"])
    est = knn.estimate(win.values, t, k, n, settings["level"])
    rec = est.to_record()
    if settings["format"] == "csv":
        ci = rec.pop("ci") or {}
        rec.update({"level": ci.get("level"), "ci_lower": ci.get("lower"), "ci_upper": ci.get("upper")})
    _emit_records([rec], settings, stream)
    return EXIT_OK


def cmd_gap_test(settings, stream):
    model = _model(settings)
    k, n = settings["k"], settings["n"]
    if k < 2:
        raise SettingError("k", "the gap test needs k >= 2")
    win = sample_around(model, settings["seed"], n, 0.0, 0, k, settings["rep"])
    stat, p = knn.lr_gap_test(win.values, k)
    _emit_records(
        [{"k": k, "n": n, "statistic": stat, "p_value": p, "decision": "reject" if p < 0.05 else "accept"}],
        settings,
        stream,
    )
    return EXIT_OK


def cmd_copula(settings, stream):
    rho = settings["rho"]
    try:
        cop = cop_mod.NormalCopula(rho)
    except PLLError as exc:
        raise SettingError("rho", str(exc)) from None
    if settings["mode"] == "tail":
        if not 0 < settings["x_min"] < settings["x_max"] <= 1:
            raise SettingError("x_min", "need 0 < x_min < x_max <= 1")
        if settings["x_points"] < 2:
            raise SettingError("x_points", "need at least 2 points")
        xs = np.geomspace(settings["x_min"], settings["x_max"], settings["x_points"])
        est = cop_mod.fit_tail_law(cop, xs, verify.TAIL_T_GRID)
        recs = [
            {"t1": t1, "t2": t2, "W": w, "exponent": est.exponent, "target_exponent": cop.tail_exponent}
            for (t1, t2), w in sorted(est.w.items())
        ]
        if settings["format"] == "json":
            stream.write(est.to_json() + "\n")
        else:
            _records_csv(recs, stream)
        return EXIT_OK
    if settings["seed"] is None:
        raise SettingError("seed", "missing required setting --seed (or PLL_SEED)")
    proc = cop_mod.extremes_process(cop, settings["seed"], settings["n"], settings["rep"])
    reach = settings["reach"]
    keep = np.all((proc.points >= -reach) & (proc.points <= 0), axis=1)
    pts = proc.points[keep]
    recs = [{"orthant": 3, "x1": float(p[0]), "x2": float(p[1])} for p in pts]
    if settings["format"] == "csv" and not recs:
        stream.write("orthant,x1,x2\n")
    _emit_records(recs, settings, stream)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "compensator": cmd_compensator,
    "verify": cmd_verify,
    "knn": cmd_knn,
    "gap-test": cmd_gap_test,
    "copula": cmd_copula,
}


def _header(subcommand, settings):
    cfg = {"subcommand": subcommand, **settings}
    cfg.pop("out", None)
    text = json.dumps(verify._jsonable(cfg), sort_keys=True)
    if settings["format"] == "json":
        return json.dumps({"config": json.loads(text)}, sort_keys=True) + "\n"
    return "# config: " + text + "\n"


def run(argv=None, environ=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if not ns.subcommand:
            raise SettingError("subcommand", f"choose one of {', '.join(COMMANDS)}")
        flags = {k: v for k, v in vars(ns).items() if k != "subcommand"}
        settings = resolve(ns.subcommand, flags, environ)
        buf = io.StringIO()
        code = COMMANDS[ns.subcommand](settings, buf)
    except SettingError as exc:
        stderr.write(f"pll: error: {exc}\n")
        return EXIT_INVALID
    except PLLError as exc:
        key = exc.context.get("key")
        where = f"{key}: " if key else ""
        stderr.write(f"pll: error: {where}[{exc.tag}] {exc}\n")
        return EXIT_INVALID
    payload = _header(ns.subcommand, settings) + buf.getvalue()
    if settings["out"] in (None, "-"):
        stdout.write(payload)
    else:
        with open(settings["out"], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)
    if code == EXIT_REJECTED:
        stderr.write("pll: verify: at least one check failed (see 'passed' fields)\n")
    return code


def main():
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = 0
    sys.exit(code)


if __name__ == "__main__":
    main()
