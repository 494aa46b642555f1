"""File formats: model / schedule / battery JSON inputs, CSV and JSON outputs.

Floats are written with 17 significant digits so every double round-trips.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from .correlation import Cosine, GaussBump, Identity, Indicator, One
from .dynamics import Constant, DampedOscillation, ExpDecay
from .model import MacroPoint, ModelConfig

TRAJECTORY_COLUMNS = ("tau", "mu", "sigma", "mu_dot", "sigma_dot", "speed")
CORRELATION_COLUMNS = ("tau", "r", "C")
FCURVE_COLUMNS = ("r", "F_closed", "F_bruteforce", "ratio", "argmax_a1", "argmax_a2")


class ConfigError(ValueError):
    """Malformed or unreadable input file."""


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _json_value(v, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None or isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return "%.17g" % v
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(x, indent, level + 1)}" for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        if len(v) == 0:
            return "[]"
        items = [pad + _json_value(x, indent, level + 1) for x in v]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def dumps_json(obj, indent: int = 2) -> str:
    """JSON text with 17-significant-digit floats."""
    return _json_value(obj, indent, 0) + "\n"


def dumps_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def read_csv(path_or_text, text: bool = False) -> dict:
    """Parse a CSV written by this package into {column: float array}."""
    content = path_or_text if text else open(path_or_text, newline="").read()
    reader = csv.reader(io.StringIO(content))
    header = next(reader)
    data = np.array([[float(x) for x in row] for row in reader if row], dtype=float).reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def write_output(text: str, path=None):
    """Write to stdout or atomically to ``path``."""
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def _number(d, key, where, default=None):
    if key not in d:
        if default is not None:
            return default
        raise ConfigError(f"{where}: missing key {key!r}")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: {key!r} must be a number")
    return float(v)


def _reject_unknown(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


MODEL_KEYS = ("mu", "sigma", "Sigma", "r", "symmetric")


def parse_model(d, where="model"):
    """Return (MacroPoint, ModelConfig). Model invariants raise InvalidArgumentError."""
    _reject_unknown(d, MODEL_KEYS, where)
    sym = d.get("symmetric", False)
    if not isinstance(sym, bool):
        raise ConfigError(f"{where}: 'symmetric' must be true or false")
    theta = MacroPoint(_number(d, "mu", where), _number(d, "sigma", where))
    cfg = ModelConfig(_number(d, "Sigma", where), _number(d, "r", where), sym)
    return theta, cfg


def load_model(path):
    return parse_model(_load_json(path), str(path))


def model_to_dict(theta: MacroPoint, cfg: ModelConfig) -> dict:
    return {"mu": theta.mu, "sigma": theta.sigma, "Sigma": cfg.Sigma, "r": cfg.r, "symmetric": cfg.symmetric}


def parse_schedule(d, where="schedule"):
    _reject_unknown(d, ("kind", "r0", "lambda", "alpha"), where)
    kind = d.get("kind")
    if kind == "constant":
        return Constant(_number(d, "r0", where))
    if kind == "expdecay":
        return ExpDecay(_number(d, "r0", where), _number(d, "lambda", where))
    if kind == "dampedosc":
        return DampedOscillation(_number(d, "r0", where), _number(d, "alpha", where), _number(d, "lambda", where, 0.0))
    raise ConfigError(f"{where}: 'kind' must be constant, expdecay or dampedosc")


def load_schedule(path):
    return parse_schedule(_load_json(path), str(path))


def schedule_to_dict(s) -> dict:
    if isinstance(s, Constant):
        return {"kind": "constant", "r0": s.r0}
    if isinstance(s, ExpDecay):
        return {"kind": "expdecay", "r0": s.r0, "lambda": s.lam}
    return {"kind": "dampedosc", "r0": s.r0, "alpha": s.alpha, "lambda": s.lam}


_FUNCTION_PARAMS = {
    "identity": (Identity, ()),
    "one": (One, ()),
    "cosine": (Cosine, ("omega",)),
    "gaussbump": (GaussBump, ("a", "s")),
    "indicator": (Indicator, ("a", "b")),
}


def parse_battery(items, where="battery"):
    if not isinstance(items, list) or not items:
        raise ConfigError(f"{where}: expected a non-empty JSON list")
    fs = []
    for k, d in enumerate(items):
        w = f"{where}[{k}]"
        if not isinstance(d, dict) or d.get("kind") not in _FUNCTION_PARAMS:
            raise ConfigError(f"{w}: 'kind' must be one of {sorted(_FUNCTION_PARAMS)}")
        cls, params = _FUNCTION_PARAMS[d["kind"]]
        _reject_unknown(d, ("var", "kind", *params), w)
        var = d.get("var")
        if isinstance(var, bool) or not isinstance(var, int):
            raise ConfigError(f"{w}: 'var' must be an integer 1..4")
        fs.append(cls(var, *(_number(d, p, w) for p in params)))
    return fs


def load_battery(path):
    return parse_battery(_load_json(path), str(path))


def battery_to_list(fs) -> list:
    out = []
    for f in fs:
        kind = next(k for k, (cls, _) in _FUNCTION_PARAMS.items() if type(f) is cls)
        d = {"var": f.var, "kind": kind}
        d.update({p: getattr(f, p) for p in _FUNCTION_PARAMS[kind][1]})
        out.append(d)
    return out
