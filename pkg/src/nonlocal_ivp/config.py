"""TOML problem files and the two built-in example problems.

A problem file looks like::

    grid = 1024
    theta = 2.0
    tolerance = 1e-8
    solver = "perov"
    seed = 0

    [expressions]
    f1 = "0.25*sin(x) + a*y + t"
    f2 = "cos(a*x + 0.25*y) + 1"
    alpha = "0.125*sin(x(0.25) + y(0.25))"
    beta = "0.125*cos(x(0.25) + y(0.25))"

    [params]
    a = 0.1

    [lipschitz]
    a1 = 0.25
    ...

Every top-level key except ``[expressions]`` is optional; unknown keys are
rejected.  Without ``theta`` the weight comes from the theta search when
Lipschitz constants are declared and admit a contraction, else it is 2.
"""

from __future__ import annotations

import math
import sys
from dataclasses import fields
from importlib import resources

import numpy as np

from .errors import ConfigError, ExprError
from .expr import parse_scalar
from .hypotheses import find_theta
from .problem import CaratheodoryGrowthSpec, GrowthSpec, LipschitzSpec, ProblemSpec
from .space import nodes

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

TOP_LEVEL = {"grid", "theta", "tolerance", "solver", "seed", "max_iter",
             "expressions", "params", "lipschitz", "growth", "caratheodory"}
EXPRESSION_KEYS = ("f1", "f2", "alpha", "beta")
CARATHEODORY_KEYS = ("omega1", "omega2", "omega3", "omega4", "cap")
LIPSCHITZ_KEYS = tuple(f.name for f in fields(LipschitzSpec))
GROWTH_KEYS = tuple(f.name for f in fields(GrowthSpec))
BUILTIN_NAMES = ("ex1", "ex2", "ex2_strict")


def parse_config_text(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from None


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text)


def _section(doc, name, allowed, required=()):
    sec = doc.get(name)
    if sec is None:
        return None
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    unknown = sorted(set(sec) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(unknown)}")
    missing = [k for k in required if k not in sec]
    if missing:
        raise ConfigError(f"[{name}] is missing: {', '.join(missing)}")
    return sec


def _number(where, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where} must be a number, got {v!r}")
    return float(v)


def _integer(where, v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where} must be an integer, got {v!r}")
    return v


def problem_from_config(doc: dict, overrides: dict | None = None) -> ProblemSpec:
    """Build a validated ``ProblemSpec``; ``overrides`` may replace top-level
    keys and add or replace entries of ``params``."""
    doc = dict(doc)
    overrides = dict(overrides or {})
    extra_params = overrides.pop("params", {}) or {}
    doc.update({k: v for k, v in overrides.items() if v is not None})

    unknown = sorted(set(doc) - TOP_LEVEL)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    exprs = _section(doc, "expressions", EXPRESSION_KEYS, EXPRESSION_KEYS)
    if exprs is None:
        raise ConfigError("missing [expressions] section")
    params = dict(doc.get("params") or {})
    params.update(extra_params)
    params = {k: _number(f"params.{k}", v) for k, v in params.items()}

    kw = {}
    if "grid" in doc:
        kw["n_intervals"] = _integer("grid", doc["grid"])
    if "theta" in doc:
        kw["theta"] = _number("theta", doc["theta"])
    if "tolerance" in doc:
        kw["tolerance"] = _number("tolerance", doc["tolerance"])
    if "solver" in doc:
        kw["solver"] = str(doc["solver"])
    if "seed" in doc:
        kw["seed"] = _integer("seed", doc["seed"])
    if "max_iter" in doc:
        kw["max_iter"] = _integer("max_iter", doc["max_iter"])

    lip = _section(doc, "lipschitz", LIPSCHITZ_KEYS)
    if lip is not None:
        kw["declared_lipschitz"] = LipschitzSpec(**{k: _number(f"lipschitz.{k}", v) for k, v in lip.items()})
    gro = _section(doc, "growth", GROWTH_KEYS)
    if gro is not None:
        kw["declared_growth"] = GrowthSpec(**{k: _number(f"growth.{k}", v) for k, v in gro.items()})

    try:
        car = _section(doc, "caratheodory", CARATHEODORY_KEYS, CARATHEODORY_KEYS[:4])
        if car is not None:
            cap = car.get("cap", [100.0, 100.0])
            if not isinstance(cap, list) or len(cap) != 2:
                raise ConfigError("caratheodory.cap must be a list of two numbers")
            kw["caratheodory"] = CaratheodoryGrowthSpec.from_strings(
                *(str(car[k]) for k in CARATHEODORY_KEYS[:4]),
                cap=[_number("caratheodory.cap", c) for c in cap], params=params)
        if "theta" not in kw and "declared_lipschitz" in kw:
            best = find_theta(kw["declared_lipschitz"])
            if best.convergent:
                kw["theta"] = best.theta
        return ProblemSpec.from_strings(*(str(exprs[k]) for k in EXPRESSION_KEYS), params=params, **kw)
    except ExprError as exc:
        raise ConfigError(f"bad expression: {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# -----------------------------------------------------------------------------
# built-in examples
# -----------------------------------------------------------------------------

_ALPHA = "0.125*sin(x(0.25) + y(0.25))"
_BETA = "0.125*cos(x(0.25) + y(0.25))"


def _sup_of_forcing(src):
    """``max |g(t)|`` over a fine grid (exact for monotone or constant g)."""
    try:
        g = parse_scalar(src, set(), ("t",))
    except ExprError as exc:
        raise ConfigError(f"forcing term {src!r}: {exc}") from None
    vals = np.broadcast_to(g.evaluate({"t": nodes(4096)}), (4097,))
    sup = float(np.max(np.abs(vals)))
    if not math.isfinite(sup):
        raise ConfigError(f"forcing term {src!r} is not finite on [0, 1]")
    return sup


def builtin_config(name: str, a: float = 0.1, g: str = "t", h: str = "1") -> dict:
    """Config document for one of the built-in problems.

    ``ex1`` is the smooth, Lipschitz problem solved by certified iteration.
    ``ex2`` replaces the nonlinearities by ``x*sin(y/x)`` type terms, which
    have linear growth but are not Lipschitz near ``x = 0``; it runs in
    Picard mode.  ``ex2`` declares the growth constants that reproduce the
    ex1 matrix (``A = B = 1/8``), plus ``C2 = 1/8`` because ``beta`` does
    not vanish at the zero state.  ``ex2_strict`` instead bounds both
    functionals by the constant ``1/8``.
    """
    if name not in BUILTIN_NAMES:
        raise ConfigError(f"unknown example {name!r}; choose from {', '.join(BUILTIN_NAMES)}")
    a = float(a)
    doc = {"grid": 1024, "theta": 2.0, "tolerance": 1e-8, "seed": 0, "max_iter": 1000}
    if name == "ex1":
        doc["solver"] = "perov"
        doc["expressions"] = {
            "f1": f"0.25*sin(x) + a*y + ({g})",
            "f2": f"cos(a*x + 0.25*y) + ({h})",
            "alpha": _ALPHA,
            "beta": _BETA,
        }
        doc["params"] = {"a": a}
        doc["lipschitz"] = {"a1": 0.25, "b1": abs(a), "a2": abs(a), "b2": 0.25,
                            "A1": 0.125, "B1": 0.125, "A2": 0.125, "B2": 0.125}
        return doc

    c1, c2 = _sup_of_forcing(g), _sup_of_forcing(h)
    doc["solver"] = "picard"
    doc["expressions"] = {
        "f1": f"0.25*(x*sin(y/x)) + a*(y*sin(x/y)) + ({g})",
        "f2": f"a*(x*sin(y/x)) + 0.25*(y*sin(x/y)) + ({h})",
        "alpha": _ALPHA,
        "beta": _BETA,
    }
    doc["params"] = {"a": a}
    functional = ({"A1": 0.125, "B1": 0.125, "C1": 0.0, "A2": 0.125, "B2": 0.125, "C2": 0.125}
                  if name == "ex2" else
                  {"A1": 0.0, "B1": 0.0, "C1": 0.125, "A2": 0.0, "B2": 0.0, "C2": 0.125})
    doc["growth"] = {"a1": 0.25, "b1": abs(a), "c1": c1, "a2": abs(a), "b2": 0.25, "c2": c2, **functional}
    return doc


def shipped_config_path(name: str):
    """Path of the packaged TOML file for a built-in example."""
    return resources.files("nonlocal_ivp") / "configs" / f"{name}.toml"


# -----------------------------------------------------------------------------
# writing
# -----------------------------------------------------------------------------

def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot write {type(v).__name__} to TOML")


def format_config(doc: dict) -> str:
    """Serialise a config document (scalars first, then one table per section)."""
    lines = [f"{k} = {_toml_value(v)}" for k, v in doc.items() if not isinstance(v, dict)]
    for k, v in doc.items():
        if isinstance(v, dict):
            lines += ["", f"[{k}]"] + [f"{kk} = {_toml_value(vv)}" for kk, vv in v.items()]
    return "\n".join(lines) + "\n"
