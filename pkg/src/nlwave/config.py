"""Flat ``dotted.key = value`` run configuration.

Lines are ``key = value``; ``#`` starts a comment.  Values are Python
literals (numbers, quoted or bare strings) or call forms such as
``single_mode(2, 0.5)`` and ``ball(R=4, count=8, seed=1, mode_cutoff=4)``.
"""

from __future__ import annotations

import ast
import dataclasses
from dataclasses import dataclass, field

from .errors import ConstraintViolation, ParseError
from .spectral import min_quad

__all__ = ["Form", "RunConfig", "parse_config", "EXPERIMENTS"]

EXPERIMENTS = ("simulate", "ensemble", "decay_fit", "check_inequalities", "strichartz")

# call-form name -> positional parameter names
_G_FORMS = {"zero": (), "single_mode": ("index", "amplitude"), "seeded_random": ("seed", "norm")}
_INIT_FORMS = {
    "zero": (),
    "single_mode": ("index", "a", "adot"),
    "ball": ("R", "count", "seed", "mode_cutoff"),
}
_FORM_DEFAULTS = {
    ("g", "single_mode"): {"amplitude": 1.0},
    ("init", "single_mode"): {"adot": 0.0},
    ("init", "ball"): {"mode_cutoff": None},
}


@dataclass(frozen=True)
class Form:
    """A tagged value such as ``single_mode(index=2, amplitude=0.5)``."""

    kind: str
    args: dict = field(default_factory=dict)

    def __str__(self):
        if not self.args:
            return self.kind
        inner = ", ".join(f"{k}={v!r}" for k, v in self.args.items())
        return f"{self.kind}({inner})"


@dataclass(frozen=True)
class RunConfig:
    dim: int
    n_modes: int
    n_quad: int | None = None
    k: float = 1.0
    p: float = 2.0
    a: float = 0.0
    b: float = 1.0
    q: float = 3.0
    g: Form = Form("zero")
    dt: float = 1e-3
    t_end: float = 1.0
    record_every: int = 10
    scheme: str = "strang"
    init: Form = Form("zero")
    output_dir: str = "out"
    snapshots: str = "final"
    experiment: str = "simulate"
    rho: float = 1.0
    fit_start: float | None = None
    fit_end: float | None = None
    check_samples: int = 10_000
    check_seed: int = 0

    def with_seed(self, seed: int) -> RunConfig:
        """Replace every seed the run consumes by ``seed``."""
        g, init = self.g, self.init
        if "seed" in g.args:
            g = Form(g.kind, {**g.args, "seed": seed})
        if "seed" in init.args:
            init = Form(init.kind, {**init.args, "seed": seed})
        return dataclasses.replace(self, g=g, init=init, check_seed=seed)

    def seeds(self) -> dict[str, int]:
        out = {}
        if "seed" in self.g.args:
            out["model.g"] = self.g.args["seed"]
        if "seed" in self.init.args:
            out["init"] = self.init.args["seed"]
        if self.experiment == "check_inequalities":
            out["check.seed"] = self.check_seed
        return out

    def echo(self) -> dict:
        """Config as dotted keys, the form accepted by :func:`parse_config`."""
        out = {}
        for key, (attr, _) in _KEYS.items():
            v = getattr(self, attr)
            out[key] = str(v) if isinstance(v, Form) else v
        return out


def _int(key, v):
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            return int(v)
        raise ParseError(key, f"expected an integer, got {v!r}")
    return v


def _float(key, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(key, f"expected a number, got {v!r}")
    return float(v)


def _opt_float(key, v):
    return None if v in (None, "none") else _float(key, v)


def _str(key, v):
    if not isinstance(v, str):
        raise ParseError(key, f"expected a string, got {v!r}")
    return v


def _form(forms, slot):
    def conv(key, v):
        if isinstance(v, str):
            v = Form(v)
        if not isinstance(v, Form) or v.kind not in forms:
            raise ParseError(key, f"expected one of {sorted(forms)}, got {v}")
        names = forms[v.kind]
        args = dict(_FORM_DEFAULTS.get((slot, v.kind), {}))
        pos = v.args.get("__pos__", ())
        if len(pos) > len(names):
            raise ParseError(key, f"{v.kind} takes at most {len(names)} arguments")
        args.update(zip(names, pos))
        for name, val in v.args.items():
            if name == "__pos__":
                continue
            if name not in names:
                raise ParseError(key, f"{v.kind} has no argument {name!r}")
            args[name] = val
        missing = [n for n in names if n not in args]
        if missing:
            raise ParseError(key, f"{v.kind} missing argument(s) {missing}")
        return Form(v.kind, {n: args[n] for n in names})

    return conv


_KEYS = {
    "domain.dim": ("dim", _int),
    "domain.n_modes": ("n_modes", _int),
    "domain.n_quad": ("n_quad", lambda k, v: None if v in (None, "none") else _int(k, v)),
    "model.k": ("k", _float),
    "model.p": ("p", _float),
    "model.f.a": ("a", _float),
    "model.f.b": ("b", _float),
    "model.f.q": ("q", _float),
    "model.g": ("g", _form(_G_FORMS, "g")),
    "time.dt": ("dt", _float),
    "time.t_end": ("t_end", _float),
    "time.record_every": ("record_every", _int),
    "time.scheme": ("scheme", _str),
    "init": ("init", _form(_INIT_FORMS, "init")),
    "output.dir": ("output_dir", _str),
    "output.snapshots": ("snapshots", _str),
    "experiment": ("experiment", _str),
    "ensemble.rho": ("rho", _float),
    "decay.fit_start": ("fit_start", _opt_float),
    "decay.fit_end": ("fit_end", _opt_float),
    "check.n_samples": ("check_samples", _int),
    "check.seed": ("check_seed", _int),
}


def _literal(key: str, text: str):
    try:
        node = ast.parse(text, mode="eval").body
    except SyntaxError:
        raise ParseError(key, f"cannot parse value {text!r}") from None
    try:
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
            pos = tuple(ast.literal_eval(a) for a in node.args)
            kw = {k.arg: ast.literal_eval(k.value) for k in node.keywords}
            return Form(node.func.id, {"__pos__": pos, **kw})
        if isinstance(node, ast.Name):
            return node.id
        return ast.literal_eval(node)
    except ValueError:
        raise ParseError(key, f"value {text!r} is not a literal") from None


def _check(cfg: RunConfig) -> None:
    def bad(key, bound):
        raise ConstraintViolation(key, bound)

    if cfg.dim not in (1, 2, 3):
        bad("domain.dim", "in {1, 2, 3}")
    if cfg.n_modes < 1:
        bad("domain.n_modes", ">= 1")
    if cfg.n_quad is not None and cfg.n_quad < min_quad(cfg.n_modes):
        bad("domain.n_quad", f">= ceil(3*n_modes/2) = {min_quad(cfg.n_modes)}")
    if cfg.k < 0:
        bad("model.k", ">= 0")
    if not cfg.p > 0:
        bad("model.p", "> 0")
    if cfg.b < 0:
        bad("model.f.b", ">= 0")
    if not 1 <= cfg.q:
        bad("model.f.q", ">= 1")
    if not cfg.q < 5:
        bad("model.f.q", "< 5")
    if not cfg.dt > 0:
        bad("time.dt", "> 0")
    if cfg.t_end < 0:
        bad("time.t_end", ">= 0")
    if cfg.record_every < 1:
        bad("time.record_every", ">= 1")
    if cfg.scheme not in ("strang", "lie"):
        bad("time.scheme", "in {strang, lie}")
    if cfg.experiment not in EXPERIMENTS:
        bad("experiment", f"in {set(EXPERIMENTS)}")
    if cfg.snapshots not in ("none", "final", "all"):
        bad("output.snapshots", "in {none, final, all}")
    if not cfg.rho > 0:
        bad("ensemble.rho", "> 0")
    if cfg.check_samples < 1:
        bad("check.n_samples", ">= 1")
    init = cfg.init.args
    if cfg.init.kind == "ball":
        if init["R"] < 0:
            bad("init", "ball radius R >= 0")
        if init["count"] < 1:
            bad("init", "ball count >= 1")
        mc = init["mode_cutoff"]
        if mc is not None and not 1 <= mc <= cfg.n_modes:
            bad("init", f"mode_cutoff in [1, {cfg.n_modes}]")
    if cfg.g.kind == "seeded_random" and cfg.g.args["norm"] < 0:
        bad("model.g", "norm >= 0")
    if cfg.experiment in ("ensemble", "decay_fit") and cfg.init.kind != "ball":
        bad("init", f"experiment {cfg.experiment} needs init = ball(...)")
    if cfg.experiment == "decay_fit":
        if cfg.init.args["count"] < 2:
            bad("init", "decay_fit needs ball count >= 2")
        fs, fe = cfg.fit_start, cfg.fit_end
        fe = cfg.t_end if fe is None else fe
        fs = fe / 10 if fs is None else fs
        if not 0 < fs < fe <= cfg.t_end:
            bad("decay.fit_start", "0 < fit_start < fit_end <= time.t_end")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document.

    Raises
    ------
    ParseError
        Malformed line, unknown or duplicate key, wrong value type.
    ConstraintViolation
        A value outside its documented range.
    """
    values = {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ParseError(key, "unknown key")
        if key in seen:
            raise ParseError(key, "duplicate key")
        seen.add(key)
        attr, conv = _KEYS[key]
        if conv is _str:
            values[attr] = value.strip("'\"")
        else:
            values[attr] = conv(key, _literal(key, value))
    for key in ("domain.dim", "domain.n_modes"):
        if _KEYS[key][0] not in values:
            raise ParseError(key, "required key missing")
    cfg = RunConfig(**values)
    _check(cfg)
    return cfg
