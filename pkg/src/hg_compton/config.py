"""Run configuration: a line-oriented ``section.key = value`` document.

Example::

    beam.k_keV = 500
    beam.w0_pm = 25
    beam.nx = 1
    beam.ny = 0
    scan.mode = angular
    scan.theta_pi = 0.1, 0.5, 0.9

Lists are comma separated.  ``#`` starts a comment.  Angles are given in
units of pi.
"""

from dataclasses import dataclass, field, fields, replace
import math
import numbers

from .core import MAX_HERMITE_ORDER
from .errors import ParseError, ValidationError

MODES = ("angular", "spectrum", "validate", "kn-reference")
FORMATS = ("csv", "json")
UNITS = ("natural", "barn")

REQUIRED = object()


def _float(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("not finite")
    return value


def _int(text):
    try:
        return int(text)
    except ValueError:
        value = float(text)
        if value != int(value):
            raise
        return int(value)


def _floats(text):
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(_float(t) for t in items)


def _choice(options):
    def parse(text):
        if text not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return text

    return parse


def _str(text):
    if not text:
        raise ValueError("empty")
    return text


# (key, attribute, parser, default)
SCHEMA = (
    ("beam.k_keV", "k_keV", _float, REQUIRED),
    ("beam.w0_pm", "w0_pm", _float, REQUIRED),
    ("beam.nx", "nx", _int, REQUIRED),
    ("beam.ny", "ny", _int, REQUIRED),
    ("scan.mode", "mode", _choice(MODES), REQUIRED),
    ("scan.theta_pi", "theta_pi", _floats, (0.1, 0.5, 0.9)),
    ("scan.phi_pi", "phi_pi", _floats, (0.0, 0.25, 0.5)),
    ("scan.deltaE_keV", "deltaE_keV", _floats, (0.0,)),
    ("scan.E_half_width_keV", "E_half_width_keV", _float, 5.0),
    ("scan.E_step_keV", "E_step_keV", _float, 0.02),
    ("scan.rel_floor", "rel_floor", _float, 0.02),
    ("validate.instances", "instances", _int, 20),
    ("validate.seed", "seed", _int, 1),
    ("quad.tol", "tol", _float, 1e-6),
    ("quad.max_subdivisions", "max_subdivisions", _int, 4000),
    ("quad.order", "order", _int, 32),
    ("oracle.eta_keV", "eta_keV", _float, 0.05),
    ("output.path", "out_path", _str, "hg_compton.csv"),
    ("output.format", "format", _choice(FORMATS), "csv"),
    ("output.units", "units", _choice(UNITS), "natural"),
    ("run.threads", "threads", _int, 1),
)
_BY_KEY = {key: (attr, parse, default) for key, attr, parse, default in SCHEMA}


@dataclass(frozen=True)
class RunConfig:
    k_keV: float
    w0_pm: float
    nx: int
    ny: int
    mode: str
    theta_pi: tuple = (0.1, 0.5, 0.9)
    phi_pi: tuple = (0.0, 0.25, 0.5)
    deltaE_keV: tuple = (0.0,)
    E_half_width_keV: float = 5.0
    E_step_keV: float = 0.02
    rel_floor: float = 0.02
    instances: int = 20
    seed: int = 1
    tol: float = 1e-6
    max_subdivisions: int = 4000
    order: int = 32
    eta_keV: float = 0.05
    out_path: str = "hg_compton.csv"
    format: str = "csv"
    units: str = "natural"
    threads: int = 1
    # keys filled from defaults while parsing; not part of the configuration
    defaults_applied: tuple = field(default=(), compare=False)

    def __post_init__(self):
        validate(self)

    def with_overrides(self, **changes):
        """Replace fields by attribute name; ``None`` values are ignored."""
        changes = {k: v for k, v in changes.items() if v is not None}
        if not changes:
            return self
        overridden = {key for key, attr, _, _ in SCHEMA if attr in changes}
        applied = tuple(k for k in self.defaults_applied if k not in overridden)
        return replace(self, **changes, defaults_applied=applied)


def _check(cond, key, message):
    if not cond:
        raise ValidationError(key, message)


def validate(cfg):
    _check(cfg.k_keV > 0, "beam.k_keV", "must be > 0")
    _check(cfg.w0_pm > 0, "beam.w0_pm", "must be > 0")
    for key, n in (("beam.nx", cfg.nx), ("beam.ny", cfg.ny)):
        _check(0 <= n <= MAX_HERMITE_ORDER, key, f"must lie in [0, {MAX_HERMITE_ORDER}]")
    _check(cfg.mode in MODES, "scan.mode", f"must be one of {', '.join(MODES)}")
    _check(all(0 < t < 1 for t in cfg.theta_pi), "scan.theta_pi", "each value must lie in (0, 1)")
    _check(all(0 <= p < 2 for p in cfg.phi_pi), "scan.phi_pi", "each value must lie in [0, 2)")
    _check(cfg.E_half_width_keV > 0, "scan.E_half_width_keV", "must be > 0")
    _check(0 < cfg.E_step_keV <= cfg.E_half_width_keV, "scan.E_step_keV", "must lie in (0, E_half_width_keV]")
    _check(0 < cfg.rel_floor < 0.5, "scan.rel_floor", "must lie in (0, 0.5)")
    _check(cfg.instances >= 1, "validate.instances", "must be >= 1")
    _check(0 < cfg.tol < 1, "quad.tol", "must lie in (0, 1)")
    _check(cfg.max_subdivisions >= 1, "quad.max_subdivisions", "must be >= 1")
    _check(2 <= cfg.order <= 256, "quad.order", "must lie in [2, 256]")
    _check(cfg.eta_keV > 0, "oracle.eta_keV", "must be > 0")
    _check(cfg.format in FORMATS, "output.format", f"must be one of {', '.join(FORMATS)}")
    _check(cfg.units in UNITS, "output.units", f"must be one of {', '.join(UNITS)}")
    _check(cfg.threads >= 1, "run.threads", "must be >= 1")


def parse_config(text):
    """Parse and validate a configuration document into a :class:`RunConfig`."""
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParseError("missing key", lineno)
        if key in seen:
            raise ParseError(f"duplicate key {key!r}", lineno)
        if key not in _BY_KEY:
            raise ValidationError(key, f"unknown key (allowed: {', '.join(_BY_KEY)})")
        seen[key] = value

    kwargs = {}
    applied = []
    for key, attr, parse, default in SCHEMA:
        if key not in seen:
            if default is REQUIRED:
                if key == "scan.mode":
                    raise ValidationError(key, f"missing; allowed modes: {', '.join(MODES)}")
                raise ValidationError(key, "missing required key")
            kwargs[attr] = default
            applied.append(key)
            continue
        try:
            kwargs[attr] = parse(seen[key])
        except ValueError as exc:
            raise ValidationError(key, f"invalid value {seen[key]!r}: {exc}") from None
    return RunConfig(**kwargs, defaults_applied=tuple(applied))


def _format_value(value):
    if isinstance(value, tuple):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, float):
        # float() drops numpy scalar reprs such as np.float64(...)
        return repr(float(value))
    if isinstance(value, numbers.Integral):
        return str(int(value))
    return str(value)


# execution-only keys: they never change results
EXECUTION_KEYS = ("run.threads",)


def config_items(cfg, execution=True):
    """(key, formatted value) pairs in schema order."""
    return [
        (key, _format_value(getattr(cfg, attr)))
        for key, attr, _, _ in SCHEMA
        if execution or key not in EXECUTION_KEYS
    ]


def serialize_config(cfg, execution=True):
    """Inverse of :func:`parse_config`; every key is written explicitly.

    With ``execution=False`` keys that cannot affect results are left out.
    """
    return "".join(f"{key} = {value}\n" for key, value in config_items(cfg, execution))


def config_attributes():
    return [f.name for f in fields(RunConfig) if f.name != "defaults_applied"]
