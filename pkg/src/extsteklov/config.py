"""Run configuration: defaults, key=value file parsing, validation.

A configuration is a flat set of typed keys mirroring the RunConfig field
names; values come from defaults, then an optional key=value file, then
command-line overrides, in that order.
"""

from dataclasses import dataclass, fields

from .energy import trace_critical_exponent


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass
class RunConfig:
    """Resolved parameters for one CLI run."""

    lam: float = 1.0
    mu: float = 1.0
    q: float = 1.5
    p: float = 3.0
    dim: int = 3
    lmax: int = 5
    kmax: int = 25
    quad_order: int = 0
    seed: int = 0
    threads: int = 1
    plot: bool = False
    out_dir: str = "."
    starts_per_rung: int = 12
    newton_tol: float = 1e-9
    newton_max_iter: int = 200
    hess_eps: float = 1e-10
    dedup_tol: float = 1e-6
    ascent_tol: float = 1e-10
    ascent_starts: int = 8
    include_s2: bool = False
    allow_supercritical: bool = False
    radius: tuple = (11.0,)
    mesh_nodes: int = 400
    mesh_grading: float = 1.15
    flow_tol: float = 1e-5
    flow_max_steps: int = 200000
    flow_t_init: float = 0.1


_FIELD_TYPES = {
    f.name: (f.type if isinstance(f.type, str) else f.type.__name__)
    for f in fields(RunConfig)
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(key, text):
    ftype = _FIELD_TYPES[key]
    text = text.strip()
    try:
        if ftype == "bool":
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if ftype == "int":
            return int(text)
        if ftype == "float":
            return float(text)
        if ftype == "tuple":
            vals = tuple(float(part) for part in text.split(",") if part.strip())
            if not vals:
                raise ValueError("empty list")
            return vals
        return text
    except ValueError as exc:
        raise ConfigError(f"config key '{key}': cannot parse {text!r} ({exc})")


def parse_config_file(path):
    """Read a key=value file; '#' starts a comment, blank lines are skipped."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(
                    f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}"
                )
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _FIELD_TYPES:
                raise ConfigError(f"{path}:{lineno}: unknown config key '{key}'")
            out[key] = value.strip()
    return out


def resolve_config(file_values=None, overrides=None):
    """Build a RunConfig from defaults, file values, and overrides."""
    cfg = RunConfig()
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if key not in _FIELD_TYPES:
                raise ConfigError(f"unknown config key '{key}'")
            setattr(cfg, key, _coerce(key, value) if isinstance(value, str)
                    else value)
    return cfg


def _positive(cfg, key):
    if not getattr(cfg, key) > 0:
        raise ConfigError(f"config key '{key}': must be positive, got "
                          f"{getattr(cfg, key)}")


def validate_config(cfg, command):
    """Check every precondition the command will rely on.

    Raises :class:`ConfigError` naming the offending key.
    """
    if int(cfg.dim) != cfg.dim or cfg.dim < 3:
        raise ConfigError(f"config key 'dim': the theory requires N >= 3, "
                          f"got {cfg.dim}")
    if cfg.lmax < 0:
        raise ConfigError(f"config key 'lmax': must be >= 0, got {cfg.lmax}")
    if cfg.kmax < 1:
        raise ConfigError(f"config key 'kmax': must be >= 1, got {cfg.kmax}")
    if cfg.quad_order < 0:
        raise ConfigError("config key 'quad_order': must be >= 0 "
                          "(0 selects the default)")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError(f"config key 'seed': must fit in 64 unsigned bits, "
                          f"got {cfg.seed}")
    if cfg.threads < 1:
        raise ConfigError(f"config key 'threads': must be >= 1, got "
                          f"{cfg.threads}")
    for key in ("newton_tol", "hess_eps", "dedup_tol", "ascent_tol",
                "flow_tol", "flow_t_init", "mesh_grading"):
        if getattr(cfg, key) < 0 or (key != "hess_eps"
                                     and getattr(cfg, key) == 0):
            raise ConfigError(f"config key '{key}': must be positive, got "
                              f"{getattr(cfg, key)}")
    if cfg.mesh_grading <= 1.0:
        raise ConfigError(f"config key 'mesh_grading': must exceed 1, got "
                          f"{cfg.mesh_grading}")
    for key in ("newton_max_iter", "starts_per_rung", "ascent_starts",
                "flow_max_steps", "mesh_nodes"):
        _positive(cfg, key)
    if cfg.mesh_nodes < 2:
        raise ConfigError(f"config key 'mesh_nodes': must be >= 2, got "
                          f"{cfg.mesh_nodes}")
    if any(r <= 1.0 for r in cfg.radius):
        raise ConfigError(f"config key 'radius': every truncation radius "
                          f"must exceed 1, got {cfg.radius}")

    if command in ("solve", "constants"):
        if not 1.0 < cfg.q < 2.0:
            raise ConfigError(f"config key 'q': must lie in (1, 2), got {cfg.q}")
        if not cfg.p > 2.0:
            raise ConfigError(f"config key 'p': must exceed 2, got {cfg.p}")
        crit = trace_critical_exponent(cfg.dim)
        if cfg.p >= crit and not cfg.allow_supercritical:
            raise ConfigError(
                f"config key 'p': {cfg.p} is at or above the critical trace "
                f"exponent {crit} for N = {cfg.dim}; set "
                "allow_supercritical = true to override")
        if cfg.dim != 3:
            raise ConfigError("config key 'dim': nonlinear solves are "
                              "implemented for N = 3 only")
    if command == "solve" and cfg.kmax < 4:
        raise ConfigError(f"config key 'kmax': the ladder scan needs K >= 4, "
                          f"got {cfg.kmax}")
    if command == "psteklov" and not 1.0 < cfg.p < cfg.dim:
        raise ConfigError(f"config key 'p': the flow requires 1 < p < N = "
                          f"{cfg.dim}, got {cfg.p}")
    if command == "spectrum" and cfg.dim == 3 and len(cfg.radius) != 1:
        raise ConfigError("config key 'radius': the spectrum table uses "
                          "exactly one truncation radius")
