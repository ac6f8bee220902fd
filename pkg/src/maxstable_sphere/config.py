"""Run configuration: TOML sections ``model``, ``sim`` and ``verify``.

Schema (defaults in brackets)::

    [model]
    a = 0.5            # exactly one of: a | nu and step | phi
    nu = 0.7           #   a = exp(-nu * step)
    step = 1.0
    phi = 0.5          #   a = phi
    theta = 0.0        # rotation angle per unit time [0.0]
    axis = [0, 0, 1]   # rotation axis [e_z]
    kappa = 1.0        # vMF concentration in [0, 10] (required)
    intensity_mode = "exact"   # "exact" (rate 4 pi) or "unit" (rate 1)

    [sim]
    seed = 0           # 64-bit unsigned master seed [0]
    grid_n = 4096      # Fibonacci evaluation grid size
    eval_mode = "grid"         # "grid" (exact on the grid_n nodes) or "sphere" stopping
    n_jobs = 1         # worker threads; results never depend on it
    h0 = 1.0           # constant initial field for simulate-chain and couple
    probe = [0, 0, 1]

    [verify]
    gamma = 0.5
    R = 1.0
    replications = 10000
    drift_n = 100000
    epsilon = 1e-3
    delta = 1e-3
    horizon = 10
    h0 = 100.0         # constant start of the convergence experiment
    n_copies = 5
"""

import math
from dataclasses import dataclass, field, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .chain import ChainConfig, StationaryParams
from .geometry import KAPPA_MAX, UnitVec3
from .spectral import InnovationSpec

__all__ = ["ConfigError", "ModelSection", "SimSection", "VerifySection", "RunConfig",
           "parse_config", "parse_config_text", "apply_overrides"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key path."""


@dataclass(frozen=True)
class ModelSection:
    a: float
    theta: float = 0.0
    axis: tuple = (0.0, 0.0, 1.0)
    kappa: float = 1.0
    intensity_mode: str = "exact"
    nu: float = None
    step: float = None
    phi: float = None


@dataclass(frozen=True)
class SimSection:
    seed: int = 0
    grid_n: int = 4096
    eval_mode: str = "grid"
    n_jobs: int = 1
    h0: float = 1.0
    probe: tuple = (0.0, 0.0, 1.0)


@dataclass(frozen=True)
class VerifySection:
    gamma: float = 0.5
    R: float = 1.0
    replications: int = 10_000
    drift_n: int = 100_000
    epsilon: float = 1e-3
    delta: float = 1e-3
    horizon: int = 10
    h0: float = 100.0
    n_copies: int = 5


@dataclass(frozen=True)
class RunConfig:
    model: ModelSection
    sim: SimSection = field(default_factory=SimSection)
    verify: VerifySection = field(default_factory=VerifySection)

    def chain_config(self):
        m = self.model
        kw = dict(theta=m.theta, axis=UnitVec3(*m.axis), kappa=m.kappa,
                  innovation=InnovationSpec(intensity_mode=m.intensity_mode))
        if m.nu is not None:
            return ChainConfig.from_continuous(m.nu, m.step, **kw)
        if m.phi is not None:
            return ChainConfig.from_discrete(m.phi, **kw)
        return ChainConfig(a=m.a, **kw)

    def stationary_params(self):
        v = self.verify
        return StationaryParams.derive(self.chain_config(), v.epsilon, v.delta)

    @property
    def probe(self):
        return UnitVec3(*self.sim.probe)


_SECTIONS = {"model": ModelSection, "sim": SimSection, "verify": VerifySection}
_KINDS = {
    "model.a": float, "model.nu": float, "model.step": float, "model.phi": float,
    "model.theta": float, "model.axis": "vec", "model.kappa": float,
    "model.intensity_mode": str,
    "sim.seed": int, "sim.grid_n": int, "sim.eval_mode": str, "sim.n_jobs": int,
    "sim.h0": float, "sim.probe": "vec",
    "verify.gamma": float, "verify.R": float, "verify.replications": int,
    "verify.drift_n": int, "verify.epsilon": float, "verify.delta": float,
    "verify.horizon": int, "verify.h0": float, "verify.n_copies": int,
}


def _coerce(path, value):
    kind = _KINDS[path]
    if kind == "vec":
        if not isinstance(value, (list, tuple)) or len(value) != 3:
            raise ConfigError(f"{path}: expected a list of 3 numbers, got {value!r}")
        vec = tuple(_coerce_number(path, v, float) for v in value)
        if not all(math.isfinite(v) for v in vec) or vec == (0.0, 0.0, 0.0):
            raise ConfigError(f"{path}: expected a finite nonzero vector, got {value!r}")
        return vec
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    return _coerce_number(path, value, kind)


def _coerce_number(path, value, kind):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _range(path, ok, value, what):
    if not ok:
        raise ConfigError(f"{path}: {value!r} out of range ({what})")


def _validate(cfg):
    m, s, v = cfg.model, cfg.sim, cfg.verify
    choices = [name for name, present in
               (("a", m.a is not None), ("nu", m.nu is not None or m.step is not None),
                ("phi", m.phi is not None)) if present]
    if len(choices) != 1:
        raise ConfigError("model: exactly one of model.a, (model.nu, model.step) or "
                          f"model.phi must be given, got {choices or 'none'}")
    if m.a is not None:
        _range("model.a", 0.0 < m.a < 1.0, m.a, "0 < a < 1")
    if choices[0] == "nu":
        if m.nu is None or m.step is None:
            raise ConfigError("model.nu: model.nu and model.step must be given together")
        _range("model.nu", m.nu > 0.0 and math.isfinite(m.nu), m.nu, "nu > 0")
        _range("model.step", m.step > 0.0 and math.isfinite(m.step), m.step, "step > 0")
        a = math.exp(-m.nu * m.step)
        _range("model.nu", 0.0 < a < 1.0, m.nu, "exp(-nu * step) must lie in (0, 1)")
    if m.phi is not None:
        _range("model.phi", 0.0 < m.phi < 1.0, m.phi, "0 < phi < 1")
    _range("model.theta", math.isfinite(m.theta), m.theta, "finite")
    _range("model.kappa", 0.0 <= m.kappa <= KAPPA_MAX, m.kappa, f"0 <= kappa <= {KAPPA_MAX:g}")
    _range("model.intensity_mode", m.intensity_mode in ("exact", "unit"), m.intensity_mode,
           "exact or unit")
    _range("sim.seed", 0 <= s.seed < 2 ** 64, s.seed, "64-bit unsigned")
    _range("sim.grid_n", s.grid_n >= 1, s.grid_n, ">= 1")
    _range("sim.eval_mode", s.eval_mode in ("sphere", "grid"), s.eval_mode, "sphere or grid")
    _range("sim.n_jobs", s.n_jobs >= 1 or s.n_jobs == -1, s.n_jobs, ">= 1 or -1")
    _range("sim.h0", s.h0 > 0.0 and math.isfinite(s.h0), s.h0, "> 0")
    _range("verify.gamma", 0.0 < v.gamma < 1.0, v.gamma, "0 < gamma < 1")
    _range("verify.R", v.R > 0.0 and math.isfinite(v.R), v.R, "R > 0")
    _range("verify.replications", v.replications >= 1000, v.replications, ">= 1000")
    _range("verify.drift_n", v.drift_n >= 100, v.drift_n, ">= 100")
    _range("verify.epsilon", v.epsilon > 0.0, v.epsilon, "> 0")
    _range("verify.delta", 0.0 < v.delta < 1.0, v.delta, "0 < delta < 1")
    _range("verify.horizon", v.horizon >= 5, v.horizon, ">= 5")
    _range("verify.h0", v.h0 > 0.0 and math.isfinite(v.h0), v.h0, "> 0")
    _range("verify.n_copies", v.n_copies >= 1, v.n_copies, ">= 1")


def _build(doc):
    if not isinstance(doc, dict):
        raise ConfigError("config must be a table")
    sections = {}
    for name, table in doc.items():
        if name not in _SECTIONS:
            raise ConfigError(f"{name}: unknown section")
        if not isinstance(table, dict):
            raise ConfigError(f"{name}: expected a table")
        values = {}
        for key, value in table.items():
            path = f"{name}.{key}"
            if path not in _KINDS:
                raise ConfigError(f"{path}: unknown key")
            values[key] = _coerce(path, value)
        sections[name] = values
    model = dict(sections.get("model", {}))
    if "kappa" not in model:
        raise ConfigError("model.kappa: missing required key")
    model.setdefault("a", None)
    cfg = RunConfig(ModelSection(**model), SimSection(**sections.get("sim", {})),
                    VerifySection(**sections.get("verify", {})))
    _validate(cfg)
    if cfg.model.a is None:
        cfg = replace(cfg, model=replace(cfg.model, a=cfg.chain_config().a))
    return cfg


def parse_config_text(text, overrides=()):
    """Parse TOML text into a validated :class:`RunConfig`.

    ``overrides`` are ``"section.key=value"`` strings applied before
    validation; values use TOML syntax (bare words are taken as strings).
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None
    return _build(apply_overrides(doc, overrides))


def parse_config(path, overrides=()):
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), overrides)


def apply_overrides(doc, overrides):
    """Return a copy of the TOML document with ``section.key=value`` applied.

    Setting one of ``a``, ``nu``/``step`` or ``phi`` removes the others so
    that an override can switch parametrization.
    """
    doc = {k: dict(v) if isinstance(v, dict) else v for k, v in doc.items()}
    for item in overrides:
        path, sep, raw = item.partition("=")
        path = path.strip()
        if not sep or path.count(".") != 1:
            raise ConfigError(f"override {item!r}: expected section.key=value")
        section, key = path.split(".")
        try:
            value = tomllib.loads(f"v = {raw.strip()}")["v"]
        except tomllib.TOMLDecodeError:
            value = raw.strip()
        table = doc.setdefault(section, {})
        if not isinstance(table, dict):
            raise ConfigError(f"{section}: expected a table")
        if section == "model" and key in ("a", "nu", "step", "phi"):
            group = {"a": ("a",), "nu": ("nu", "step"), "step": ("nu", "step"), "phi": ("phi",)}
            for other in ("a", "nu", "step", "phi"):
                if other not in group[key]:
                    table.pop(other, None)
        table[key] = value
    return doc
