"""Sectioned ``key = value`` run configuration.

Known sections and keys are listed in ``SCHEMA``; anything else is rejected
so typos surface as errors naming the offending field.  Command-line flags are
applied on top with ``Config.set``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .data import WindowSpec
from .errors import ConfigError, EMVJError
from .market import JUMP_COUPLING, JUMP_SAMPLING
from .params import REFERENCE_JUMPS, REFERENCE_MARKET, REFERENCE_THETA0, JumpParams, MarketParams, Theta
from .trainer import RunConfig

SCHEMA: dict[str, tuple[str, ...]] = {
    "run": ("seed", "out", "n_epochs", "T", "dt", "lam", "gamma", "r", "x0", "base_rates",
            "lr_start", "lr_end", "batch_size", "jump_sampling", "jump_coupling", "compensate",
            "test_variant"),
    "market": ("mu", "sigma"),
    "jumps": ("zeta", "mu_j", "sigma_j"),
    "theta0": ("mu", "sigma", "delta"),
    "fit": ("m_max", "restarts", "max_iters", "x_tol", "f_tol"),
    "simulate": ("n_paths", "kind", "s0"),
    "evaluate": ("mode", "gammas", "lam", "n_paths", "jump_sampling", "jump_coupling", "theta"),
    "backtest": ("lam_train", "lam_eval", "train_years", "eval_years", "n_paths", "rate_divisor",
                 "restarts"),
    "data": ("prices", "rates", "params", "date_column", "value_column", "rate_column"),
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass
class Config:
    values: dict[str, dict[str, str]] = field(default_factory=dict)
    source: str = "<defaults>"

    @classmethod
    def from_text(cls, text: str, source: str = "<string>") -> Config:
        parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                           comment_prefixes=("#", ";"))
        parser.optionxform = str  # keep key case (T)
        try:
            parser.read_string(text, source=source)
        except configparser.Error as exc:
            raise ConfigError(f"{source}: {exc}") from None
        cfg = cls(source=source)
        for section in parser.sections():
            for key, value in parser.items(section):
                cfg.set(section, key, value)
        return cfg

    @classmethod
    def load(cls, path) -> Config:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        return cls.from_text(path.read_text(encoding="utf-8"), source=str(path))

    def set(self, section: str, key: str, value) -> None:
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown field [{section}] {key}")
        self.values.setdefault(section, {})[key] = str(value).strip()

    def has(self, section: str, key: str | None = None) -> bool:
        if key is None:
            return bool(self.values.get(section))
        return key in self.values.get(section, {})

    def raw(self, section: str, key: str, default=None):
        return self.values.get(section, {}).get(key, default)

    # typed getters; errors name the field
    def _convert(self, section, key, default, conv, what):
        value = self.raw(section, key)
        if value is None:
            return default
        try:
            return conv(value)
        except (TypeError, ValueError):
            raise ConfigError(f"[{section}] {key}: expected {what}, got {value!r}") from None

    def get_float(self, section, key, default=None):
        return self._convert(section, key, default, float, "a number")

    def get_int(self, section, key, default=None):
        return self._convert(section, key, default, int, "an integer")

    def get_str(self, section, key, default=None):
        return self._convert(section, key, default, str, "a string")

    def get_bool(self, section, key, default=None):
        def conv(v):
            v = v.lower()
            if v in _TRUE:
                return True
            if v in _FALSE:
                return False
            raise ValueError(v)
        return self._convert(section, key, default, conv, "true/false")

    def get_floats(self, section, key, default=None):
        def conv(v):
            return tuple(float(x) for x in v.replace(",", " ").split())
        return self._convert(section, key, default, conv, "a list of numbers")

    def get_choice(self, section, key, choices, default):
        value = self.get_str(section, key, default)
        if value not in choices:
            raise ConfigError(f"[{section}] {key}: must be one of {', '.join(choices)}, got {value!r}")
        return value


def _build(what: str, factory, *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except EMVJError as exc:
        raise ConfigError(f"{what}: {exc}") from None


def seed(cfg: Config) -> int:
    return cfg.get_int("run", "seed", 0)


def run_config(cfg: Config) -> RunConfig:
    d = RunConfig()
    kwargs = dict(
        n_epochs=cfg.get_int("run", "n_epochs", d.n_epochs),
        T=cfg.get_float("run", "T", d.T),
        dt=cfg.get_float("run", "dt", d.dt),
        lam=cfg.get_float("run", "lam", d.lam),
        gamma=cfg.get_float("run", "gamma", d.gamma),
        r=cfg.get_float("run", "r", d.r),
        x0=cfg.get_float("run", "x0", d.x0),
        base_rates=cfg.get_floats("run", "base_rates", d.base_rates),
        lr_start=cfg.get_float("run", "lr_start", d.lr_start),
        lr_end=cfg.get_float("run", "lr_end", d.lr_end),
        master_seed=seed(cfg),
        batch_size=cfg.get_int("run", "batch_size", d.batch_size),
        jump_sampling=cfg.get_choice("run", "jump_sampling", JUMP_SAMPLING, d.jump_sampling),
        jump_coupling=cfg.get_choice("run", "jump_coupling", JUMP_COUPLING, d.jump_coupling),
        compensate=cfg.get_bool("run", "compensate", d.compensate),
        test_variant=cfg.get_choice("run", "test_variant", ("printed", "analytic"), d.test_variant),
    )
    return _build("[run]", RunConfig, **kwargs)


def environment(cfg: Config) -> tuple[MarketParams, JumpParams]:
    """Simulated market; unspecified values fall back to the reference calibration."""
    m, j = REFERENCE_MARKET, REFERENCE_JUMPS
    mp = _build("[market]", MarketParams, cfg.get_float("market", "mu", m.mu),
                cfg.get_float("market", "sigma", m.sigma))
    jp = _build("[jumps]", JumpParams, cfg.get_float("jumps", "zeta", j.zeta),
                cfg.get_float("jumps", "mu_j", j.mu_j), cfg.get_float("jumps", "sigma_j", j.sigma_j))
    return mp, jp


def theta0(cfg: Config) -> Theta:
    d = REFERENCE_THETA0
    return _build("[theta0]", Theta, cfg.get_float("theta0", "mu", d.mu),
                  cfg.get_float("theta0", "sigma", d.sigma), cfg.get_float("theta0", "delta", d.delta))


def window_spec(cfg: Config) -> WindowSpec:
    d = WindowSpec()
    return _build("[backtest]", WindowSpec, cfg.get_int("backtest", "train_years", d.train_years),
                  cfg.get_int("backtest", "eval_years", d.eval_years))


def uses_csv_data(cfg: Config) -> bool:
    return cfg.has("data", "prices") or cfg.has("data", "params")


def check_single_source(cfg: Config, want_csv: bool) -> None:
    """A run draws either from a simulated environment or from files, never both."""
    simulated = cfg.has("market") or cfg.has("jumps")
    files = uses_csv_data(cfg)
    if simulated and files:
        raise ConfigError("[data] files and a simulated [market]/[jumps] environment are both set; "
                          "give exactly one data source")
    if want_csv and not cfg.has("data", "prices"):
        raise ConfigError("[data] prices: required for this command")
    if want_csv is False and cfg.has("data", "prices"):
        raise ConfigError("[data] prices: this command uses a simulated environment")
