"""Scenario configuration and dB/linear unit handling.

All downstream computations run in noise-normalized linear units: powers are
expressed as ratios to the noise power, which is therefore identically 1.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from fractions import Fraction


class ConfigError(ValueError):
    """Invalid configuration value; carries the offending field name."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class SystemConfig:
    """Scenario parameters in user-facing units (meters, dBm, radians).

    lambda_   : RRH density (RRH/m^2); JSON key is "lambda"
    R         : deployment disc radius (m)
    mu        : path-loss exponent, must exceed 2
    p_d       : probability an RRH serves the downlink
    phi       : interference-region half-angle (rad), in [0, pi]
    M         : antennas per RRH
    P_b_dbm   : downlink RRH transmit power (dBm)
    P_u_dbm   : user transmit power (dBm)
    sigma_li_dbm : residual loopback-interference power after cancellation
                   (dBm, same reference as the transmit powers)
    noise_dbm : noise power (dBm); free parameter, see README
    tau       : half-duplex downlink time fraction
    trials    : default Monte Carlo trial count
    seed      : RNG seed
    """

    lambda_: float = 0.001
    R: float = 150.0
    mu: float = 3.0
    p_d: float = 0.5
    phi: float = math.pi / 3
    M: int = 3
    P_b_dbm: float = 23.0
    P_u_dbm: float = 23.0
    sigma_li_dbm: float = -40.0
    noise_dbm: float = -60.0
    tau: float = 0.5
    trials: int = 20000
    seed: int = 1

    def validate(self) -> None:
        if not self.mu > 2:
            raise ConfigError("mu", f"path-loss exponent must exceed 2, got {self.mu}")
        if not 0.0 <= self.p_d <= 1.0:
            raise ConfigError("p_d", f"must lie in [0, 1], got {self.p_d}")
        if not 0.0 <= self.phi <= math.pi:
            raise ConfigError("phi", f"must lie in [0, pi], got {self.phi}")
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError("tau", f"must lie in [0, 1], got {self.tau}")
        if int(self.M) != self.M or self.M < 1:
            raise ConfigError("M", f"must be an integer >= 1, got {self.M}")
        if self.lambda_ < 0:
            raise ConfigError("lambda", f"density must be >= 0, got {self.lambda_}")
        if not self.R > 0:
            raise ConfigError("R", f"disc radius must be > 0, got {self.R}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError("trials", f"must be an integer >= 1, got {self.trials}")
        d = 2.0 / self.mu
        if not 0.0 < d < 1.0:
            raise ConfigError("mu", f"derived delta=2/mu must be in (0,1), got {d}")

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class NormalizedConfig:
    """SystemConfig with powers converted to linear ratios over unit noise."""

    lambda_: float
    R: float
    mu: float
    delta: float
    p_d: float
    phi: float
    M: int
    P_b: float
    P_u: float
    sigma_li: float
    tau: float
    trials: int
    seed: int


def dbm_to_linear(value_dbm: float, noise_dbm: float) -> float:
    """Power in dBm -> linear ratio relative to the noise power."""
    return 10.0 ** ((value_dbm - noise_dbm) / 10.0)


def linear_to_dbm(value_lin: float, noise_dbm: float) -> float:
    """Inverse of dbm_to_linear."""
    if value_lin <= 0:
        raise ValueError("linear power must be positive")
    return 10.0 * math.log10(value_lin) + noise_dbm


def normalize(config: SystemConfig) -> NormalizedConfig:
    """Validate and convert all dBm fields to noise-normalized linear units."""
    config.validate()
    return NormalizedConfig(
        lambda_=config.lambda_,
        R=config.R,
        mu=config.mu,
        delta=2.0 / config.mu,
        p_d=config.p_d,
        phi=config.phi,
        M=int(config.M),
        P_b=dbm_to_linear(config.P_b_dbm, config.noise_dbm),
        P_u=dbm_to_linear(config.P_u_dbm, config.noise_dbm),
        sigma_li=dbm_to_linear(config.sigma_li_dbm, config.noise_dbm),
        tau=config.tau,
        trials=int(config.trials),
        seed=int(config.seed),
    )


def delta_exponent(mu: float) -> float:
    """Stable-law exponent delta = 2/mu; requires mu > 2."""
    if not mu > 2:
        raise ConfigError("mu", f"path-loss exponent must exceed 2, got {mu}")
    return 2.0 / mu


def delta_rational(mu: float, max_denominator: int = 64) -> tuple[int, int]:
    """Rationalize delta = 2/mu as m/n with gcd(m, n) = 1.

    Only analytic closed forms need the integer pair; quadrature paths accept
    any real delta.
    """
    d = delta_exponent(mu)
    frac = Fraction(d).limit_denominator(max_denominator)
    return frac.numerator, frac.denominator


# JSON field names; "lambda" is a keyword so the dataclass attribute carries a
# trailing underscore.
_JSON_KEYS = {
    "lambda": "lambda_",
    "R": "R",
    "mu": "mu",
    "p_d": "p_d",
    "phi": "phi",
    "M": "M",
    "P_b_dbm": "P_b_dbm",
    "P_u_dbm": "P_u_dbm",
    "sigma_li_dbm": "sigma_li_dbm",
    "noise_dbm": "noise_dbm",
    "tau": "tau",
    "trials": "trials",
    "seed": "seed",
}
_ATTR_TO_JSON = {attr: key for key, attr in _JSON_KEYS.items()}


def config_from_dict(data: dict) -> SystemConfig:
    """Build a SystemConfig from a JSON-style dict; unknown keys rejected."""
    kwargs = {}
    for key, value in data.items():
        attr = _JSON_KEYS.get(key)
        if attr is None:
            raise ConfigError(key, "unknown configuration key")
        kwargs[attr] = value
    cfg = SystemConfig(**kwargs)
    cfg.validate()
    return cfg


def config_to_dict(config: SystemConfig) -> dict:
    return {_ATTR_TO_JSON[f.name]: getattr(config, f.name)
            for f in dataclasses.fields(config)}


def load_config(path: str) -> SystemConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration file must hold a JSON object")
    return config_from_dict(data)


def config_hash(config: SystemConfig) -> str:
    """Stable hex digest of the canonicalized configuration."""
    canon = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()
