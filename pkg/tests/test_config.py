import json
import math

import pytest

from fdcran.config import (ConfigError, SystemConfig, config_from_dict,
                           config_hash, config_to_dict, dbm_to_linear,
                           delta_exponent, delta_rational, linear_to_dbm,
                           load_config, normalize)


def test_defaults_are_valid():
    SystemConfig().validate()


@pytest.mark.parametrize("field,value", [
    ("mu", 2.0),
    ("mu", 1.5),
    ("p_d", 1.5),
    ("p_d", -0.1),
    ("phi", -0.2),
    ("phi", math.pi + 0.1),
    ("tau", 1.2),
    ("M", 0),
    ("lambda_", -1e-4),
    ("R", 0.0),
    ("trials", 0),
])
def test_invariant_violations_name_the_field(field, value):
    cfg = SystemConfig().replace(**{field: value})
    with pytest.raises(ConfigError) as err:
        cfg.validate()
    expected = "lambda" if field == "lambda_" else field
    assert err.value.field == expected


def test_normalize_equal_powers():
    ncfg = normalize(SystemConfig(P_b_dbm=23.0, noise_dbm=23.0))
    assert ncfg.P_b == 1.0


def test_normalize_seventy_db_gap():
    ncfg = normalize(SystemConfig(P_u_dbm=10.0, noise_dbm=-60.0))
    assert ncfg.P_u == pytest.approx(1e7, rel=1e-12)


def test_normalize_loopback_power():
    # 10^((-40 - (-60)) / 10) = 10^2, two exact decades.
    ncfg = normalize(SystemConfig(sigma_li_dbm=-40.0, noise_dbm=-60.0))
    assert ncfg.sigma_li == pytest.approx(100.0, rel=1e-12)


def test_normalize_monotone_and_decade_scaling():
    base = dbm_to_linear(7.0, -50.0)
    assert dbm_to_linear(17.0, -50.0) == pytest.approx(10.0 * base, rel=1e-12)
    levels = [dbm_to_linear(x, -50.0) for x in (-10.0, 0.0, 3.0, 14.0)]
    assert levels == sorted(levels)


def test_dbm_roundtrip():
    for dbm in (-97.3, -60.0, 0.0, 23.0, 41.7):
        lin = dbm_to_linear(dbm, -60.0)
        assert linear_to_dbm(lin, -60.0) == pytest.approx(dbm, abs=1e-12)


@pytest.mark.parametrize("mu,delta,frac", [
    (3.0, 2.0 / 3.0, (2, 3)),
    (4.0, 0.5, (1, 2)),
    (2.5, 0.8, (4, 5)),
])
def test_delta_values(mu, delta, frac):
    assert delta_exponent(mu) == pytest.approx(delta, rel=1e-12)
    m, n = delta_rational(mu)
    assert (m, n) == frac
    assert math.gcd(m, n) == 1


def test_delta_rejects_small_mu():
    with pytest.raises(ConfigError):
        delta_exponent(2.0)


def test_json_roundtrip(tmp_path):
    cfg = SystemConfig(lambda_=2e-3, M=4, seed=11)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(config_to_dict(cfg)))
    loaded = load_config(str(path))
    assert loaded == cfg


def test_json_unknown_key_rejected():
    with pytest.raises(ConfigError) as err:
        config_from_dict({"lambda": 1e-3, "bogus": 1})
    assert err.value.field == "bogus"


def test_json_lambda_key_maps_to_density():
    cfg = config_from_dict({"lambda": 5e-4})
    assert cfg.lambda_ == 5e-4


def test_config_hash_stable_and_sensitive():
    a = SystemConfig()
    b = SystemConfig()
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(a.replace(seed=2))
