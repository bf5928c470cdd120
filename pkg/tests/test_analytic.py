import math

import numpy as np
import pytest
from scipy import integrate

from fdcran import analytic as an
from fdcran.config import SystemConfig, normalize

from property_checks import check_cdf_validity

BASE = SystemConfig(lambda_=0.001, R=150.0, mu=3.0, M=2, p_d=0.5,
                    phi=math.pi / 3, P_b_dbm=10.0, P_u_dbm=10.0,
                    sigma_li_dbm=-30.0, noise_dbm=-60.0, seed=19)


def test_theta_trivial_zeros():
    assert an.theta(0.0, 1e-3, 0.5, 3, 0.6) == 0.0
    assert an.theta(0.4, 1e-3, math.pi, 3, 0.6) == 0.0


def test_theta_frozen_value():
    # 0.0005 * (2 pi / 3) * Gamma(11/3) / Gamma(3); the Gamma ratio is
    # 2.0061006510..., giving 2.1007836892e-3 (40-digit evaluation).
    val = an.theta(0.5, 0.001, math.pi / 3, 3, 2.0 / 3.0)
    assert val == pytest.approx(2.100783689183273e-3, rel=1e-12)


def test_cdf_best_gain_limits():
    assert an.cdf_best_gain(0.0, 1.0, 0.5) == 0.0
    assert an.cdf_best_gain(-3.0, 1.0, 0.5) == 0.0
    assert an.cdf_best_gain(1e12, 1e-3, 2 / 3) > 1 - 1e-6
    assert an.cdf_best_gain(5.0, 0.0, 2 / 3) == 1.0


def test_cdf_best_gain_against_simulation():
    ncfg = normalize(BASE)
    ks = an.lemma1_ks(ncfg, n_realizations=20_000, seed=4)
    assert ks < 0.02


def test_cdf_product_trivial_cases():
    assert an.cdf_product_zi(0.0, 3) == 0.0
    assert an.cdf_product_zi(-1.0, 2) == 0.0
    for t in (0.1, 1.0, 4.0):
        assert an.cdf_product_zi(t, 1) == pytest.approx(-math.expm1(-t), rel=1e-12)


def test_cdf_product_vectorized_matches_scalar():
    ts = np.geomspace(1e-4, 30.0, 60)
    many = an.cdf_product_zi_many(ts, 3)
    for t, v in zip(ts, many):
        assert v == pytest.approx(an.cdf_product_zi(t, 3), abs=1e-5)


def test_cdf_product_against_simulation():
    ks = an.lemma2_ks(3, n=20_000, seed=5)
    assert ks < 0.02


def test_empty_prob_trivial_and_frozen():
    assert an.empty_dl_prob(BASE.replace(phi=math.pi)) == 1.0
    assert an.empty_dl_prob(BASE.replace(lambda_=0.0)) == 1.0
    # exp(-0.0005 * (2 pi / 3) * 150^2) = 5.850289e-11 (40-digit evaluation).
    assert an.empty_dl_prob(BASE) == pytest.approx(5.8502893468e-11, rel=1e-9)


def test_frechet_mgf_limits_and_monotonicity():
    assert an.frechet_mgf(0.0, 2.0, 0.5) == 1.0
    assert an.frechet_mgf(1.0, 0.0, 0.5) == 1.0
    vals = [an.frechet_mgf(s, 3e-3, 2 / 3) for s in (0.1, 1.0, 10.0, 100.0)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert 0.0 < vals[-1] < 1.0


def test_frechet_mgf_against_sampling():
    rng = np.random.default_rng(6)
    theta_s, delta = 2.5e-3, 2.0 / 3.0
    x = (theta_s / rng.exponential(1.0, 400_000)) ** (1.0 / delta)
    for s in (0.5, 5.0):
        mgf = an.frechet_mgf(s, theta_s, delta)
        mc = np.mean(np.exp(-s * x))
        assert mgf == pytest.approx(float(mc), abs=4.0 * np.std(np.exp(-s * x)) / math.sqrt(x.size))


def test_expected_log_identity():
    # 40-digit quadrature of the tail identity at theta_s = 65.8.
    val, err = an.expected_log1p_best_gain(65.8, 2.0 / 3.0)
    assert val == pytest.approx(7.148233399076525, rel=1e-8)
    assert err < 1e-6


def test_ul_rate_zf_needs_two_antennas():
    with pytest.raises(Exception):
        an.ul_rate_zf(BASE.replace(M=1))


def test_ul_rate_zf_weight_collapses_at_full_sector():
    cfg = BASE.replace(phi=math.pi)
    ncfg = normalize(cfg)
    rate = an.ul_rate_zf(cfg)
    th = an.theta(1 - ncfg.p_d, ncfg.lambda_, 0.0, ncfg.M, ncfg.delta)
    full, _ = an.expected_log1p_best_gain(th * ncfg.P_u ** ncfg.delta, ncfg.delta)
    assert rate.value == pytest.approx(full, rel=1e-9)


def test_ul_rate_zf_vanishes_without_power():
    rate = an.ul_rate_zf(BASE.replace(P_u_dbm=-2000.0))
    assert rate.value < 1e-6


def test_zf_full_array_matches_reduced_matched_rate():
    # With a nearly empty protection sector the zero-forcing rate with M
    # antennas equals the interference-free matched rate with M - 1.
    cfg = BASE.replace(M=3, phi=0.0)
    zf = an.ul_rate_zf(cfg)
    reduced = an.ul_rate_mrc(cfg.replace(M=2, P_b_dbm=-2000.0))
    assert zf.value == pytest.approx(reduced.value, rel=2e-5)


def test_dl_rate_sra_trivial_zeros():
    assert an.dl_rate_sra(BASE.replace(P_b_dbm=-2000.0)).value < 1e-8
    assert an.dl_rate_sra(BASE.replace(p_d=0.0)).value == 0.0
    assert an.dl_rate_sra(BASE.replace(phi=math.pi)).value == 0.0


def test_dl_rate_sra_drowns_under_loopback():
    strong = an.dl_rate_sra(BASE.replace(sigma_li_dbm=80.0))
    weak = an.dl_rate_sra(BASE.replace(sigma_li_dbm=-80.0))
    assert strong.value < 0.02 * weak.value


def test_ul_rate_mrc_interference_free_limit():
    cfg = BASE.replace(P_b_dbm=-2000.0)
    ncfg = normalize(cfg)
    rate = an.ul_rate_mrc(cfg)
    th = an.theta(1 - ncfg.p_d, ncfg.lambda_, 0.0, ncfg.M, ncfg.delta)
    direct, _ = an.expected_log1p_best_gain(th * ncfg.P_u ** ncfg.delta, ncfg.delta)
    assert rate.value == pytest.approx(direct, rel=2e-5)


def test_beta_recip_mgf_values():
    assert an.beta_recip_mgf(0.0, 3) == 1.0
    for s in (0.4, 3.0, 50.0):
        assert an.beta_recip_mgf(s, 1) == pytest.approx(1.0 / (1.0 + s), rel=1e-12)
    for M in (2, 3, 4):
        for s in (1e-4, 0.05, 0.4, 2.0, 30.0, 1e4):
            oracle, _ = integrate.quad(
                lambda v: (M - 1) * (1 - v) ** (M - 2) / (1 + s * v), 0, 1,
                epsabs=1e-13, epsrel=1e-12)
            assert an.beta_recip_mgf(s, M) == pytest.approx(oracle, rel=1e-9), (M, s)


def test_dl_rate_ara_trivial_zero():
    assert an.dl_rate_ara(BASE.replace(p_d=0.0)).value == 0.0


def test_dl_rate_ara_approaches_single_rrh_in_sparse_limit():
    # With at most one RRH ever present the aggregate equals the best single
    # gain. The best-gain law is an unbounded-region limit carrying its own
    # near-zero mass, so the occupancy factor is divided back out, and the DL
    # power is kept low enough that gains at the disc edge are negligible.
    # Measured relative gap at density 1e-6: 1.5e-3.
    cfg = BASE.replace(lambda_=1e-6, M=1, sigma_li_dbm=-2000.0, P_b_dbm=-30.0)
    ara = an.dl_rate_ara(cfg)
    sra_unconditioned = an.dl_rate_sra(cfg).value / (1.0 - an.empty_dl_prob(cfg))
    assert ara.value == pytest.approx(sra_unconditioned, rel=0.01)


def test_rates_monotone_in_own_link_power():
    for maker, field in ((an.dl_rate_sra, "P_b_dbm"), (an.dl_rate_ara, "P_b_dbm"),
                         (an.ul_rate_zf, "P_u_dbm"), (an.ul_rate_mrc, "P_u_dbm")):
        values = [maker(BASE.replace(**{field: float(p)})).value
                  for p in (-10.0, 0.0, 10.0, 20.0, 30.0)]
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:])), maker.__name__


def test_cdf_validity_properties():
    check_cdf_validity(M=3)


def test_validate_report_structure():
    cfg = BASE.replace(phi=math.pi, P_b_dbm=-100.0, trials=400)
    rows = an.validate_report(cfg, ks_draws=20_000)
    assert [r["formula_id"] for r in rows] == list(an.FORMULA_IDS)
    assert all(r["verdict"] in ("PASS", "FAIL") for r in rows)
