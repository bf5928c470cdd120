import math

import numpy as np
import pytest
from scipy import integrate, stats

from fdcran.config import SystemConfig, normalize
from fdcran.geometry import (apply_interference_region, disc_pair_distance_pdf,
                             interference_region_mask, path_loss,
                             path_loss_to_origin, realization_to_csv,
                             sample_realization)

NCFG = normalize(SystemConfig(lambda_=0.001, R=150.0, p_d=0.5))


def test_zero_density_gives_empty_lists():
    ncfg = normalize(SystemConfig(lambda_=0.0))
    real = sample_realization(ncfg, np.random.default_rng(0))
    assert real.n_dl == 0 and real.n_ul == 0


def test_all_downlink_when_p_is_one():
    ncfg = normalize(SystemConfig(p_d=1.0))
    real = sample_realization(ncfg, np.random.default_rng(1))
    assert real.n_ul == 0 and real.n_dl > 0


def test_point_count_matches_poisson_mean():
    # Poisson mean lambda*pi*R^2 = 0.001*pi*150^2 = 70.6858...; the sample
    # mean over n draws stays within 3*sqrt(mean/n).
    rng = np.random.default_rng(2)
    n = 100_000
    counts = np.array([sample_realization(NCFG, rng).n_dl
                       + sample_realization(NCFG, rng).n_ul
                       for _ in range(n // 2)])
    mean = NCFG.lambda_ * math.pi * NCFG.R ** 2
    assert mean == pytest.approx(70.68583470577035, rel=1e-12)
    assert abs(counts.mean() - mean) < 3.0 * math.sqrt(mean / counts.size)


def test_count_distribution_chi_square():
    rng = np.random.default_rng(3)
    n = 20_000
    counts = np.array([sample_realization(NCFG, rng).n_dl
                       + sample_realization(NCFG, rng).n_ul
                       for _ in range(n)])
    mean = NCFG.lambda_ * math.pi * NCFG.R ** 2
    lo, hi = int(mean - 4 * math.sqrt(mean)), int(mean + 4 * math.sqrt(mean))
    edges = list(range(lo, hi + 1))
    observed = np.array([(counts == k).sum() for k in edges], dtype=float)
    expected = np.array([stats.poisson.pmf(k, mean) for k in edges]) * n
    keep = expected > 5
    chi2 = float(np.sum((observed[keep] - expected[keep]) ** 2 / expected[keep]))
    dof = int(keep.sum()) - 1
    assert chi2 < stats.chi2.ppf(0.999, dof)


def test_thinning_means():
    rng = np.random.default_rng(4)
    n = 20_000
    dl_counts = np.array([sample_realization(NCFG, rng).n_dl for _ in range(n)])
    mean_dl = NCFG.p_d * NCFG.lambda_ * math.pi * NCFG.R ** 2
    assert abs(dl_counts.mean() - mean_dl) < 3.0 * math.sqrt(mean_dl / n)


def test_rotation_invariance_of_angles():
    rng = np.random.default_rng(5)
    pts = []
    for _ in range(4000):
        real = sample_realization(NCFG, rng)
        pts.append(real.dl_points)
        pts.append(real.ul_points)
    pts = np.concatenate(pts)
    angles = np.arctan2(pts[:, 1], pts[:, 0])
    observed, _ = np.histogram(angles, bins=24, range=(-math.pi, math.pi))
    chi2, p = stats.chisquare(observed)
    assert p > 1e-3


def test_interference_region_trivial_angles():
    pts = np.random.default_rng(6).uniform(-100, 100, size=(500, 2))
    anchor = np.array([50.0, 0.0])
    assert np.array_equal(apply_interference_region(pts, anchor, 0.0), pts)
    assert apply_interference_region(pts, anchor, math.pi).shape[0] == 0


def test_interference_region_hand_case():
    # Anchor on +x, half-angle pi/2: the point at angle pi/4 falls inside the
    # muted sector, the one at 3pi/4 survives.
    anchor = np.array([10.0, 0.0])
    pts = np.array([[math.cos(math.pi / 4), math.sin(math.pi / 4)],
                    [math.cos(3 * math.pi / 4), math.sin(3 * math.pi / 4)]])
    kept = apply_interference_region(pts, anchor, math.pi / 2)
    assert kept.shape == (1, 2)
    assert np.allclose(kept[0], pts[1])


def test_interference_region_removed_fraction():
    rng = np.random.default_rng(7)
    phi = math.pi / 3
    total, removed = 0, 0
    for _ in range(300):
        real = sample_realization(NCFG, rng)
        if real.n_ul == 0 or real.n_dl == 0:
            continue
        anchor = real.ul_points[0]
        mask = interference_region_mask(real.dl_points, anchor, phi)
        total += mask.size
        removed += int((~mask).sum())
    frac = removed / total
    sigma = math.sqrt(frac * (1 - frac) / total)
    assert abs(frac - phi / math.pi) < 4 * sigma + 1e-3


def test_interference_region_validation():
    pts = np.zeros((3, 2))
    with pytest.raises(ValueError):
        interference_region_mask(pts, np.array([1.0, 0.0]), -0.1)
    with pytest.raises(ValueError):
        interference_region_mask(pts, np.array([1.0, 0.0]), 3.2)
    with pytest.raises(ValueError):
        interference_region_mask(pts, np.zeros(2), 0.5)


def test_path_loss_values():
    assert path_loss([0, 0], [10, 0], 3.0) == pytest.approx(1e-3, rel=1e-12)
    assert path_loss([0, 0], [0, 1], 5.7) == 1.0
    # 150^-3 = 2.962962...e-7
    assert path_loss([0, 0], [150, 0], 3.0) == pytest.approx(
        2.962962962962963e-07, rel=1e-12)


def test_path_loss_floor_guards_singularity():
    val = path_loss([1.0, 1.0], [1.0, 1.0], 3.0)
    assert val == pytest.approx(1e-6 ** -3.0)
    assert np.isfinite(path_loss_to_origin(np.zeros((1, 2)), 3.0)).all()


def test_disc_pair_pdf_endpoints_and_normalization():
    R = 37.0
    assert disc_pair_distance_pdf(0.0, R) == 0.0
    assert disc_pair_distance_pdf(-1.0, R) == 0.0
    assert disc_pair_distance_pdf(2 * R + 1e-9, R) == 0.0
    total, _ = integrate.quad(lambda r: disc_pair_distance_pdf(r, R), 0, 2 * R,
                              epsabs=1e-12, epsrel=1e-12)
    assert abs(total - 1.0) < 1e-9


def test_disc_pair_pdf_matches_uniform_pairs():
    rng = np.random.default_rng(8)
    R = 50.0
    n = 1_000_000
    def draw(n):
        r = R * np.sqrt(rng.random(n))
        a = 2 * math.pi * rng.random(n)
        return np.column_stack((r * np.cos(a), r * np.sin(a)))
    d = np.linalg.norm(draw(n) - draw(n), axis=1)
    d.sort()
    # cdf by quadrature on a grid, interpolated at the sample points
    grid = np.linspace(0, 2 * R, 2001)
    pdf = disc_pair_distance_pdf(grid, R)
    cdf = integrate.cumulative_trapezoid(pdf, grid, initial=0.0)
    F = np.interp(d, grid, cdf)
    i = np.arange(1, n + 1)
    ks = max(np.max(np.abs(i / n - F)), np.max(np.abs((i - 1) / n - F)))
    assert ks < 0.01


def test_realization_csv_dump(tmp_path):
    rng = np.random.default_rng(9)
    real = sample_realization(NCFG, rng)
    path = tmp_path / "real.csv"
    realization_to_csv(real, str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x,y,role"
    assert len(lines) == 1 + real.n_dl + real.n_ul
    roles = {line.split(",")[2] for line in lines[1:]}
    assert roles <= {"UL", "DL"}
