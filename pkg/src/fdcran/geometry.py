"""Poisson point process sampling on the disc and distance utilities."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .config import NormalizedConfig

# Floor applied to inter-node distances to guard the path-loss singularity; a
# PPP point landing exactly on another has probability zero.
DISTANCE_FLOOR = 1e-6


@dataclass
class NetworkRealization:
    """One PPP draw: RRH positions split by role, user at the origin."""

    dl_points: np.ndarray  # (n_dl, 2)
    ul_points: np.ndarray  # (n_ul, 2)
    user: np.ndarray = field(default_factory=lambda: np.zeros(2))

    @property
    def n_dl(self) -> int:
        return self.dl_points.shape[0]

    @property
    def n_ul(self) -> int:
        return self.ul_points.shape[0]


def sample_realization(ncfg: NormalizedConfig, rng: np.random.Generator) -> NetworkRealization:
    """Draw RRH positions as a PPP(lambda) on the disc of radius R.

    Count is Poisson(lambda*pi*R^2); positions are uniform on the disc
    (radius via sqrt of a uniform); roles are i.i.d. Bernoulli(p_d).
    """
    mean_count = ncfg.lambda_ * math.pi * ncfg.R ** 2
    n = int(rng.poisson(mean_count))
    radii = ncfg.R * np.sqrt(rng.random(n))
    angles = 2.0 * math.pi * rng.random(n)
    points = np.column_stack((radii * np.cos(angles), radii * np.sin(angles)))
    is_dl = rng.random(n) < ncfg.p_d
    return NetworkRealization(dl_points=points[is_dl], ul_points=points[~is_dl])


def interference_region_mask(points: np.ndarray, ul_anchor: np.ndarray, phi: float) -> np.ndarray:
    """Boolean keep-mask: True for points outside the muted sector.

    The sector spans +-phi around the axis from the user (origin) through
    ul_anchor. phi = 0 keeps everything; phi = pi empties the disc.
    """
    if not 0.0 <= phi <= math.pi:
        raise ValueError(f"phi must lie in [0, pi], got {phi}")
    if np.allclose(ul_anchor, 0.0):
        raise ValueError("ul_anchor must not be the origin")
    if points.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    if phi == 0.0:
        return np.ones(points.shape[0], dtype=bool)
    axis = math.atan2(ul_anchor[1], ul_anchor[0])
    ang = np.arctan2(points[:, 1], points[:, 0]) - axis
    ang = np.abs((ang + math.pi) % (2.0 * math.pi) - math.pi)
    return ang > phi


def apply_interference_region(dl_points: np.ndarray, ul_anchor: np.ndarray, phi: float) -> np.ndarray:
    """Remove DL points whose angle from the user->anchor axis is within +-phi."""
    return dl_points[interference_region_mask(dl_points, ul_anchor, phi)]


def path_loss(x: np.ndarray, y: np.ndarray, mu: float) -> float:
    """Unbounded power-law path loss ||x - y||^(-mu) with a small distance floor."""
    d = float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    return max(d, DISTANCE_FLOOR) ** (-mu)


def path_loss_to_origin(points: np.ndarray, mu: float) -> np.ndarray:
    """Vectorized ||x||^(-mu) for an (n, 2) array of positions."""
    d = np.maximum(np.linalg.norm(points, axis=1), DISTANCE_FLOOR)
    return d ** (-mu)


def disc_pair_distance_pdf(r, R: float):
    """Density of the distance between two independent uniform points on a disc.

    f(r) = (2r/R^2) * [(2/pi) acos(r/(2R)) - (r/(pi R)) sqrt(1 - r^2/(4R^2))]
    on [0, 2R], zero outside.
    """
    r = np.asarray(r, dtype=float)
    inside = (r >= 0.0) & (r <= 2.0 * R)
    rr = np.where(inside, r, 0.0)
    x = np.clip(rr / (2.0 * R), 0.0, 1.0)
    val = (2.0 * rr / R ** 2) * ((2.0 / math.pi) * np.arccos(x)
                                 - (rr / (math.pi * R)) * np.sqrt(1.0 - x ** 2))
    out = np.where(inside, val, 0.0)
    return out if out.ndim else float(out)


def realization_to_csv(realization: NetworkRealization, path: str) -> None:
    """Dump a realization as rows of x, y, role for external plotting."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "role"])
        for pt in realization.ul_points:
            writer.writerow([f"{pt[0]:.9g}", f"{pt[1]:.9g}", "UL"])
        for pt in realization.dl_points:
            writer.writerow([f"{pt[0]:.9g}", f"{pt[1]:.9g}", "DL"])
