"""Small-scale fading draws for one network realization.

Per-RRH vectors are materialized eagerly; the inter-RRH matrices are drawn
lazily from counter-based Philox substreams keyed by the (ul, dl) index pair,
so concurrent or out-of-order access reproduces identical values.
"""

from __future__ import annotations

import numpy as np

from .config import NormalizedConfig
from .geometry import NetworkRealization

# Substream tags (Philox counter word 3). Tag 0 is the sequential draw stream.
_TAG_PAIR_MATRIX = 1
_TAG_CROSS_GAIN = 2


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly symmetric complex Gaussian entries with the given variance."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


class ChannelDraw:
    """All fading quantities for one realization.

    h[i]  : downlink M-vector of DL RRH i, CN(0, I)
    g[j]  : uplink M-vector of UL RRH j, CN(0, I)
    h_li  : residual loopback-interference coefficient, CN(0, sigma_li);
            |h_li|^2 is the received residual LI power over unit noise
    get_H : M x M inter-RRH matrix for a (ul, dl) pair, CN(0,1) entries
    cross_gain_matrix : effective |w_r^H H w_t|^2 draws (Exp(1)) for aggregate
            interference sums where the matrix itself is never needed
    """

    def __init__(self, h: np.ndarray, g: np.ndarray, h_li: complex,
                 M: int, stream_key: tuple[int, int]):
        self.h = h
        self.g = g
        self.h_li = h_li
        self.M = M
        self._key = stream_key
        self._pair_cache: dict[tuple[int, int], np.ndarray] = {}

    def _substream(self, tag: int, word1: int = 0, word2: int = 0) -> np.random.Generator:
        bits = np.random.Philox(key=self._key,
                                counter=[0, word1, word2, tag])
        return np.random.Generator(bits)

    def get_H(self, ul_idx: int, dl_idx: int) -> np.ndarray:
        """Inter-RRH channel matrix between UL RRH ul_idx and DL RRH dl_idx."""
        key = (int(ul_idx), int(dl_idx))
        mat = self._pair_cache.get(key)
        if mat is None:
            rng = self._substream(_TAG_PAIR_MATRIX, key[0] + 1, key[1] + 1)
            mat = complex_normal(rng, (self.M, self.M))
            self._pair_cache[key] = mat
        return mat

    def cross_gain_matrix(self, n_ul: int, n_dl: int) -> np.ndarray:
        """Unit-mean exponential gains for all (ul, dl) pairs at once.

        For unit beamformers independent of H, w_r^H H w_t is CN(0,1), so the
        squared magnitude is Exp(1); drawing the scalar directly is exact in
        distribution and avoids materializing n_ul*n_dl matrices. A pair must
        not consume both this draw and get_H.
        """
        rng = self._substream(_TAG_CROSS_GAIN)
        return rng.exponential(1.0, size=(n_ul, n_dl))


def draw_channels(realization: NetworkRealization, ncfg: NormalizedConfig,
                  rng: np.random.Generator) -> ChannelDraw:
    """Draw all per-RRH fading for a realization.

    Draw order is fixed (h block, g block, h_li, substream key) so that runs
    sharing a trial stream see identical channels regardless of which scheme
    or beamformer design consumes them.
    """
    M = ncfg.M
    h = complex_normal(rng, (realization.n_dl, M))
    g = complex_normal(rng, (realization.n_ul, M))
    h_li = complex(complex_normal(rng, (), ncfg.sigma_li)) if ncfg.sigma_li > 0 else 0j
    key = tuple(int(x) for x in rng.integers(0, 2 ** 63, size=2))
    return ChannelDraw(h=h, g=g, h_li=h_li, M=M, stream_key=key)
