"""Transmit/receive beamformer designs for the selected RRH pair.

Designs: matched transmit (MRT), matched receive (MRC), zero-forcing receive,
the MMSE-type receive vector that maximizes the uplink SINR for a fixed
transmit vector, and the jointly optimal pair found by a one-dimensional
search over the uplink-gain loss conceded to the downlink beam.

The constrained subproblem (best downlink gain at a fixed uplink-gain loss)
is solved exactly: its stationary points form a one-parameter family in the
eigenbasis of the constraint form, and the feasibility condition reduces to a
polynomial equation whose real roots enumerate every candidate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_NORM_TOL = 1e-12


class DegenerateChannelError(ValueError):
    """A channel vector required to be nonzero vanished."""


class InfeasibilityError(ValueError):
    """The requested design is infeasible for the given antenna count."""


class InfeasibleAlphaError(ValueError):
    """Requested uplink-gain loss exceeds the attainable maximum."""


@dataclass
class BeamformerPair:
    """Unit-norm transmit (DL RRH) and receive (UL RRH) vectors."""

    w_t: np.ndarray
    w_r: np.ndarray


@dataclass
class OptimalSolveReport:
    alpha_star: float
    sum_rate: float
    iterations: int
    pair: BeamformerPair


def _unit(v: np.ndarray) -> np.ndarray:
    n = math.sqrt(float(np.real(np.vdot(v, v))))
    if n < _NORM_TOL:
        raise DegenerateChannelError("cannot normalize a (near-)zero vector")
    return v / n


def mrt(h: np.ndarray) -> np.ndarray:
    """Matched transmit beamformer h / ||h||."""
    return _unit(np.asarray(h, dtype=complex))


def mrc(g: np.ndarray) -> np.ndarray:
    """Matched receive combiner g / ||g||."""
    return _unit(np.asarray(g, dtype=complex))


def zf_receive(g: np.ndarray, H_ud: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Receive vector maximizing |w^H g| subject to w^H (H_ud h) = 0.

    Projects g onto the orthogonal complement of the interference direction
    H_ud h. Needs at least two antennas.
    """
    g = np.asarray(g, dtype=complex)
    if g.shape[0] < 2:
        raise InfeasibilityError("zero-forcing receive needs M >= 2 antennas")
    d = np.asarray(H_ud, dtype=complex) @ np.asarray(h, dtype=complex)
    nd = np.linalg.norm(d)
    if nd < _NORM_TOL:
        raise DegenerateChannelError("interference direction H_ud @ h is zero")
    d = d / nd
    proj = g - d * (np.vdot(d, g))
    if np.linalg.norm(proj) < _NORM_TOL:
        raise DegenerateChannelError("g lies in the interference direction")
    return _unit(proj)


def mmse_receive(g: np.ndarray, H_ud: np.ndarray, w_t: np.ndarray, a3: float) -> np.ndarray:
    """Receive vector maximizing the UL SINR for a fixed transmit vector.

    Proportional to (a3 u u^H + I)^{-1} g with u = H_ud w_t; evaluated via the
    rank-one inverse identity.
    """
    g = np.asarray(g, dtype=complex)
    if a3 < 0:
        raise ValueError("a3 must be nonnegative")
    u = np.asarray(H_ud, dtype=complex) @ np.asarray(w_t, dtype=complex)
    denom = 1.0 + a3 * float(np.real(np.vdot(u, u)))
    w = g - (a3 * np.vdot(u, g) / denom) * u
    return _unit(w)


def ul_gain_loss(w_t: np.ndarray, g: np.ndarray, H_ud: np.ndarray, a3: float) -> float:
    """Uplink effective-gain loss caused by transmit vector w_t.

    With the MMSE receive vector, the uplink SINR equals
    a2 (||g||^2 - loss) where loss = a3 |g^H H w|^2 / (1 + a3 w^H H^H H w).
    """
    u = np.asarray(H_ud, dtype=complex) @ np.asarray(w_t, dtype=complex)
    num = a3 * abs(np.vdot(g, u)) ** 2
    den = 1.0 + a3 * float(np.real(np.vdot(u, u)))
    return float(num / den)


def alpha_max(g: np.ndarray, H_ud: np.ndarray, a3: float) -> tuple[float, np.ndarray]:
    """Largest attainable uplink-gain loss and the transmit vector reaching it.

    Maximizing a rank-one generalized Rayleigh quotient: the maximizer is
    proportional to (I + a3 H^H H)^{-1} H^H g.
    """
    H = np.asarray(H_ud, dtype=complex)
    b = H.conj().T @ np.asarray(g, dtype=complex)
    if a3 == 0.0 or np.linalg.norm(b) < _NORM_TOL:
        # No coupling: any transmit vector causes zero loss.
        e = np.zeros(H.shape[1], dtype=complex)
        e[0] = 1.0
        return 0.0, e
    B = np.eye(H.shape[1], dtype=complex) + a3 * (H.conj().T @ H)
    x = np.linalg.solve(B, b)
    val = a3 * float(np.real(np.vdot(b, x)))
    return val, _unit(x)


def _constraint_polynomial(mu: np.ndarray, beta: np.ndarray, c: float) -> np.ndarray:
    """Ascending coefficients of sum_i (mu_i - c) beta_i prod_{j!=i} (1 + t mu_j)^2."""
    m = mu.size
    total = np.zeros(2 * m - 1)
    for i in range(m):
        coef = np.array([1.0])
        for j in range(m):
            if j != i:
                coef = np.convolve(coef, [1.0, 2.0 * mu[j], mu[j] ** 2])
        total[: coef.size] += (mu[i] - c) * beta[i] * coef
    return total


def _candidate_roots(mu: np.ndarray, beta: np.ndarray, c: float) -> list[float]:
    if mu.size == 2:
        # Quadratic with provably nonnegative discriminant.
        am = (mu[0] - c) * beta[0]
        bm = (mu[1] - c) * beta[1]
        a2c = am * mu[1] ** 2 + bm * mu[0] ** 2
        b1c = 2.0 * (am * mu[1] + bm * mu[0])
        c0c = am + bm
        if abs(a2c) < 1e-14 * max(abs(b1c), abs(c0c), 1e-300):
            return [] if abs(b1c) < 1e-300 else [-c0c / b1c]
        disc = max(b1c * b1c - 4.0 * a2c * c0c, 0.0)
        sq = math.sqrt(disc)
        # Numerically stable quadratic roots.
        q = -0.5 * (b1c + math.copysign(sq, b1c))
        roots = [q / a2c]
        if abs(q) > 1e-300:
            roots.append(c0c / q)
        return roots
    coeffs = _constraint_polynomial(mu, beta, c)
    scale = np.max(np.abs(coeffs))
    if scale == 0.0:
        return []
    coeffs = coeffs / scale
    # Trim numerically-zero leading coefficients before the companion solve.
    top = coeffs.size
    while top > 1 and abs(coeffs[top - 1]) < 1e-13:
        top -= 1
    if top <= 1:
        return []
    roots = np.polynomial.polynomial.polyroots(coeffs[:top])
    out = []
    for r in roots:
        if abs(r.imag) <= 1e-7 * (1.0 + abs(r.real)):
            out.append(float(r.real))
    return out


def _scan_roots(mu: np.ndarray, beta: np.ndarray, c: float) -> list[float]:
    """Bracketing fallback: bisect the rational constraint between its poles."""

    def psi(t: float) -> float:
        den = (1.0 + t * mu) ** 2
        good = den > 1e-300
        num = np.where(good, beta * mu / np.where(good, den, 1.0), 0.0)
        dd = np.where(good, beta / np.where(good, den, 1.0), 0.0)
        s = dd.sum()
        return float(num.sum() / s) if s > 0 else math.inf

    poles = sorted(-1.0 / m for m in mu if abs(m) > 1e-300)
    edges = [-1e9] + [p for p in poles] + [1e9]
    roots: list[float] = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        a, b = lo + 1e-9 * (1 + abs(lo)), hi - 1e-9 * (1 + abs(hi))
        if a >= b:
            continue
        ts = np.linspace(a, b, 257)
        vals = np.array([psi(t) - c for t in ts])
        sign = np.sign(vals)
        for k in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
            x0, x1 = ts[k], ts[k + 1]
            f0 = vals[k]
            for _ in range(80):
                xm = 0.5 * (x0 + x1)
                fm = psi(xm) - c
                if f0 * fm <= 0:
                    x1 = xm
                else:
                    x0, f0 = xm, fm
            roots.append(0.5 * (x0 + x1))
    return roots


class _LossConstrainedGain:
    """Solver for: maximize |h^H w|^2 over unit w at a fixed uplink-gain loss.

    The constraint ul_gain_loss(w) = alpha is equivalent to the quadratic form
    w^H (v v^H - alpha S) w = alpha / a3 with v = H^H g, S = H^H H. Stationary
    points satisfy w ~ (I + t C)^{-1} h; feasibility in the eigenbasis of C is
    a polynomial equation in t, solved exactly and screened. Instance state
    caches everything that does not depend on alpha.
    """

    def __init__(self, h: np.ndarray, g: np.ndarray, H_ud: np.ndarray, a3: float):
        self.h = np.asarray(h, dtype=complex)
        self.g = np.asarray(g, dtype=complex)
        self.H = np.asarray(H_ud, dtype=complex)
        self.a3 = float(a3)
        self.hn2 = float(np.real(np.vdot(self.h, self.h)))
        if self.hn2 < _NORM_TOL:
            raise DegenerateChannelError("zero downlink channel")
        self.gn2 = float(np.real(np.vdot(self.g, self.g)))
        self.v = self.H.conj().T @ self.g
        vn2 = float(np.real(np.vdot(self.v, self.v)))
        self.coupled = self.a3 > 0.0 and vn2 > _NORM_TOL
        if self.coupled:
            self.S = self.H.conj().T @ self.H
            self.vv = np.outer(self.v, self.v.conj())
            self.amax, self.w_amax = alpha_max(self.g, self.H, self.a3)
        else:
            self.S = None
            self.amax, self.w_amax = 0.0, None

    def zero_loss_solution(self) -> tuple[float, np.ndarray]:
        if not self.coupled:
            return self.hn2, mrt(self.h)
        vu = _unit(self.v)
        proj = self.h - vu * np.vdot(vu, self.h)
        if math.sqrt(float(np.real(np.vdot(proj, proj)))) < _NORM_TOL:
            # h parallel to v: any unit vector orthogonal to v attains gain 0.
            basis = np.eye(self.h.size, dtype=complex)
            cand = basis[int(np.argmin(np.abs(vu)))]
            w = _unit(cand - vu * np.vdot(vu, cand))
            return abs(np.vdot(self.h, w)) ** 2, w
        w = _unit(proj)
        return abs(np.vdot(self.h, w)) ** 2, w

    def solve(self, alpha: float) -> tuple[float, np.ndarray]:
        if not self.coupled:
            if alpha > 1e-12:
                raise InfeasibleAlphaError("no coupling: only alpha = 0 is feasible")
            return self.hn2, mrt(self.h)
        amax = self.amax
        if alpha < -1e-12 or alpha > amax * (1.0 + 1e-9) + 1e-15:
            raise InfeasibleAlphaError(
                f"alpha={alpha} outside the feasible range [0, {amax}]")
        if alpha >= amax * (1.0 - 1e-9):
            return abs(np.vdot(self.h, self.w_amax)) ** 2, self.w_amax
        if alpha <= amax * 1e-12:
            return self.zero_loss_solution()

        c = alpha / self.a3
        C = self.vv - alpha * self.S
        mu, vecs = np.linalg.eigh(C)
        scale = float(np.max(np.abs(mu)))
        mu_s = mu / scale
        c_s = c / scale
        eta = vecs.conj().T @ self.h
        beta = np.abs(eta) ** 2 / self.hn2

        roots = _candidate_roots(mu_s, beta, c_s)
        if not roots:
            roots = _scan_roots(mu_s, beta, c_s)

        # Assemble candidate vectors: stationary family, eigenvector touch
        # points, and the t -> inf limit w ~ C^{-1} h.
        cand_coeffs = []
        for t in roots:
            den = 1.0 + t * mu_s
            if np.all(np.abs(den) > 1e-12):
                cand_coeffs.append(eta / den)
        if np.all(np.abs(mu_s) > 1e-12):
            cand_coeffs.append(eta / mu_s)
        cand_cols = [vecs @ coeff for coeff in cand_coeffs]
        ctol = 1e-6 * scale + 1e-9 * abs(c)
        for i in range(mu.size):
            if abs(mu[i] - c) <= ctol:
                cand_cols.append(vecs[:, i])

        best_val, best_w = -1.0, None
        for w in cand_cols:
            n2 = float(np.real(np.vdot(w, w)))
            if n2 < _NORM_TOL:
                continue
            w = w / math.sqrt(n2)
            q = float(np.real(np.vdot(w, C @ w)))
            if abs(q - c) > ctol:
                continue
            val = abs(np.vdot(self.h, w)) ** 2
            if val > best_val:
                best_val, best_w = val, w

        if best_w is None:
            return self._bisect_fallback(alpha)
        return float(best_val), best_w

    def _bisect_fallback(self, alpha: float) -> tuple[float, np.ndarray]:
        # Walk from the zero-loss solution toward the loss maximizer; the loss
        # is continuous along the path so the level is always crossed.
        lo_w = self.zero_loss_solution()[1]
        hi_w = self.w_amax
        lo_t, hi_t = 0.0, 1.0
        for _ in range(200):
            mid = 0.5 * (lo_t + hi_t)
            w = _unit((1 - mid) * lo_w + mid * hi_w)
            if ul_gain_loss(w, self.g, self.H, self.a3) < alpha:
                lo_t = mid
            else:
                hi_t = mid
        w = _unit((1 - 0.5 * (lo_t + hi_t)) * lo_w + 0.5 * (lo_t + hi_t) * hi_w)
        return abs(np.vdot(self.h, w)) ** 2, w


def solve_f_alpha(alpha: float, h: np.ndarray, g: np.ndarray, H_ud: np.ndarray,
                  a3: float) -> tuple[float, np.ndarray]:
    """Maximum downlink gain |h^H w|^2 at uplink-gain loss exactly alpha.

    Returns the gain and the attaining unit transmit vector.
    """
    return _LossConstrainedGain(h, g, H_ud, a3).solve(alpha)


def sum_rate_of_pair(h: np.ndarray, g: np.ndarray, H_ud: np.ndarray,
                     a1: float, a2: float, a3: float, pair: BeamformerPair) -> float:
    """Achieved UL+DL sum rate (nats) for explicit unit beamformers."""
    dl = a1 * abs(np.vdot(h, pair.w_t)) ** 2
    num = a2 * abs(np.vdot(pair.w_r, g)) ** 2
    den = a3 * abs(np.vdot(pair.w_r, np.asarray(H_ud) @ pair.w_t)) ** 2 + 1.0
    return math.log1p(dl) + math.log1p(num / den)


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def solve_optimal_pair(h: np.ndarray, g: np.ndarray, H_ud: np.ndarray,
                       a1: float, a2: float, a3: float,
                       grid_points: int = 64, tol: float = 1e-6) -> OptimalSolveReport:
    """Jointly optimal transmit/receive pair maximizing the UL+DL sum rate.

    Sweeps the uplink-gain loss over a bracketing grid, refines the best
    bracket by golden section, and rebuilds the receive vector in closed form.
    The reported sum rate is re-evaluated from the returned pair.
    """
    h = np.asarray(h, dtype=complex)
    g = np.asarray(g, dtype=complex)
    H = np.asarray(H_ud, dtype=complex)
    if min(a1, a2, a3) < 0:
        raise ValueError("a1, a2, a3 must be nonnegative")
    gn2 = float(np.real(np.vdot(g, g)))

    def finish(alpha_star: float, w_t: np.ndarray, iters: int) -> OptimalSolveReport:
        w_r = mmse_receive(g, H, w_t, a3)
        pair = BeamformerPair(w_t=w_t, w_r=w_r)
        return OptimalSolveReport(
            alpha_star=alpha_star,
            sum_rate=sum_rate_of_pair(h, g, H, a1, a2, a3, pair),
            iterations=iters,
            pair=pair,
        )

    if h.size == 1:
        # A single antenna leaves only a phase choice, which no term sees.
        solver1 = _LossConstrainedGain(h, g, H, a3)
        return finish(min(solver1.amax, gn2), mrt(h), 0)

    solver = _LossConstrainedGain(h, g, H, a3)
    amax = solver.amax
    if not solver.coupled or amax <= 1e-15:
        return finish(0.0, mrt(h), 0)

    alpha_hi = min(amax, gn2)

    cache: dict[float, tuple[float, np.ndarray]] = {}

    def objective(alpha: float) -> float:
        alpha = min(max(alpha, 0.0), alpha_hi)
        hit = cache.get(alpha)
        if hit is None:
            hit = solver.solve(alpha)
            cache[alpha] = hit
        f_val = hit[0]
        return math.log1p(a1 * f_val) + math.log1p(a2 * max(gn2 - alpha, 0.0))

    # The unconstrained-DL loss level is always worth probing: the objective
    # is decreasing beyond it.
    loss_mrt = min(ul_gain_loss(mrt(h), g, H, a3), alpha_hi)
    grid = np.unique(np.append(np.linspace(0.0, alpha_hi, grid_points), loss_mrt))
    vals = np.array([objective(a) for a in grid])
    k = int(np.argmax(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]

    iters = grid.size
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = objective(x1), objective(x2)
    while hi - lo > tol:
        iters += 1
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = objective(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = objective(x2)

    candidates = [0.5 * (lo + hi), grid[k], loss_mrt, 0.0, alpha_hi]
    best_rate = -math.inf
    best_alpha = 0.0
    best_w = None
    for alpha in candidates:
        alpha = min(max(alpha, 0.0), alpha_hi)
        if alpha not in cache:
            cache[alpha] = solver.solve(alpha)
        w_t = cache[alpha][1]
        rate = sum_rate_of_pair(h, g, H, a1, a2, a3,
                                BeamformerPair(w_t, mmse_receive(g, H, w_t, a3)))
        if rate > best_rate:
            best_rate, best_alpha, best_w = rate, alpha, w_t
    # Re-anchor alpha at the realized loss of the winning transmit vector.
    realized = ul_gain_loss(best_w, g, H, a3)
    return finish(min(realized, amax), best_w, iters)


def _sphere_grid(n_polar: int) -> np.ndarray:
    """Unit complex 2-vectors (cos t, sin t e^{i p}) on a nested grid."""
    thetas = np.linspace(0.0, math.pi / 2.0, n_polar + 1)
    phases = np.linspace(0.0, 2.0 * math.pi, 2 * n_polar, endpoint=False)
    t, p = np.meshgrid(thetas, phases, indexing="ij")
    w = np.empty(t.shape + (2,), dtype=complex)
    w[..., 0] = np.cos(t)
    w[..., 1] = np.sin(t) * np.exp(1j * p)
    return w.reshape(-1, 2)


def _sphere_window(center_tp, half_t, half_p, n_polar: int) -> np.ndarray:
    t0, p0 = center_tp
    thetas = np.clip(np.linspace(t0 - half_t, t0 + half_t, n_polar + 1), 0.0, math.pi / 2.0)
    phases = np.linspace(p0 - half_p, p0 + half_p, 2 * n_polar)
    t, p = np.meshgrid(thetas, phases, indexing="ij")
    w = np.empty(t.shape + (2,), dtype=complex)
    w[..., 0] = np.cos(t)
    w[..., 1] = np.sin(t) * np.exp(1j * p)
    return w.reshape(-1, 2)


def brute_force_pair(h: np.ndarray, g: np.ndarray, H_ud: np.ndarray,
                     a1: float, a2: float, a3: float,
                     grid_density: int = 16, refine: int = 2) -> tuple[float, BeamformerPair]:
    """Exhaustive grid search over both unit spheres; M = 2 only.

    Global phase is factored out of each sphere. With refine = 0 the search
    uses the raw grid, and doubling grid_density yields a strict superset of
    points, so the best value is monotone along that chain.
    """
    h = np.asarray(h, dtype=complex)
    g = np.asarray(g, dtype=complex)
    H = np.asarray(H_ud, dtype=complex)
    if h.shape[0] != 2 or g.shape[0] != 2 or H.shape != (2, 2):
        raise InfeasibilityError("brute-force search supports M = 2 only")

    def search(wt_grid: np.ndarray, wr_grid: np.ndarray):
        dl = np.log1p(a1 * np.abs(wt_grid @ h.conj()) ** 2)
        Hwt = wt_grid @ H.T  # rows: H @ w_t
        ul_sig = a2 * np.abs(wr_grid @ g.conj()) ** 2
        cross = a3 * np.abs(wr_grid.conj() @ Hwt.T) ** 2
        total = np.log1p(ul_sig[:, None] / (cross + 1.0)) + dl[None, :]
        r, t = np.unravel_index(np.argmax(total), total.shape)
        return float(total[r, t]), int(t), int(r)

    def tp_of(w) -> tuple[float, float]:
        theta = math.atan2(abs(w[1]), abs(w[0]))
        phase = math.atan2((w[1] * np.conj(w[0])).imag, (w[1] * np.conj(w[0])).real)
        return theta, phase

    grid = _sphere_grid(grid_density)
    best, it, ir = search(grid, grid)
    wt, wr = grid[it], grid[ir]
    half_t, half_p = (math.pi / 2.0) / grid_density, math.pi / grid_density
    for _ in range(refine):
        wt_grid = _sphere_window(tp_of(wt), half_t, half_p, grid_density)
        wr_grid = _sphere_window(tp_of(wr), half_t, half_p, grid_density)
        cand, it, ir = search(wt_grid, wr_grid)
        if cand > best:
            best, wt, wr = cand, wt_grid[it], wr_grid[ir]
        half_t /= grid_density / 2.0
        half_p /= grid_density / 2.0
    return best, BeamformerPair(w_t=wt, w_r=wr)
