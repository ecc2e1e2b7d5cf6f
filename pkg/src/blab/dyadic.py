"""Dyadic (Littlewood-Paley style) frequency decomposition on the grid.

The partition is built from a single smooth radial cutoff chi: chi is
identically 1 on [0, 3/4], identically 0 on [4/3, inf), and C-infinity in
between (the transition is the standard bump-function smoothstep). The
annulus profile is phi(r) = chi(r/2) - chi(r), supported in [3/4, 8/3].

Block multipliers on a grid with top shell index q_max:

* q = -1        chi(|k|)
* 0 <= q < q_max  phi(2^-q |k|)
* q = q_max     1 - chi(2^-q_max |k|)

The top shell absorbs everything above the last complete annulus, so the
blocks resolve the identity exactly on the whole lattice: reconstruction
and Bony-type identities hold to rounding error for every field, not just
asymptotically. For q < q_max the multiplier is the plain annulus profile.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Field, Grid
from .operators import lebesgue_norm


def _smoothstep(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t)."""
    t = np.asarray(t, dtype=np.float64)
    lo = t <= 0.0
    hi = t >= 1.0
    mid = ~(lo | hi)
    out = np.empty_like(t)
    out[lo] = 0.0
    out[hi] = 1.0
    tm = t[mid]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    out[mid] = a / (a + b)
    return out


#: Radii (r0, r1, r2) of the default profiles: phi is supported in
#: [r0 * 2^q, r2 * 2^q] and chi is supported in [0, r1].
PROFILE_RADII = (0.75, 4.0 / 3.0, 8.0 / 3.0)


def chi(r) -> np.ndarray:
    """Low-frequency cutoff profile: 1 on [0, 3/4], 0 on [4/3, inf)."""
    r = np.asarray(r, dtype=np.float64)
    r0, r1, _ = PROFILE_RADII
    return 1.0 - _smoothstep((r - r0) / (r1 - r0))


def phi(r) -> np.ndarray:
    """Annulus profile chi(r/2) - chi(r), supported in [3/4, 8/3]."""
    r = np.asarray(r, dtype=np.float64)
    return chi(r / 2.0) - chi(r)


class DyadicPartition:
    """Realization of the dyadic partition on one grid.

    Attributes
    ----------
    grid : Grid
    q_max : int
        Largest shell index; shells run over q in {-1, 0, ..., q_max}.
    chi, phi : callables
        The radial profiles (shared by all grids).
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        q_max = int(np.floor(np.log2(grid.dealias_radius))) - 1
        if q_max < 1:
            raise ValueError(
                f"grid too small to host shells {{-1, 0, 1}}: dealias radius "
                f"{grid.dealias_radius:.3g} gives q_max = {q_max}")
        self.q_max = q_max
        self.chi = chi
        self.phi = phi
        self._mult: dict[int, np.ndarray] = {}

    def shells(self) -> range:
        """Shell indices -1 .. q_max inclusive."""
        return range(-1, self.q_max + 1)

    def multiplier(self, q: int) -> np.ndarray:
        """Lattice realization of the shell-q block multiplier."""
        if not (-1 <= q <= self.q_max):
            raise ValueError(
                f"shell index {q} out of range [-1, {self.q_max}]")
        if q not in self._mult:
            r = self.grid.kmag
            if q == -1:
                m = chi(r)
            elif q < self.q_max:
                m = phi(r / 2.0 ** q)
            else:
                m = 1.0 - chi(r / 2.0 ** q)
            self._mult[q] = m
        return self._mult[q]

    def lowpass_multiplier(self, q: int) -> np.ndarray:
        """Multiplier of S_q = sum of blocks -1 .. q-1 (telescoped)."""
        if not (0 <= q <= self.q_max + 1):
            raise ValueError(
                f"low-pass index {q} out of range [0, {self.q_max + 1}]")
        if q == self.q_max + 1:
            return np.ones_like(self.grid.kmag)
        return chi(self.grid.kmag / 2.0 ** q)


def build_partition(grid: Grid) -> DyadicPartition:
    """Build the dyadic partition realizable on the given grid.

    q_max = floor(log2(dealias_fraction * Nyquist radius)) - 1; grids too
    small to host shells {-1, 0, 1} are rejected.
    """
    return DyadicPartition(grid)


def dyadic_block(f: Field, q: int, part: DyadicPartition) -> Field:
    """Frequency block Delta_q f."""
    if f.grid != part.grid:
        raise ValueError("field and partition live on different grids")
    g = f.grid
    return Field(g, g.to_values(part.multiplier(q) * g.to_coeffs(f.values)))


def low_pass(f: Field, q: int, part: DyadicPartition) -> Field:
    """Low-frequency truncation S_q f = sum of blocks -1 .. q-1.

    S_0 f is the chi block; S_{q_max + 1} f returns f itself (the blocks
    resolve the identity).
    """
    if f.grid != part.grid:
        raise ValueError("field and partition live on different grids")
    g = f.grid
    return Field(g, g.to_values(part.lowpass_multiplier(q)
                                * g.to_coeffs(f.values)))


@dataclass(frozen=True)
class BesovIndex:
    """Besov exponent triple (s, p, r) with the usual admissibility checks."""

    s: float
    p: float
    r: float

    def __post_init__(self):
        if not np.isfinite(self.s):
            raise ValueError(f"regularity s must be finite, got {self.s}")
        if not (self.p >= 1):
            raise ValueError(f"integrability p must be >= 1, got {self.p}")
        if not (self.r >= 1):
            raise ValueError(f"summation r must be >= 1, got {self.r}")


def _aggregate(values: np.ndarray, r: float) -> float:
    """l^r aggregation over shells (max for r = inf)."""
    if r == np.inf:
        return float(values.max()) if values.size else 0.0
    return float(np.sum(values ** r) ** (1.0 / r))


def besov_norm(f: Field, index: BesovIndex, part: DyadicPartition) -> float:
    """Discrete Besov norm: l^r over shells of 2^{qs} ||Delta_q f||_{L^p}.

    Shells are truncated at q_max, so this is the discrete Besov norm of
    the grid realization (documented; there is no frequency content above
    the top shell for dealiased fields).
    """
    vals = np.array([2.0 ** (q * index.s)
                     * lebesgue_norm(dyadic_block(f, q, part), index.p)
                     for q in part.shells()])
    return _aggregate(vals, index.r)


@dataclass
class BlockHistory:
    """Per-shell L^p norms of the blocks of an evolving field.

    values[i, j] is ||Delta_{shells[i]} u(times[j])||_{L^p}. Times must be
    strictly increasing and the matrix entries finite and non-negative.
    """

    shells: list[int]
    p: float
    times: list[float] = field(default_factory=list)
    values: list[np.ndarray] = field(default_factory=list)

    def append(self, t: float, shell_norms: np.ndarray) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError(
                f"times must be strictly increasing: {t} after {self.times[-1]}")
        shell_norms = np.asarray(shell_norms, dtype=np.float64)
        if shell_norms.shape != (len(self.shells),):
            raise ValueError("shell_norms length does not match shells")
        if not np.all(np.isfinite(shell_norms)) or np.any(shell_norms < 0):
            raise ValueError("shell norms must be finite and non-negative")
        self.times.append(float(t))
        self.values.append(shell_norms)

    def matrix(self) -> np.ndarray:
        return np.array(self.values).T if self.values else \
            np.zeros((len(self.shells), 0))

    @classmethod
    def record(cls, f: Field, part: DyadicPartition, p: float, t: float,
               history: "BlockHistory | None" = None) -> "BlockHistory":
        """Append the block norms of f at time t (creating the history)."""
        if history is None:
            history = cls(shells=list(part.shells()), p=p)
        norms = np.array([lebesgue_norm(dyadic_block(f, q, part), p)
                          for q in part.shells()])
        history.append(t, norms)
        return history


def _time_lp(series: np.ndarray, times: np.ndarray, rho: float) -> float:
    """L^rho norm in time by trapezoid quadrature (max for rho = inf)."""
    if rho == np.inf:
        return float(series.max()) if series.size else 0.0
    return float(np.trapezoid(series ** rho, times) ** (1.0 / rho))


def spacetime_besov(history: BlockHistory, index: BesovIndex, rho: float,
                    tilde: bool = True) -> float:
    """Space-time Besov norm over the recorded window.

    tilde=False integrates the instantaneous Besov norm in time first
    (L^rho in time of the l^r shell aggregate); tilde=True takes the
    per-shell time norm first (l^r over shells of L^rho in time). The two
    agree exactly when rho = r, and Minkowski's inequality orders them:
    non-tilde >= tilde when r >= rho, tilde >= non-tilde when rho >= r.

    Time integrals use trapezoid quadrature on the recorded times.
    """
    if not (rho >= 1):
        raise ValueError(f"time exponent rho must be >= 1 (or inf), got {rho}")
    if index.p != history.p:
        raise ValueError(
            f"index p = {index.p} does not match history p = {history.p}")
    if len(history.times) < 2:
        raise ValueError("history must contain at least two times")
    times = np.asarray(history.times)
    mat = history.matrix()
    weights = 2.0 ** (index.s * np.asarray(history.shells, dtype=np.float64))
    if tilde:
        per_shell = np.array([_time_lp(mat[i], times, rho)
                              for i in range(mat.shape[0])])
        return _aggregate(weights * per_shell, index.r)
    per_time = np.array([_aggregate(weights * mat[:, j], index.r)
                         for j in range(mat.shape[1])])
    return _time_lp(per_time, times, rho)


@dataclass
class BernsteinReport:
    """Measured constants for the derivative/integrability inequalities.

    lowpass_ratio is sup_{|a| = k} ||d^a S_q f||_{L^b} divided by
    2^{q(k + 2(1/a_exp - 1/b_exp))} ||S_q f||_{L^a}; block_ratio is
    sup_{|a| = k} ||d^a Delta_q f||_{L^a} divided by 2^{qk}
    ||Delta_q f||_{L^a} (bounded above and away from zero on an annulus).
    """

    q: int
    k: int
    lowpass_ratio: float
    block_ratio: float
    degenerate: bool


def _derivative_sup_norm(f: Field, k: int, p: float) -> float:
    """sup over multi-indices of order k of ||d^alpha f||_{L^p}."""
    from .operators import partial_derivative
    best = 0.0
    for a1 in range(k + 1):
        a2 = k - a1
        g = f
        for _ in range(a1):
            g = partial_derivative(g, 0)
        for _ in range(a2):
            g = partial_derivative(g, 1)
        best = max(best, lebesgue_norm(g, p))
    return best


def bernstein_check(f: Field, q: int, k: int, a: float, b: float,
                    part: DyadicPartition) -> BernsteinReport:
    """Measure the Bernstein ratios for the given field, shell and order.

    Requires 1 <= a <= b <= inf and k >= 1. Degenerate blocks (zero norm)
    are flagged rather than divided by.
    """
    if k < 1:
        raise ValueError(f"derivative order k must be >= 1, got {k}")
    if not (1 <= a and a <= b):
        raise ValueError(f"need 1 <= a <= b, got a={a}, b={b}")
    inv_a = 0.0 if a == np.inf else 1.0 / a
    inv_b = 0.0 if b == np.inf else 1.0 / b

    sq = low_pass(f, max(q, 0), part)
    dq = dyadic_block(f, q, part)
    sq_a = lebesgue_norm(sq, a)
    dq_a = lebesgue_norm(dq, a)

    degenerate = sq_a == 0.0 or dq_a == 0.0
    lowpass_ratio = np.nan
    block_ratio = np.nan
    if sq_a > 0.0:
        lowpass_ratio = (_derivative_sup_norm(sq, k, b)
                         / (2.0 ** (q * (k + 2.0 * (inv_a - inv_b))) * sq_a))
    if dq_a > 0.0:
        block_ratio = (_derivative_sup_norm(dq, k, a)
                       / (2.0 ** (q * k) * dq_a))
    return BernsteinReport(q=q, k=k, lowpass_ratio=float(lowpass_ratio),
                           block_ratio=float(block_ratio),
                           degenerate=degenerate)
