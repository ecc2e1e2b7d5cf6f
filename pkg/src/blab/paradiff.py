"""Paraproducts, commutators and empirical inequality checks.

Everything here reports measured constants; nothing asserts. Ratios are
packaged as InequalityReport records so ensemble drivers and the CLI can
aggregate them uniformly. Degenerate (0/0) samples are flagged, never
dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as _fft

from .grid import Field, Grid, VectorField, _check_same_grid
from .dyadic import BesovIndex, DyadicPartition, besov_norm, dyadic_block
from .operators import (advect, curl, gradient_norm, lebesgue_norm,
                        fractional_laplacian, riesz_transform,
                        velocity_gradient_norm)


# ---------------------------------------------------------------------------
# Bony decomposition
# ---------------------------------------------------------------------------

@dataclass
class BonySplit:
    """The three paraproduct pieces of a pointwise product u * v."""

    low_high: Field   # T_u v: low frequencies of u against blocks of v
    high_low: Field   # T_v u
    remainder: Field  # diagonal interactions

    def reconstruct(self) -> Field:
        return self.low_high + self.high_low + self.remainder


def bony_split(u: Field, v: Field, part: DyadicPartition) -> BonySplit:
    """Split u * v into paraproducts and remainder.

    T_u v = sum_q S_{q-1} u Delta_q v, the remainder pairs blocks at
    distance <= 1. Because the blocks resolve the identity on the lattice,
    the three pieces sum back to the pointwise product to rounding error.
    Inputs are expected dealiased on a common grid.
    """
    _check_same_grid(u.grid, v.grid)
    if u.grid != part.grid:
        raise ValueError("fields and partition live on different grids")
    blocks_u = [dyadic_block(u, q, part).values for q in part.shells()]
    blocks_v = [dyadic_block(v, q, part).values for q in part.shells()]
    shells = list(part.shells())
    nsh = len(shells)

    # running low-pass sums: lowsum_u[i] = S_{shells[i] - 1} u
    zero = np.zeros_like(u.values)
    lowsum_u = [zero]
    lowsum_v = [zero]
    for i in range(1, nsh):
        lowsum_u.append(lowsum_u[-1] + blocks_u[i - 1])
        lowsum_v.append(lowsum_v[-1] + blocks_v[i - 1])
    tuv = np.zeros_like(u.values)
    tvu = np.zeros_like(u.values)
    rem = np.zeros_like(u.values)
    for i in range(nsh):
        s_prev_u = lowsum_u[i - 1] if i >= 1 else zero
        s_prev_v = lowsum_v[i - 1] if i >= 1 else zero
        tuv += s_prev_u * blocks_v[i]
        tvu += s_prev_v * blocks_u[i]
        near = blocks_v[i].copy()
        if i - 1 >= 0:
            near = near + blocks_v[i - 1]
        if i + 1 < nsh:
            near = near + blocks_v[i + 1]
        rem += blocks_u[i] * near
    g = u.grid
    return BonySplit(Field(g, tuv), Field(g, tvu), Field(g, rem))


# ---------------------------------------------------------------------------
# Commutators
# ---------------------------------------------------------------------------

def commutator_riesz(v: VectorField, theta: Field) -> Field:
    """[R, v.grad] theta = R(v.grad theta) - v.grad(R theta).

    v must be certified divergence-free; all products are dealiased.
    """
    if not v.divergence_free:
        raise ValueError("velocity must be certified divergence-free "
                         "(call certify_divergence_free first)")
    _check_same_grid(v.grid, theta.grid)
    return riesz_transform(advect(v, theta)) - advect(v, riesz_transform(theta))


def commutator_block(v: VectorField, theta: Field, q: int,
                     part: DyadicPartition) -> Field:
    """[Delta_q, v.grad] theta = Delta_q(v.grad theta) - v.grad(Delta_q theta)."""
    if not v.divergence_free:
        raise ValueError("velocity must be certified divergence-free")
    _check_same_grid(v.grid, theta.grid)
    return (dyadic_block(advect(v, theta), q, part)
            - advect(v, dyadic_block(theta, q, part)))


# ---------------------------------------------------------------------------
# Random fields
# ---------------------------------------------------------------------------

def random_field(grid: Grid, slope: float = -2.0, seed: int = 0,
                 kmin: int = 1, kmax: int | None = None) -> Field:
    """Random real field with power-law spectrum and unit L^2 norm.

    Coefficients are drawn on the integer wavenumber lattice with
    |k| in [kmin, kmax], amplitude |k|^slope and uniform random phases,
    then symmetrized so the field is real and mean-free. The draw depends
    only on (seed, kmin, kmax), not on n, so ensembles at different
    resolutions can evaluate the same functions.
    """
    if kmax is None:
        kmax = int(np.floor(grid.dealias_fraction * grid.n / 2))
    if not (1 <= kmin <= kmax):
        raise ValueError(f"need 1 <= kmin <= kmax, got {kmin}, {kmax}")
    if kmax >= grid.n / 2:
        raise ValueError(f"kmax = {kmax} does not fit below the Nyquist "
                         f"index {grid.n // 2}")
    rng = np.random.default_rng(seed)
    K = kmax
    a = np.arange(-K, K + 1)
    a1, a2 = np.meshgrid(a, a, indexing="ij")
    rho = np.hypot(a1, a2)
    active = (rho >= kmin) & (rho <= kmax)
    with np.errstate(divide="ignore"):
        amp = np.where(active, np.where(rho > 0, rho, 1.0) ** slope, 0.0)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=a1.shape)
    c = amp * np.exp(1j * phase)
    c = 0.5 * (c + np.conj(c[::-1, ::-1]))  # hermitian: real field

    coeffs = np.zeros((grid.n, grid.n), dtype=np.complex128)
    idx = a % grid.n
    coeffs[np.ix_(idx, idx)] = c
    values = grid.to_values(coeffs)
    norm = lebesgue_norm(values, 2, grid)
    if norm == 0.0:
        raise ValueError("random field degenerated to zero (empty band?)")
    return Field(grid, values / norm)


def random_divfree_velocity(grid: Grid, slope: float = -2.0, seed: int = 0,
                            kmin: int = 1, kmax: int | None = None
                            ) -> VectorField:
    """Random divergence-free velocity via a random vorticity field."""
    from .operators import biot_savart
    return biot_savart(random_field(grid, slope=slope, seed=seed,
                                    kmin=kmin, kmax=kmax))


# ---------------------------------------------------------------------------
# Inequality reports
# ---------------------------------------------------------------------------

@dataclass
class InequalityReport:
    """Measured left side, right-side factors and their ratio.

    ratio = lhs / product of rhs_factors; a 0/0 (or otherwise non-finite)
    ratio sets the degenerate flag and ratio = nan. meta carries sample
    bookkeeping (seed, n, slope, shell, exponents).
    """

    estimate: str
    lhs: float
    rhs_factors: dict[str, float]
    ratio: float = field(init=False)
    degenerate: bool = field(init=False)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        prod = float(np.prod(list(self.rhs_factors.values())))
        if prod > 0.0 and np.isfinite(prod) and np.isfinite(self.lhs):
            self.ratio = self.lhs / prod
            self.degenerate = not np.isfinite(self.ratio)
        else:
            self.ratio = float("nan")
            self.degenerate = True


def check_riesz_commutator_lp(v: VectorField, theta: Field, p: float,
                              r: float, part: DyadicPartition,
                              meta: dict | None = None) -> InequalityReport:
    """Ratio for ||[R, v.grad]theta||_{B^0_{p,r}} against
    ||grad v||_{L^p} (||theta||_{B^0_{inf,r}} + ||theta||_{L^p}).

    Requires 2 <= p < inf and 1 <= r <= inf.
    """
    if not (2 <= p < np.inf):
        raise ValueError(f"p must lie in [2, inf), got {p}")
    comm = commutator_riesz(v, theta)
    lhs = besov_norm(comm, BesovIndex(0.0, p, r), part)
    factors = {
        "grad_v_Lp": velocity_gradient_norm(v, p),
        "theta_B0_inf_r_plus_Lp": (besov_norm(theta, BesovIndex(0.0, np.inf, r),
                                              part)
                                   + lebesgue_norm(theta, p)),
    }
    return InequalityReport("riesz_commutator_lp", lhs, factors,
                            meta=dict(meta or {}, p=p, r=r))


def check_riesz_commutator_uniform(v: VectorField, theta: Field, rho: float,
                                   eps: float, r: float,
                                   part: DyadicPartition,
                                   meta: dict | None = None
                                   ) -> InequalityReport:
    """Ratio for ||[R, v.grad]theta||_{B^0_{inf,r}} against
    (||omega||_{L^inf} + ||omega||_{L^rho})
    (||theta||_{B^eps_{inf,r}} + ||theta||_{L^rho}).

    Requires 1 < rho < inf and eps > 0.
    """
    if not (1 < rho < np.inf):
        raise ValueError(f"rho must lie in (1, inf), got {rho}")
    if not (eps > 0):
        raise ValueError(f"eps must be positive, got {eps}")
    comm = commutator_riesz(v, theta)
    lhs = besov_norm(comm, BesovIndex(0.0, np.inf, r), part)
    omega = curl(v)
    factors = {
        "omega_Linf_plus_Lrho": (lebesgue_norm(omega, np.inf)
                                 + lebesgue_norm(omega, rho)),
        "theta_Beps_inf_r_plus_Lrho": (besov_norm(theta,
                                                  BesovIndex(eps, np.inf, r),
                                                  part)
                                       + lebesgue_norm(theta, rho)),
    }
    return InequalityReport("riesz_commutator_uniform", lhs, factors,
                            meta=dict(meta or {}, rho=rho, eps=eps, r=r))


def check_block_commutator(v: VectorField, theta: Field, p: float,
                           part: DyadicPartition,
                           meta: dict | None = None) -> InequalityReport:
    """Worst shell ratio for ||[Delta_q, v.grad]theta||_{L^p} against
    ||grad v||_{L^p} ||theta||_{B^0_{inf,inf}}, uniformly over q >= -1.
    """
    if not (1 <= p):
        raise ValueError(f"p must be >= 1, got {p}")
    rhs = velocity_gradient_norm(v, p) * besov_norm(
        theta, BesovIndex(0.0, np.inf, np.inf), part)
    per_shell = {}
    worst = 0.0
    for q in part.shells():
        per_shell[q] = lebesgue_norm(commutator_block(v, theta, q, part), p)
        worst = max(worst, per_shell[q])
    return InequalityReport("block_commutator", worst, {"grad_v_Lp_times_theta_B0_inf_inf": rhs},
                            meta=dict(meta or {}, p=p,
                                      per_shell_lhs=per_shell))


def _periodic_distance_weight(grid: Grid) -> np.ndarray:
    """Pointwise distance to the origin in the torus metric."""
    d1 = np.minimum(grid.x1, grid.period - grid.x1)
    d2 = np.minimum(grid.x2, grid.period - grid.x2)
    return np.hypot(d1, d2)


def torus_convolution(h: Field, g: Field) -> Field:
    """Periodic convolution (h * g)(x) = int h(y) g(x - y) dy, spectrally."""
    _check_same_grid(h.grid, g.grid)
    gr = h.grid
    ch = gr.to_coeffs(h.values)
    cg = gr.to_coeffs(g.values)
    return Field(gr, gr.to_values(gr.period ** 2 * ch * cg))


def check_conv_commutator(h: Field, f: Field, g: Field, p: float, m: float,
                          meta: dict | None = None) -> InequalityReport:
    """Ratio for ||h*(fg) - f (h*g)||_{L^p} against
    ||x h||_{L^m'} ||grad f||_{L^p} ||g||_{L^m} (constant exactly 1).

    m' is the conjugate exponent of m; requires p >= m'. The |x| weight is
    the torus-periodic distance to the origin, so the bound is meaningful
    for kernels concentrated near 0.
    """
    if m == np.inf:
        m_conj = 1.0
    elif m == 1:
        m_conj = np.inf
    else:
        m_conj = m / (m - 1.0)
    if not (p >= m_conj):
        raise ValueError(f"need p >= m' = {m_conj}, got p = {p}")
    _check_same_grid(h.grid, f.grid)
    _check_same_grid(f.grid, g.grid)
    gr = h.grid
    fg = Field(gr, f.values * g.values)
    lhs_field = torus_convolution(h, fg) - Field(
        gr, f.values * torus_convolution(h, g).values)
    lhs = lebesgue_norm(lhs_field, p)
    weight = _periodic_distance_weight(gr)
    factors = {
        "xh_Lmconj": lebesgue_norm(weight * np.abs(h.values), m_conj, gr),
        "grad_f_Lp": gradient_norm(f, p),
        "g_Lm": lebesgue_norm(g, m),
    }
    return InequalityReport("conv_commutator", lhs, factors,
                            meta=dict(meta or {}, p=p, m=m))


# ---------------------------------------------------------------------------
# Exact quadrature of polynomial integrands (for the lower Bernstein bound)
# ---------------------------------------------------------------------------

def _active_band(coeffs: np.ndarray, n: int) -> int:
    """Largest per-axis integer wavenumber carrying relative mass > 1e-13."""
    mags = np.abs(coeffs)
    top = mags.max()
    if top == 0.0:
        return 0
    k_int = np.abs(np.fft.fftfreq(n, d=1.0 / n)).astype(int)
    active = mags > 1e-13 * top
    rows = np.any(active, axis=1)
    cols = np.any(active, axis=0)
    return int(max(k_int[rows].max(initial=0), k_int[cols].max(initial=0)))


def _pad_to(coeffs: np.ndarray, n: int, m: int) -> np.ndarray:
    if m == n:
        return coeffs
    centered = np.fft.fftshift(coeffs)
    out = np.zeros((m, m), dtype=np.complex128)
    lo = (m - n) // 2
    out[lo:lo + n, lo:lo + n] = centered
    return np.fft.ifftshift(out)


def exact_product_integral(factors: list[Field], powers: list[int]) -> float:
    """Integral over the torus of prod_i f_i^{p_i}, exactly for trig data.

    The integrand is evaluated on a grid fine enough that no nonzero mode
    of the degree-d product aliases onto the mean: the padded size exceeds
    d times the widest per-axis active band of the inputs.
    """
    if len(factors) != len(powers) or not factors:
        raise ValueError("factors and powers must be non-empty and match")
    grid = factors[0].grid
    degree = int(sum(powers))
    band = max(_active_band(grid.to_coeffs(f.values), grid.n)
               for f in factors)
    m = grid.n
    while m <= degree * band:
        m *= 2
    prod = np.ones((m, m))
    for f, pw in zip(factors, powers):
        c = _pad_to(grid.to_coeffs(f.values), grid.n, m)
        vals = np.real(_fft.ifft2(c * (m * m)))
        prod = prod * vals ** pw
    return float(prod.mean() * grid.period ** 2)


def check_generalized_bernstein(theta: Field, q: int, p: int,
                                part: DyadicPartition,
                                meta: dict | None = None) -> InequalityReport:
    """Lower dissipation bound on one block: ratio of
    int (|D| theta_q) |theta_q|^{p-2} theta_q dx to 2^q ||theta_q||_{L^p}^p.

    The ratio should stay bounded away from zero on annulus-supported
    blocks. p must be an even integer >= 2 so the integrand is polynomial
    and both integrals are evaluated exactly on a padded grid; other p are
    rejected (|theta|^{p-2} theta is not polynomial, so exact quadrature
    is unavailable).
    """
    if p < 2 or p % 2 != 0:
        raise ValueError(
            f"p must be an even integer >= 2 for exact quadrature, got {p}")
    block = dyadic_block(theta, q, part)
    diss = fractional_laplacian(block, 1.0)
    numerator = exact_product_integral([diss, block], [1, p - 1])
    mass = exact_product_integral([block], [p])
    lhs = numerator
    factors = {"two_pow_q_theta_q_Lp_pow_p": 2.0 ** q * mass}
    return InequalityReport("generalized_bernstein", lhs, factors,
                            meta=dict(meta or {}, q=q, p=p))
