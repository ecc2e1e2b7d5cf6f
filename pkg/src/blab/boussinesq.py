"""Coupled vorticity/temperature solver on the torus.

The system integrated here, in vorticity form with buoyancy along x2 and
fractional dissipation acting on the temperature only:

    d_t omega + v.grad omega = d_1 theta
    d_t theta + v.grad theta + |D|^alpha theta = 0
    v = biot_savart(omega)

Time stepping is RK4 with an exact integrating factor on the dissipative
theta equation; the velocity is recomputed from the current vorticity at
every stage. Advection products are dealiased; the dealiased products
conserve the means of omega and theta to rounding error.

The module also carries the diagnostics built on gamma = omega + R theta,
which at alpha = 1 satisfies a pure transport equation forced only by the
commutator [R, v.grad] theta; its budget is a sharp solver health check.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .grid import Field, Grid, VectorField
from .dyadic import (BesovIndex, BlockHistory, DyadicPartition,
                     build_partition, besov_norm, dyadic_block, low_pass)
from .operators import biot_savart, lebesgue_norm
from .tdsolver import CFLViolation, TrajectoryDiverged, _check_cfl


@dataclass
class SimState:
    """Vorticity/temperature pair at one instant."""

    omega: Field
    theta: Field
    t: float = 0.0

    def __post_init__(self):
        if self.omega.grid != self.theta.grid:
            raise ValueError("omega and theta must share a grid")

    @property
    def grid(self) -> Grid:
        return self.omega.grid

    def velocity(self) -> VectorField:
        return biot_savart(self.omega)


@dataclass
class BoussConfig:
    """Run parameters and monitor switches for the coupled solver.

    frozen_velocity replaces the self-consistent Biot-Savart velocity with
    a fixed field (linearized dynamics; used by closed-form diagnostics).
    apriori_stride > 0 turns on the heavier shell-norm monitors every that
    many steps. track_gamma records the gamma transport budget each step.
    """

    dt: float
    t_end: float
    alpha: float = 1.0
    cfl_safety: float = 0.5
    p_list: tuple = (2.0, 4.0, np.inf)
    block_p: float = 4.0
    track_blocks: bool = False
    track_gamma: bool = False
    gamma_p: float = 4.0
    apriori_stride: int = 0
    state_stride: int = 0
    frozen_velocity: VectorField | None = None

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not (self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.t_end >= self.dt):
            raise ValueError("t_end must be at least one step long")
        steps = round(self.t_end / self.dt)
        if abs(steps * self.dt - self.t_end) > 1e-9 * max(self.t_end, 1.0):
            raise ValueError("t_end must be an integer multiple of dt")
        if self.frozen_velocity is not None \
                and not self.frozen_velocity.divergence_free:
            raise ValueError("frozen velocity must be certified "
                             "divergence-free")


class _BoussCore:
    """Precomputed multipliers and the coupled nonstiff right-hand side."""

    def __init__(self, grid: Grid, cfg: BoussConfig):
        self.grid = grid
        self.cfg = cfg
        g = grid
        nyq = g._nyquist_line
        with np.errstate(invalid="ignore", divide="ignore"):
            inv_ksq = np.where(g.ksq > 0, 1.0 / np.where(g.ksq > 0, g.ksq, 1.0),
                               0.0)
            inv_k = np.where(g.kmag > 0, 1.0 / np.where(g.kmag > 0, g.kmag, 1.0),
                             0.0)
        self.bs1 = np.where(nyq, 0.0, 1j * g.k2 * inv_ksq)
        self.bs2 = np.where(nyq, 0.0, -1j * g.k1 * inv_ksq)
        self.d1 = np.where(nyq, 0.0, 1j * g.k1)
        self.d2 = np.where(nyq, 0.0, 1j * g.k2)
        self.riesz = np.where(nyq, 0.0, 1j * g.k1 * inv_k)
        self.mask = g.dealias_mask
        lam = g.kmag ** cfg.alpha
        self.ehalf = np.exp(-0.5 * cfg.dt * lam)
        self.efull = np.exp(-cfg.dt * lam)
        if cfg.frozen_velocity is not None:
            self.frozen = (cfg.frozen_velocity.u1.values,
                           cfg.frozen_velocity.u2.values)
        else:
            self.frozen = None

    def velocity_of(self, omega_hat: np.ndarray):
        if self.frozen is not None:
            return self.frozen
        g = self.grid
        return (g.to_values(self.bs1 * omega_hat),
                g.to_values(self.bs2 * omega_hat))

    def masked_product_hat(self, v1, v2, g1, g2) -> np.ndarray:
        prod = self.grid.to_coeffs(v1 * g1 + v2 * g2)
        return np.where(self.mask, prod, 0.0)

    def rhs(self, omega_hat: np.ndarray, theta_hat: np.ndarray,
            velocity=None):
        """Nonstiff slopes (omega and theta) at one stage."""
        g = self.grid
        v1, v2 = velocity if velocity is not None \
            else self.velocity_of(omega_hat)
        src = self.d1 * theta_hat
        if self.frozen is not None and v1.max() == v1.min() == 0.0:
            return src, np.zeros_like(theta_hat)
        do1 = g.to_values(self.d1 * omega_hat)
        do2 = g.to_values(self.d2 * omega_hat)
        dt1 = g.to_values(self.d1 * theta_hat)
        dt2 = g.to_values(self.d2 * theta_hat)
        adv_o = self.masked_product_hat(v1, v2, do1, do2)
        adv_t = self.masked_product_hat(v1, v2, dt1, dt2)
        return -adv_o + src, -adv_t

    def step(self, omega_hat, theta_hat, stage1_velocity=None):
        """One integrating-factor RK4 step of the coupled pair."""
        dt = self.cfg.dt
        eh, ef = self.ehalf, self.efull
        k1o, k1t = self.rhs(omega_hat, theta_hat, velocity=stage1_velocity)
        o1 = omega_hat + 0.5 * dt * k1o
        t1 = eh * (theta_hat + 0.5 * dt * k1t)
        k2o, k2t = self.rhs(o1, t1)
        o2 = omega_hat + 0.5 * dt * k2o
        t2 = eh * theta_hat + 0.5 * dt * k2t
        k3o, k3t = self.rhs(o2, t2)
        o3 = omega_hat + dt * k3o
        t3 = ef * theta_hat + dt * eh * k3t
        k4o, k4t = self.rhs(o3, t3)
        new_o = omega_hat + (dt / 6.0) * (k1o + 2.0 * (k2o + k3o) + k4o)
        new_t = (ef * theta_hat
                 + (dt / 6.0) * (ef * k1t + 2.0 * eh * (k2t + k3t) + k4t))
        return new_o, new_t


def bouss_step(state: SimState, dt: float, alpha: float = 1.0,
               cfl_safety: float = 0.5,
               frozen_velocity: VectorField | None = None) -> SimState:
    """Advance the coupled state by one step.

    The advective CFL condition is enforced against the step-start
    velocity. Inputs are truncated to the dealias band on entry.
    """
    g = state.grid
    cfg = BoussConfig(dt=dt, t_end=dt, alpha=alpha, cfl_safety=cfl_safety,
                      frozen_velocity=frozen_velocity)
    core = _BoussCore(g, cfg)
    omega_hat = np.where(g.dealias_mask, g.to_coeffs(state.omega.values), 0.0)
    theta_hat = np.where(g.dealias_mask, g.to_coeffs(state.theta.values), 0.0)
    v1, v2 = core.velocity_of(omega_hat)
    _check_cfl(g, dt, cfl_safety, float(np.hypot(v1, v2).max()))
    new_o, new_t = core.step(omega_hat, theta_hat, stage1_velocity=(v1, v2))
    return SimState(Field(g, g.to_values(new_o)), Field(g, g.to_values(new_t)),
                    t=state.t + dt)


@dataclass
class BoussTrajectory:
    """Step-resolved monitor output of a coupled run."""

    grid: Grid
    cfg: BoussConfig
    part: DyadicPartition
    times: list[float] = field(default_factory=list)
    theta_norms: dict = field(default_factory=dict)
    omega_norms: dict = field(default_factory=dict)
    v_max: list[float] = field(default_factory=list)
    theta_blocks: BlockHistory | None = None
    gamma_norms: list[float] = field(default_factory=list)
    comm_norms: list[float] = field(default_factory=list)
    residual_times: list[float] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    apriori_times: list[float] = field(default_factory=list)
    apriori_series: dict = field(default_factory=dict)
    stored_states: dict = field(default_factory=dict)
    final_state: SimState | None = None
    initial_state: SimState | None = None


def _vector_block_sup(part: DyadicPartition, c1: np.ndarray, c2: np.ndarray,
                      q: int) -> float:
    g = part.grid
    m = part.multiplier(q)
    b1 = g.to_values(m * c1)
    b2 = g.to_values(m * c2)
    return float(np.hypot(b1, b2).max())


def run_boussinesq(state0: SimState, cfg: BoussConfig,
                   step_callback=None) -> BoussTrajectory:
    """Run the coupled solver, recording the configured monitors.

    step_callback(i, t, SimState), if given, is invoked at every recorded
    step (including t = 0 and the final time); it sees the dealiased
    physical state.
    """
    g = state0.grid
    part = build_partition(g)
    core = _BoussCore(g, cfg)
    traj = BoussTrajectory(grid=g, cfg=cfg, part=part)

    omega_hat = np.where(g.dealias_mask, g.to_coeffs(state0.omega.values), 0.0)
    theta_hat = np.where(g.dealias_mask, g.to_coeffs(state0.theta.values), 0.0)
    traj.initial_state = SimState(Field(g, g.to_values(omega_hat)),
                                  Field(g, g.to_values(theta_hat)), t=0.0)
    n_steps = round(cfg.t_end / cfg.dt)

    prev_gamma_hat = None   # gamma two records ago
    last_gamma_hat = None   # gamma one record ago
    last_drift_hat = None   # v.grad gamma + commutator, one record ago

    def record(i: int, t: float, omega_hat, theta_hat, v1, v2):
        nonlocal prev_gamma_hat, last_gamma_hat, last_drift_hat
        o_vals = g.to_values(omega_hat)
        t_vals = g.to_values(theta_hat)
        if not (np.all(np.isfinite(o_vals)) and np.all(np.isfinite(t_vals))):
            raise TrajectoryDiverged(f"non-finite state at t = {t:g}")
        traj.times.append(t)
        for p in cfg.p_list:
            traj.theta_norms.setdefault(p, []).append(
                lebesgue_norm(t_vals, p, g))
            traj.omega_norms.setdefault(p, []).append(
                lebesgue_norm(o_vals, p, g))
        traj.v_max.append(float(np.hypot(v1, v2).max()))
        theta_field = Field(g, t_vals)
        if cfg.track_blocks:
            traj.theta_blocks = BlockHistory.record(
                theta_field, part, cfg.block_p, t, traj.theta_blocks)
        if cfg.track_gamma:
            gamma_hat = omega_hat + core.riesz * theta_hat
            gamma_vals = g.to_values(gamma_hat)
            traj.gamma_norms.append(lebesgue_norm(gamma_vals, cfg.gamma_p, g))
            # commutator [R, v.grad] theta with solver-consistent dealiasing
            adv_theta = core.masked_product_hat(
                v1, v2, g.to_values(core.d1 * theta_hat),
                g.to_values(core.d2 * theta_hat))
            rtheta_hat = core.riesz * theta_hat
            adv_rtheta = core.masked_product_hat(
                v1, v2, g.to_values(core.d1 * rtheta_hat),
                g.to_values(core.d2 * rtheta_hat))
            comm_hat = core.riesz * adv_theta - adv_rtheta
            traj.comm_norms.append(
                lebesgue_norm(g.to_values(comm_hat), cfg.gamma_p, g))
            drift_hat = core.masked_product_hat(
                v1, v2, g.to_values(core.d1 * gamma_hat),
                g.to_values(core.d2 * gamma_hat)) + comm_hat
            if prev_gamma_hat is not None:
                diff = (gamma_hat - prev_gamma_hat) / (2.0 * cfg.dt) \
                    + last_drift_hat
                traj.residual_times.append(t - cfg.dt)
                traj.residuals.append(
                    float(g.period * np.sqrt(np.sum(np.abs(diff) ** 2))))
            prev_gamma_hat = last_gamma_hat
            last_gamma_hat = gamma_hat
            last_drift_hat = drift_hat
        if cfg.apriori_stride and i % cfg.apriori_stride == 0:
            s = traj.apriori_series
            traj.apriori_times.append(t)
            omega_field = Field(g, o_vals)
            b0 = BesovIndex(0.0, np.inf, 1.0)
            s.setdefault("omega_B0_inf_1", []).append(
                besov_norm(omega_field, b0, part))
            s.setdefault("theta_B0_inf_1", []).append(
                besov_norm(theta_field, b0, part))
            c1 = g.to_coeffs(v1)
            c2 = g.to_coeffs(v2)
            s.setdefault("v_B1_inf_1", []).append(
                float(sum(2.0 ** q * _vector_block_sup(part, c1, c2, q)
                          for q in part.shells())))
            s.setdefault("v_inf", []).append(float(np.hypot(v1, v2).max()))
            s.setdefault("riesz_theta_inf", []).append(
                float(np.abs(g.to_values(core.riesz * theta_hat)).max()))
            if cfg.track_gamma:
                comm_field = Field(g, g.to_values(comm_hat))
                s.setdefault(f"comm_L{cfg.gamma_p:g}", []).append(
                    lebesgue_norm(comm_field, cfg.gamma_p))
                s.setdefault("comm_B0_inf_1", []).append(
                    besov_norm(comm_field, b0, part))
        if cfg.state_stride and i % cfg.state_stride == 0:
            traj.stored_states[i] = SimState(Field(g, o_vals.copy()),
                                             Field(g, t_vals.copy()), t=t)
        if step_callback is not None:
            step_callback(i, t, SimState(Field(g, o_vals), Field(g, t_vals),
                                         t=t))

    for i in range(n_steps):
        t = i * cfg.dt
        v1, v2 = core.velocity_of(omega_hat)
        _check_cfl(g, cfg.dt, cfg.cfl_safety, float(np.hypot(v1, v2).max()))
        record(i, t, omega_hat, theta_hat, v1, v2)
        omega_hat, theta_hat = core.step(omega_hat, theta_hat,
                                         stage1_velocity=(v1, v2))
    v1, v2 = core.velocity_of(omega_hat)
    record(n_steps, n_steps * cfg.dt, omega_hat, theta_hat, v1, v2)

    traj.final_state = SimState(Field(g, g.to_values(omega_hat)),
                                Field(g, g.to_values(theta_hat)),
                                t=n_steps * cfg.dt)
    return traj


# ---------------------------------------------------------------------------
# Gamma diagnostics
# ---------------------------------------------------------------------------

def gamma(state: SimState) -> Field:
    """omega + R theta, the transported combination at alpha = 1."""
    from .operators import riesz_transform
    return state.omega + riesz_transform(state.theta)


@dataclass
class GammaBudgetReport:
    """Transport-budget health of gamma over a recorded run.

    residuals[i] is ||d_t gamma + v.grad gamma + [R, v.grad]theta||_{L^2}
    at residual_times[i], with d_t by centered differences (so the
    residual itself carries an O(dt^2) floor). margins[i] is
    |d/dt ||gamma||_p| - ||[R, v.grad]theta||_p - slack at interior times;
    non-positive margins mean the norm-rate inequality holds.
    """

    gamma_p: float
    dt: float
    slack: float
    residual_times: np.ndarray
    residuals: np.ndarray
    max_residual: float
    margins: np.ndarray
    worst_margin: float
    norm_rate_ok: bool


def gamma_budget(traj: BoussTrajectory) -> GammaBudgetReport:
    """Assemble the gamma transport budget from a tracked run.

    Requires alpha = 1 (otherwise gamma is not a pure transported
    quantity) and a run recorded with track_gamma. slack follows the
    centered-difference floor: 10 dt^3 + 1e-8.
    """
    if traj.cfg.alpha != 1.0:
        raise ValueError("gamma budget requires alpha = 1 "
                         f"(run used alpha = {traj.cfg.alpha})")
    if not traj.cfg.track_gamma or not traj.gamma_norms:
        raise ValueError("run was not recorded with track_gamma")
    dt = traj.cfg.dt
    slack = 10.0 * dt ** 3 + 1e-8
    gnorms = np.asarray(traj.gamma_norms)
    cnorms = np.asarray(traj.comm_norms)
    rate = np.abs(gnorms[2:] - gnorms[:-2]) / (2.0 * dt)
    margins = rate - cnorms[1:-1] - slack
    residuals = np.asarray(traj.residuals)
    return GammaBudgetReport(
        gamma_p=traj.cfg.gamma_p, dt=dt, slack=slack,
        residual_times=np.asarray(traj.residual_times), residuals=residuals,
        max_residual=float(residuals.max()) if residuals.size else 0.0,
        margins=margins,
        worst_margin=float(margins.max()) if margins.size else -slack,
        norm_rate_ok=bool(margins.size == 0 or margins.max() <= 0.0))


# ---------------------------------------------------------------------------
# A priori record and envelope fits
# ---------------------------------------------------------------------------

@dataclass
class AprioriRecord:
    """Named monitor series of one run, sampled on a common time axis.

    series maps name -> array; every array is finite and aligned with
    times. The temperature L^p series additionally satisfy the transport
    bound: they never increase beyond relative rounding.
    """

    p: float
    times: np.ndarray
    series: dict

    def names(self) -> list[str]:
        return sorted(self.series)


def monitor_apriori(traj: BoussTrajectory, p: float) -> AprioriRecord:
    """Assemble the a priori monitor record at exponent p.

    Hard assertions: every series is finite, and ||theta||_{L^p} and
    ||theta||_{L^inf} are non-increasing within 1e-6 relative at every
    recorded step (checked on the stride-one norm history).
    """
    if not traj.apriori_times:
        raise ValueError("run was not recorded with apriori_stride > 0")
    if p not in traj.theta_norms:
        raise ValueError(f"norms at p = {p} were not recorded")

    for pp in (p, np.inf):
        norms = np.asarray(traj.theta_norms[pp])
        drops = np.diff(norms)
        worst = float((drops / np.maximum(norms[:-1], 1e-300)).max()) \
            if drops.size else 0.0
        if worst > 1e-6:
            raise AssertionError(
                f"||theta||_{{L^{pp}}} increased by relative {worst:.3e} "
                "during the run")

    stride_times = np.asarray(traj.apriori_times)
    all_times = np.asarray(traj.times)
    sel = np.searchsorted(all_times, stride_times)
    series: dict[str, np.ndarray] = {}
    for pp in traj.theta_norms:
        series[f"theta_L{pp:g}"] = np.asarray(traj.theta_norms[pp])[sel]
        series[f"omega_L{pp:g}"] = np.asarray(traj.omega_norms[pp])[sel]
    for name, vals in traj.apriori_series.items():
        series[name] = np.asarray(vals)
    if traj.gamma_norms:
        series[f"gamma_L{traj.cfg.gamma_p:g}"] = \
            np.asarray(traj.gamma_norms)[sel]
    if traj.theta_blocks is not None and traj.theta_blocks.p == p:
        hist = traj.theta_blocks
        mat = hist.matrix()
        times = np.asarray(hist.times)
        qpos = [(i, q) for i, q in enumerate(hist.shells) if q >= 0]
        acc = np.zeros(mat.shape[1])
        for i, q in qpos:
            cum = np.concatenate(
                ([0.0], np.cumsum(0.5 * (mat[i, 1:] + mat[i, :-1])
                                  * np.diff(times))))
            acc = np.maximum(acc, 2.0 ** q * cum)
        series["smoothing_accumulator"] = acc[sel]

    for name, vals in series.items():
        if not np.all(np.isfinite(vals)):
            raise AssertionError(f"series {name} contains non-finite values")
    return AprioriRecord(p=p, times=stride_times, series=series)


def _phi_log(c: float, t: float, k: int) -> float:
    """log of the k-fold exponential envelope C exp(...exp(C t)...)."""
    x = c * t
    for _ in range(k - 1):
        if x > 700.0:
            return float("inf")
        x = float(np.exp(x))
    return float(np.log(c) + x)


def fit_phi_series(times, values, k: int) -> float:
    """Smallest C0 whose k-fold exponential dominates the series.

    The envelope is C0 exp(exp(... exp(C0 t))) with k exponentials. The
    envelope is monotone in C0, so the least-squares fit subject to
    domination lands on the minimal dominating constant; it is found by
    bisection per sample point. Non-positive samples impose no constraint
    (every positive envelope dominates them).
    """
    if k < 1:
        raise ValueError(f"envelope level k must be >= 1, got {k}")
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if times.shape != values.shape or times.size == 0:
        raise ValueError("times and values must be equal-length, non-empty")
    if not np.all(np.isfinite(values)):
        raise ValueError("series contains non-finite values")
    c_lo_global = 1e-12
    best = c_lo_global
    for t, y in zip(times, values):
        if y <= 0.0:
            continue
        target = float(np.log(y))
        lo, hi = c_lo_global, 1.0
        while _phi_log(hi, t, k) < target:
            hi *= 2.0
            if hi > 1e12:
                break
        if _phi_log(lo, t, k) >= target:
            continue
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if _phi_log(mid, t, k) >= target:
                hi = mid
            else:
                lo = mid
        best = max(best, hi)
    return best


@dataclass
class PhiFit:
    """Fitted envelope constants, one per monitored series."""

    k: int
    c0: dict


def fit_phi(record: AprioriRecord, k: int) -> PhiFit:
    """Fit the k-fold exponential envelope to every series of the record."""
    return PhiFit(k=k, c0={name: fit_phi_series(record.times, vals, k)
                           for name, vals in record.series.items()})


# ---------------------------------------------------------------------------
# Initial data helpers
# ---------------------------------------------------------------------------

def truncate_initial_data(f: Field, n_trunc: int, part: DyadicPartition
                          ) -> Field:
    """Low-frequency truncation S_{n_trunc} f of initial data.

    n_trunc = 0 keeps only the lowest block; n_trunc = q_max + 1 returns
    the field unchanged.
    """
    return low_pass(f, n_trunc, part)


def standard_state(grid: Grid) -> SimState:
    """The standard bench initial data: zero vorticity, two-mode theta."""
    theta = Field.from_function(
        grid, lambda x1, x2: np.sin(x1) * np.sin(x2) + 0.1 * np.cos(2.0 * x1))
    return SimState(Field.zeros(grid), theta, t=0.0)


def standard_config(**overrides) -> BoussConfig:
    """The standard bench run: dt = 2e-3 to t = 5 at alpha = 1."""
    base = dict(dt=2e-3, t_end=5.0, alpha=1.0, p_list=(2.0, 4.0, np.inf),
                block_p=4.0, track_blocks=True, track_gamma=True)
    base.update(overrides)
    return BoussConfig(**base)
