"""Command line front end.

Four subcommands: simulate (coupled solver with monitors), td-run
(transport-diffusion solver with report selection), verify (ensemble
inequality checks), analyze (per-shell norms of a snapshot). Every run
writes a resolved config echo into its output directory, so any output
can be reproduced from the echo alone.

Exit codes: 0 all checks passed, 1 a checked assertion failed, 2 usage
or config error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .boussinesq import (BoussConfig, SimState, gamma_budget, monitor_apriori,
                         run_boussinesq, standard_state, truncate_initial_data)
from .config import ConfigError, RunConfig, parse_config
from .csvout import CsvWriter, ResultRow
from .dyadic import (BesovIndex, bernstein_check, besov_norm,
                     build_partition, dyadic_block)
from .grid import Field, Grid, VectorField
from .operators import curl, lebesgue_norm
from .paradiff import (check_block_commutator, check_conv_commutator,
                       check_generalized_bernstein, check_riesz_commutator_lp,
                       check_riesz_commutator_uniform, random_divfree_velocity,
                       random_field)
from .snapshots import SnapshotError, read_fields, read_snapshot, \
    write_snapshot
from .tdsolver import (CFLViolation, TDConfig, TrajectoryDiverged,
                       report_besov_propagation, report_log_estimate,
                       report_max_principle, report_smoothing_effect, run_td)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blab",
        description="spectral solvers and inequality checks on the torus")
    subs = parser.add_subparsers(dest="subcommand", required=True)
    for name in ("simulate", "td-run", "verify", "analyze"):
        sub = subs.add_parser(name)
        sub.add_argument("--config", required=True,
                         help="path to a key = value config file")
        sub.add_argument("--set", action="append", default=[],
                         metavar="KEY=VALUE", dest="overrides",
                         help="override a config key (repeatable)")
        if name == "verify":
            sub.add_argument("--estimate", help="estimate to check")
            sub.add_argument("--samples", type=int, help="ensemble size")
            sub.add_argument("--seed", type=int, help="base seed")
            sub.add_argument("--resolutions",
                             help="comma-separated grid sizes")
            sub.add_argument("--slope", type=float,
                             help="spectral slope of random fields")
    return parser


def _collect_overrides(args) -> list:
    overrides = list(args.overrides)
    shortcut_map = (("estimate", "verify.estimate"),
                    ("samples", "verify.samples"),
                    ("seed", "seed"),
                    ("resolutions", "verify.resolutions"),
                    ("slope", "verify.slope"))
    for attr, key in shortcut_map:
        val = getattr(args, attr, None)
        if val is not None:
            overrides.append(f"{key}={val}")
    return overrides


def _prepare_outdir(cfg: RunConfig) -> str:
    outdir = cfg.get("output_dir")
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "resolved.cfg"), "w") as fh:
        fh.write(cfg.echo_text())
    return outdir


def _shear_velocity(grid: Grid, amplitude: float) -> VectorField:
    u1 = Field.from_function(grid,
                             lambda x1, x2: amplitude * np.sin(x2))
    v = VectorField(u1, Field.zeros(grid))
    v.certify_divergence_free()
    return v


def _scaled_divfree(grid: Grid, slope: float, seed: int,
                    amplitude: float) -> VectorField:
    raw = random_divfree_velocity(grid, slope=slope, seed=seed)
    v = VectorField(raw.u1 * amplitude, raw.u2 * amplitude)
    v.certify_divergence_free()
    return v


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _initial_state(cfg: RunConfig, grid: Grid) -> SimState:
    preset = cfg.get("sim.initial")
    if preset == "standard":
        state = standard_state(grid)
    elif preset == "random":
        amp = cfg.get("sim.amplitude")
        slope = cfg.get("sim.slope")
        seed = cfg.get("seed")
        theta = random_field(grid, slope=slope, seed=seed) * amp
        omega = random_field(grid, slope=slope, seed=seed + 1) * amp
        state = SimState(omega, theta)
    else:
        path = cfg.get("sim.initial_snapshot")
        if not path:
            raise ConfigError("sim.initial = snapshot needs "
                              "sim.initial_snapshot")
        state = read_snapshot(path)
        if state.grid != grid:
            raise ConfigError(
                f"snapshot grid (n={state.grid.n}, "
                f"period={state.grid.period:g}) does not match config "
                f"(n={grid.n}, period={grid.period:g})")
    n_trunc = cfg.get("sim.n_trunc")
    if n_trunc >= 0:
        part = build_partition(grid)
        state = SimState(truncate_initial_data(state.omega, n_trunc, part),
                         truncate_initial_data(state.theta, n_trunc, part),
                         t=state.t)
    return state


def _run_simulate(cfg: RunConfig) -> int:
    grid = cfg.make_grid()
    outdir = _prepare_outdir(cfg)
    state = _initial_state(cfg, grid)
    alpha = cfg.get("sim.alpha")
    bcfg = BoussConfig(
        dt=cfg.get("sim.dt"), t_end=cfg.get("sim.t_end"), alpha=alpha,
        cfl_safety=cfg.get("sim.cfl_safety"), p_list=cfg.get("sim.p_list"),
        block_p=cfg.get("sim.block_p"), track_blocks=True,
        track_gamma=(alpha == 1.0),
        apriori_stride=cfg.get("sim.apriori_stride"))

    stride = cfg.get("sim.snapshot_stride")

    def callback(i, t, snap_state):
        if stride and i % stride == 0:
            write_snapshot(snap_state,
                           os.path.join(outdir, f"state_{i:08d}.blab"))

    traj = run_boussinesq(state, bcfg, step_callback=callback)

    failures = 0
    try:
        record = monitor_apriori(traj, p=bcfg.block_p)
        print(f"PASS theta-monotone: ||theta||_Lp non-increasing at all "
              f"{len(traj.times)} recorded steps")
    except AssertionError as exc:
        record = None
        failures += 1
        print(f"FAIL theta-monotone: {exc}")

    if record is not None:
        with CsvWriter(os.path.join(outdir, "apriori.csv")) as out:
            for name in record.names():
                for t, val in zip(record.times, record.series[name]):
                    out.write(ResultRow(cfg.run_id, t, name, None,
                                        float(val)))

    if bcfg.track_gamma:
        budget = gamma_budget(traj)
        with CsvWriter(os.path.join(outdir, "gamma_budget.csv")) as out:
            for t, gn, cn in zip(traj.times, traj.gamma_norms,
                                 traj.comm_norms):
                out.write(ResultRow(cfg.run_id, t, "gamma_L4", None, gn))
                out.write(ResultRow(cfg.run_id, t, "comm_L4", None, cn))
            for t, r in zip(budget.residual_times, budget.residuals):
                out.write(ResultRow(cfg.run_id, t, "residual_L2", None, r))
            for t, m in zip(traj.times[1:-1], budget.margins):
                out.write(ResultRow(cfg.run_id, t, "norm_rate_margin",
                                    None, m))
        if budget.norm_rate_ok:
            print(f"PASS gamma-norm-rate: worst margin "
                  f"{budget.worst_margin:.3e} <= 0")
        else:
            failures += 1
            print(f"FAIL gamma-norm-rate: worst margin "
                  f"{budget.worst_margin:.3e} > 0")
        print(f"INFO gamma max residual {budget.max_residual:.3e}")

    final_inf = lebesgue_norm(traj.final_state.omega, np.inf)
    print(f"INFO final ||omega||_inf = {final_inf:.6g} at "
          f"t = {traj.final_state.t:g}")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# td-run
# ---------------------------------------------------------------------------

def _td_velocity(cfg: RunConfig, grid: Grid):
    preset = cfg.get("td.velocity")
    amp = cfg.get("td.amplitude")
    if preset == "zero":
        return None
    if preset == "shear":
        return _shear_velocity(grid, amp)
    return _scaled_divfree(grid, cfg.get("td.slope"), cfg.get("seed"), amp)


def _td_initial(cfg: RunConfig, grid: Grid) -> Field:
    preset = cfg.get("td.initial")
    if preset == "sin1":
        return Field.from_function(grid, lambda x1, x2: np.sin(x1))
    if preset == "standard":
        return standard_state(grid).theta
    return random_field(grid, slope=cfg.get("td.slope"),
                        seed=cfg.get("seed") + 7)


def _run_td(cfg: RunConfig) -> int:
    grid = cfg.make_grid()
    outdir = _prepare_outdir(cfg)
    velocity = _td_velocity(cfg, grid)
    theta0 = _td_initial(cfg, grid)
    forcing = None
    if cfg.get("td.forcing") == "mode":
        base = Field.from_function(grid, lambda x1, x2: np.sin(x1))

        def forcing(t):
            return base * float(np.exp(-t))

    tdcfg = TDConfig(dt=cfg.get("td.dt"), t_end=cfg.get("td.t_end"),
                     alpha=cfg.get("td.alpha"), velocity=velocity,
                     forcing=forcing, cfl_safety=cfg.get("td.cfl_safety"),
                     p_list=cfg.get("td.p_list"),
                     block_p=cfg.get("td.block_p"), track_blocks=True)
    traj = run_td(theta0, tdcfg)

    with CsvWriter(os.path.join(outdir, "norms.csv")) as out:
        for p in tdcfg.p_list:
            label = f"theta_L{p:g}"
            for t, val in zip(traj.times, traj.norm_history[p]):
                out.write(ResultRow(cfg.run_id, t, label, None, val))

    failures = 0
    p_block = tdcfg.block_p
    omega_norm = 0.0
    if velocity is not None:
        omega_norm = lebesgue_norm(curl(velocity), p_block)
    omega_history = np.full(len(traj.times), omega_norm)

    with CsvWriter(os.path.join(outdir, "reports.csv")) as out:
        def emit(metric, value, index=None):
            out.write(ResultRow(cfg.run_id, traj.times[-1], metric, index,
                                float(value)))

        for name in cfg.get("td.reports"):
            if name == "max_principle":
                ok = True
                for p in tdcfg.p_list:
                    rep = report_max_principle(traj, p)
                    emit(f"max_principle_worst_margin_L{p:g}",
                         rep.worst_margin)
                    ok = ok and rep.passed
                if ok:
                    print("PASS max-principle: norms within forcing budget "
                          "at every step")
                else:
                    failures += 1
                    print("FAIL max-principle: a norm exceeded the forcing "
                          "budget")
            elif name == "smoothing":
                rep = report_smoothing_effect(traj, omega_history, p_block)
                emit("smoothing_lhs", rep.lhs)
                emit("smoothing_bracket", rep.bracket)
                emit("smoothing_c_emp", rep.c_emp)
                if np.isfinite(rep.c_emp) and rep.c_emp > 0:
                    print(f"PASS smoothing: empirical constant "
                          f"{rep.c_emp:.4g}")
                else:
                    failures += 1
                    print("FAIL smoothing: degenerate empirical constant")
            elif name == "log_estimate":
                rep = report_log_estimate(traj, p_block)
                emit("log_estimate_lhs", rep.lhs)
                emit("log_estimate_ratio", rep.ratio)
                emit("log_estimate_contrast_ratio", rep.contrast_ratio)
                emit("log_estimate_shell_split", rep.shell_split)
                if np.isfinite(rep.ratio):
                    print(f"PASS log-estimate: ratio {rep.ratio:.4g} against "
                          f"(1 + advection), contrast "
                          f"{rep.contrast_ratio:.3g} against exp")
                else:
                    failures += 1
                    print("FAIL log-estimate: non-finite ratio")
            elif name == "besov_propagation":
                idx = BesovIndex(cfg.get("td.besov_s"), p_block,
                                 cfg.get("td.besov_r"))
                rep = report_besov_propagation(traj, idx)
                emit("besov_propagation_ratio", rep.ratio)
                if np.isfinite(rep.ratio):
                    print(f"PASS besov-propagation: ratio {rep.ratio:.4g}")
                else:
                    failures += 1
                    print("FAIL besov-propagation: non-finite ratio")
            else:
                raise ConfigError(f"unknown report '{name}'")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _verify_sample(token, i, grid, part, cfg):
    """One inequality report for sample i at one resolution."""
    slope = cfg.get("verify.slope")
    seed = cfg.get("seed") + i
    p = cfg.get("verify.p")
    meta = {"sample": i, "n": grid.n, "seed": seed}
    if token in ("thm33p1", "thm33p2", "lemma43"):
        v = random_divfree_velocity(grid, slope=slope, seed=seed)
        theta = random_field(grid, slope=slope, seed=seed + 10_000)
        if token == "thm33p1":
            rep = check_riesz_commutator_lp(v, theta, p, cfg.get("verify.r"),
                                            part, meta=meta)
        elif token == "thm33p2":
            rep = check_riesz_commutator_uniform(
                v, theta, cfg.get("verify.rho"), cfg.get("verify.eps"),
                cfg.get("verify.r"), part, meta=meta)
        else:
            rep = check_block_commutator(v, theta, p, part, meta=meta)
        return rep.ratio, rep.degenerate
    if token == "lemma32":
        j = i % 3 + 1
        h = Field(grid, grid.to_values(part.multiplier(j).astype(complex)))
        f = random_field(grid, slope=slope, seed=seed)
        g2 = random_field(grid, slope=slope, seed=seed + 10_000)
        rep = check_conv_commutator(h, f, g2, p, p, meta=meta)
        return rep.ratio, rep.degenerate
    if token == "genbernstein":
        p_even = int(round(p))
        theta = random_field(grid, slope=slope, seed=seed)
        q = i % (part.q_max + 1)
        rep = check_generalized_bernstein(theta, q, p_even, part, meta=meta)
        return rep.ratio, rep.degenerate
    # plain Bernstein: both directions on a random field
    f = random_field(grid, slope=slope, seed=seed)
    q = i % (part.q_max + 2) - 1
    rep = bernstein_check(f, q, k=1, a=2.0, b=np.inf, part=part)
    ratio = max(rep.lowpass_ratio, rep.block_ratio)
    return ratio, rep.degenerate


def _run_verify(cfg: RunConfig) -> int:
    token = cfg.get("verify.estimate")
    samples = cfg.get("verify.samples")
    resolutions = cfg.get("verify.resolutions")
    if token == "genbernstein":
        p = cfg.get("verify.p")
        if abs(p - round(p)) > 0 or int(round(p)) % 2 or p < 2:
            raise ConfigError("genbernstein needs an even integer "
                              f"verify.p >= 2, got {p}")
    outdir = _prepare_outdir(cfg)

    maxima = {}
    minima = {}
    degenerate_total = 0
    with CsvWriter(os.path.join(outdir, "estimates.csv")) as out:
        for n in resolutions:
            grid = Grid(n, cfg.get("grid.period"),
                        cfg.get("grid.dealias_fraction"))
            part = build_partition(grid)
            ratios = []
            for i in range(samples):
                ratio, degenerate = _verify_sample(token, i, grid, part, cfg)
                out.write(ResultRow(cfg.run_id, 0.0, f"ratio_n{n}", i,
                                    float(ratio)))
                if degenerate:
                    degenerate_total += 1
                    out.write(ResultRow(cfg.run_id, 0.0,
                                        f"degenerate_n{n}", i, 1.0))
                else:
                    ratios.append(ratio)
            if not ratios:
                print(f"FAIL verify[{token}]: all samples degenerate "
                      f"at n = {n}")
                return 1
            maxima[n] = max(ratios)
            minima[n] = min(ratios)
            out.write(ResultRow(cfg.run_id, 0.0, f"max_ratio_n{n}", None,
                                maxima[n]))
            out.write(ResultRow(cfg.run_id, 0.0, f"min_ratio_n{n}", None,
                                minima[n]))

    checks = []
    finite = all(np.isfinite(v) for v in maxima.values())
    checks.append(("ratio extrema finite", finite))
    checks.append(("no degenerate leakage", degenerate_total == 0))
    if len(resolutions) > 1:
        drift = max(maxima.values()) / min(maxima.values())
        checks.append((f"cross-resolution drift {drift:.3f} < 2",
                       drift < 2.0))
    if token == "genbernstein":
        low = min(minima.values())
        checks.append((f"min ratio {low:.3e} > 0", low > 0.0))
    if token == "lemma32":
        high = max(maxima.values())
        checks.append((f"max ratio {high:.4f} <= 1.05", high <= 1.05))

    failed = [label for label, ok in checks if not ok]
    summary = ", ".join(f"n={n} max {maxima[n]:.4g}" for n in resolutions)
    if failed:
        print(f"FAIL verify[{token}]: {summary}; failed: "
              f"{'; '.join(failed)}")
        return 1
    print(f"PASS verify[{token}]: {summary}; "
          + "; ".join(label for label, _ in checks))
    return 0


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def _run_analyze(cfg: RunConfig) -> int:
    import csv as _csv

    path = cfg.get("analyze.snapshot")
    try:
        n, period, t, fields = read_fields(path)
    except (OSError, SnapshotError) as exc:
        raise ConfigError(str(exc))
    name = cfg.get("analyze.field")
    if name not in fields:
        raise ConfigError(f"snapshot has fields {','.join(fields)}, "
                          f"not '{name}'")
    outdir = _prepare_outdir(cfg)
    grid = Grid(n, period)
    part = build_partition(grid)
    idx = BesovIndex(cfg.get("analyze.s"), cfg.get("analyze.p"),
                     cfg.get("analyze.r"))
    f = Field(grid, fields[name])

    rows = []
    for q in part.shells():
        norm = lebesgue_norm(dyadic_block(f, q, part), idx.p)
        rows.append((q, norm, 2.0 ** (q * idx.s) * norm))
    with open(os.path.join(outdir, "shells.csv"), "w", newline="") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(("q", "norm_Lp", "weighted"))
        for q, norm, weighted in rows:
            writer.writerow((q, repr(norm), repr(weighted)))
    total = besov_norm(f, idx, part)
    degenerate = not np.isfinite(total)
    print(f"{'FAIL' if degenerate else 'PASS'} analyze: field '{name}' "
          f"at t = {t:g}, Besov ({idx.s:g}, {idx.p:g}, {idx.r:g}) norm "
          f"= {total:.6g}")
    return 1 if degenerate else 0


_RUNNERS = {
    "simulate": _run_simulate,
    "td-run": _run_td,
    "verify": _run_verify,
    "analyze": _run_analyze,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text, subcommand=args.subcommand,
                           overrides=tuple(_collect_overrides(args)))
        return _RUNNERS[cfg.subcommand](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CFLViolation, TrajectoryDiverged) as exc:
        print(f"FAIL run aborted: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
