"""Command-line front end.

    maxstable-sphere <subcommand> --config run.toml [--out DIR] [--seed U64]
                     [--override section.key=value ...]

Every subcommand writes its artifacts to ``--out`` (default ``.``) and the
report JSON lines to ``reports.jsonl`` there.  Exit status: 0 when every
report passes, 1 otherwise (the failing lines are echoed to stderr), 2 for
usage errors.
"""

import argparse
import math
import os
import sys

import numpy as np

from .acceptance import run_all
from .chain import (
    ConstantField,
    VmfMixtureField,
    coupled_trajectory,
    initial_state,
    run_ensemble,
    stationary_draws,
)
from .config import ConfigError, parse_config
from .ergodicity import convergence_rate, drift_check, minorization_check
from .geometry import UnitVec3, VmfParams, fibonacci_grid, uniform_sphere_samples, vmf_sup
from .reporting import Report, report_lines, write_reports, write_state_snapshot
from .reporting import write_trajectory_csv
from .rng import RngStream
from .spectral import SPHERE, simulate_innovations, write_events_csv
from .validation import (
    chain_margin_check,
    ks_frechet,
    max_stability_check,
    rotation_stability_check,
    simulate_at_points,
)

SUBCOMMANDS = ("simulate-innovation", "simulate-chain", "stationary", "verify-drift",
               "verify-minorization", "verify-margins", "verify-stability", "couple",
               "convergence", "report-all")


def _model_params(run):
    m = run.model
    return {"a": run.chain_config().a, "theta": m.theta, "axis": list(m.axis),
            "kappa": m.kappa, "intensity_mode": m.intensity_mode}


def _out_path(out, default_name):
    if out.endswith(".csv"):
        parent = os.path.dirname(out) or "."
        os.makedirs(parent, exist_ok=True)
        return out, parent
    os.makedirs(out, exist_ok=True)
    return os.path.join(out, default_name), out


def cmd_simulate_innovation(run, out):
    cfg = run.chain_config()
    path, _ = _out_path(out, "innovation.csv")
    eval_set = SPHERE if run.sim.eval_mode == "sphere" else fibonacci_grid(run.sim.grid_n)
    key = RngStream(run.sim.seed).spawn_keys("cli-innovation", np.zeros(1, dtype=np.uint64))
    z = simulate_innovations(cfg.kappa, eval_set, key,
                             intensity_mode=cfg.innovation.intensity_mode)[0]
    write_events_csv(z, path)
    return []


def cmd_simulate_chain(run, out):
    cfg = run.chain_config()
    _, out = _out_path(out, "")
    grid = fibonacci_grid(run.sim.grid_n)
    states, values = run_ensemble([initial_state(ConstantField(run.sim.h0), cfg)],
                                  run.verify.horizon, RngStream(run.sim.seed),
                                  probes=grid.nodes, tag="cli-chain")
    write_trajectory_csv(os.path.join(out, "trajectory.csv"),
                         range(run.verify.horizon + 1), grid.nodes, values[:, 0, :])
    write_state_snapshot(states[0], out)
    return []


def cmd_stationary(run, out):
    cfg = run.chain_config()
    sp = run.stationary_params()
    _, out = _out_path(out, "")
    state = stationary_draws(cfg, sp, RngStream(run.sim.seed), 1)[0]
    grid = fibonacci_grid(run.sim.grid_n)
    write_trajectory_csv(os.path.join(out, "stationary_field.csv"), [0], grid.nodes,
                         state.evaluate(grid.nodes)[None, :])
    write_state_snapshot(state, out, J=sp.J)
    return []


def cmd_verify_drift(run, out):
    cfg = run.chain_config()
    v = run.verify
    h = ConstantField(run.sim.h0)
    r = drift_check(h, cfg, v.gamma, v.drift_n, RngStream(run.sim.seed))
    params = dict(_model_params(run), gamma=v.gamma, h0=run.sim.h0, L_h=r.L_h, rhs=r.rhs,
                  beta=r.beta, bigK=r.bigK)
    return [Report("drift", r.passed, params, r.pl_mc, r.mc_stderr, r.pl_closed, r.n, r.seed)]


def _histories(R):
    p = VmfParams(UnitVec3(1.0, 0.0, 0.0), 3.0)
    return ConstantField(R), VmfMixtureField(((0.5 * R / vmf_sup(p), p),))


def cmd_verify_minorization(run, out):
    cfg = run.chain_config()
    R = run.verify.R
    h1, h2 = _histories(R)
    r = minorization_check(h1, h2, cfg, R, run.verify.replications, RngStream(run.sim.seed),
                           eval_set=fibonacci_grid(run.sim.grid_n))
    params = dict(_model_params(run), R=R, coupled_exactly=r.coupled_exactly,
                  n_verified=r.n_verified)
    return [Report("minorization", r.passed, params, r.alpha_empirical, r.stderr,
                   r.alpha_analytic, r.n, r.seed)]


def cmd_verify_margins(run, out):
    cfg = run.chain_config()
    n, seed = run.verify.replications, run.sim.seed
    params = _model_params(run)
    reports = []
    if cfg.innovation.intensity_mode == "exact":
        vals = simulate_at_points(cfg.kappa, run.probe, n, RngStream(seed), tag="cli-margins")
        reports.append(Report.from_ks("innovation-margin", ks_frechet(vals[:, 0]), params, seed))
        ks = chain_margin_check(cfg, run.stationary_params(), run.probe, n, RngStream(seed),
                                n_jobs=run.sim.n_jobs)
        reports.append(Report.from_ks("chain-margin", ks, params, seed))
    keys = RngStream(seed).spawn_keys("cli-sup", np.arange(n, dtype=np.uint64))
    sups = [z.sup() for z in simulate_innovations(cfg.kappa, SPHERE, keys,
                                                  intensity_mode=cfg.innovation.intensity_mode)]
    reports.append(Report.from_ks("sup-law", ks_frechet(sups, scale=cfg.sigma_z),
                                  dict(params, scale=cfg.sigma_z), seed))
    return reports


def cmd_verify_stability(run, out):
    cfg = run.chain_config()
    seed = run.sim.seed
    params = _model_params(run)
    probes = [run.probe, UnitVec3(1.0, 0.0, 0.0)]
    ms = max_stability_check(cfg, run.verify.n_copies, probes, run.verify.replications,
                             RngStream(seed))
    reports = [Report("max-stability", ms.passed,
                      dict(params, n_copies=run.verify.n_copies,
                           per_probe=[r.statistic for r in ms.per_probe],
                           rescaled_margin=[r.statistic for r in ms.rescaled_margin]),
                      ms.bivariate, None, ms.bivariate_threshold, run.verify.replications,
                      seed)]
    pts = uniform_sphere_samples(RngStream(seed).spawn("cli-rotation"), 3)
    rs = rotation_stability_check(pts, cfg.theta, cfg.axis, cfg.kappa, grid_n=10_000,
                                  mc_n=100_000, rng=RngStream(seed))
    reports.append(Report("rotational-stability", rs.rel_err < 1e-2 and rs.mc_agrees,
                          dict(params, rel_err=rs.rel_err, rhs=rs.rhs, lhs_mc=rs.lhs_mc),
                          rs.lhs, rs.lhs_mc_stderr, rs.rhs, 100_000, seed))
    return reports


def cmd_couple(run, out):
    cfg = run.chain_config()
    _, out = _out_path(out, "")
    h1, h2 = _histories(run.verify.R)
    norm = max(h1.c - h2.inf_bound(), h2.sup() - h1.c)
    horizon = run.verify.horizon
    d = coupled_trajectory(h1, h2, cfg, horizon, RngStream(run.sim.seed),
                           eval_set=fibonacci_grid(run.sim.grid_n))
    bound = cfg.a ** np.arange(horizon + 1) * norm + 1e-12
    with open(os.path.join(out, "coupling.csv"), "w", newline="\n") as fh:
        fh.write("t,distance,bound\n")
        for t in range(horizon + 1):
            fh.write(f"{t},{d[t]:.17g},{bound[t]:.17g}\n")
    ok = bool(np.all(d <= bound))
    return [Report("coupling-contraction", ok, dict(_model_params(run), horizon=horizon),
                   float(np.max(d - bound)), None, 0.0, horizon + 1, run.sim.seed)]


def cmd_convergence(run, out):
    cfg = run.chain_config()
    _, out = _out_path(out, "")
    v = run.verify
    r = convergence_rate(cfg, ConstantField(v.h0), run.probe, v.horizon, v.replications,
                         RngStream(run.sim.seed), n_jobs=run.sim.n_jobs)
    with open(os.path.join(out, "convergence.csv"), "w", newline="\n") as fh:
        fh.write("t,distance\n")
        for t, dist in enumerate(r.distances):
            fh.write(f"{t},{dist:.17g}\n")
    params = dict(_model_params(run), h0=v.h0, fit_range=r.fit_range,
                  noise_floor=r.noise_floor)
    return [Report("convergence", r.passed, params, r.fitted_log_slope, None,
                   math.log(cfg.a) + 0.1, v.replications, run.sim.seed)]


def cmd_report_all(run, out):
    return run_all(seed=run.sim.seed, n_jobs=run.sim.n_jobs)


COMMANDS = {
    "simulate-innovation": cmd_simulate_innovation,
    "simulate-chain": cmd_simulate_chain,
    "stationary": cmd_stationary,
    "verify-drift": cmd_verify_drift,
    "verify-minorization": cmd_verify_minorization,
    "verify-margins": cmd_verify_margins,
    "verify-stability": cmd_verify_stability,
    "couple": cmd_couple,
    "convergence": cmd_convergence,
    "report-all": cmd_report_all,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="maxstable-sphere",
                                     description="Max-stable chains on the sphere.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS, metavar="subcommand",
                        help="one of: " + ", ".join(SUBCOMMANDS))
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--out", default=".", help="output directory (or .csv file)")
    parser.add_argument("--seed", type=int, default=None, help="override sim.seed")
    parser.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, e.g. model.a=0.9")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = list(args.override)
    if args.seed is not None:
        overrides.append(f"sim.seed={args.seed}")
    try:
        run = parse_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        parser.error(str(exc))
    reports = COMMANDS[args.subcommand](run, args.out)
    if reports:
        out_dir = os.path.dirname(args.out) if args.out.endswith(".csv") else args.out
        os.makedirs(out_dir or ".", exist_ok=True)
        write_reports(reports, os.path.join(out_dir or ".", "reports.jsonl"))
        sys.stdout.write(report_lines(reports))
    failed = [r for r in reports if not r.passed]
    if failed:
        sys.stderr.write(report_lines(failed))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
