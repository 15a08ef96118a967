"""Command-line driver producing CSV datasets.

    kicked-oscillator evolve --sigma 0,0.001,inf --t-max 20
    kicked-oscillator fidelity --sigma 0.004,0.032,0.256 --t-max 25 -K 500
    kicked-oscillator entropy --sigma 0.000125,0.001,0.008,0.064,0.512,inf --basis 512 --t-max 15
    kicked-oscillator reversibility --sigma 0.032 --basis 256 --t-max 10
    kicked-oscillator selfcheck

Exit codes: 0 ok, 1 selfcheck failure, 2 basis truncation, 3 infeasible
engine, 4 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, format_sigma, load_config, parse_sigma_list
from .dynamics import FloquetOperators, evolve_averaged_density, markov_matrix, markov_trajectory
from .ensemble import EnsembleSpec, reference_run, run_ensemble
from .errors import TruncationError
from .fidelity import (
    fidelity_from_ensemble,
    fidelity_strong,
    fidelity_weak,
    purity_curve,
    reversibility_mc,
    scaling_fit,
    scaling_fit_value,
    sigma_critical,
)
from .observables import (
    coarse_grained_information_entropy,
    geometric_profile,
    shannon_entropy,
    von_neumann_entropy,
)
from .selfcheck import run_selfcheck

EXIT_OK, EXIT_SELFCHECK, EXIT_TRUNCATION, EXIT_ENGINE, EXIT_CONFIG = 0, 1, 2, 3, 4


class InfeasibleEngine(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.15e}"


def write_csv(path: Path, command: str, cfg: ExperimentConfig, columns, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"#: version = {__version__}\n#: command = {command}\n")
        for line in cfg.header_lines():
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _markov_weights(ops, t_max):
    w0 = np.zeros(ops.N)
    w0[0] = 1.0
    return markov_trajectory(w0, markov_matrix(ops), t_max)


def _check_engine(cfg, allowed, default):
    engine = cfg.engine or default
    if engine not in allowed:
        raise ConfigError(f"engine {engine!r} is not available here; choose from {allowed}")
    if engine == "markov" and any(not math.isinf(s) for s in cfg.sigma):
        raise ConfigError("the markov engine only describes sigma = inf")
    return engine


def cmd_evolve(cfg: ExperimentConfig) -> list:
    _check_engine(cfg, ("mc", "markov"), "mc")
    ops = FloquetOperators(cfg.params)
    T, N = cfg.t_max, cfg.basis
    idx = np.arange(N, dtype=float)
    ref = reference_run(ops, T, cfg.leak_tol)
    noisy = tuple(s for s in cfg.sigma if s > 0 and not math.isinf(s))
    result = None
    if noisy:
        spec = EnsembleSpec(cfg.params, noisy, T, cfg.realizations, cfg.seed, cfg.workers,
                            leak_tol=cfg.leak_tol, tail_tol=cfg.tail_tol)
        result = run_ensemble(spec, ops)
    out_dir = Path(cfg.out)
    written = []
    for s in cfg.sigma:
        if s == 0:
            w, W = ref.w, ref.harmonics
            mean_n, mean_abs_m, mean_m2 = ref.mean_n, ref.mean_abs_m, ref.mean_m2
            stderr_n = np.zeros(T + 1)
        elif math.isinf(s):
            w = _markov_weights(ops, T)
            mean_n = w @ idx
            # harmonics of the strong-noise limit follow the coarse-grained law with <|m|> = <n>
            W = np.array([geometric_profile(mu, N, "harmonics").weights for mu in mean_n])
            mean_abs_m, mean_m2 = W @ idx, W @ (idx * idx)
            stderr_n = np.zeros(T + 1)
        else:
            st = result.for_sigma(s)
            w, W = st.avg_w, st.avg_W
            mean_n, mean_abs_m, mean_m2 = st.mean(st.mean_n), st.mean(st.mean_abs_m), st.mean(st.mean_m2)
            stderr_n = st.stderr(st.mean_n)
        cg_w = geometric_profile(mean_n[T], N).weights
        cg_W = geometric_profile(mean_abs_m[T], N, "harmonics").weights
        tag = format_sigma(s)
        written.append(write_csv(
            out_dir / f"distributions_t{T}_sigma{tag}.csv", "evolve", cfg,
            ["index", "w_n", "W_m", "coarse_grained_w", "coarse_grained_W"],
            ((int(i), w[T][i], W[T][i], cg_w[i], cg_W[i]) for i in range(N)),
        ))
        written.append(write_csv(
            out_dir / f"moments_sigma{tag}.csv", "evolve", cfg,
            ["t", "mean_n", "mean_abs_m", "mean_m2", "stderr_n"],
            ((t, mean_n[t], mean_abs_m[t], mean_m2[t], stderr_n[t]) for t in range(T + 1)),
        ))
    return written


def cmd_fidelity(cfg: ExperimentConfig, echo=print) -> list:
    _check_engine(cfg, ("mc", "markov"), "mc")
    ops = FloquetOperators(cfg.params)
    T = cfg.t_max
    ref = reference_run(ops, T, cfg.leak_tol)
    F_strong = fidelity_strong(ops, T, reference=ref)
    noisy = tuple(s for s in cfg.sigma if s > 0 and not math.isinf(s))
    result = None
    if noisy:
        spec = EnsembleSpec(cfg.params, noisy, T, cfg.realizations, cfg.seed, cfg.workers,
                            distributions=False, leak_tol=cfg.leak_tol, tail_tol=cfg.tail_tol)
        result = run_ensemble(spec, ops)
    out_dir = Path(cfg.out)
    written, curves = [], []
    sched = sigma_critical(ops, T, mean_m2=ref.mean_m2, sigmas=cfg.sigma) if T >= 1 else None
    sc = np.concatenate([[np.inf], sched.exact]) if sched else np.array([np.inf])
    for s in cfg.sigma:
        if s == 0:
            F, err = np.ones(T + 1), np.zeros(T + 1)
        elif math.isinf(s):
            F, err = F_strong, np.zeros(T + 1)
        else:
            curve = fidelity_from_ensemble(result, s)
            curves.append(curve)
            F, err = curve.F, curve.stderr
        if math.isinf(s):
            F_weak = np.full(T + 1, np.nan)
            ratio = np.full(T + 1, np.inf)
            ratio[0] = np.nan
        else:
            F_weak = fidelity_weak(s, ref.mean_m2)
            ratio = s / sc
        F_fit = scaling_fit_value(ratio)
        written.append(write_csv(
            out_dir / f"fidelity_sigma{format_sigma(s)}.csv", "fidelity", cfg,
            ["t", "F", "stderr", "F_weak", "F_strong", "sigma_over_sigma_c", "F_fit"],
            ((t, F[t], err[t], F_weak[t], F_strong[t], ratio[t], F_fit[t]) for t in range(T + 1)),
        ))
    if sched is not None:
        finite = [s for s in cfg.sigma if s > 0 and not math.isinf(s)]
        cols = ["t", "sigma_c_exact", "sigma_c_diffusion"] + [f"t_dec_sigma{format_sigma(s)}" for s in finite]
        written.append(write_csv(
            out_dir / "sigma_c.csv", "fidelity", cfg, cols,
            ([int(t), sched.exact[t - 1], sched.diffusion[t - 1]] + [sched.t_dec[s] for s in finite]
             for t in sched.t),
        ))
        if len(curves) >= 2:
            rep = scaling_fit(curves, sched)
            per = ", ".join(f"sigma={e.sigma:g}: {e.rms:.4f}" for e in rep.entries)
            echo(f"scaling collapse rms (t < t_dec): pooled {rep.rms:.4f}; {per}")
    return written


def cmd_entropy(cfg: ExperimentConfig) -> list:
    _check_engine(cfg, ("exact-rho", "markov"), "exact-rho")
    finite = [s for s in cfg.sigma if not math.isinf(s)]
    if finite and cfg.basis > cfg.exact_cap:
        raise InfeasibleEngine(
            f"exact-rho engine needs N <= {cfg.exact_cap} (got N={cfg.basis}); "
            "lower --basis or raise exact_cap in the config"
        )
    ops = FloquetOperators(cfg.params)
    T, N = cfg.t_max, cfg.basis
    wd = _markov_weights(ops, T)
    I_info = [coarse_grained_information_entropy(mu) for mu in wd @ np.arange(N)]
    columns, data = ["t"], [np.arange(T + 1)]
    for s in cfg.sigma:
        if math.isinf(s):
            S = [shannon_entropy(w) for w in wd]
        else:
            S = [von_neumann_entropy(rho)
                 for _, rho in evolve_averaged_density(ops, s, T, trace_tol=cfg.leak_tol)]
        columns.append(f"S_sigma{format_sigma(s)}")
        data.append(np.asarray(S))
    columns.append("I_info")
    data.append(np.asarray(I_info))
    rows = ([int(data[0][t])] + [d[t] for d in data[1:]] for t in range(T + 1))
    return [write_csv(Path(cfg.out) / "entropy.csv", "entropy", cfg, columns, rows)]


def cmd_reversibility(cfg: ExperimentConfig) -> list:
    _check_engine(cfg, ("mc", "markov"), "mc")
    ops = FloquetOperators(cfg.params)
    T, N = cfg.t_max, cfg.basis
    exact = N <= cfg.exact_cap
    rows = []
    for s in cfg.sigma:
        nan = np.full(T + 1, np.nan)
        if s == 0:
            F, err = np.ones(T + 1), np.zeros(T + 1)
            P, approx = (purity_curve(ops, 0.0, T, cfg.leak_tol) if exact else (nan, nan))
        elif math.isinf(s):
            wd = _markov_weights(ops, T)
            F = P = (wd**2).sum(axis=1)
            err = np.zeros(T + 1)
            approx = 1.0 / (2 * (wd @ np.arange(N)) + 1)
        else:
            curve = reversibility_mc(ops, s, T, cfg.realizations, cfg.seed, cfg.workers, exact=exact,
                                     leak_tol=cfg.leak_tol, tail_tol=cfg.tail_tol)
            F, err = curve.F, curve.stderr
            P = curve.purity_exact if exact else nan
            approx = curve.purity_harmonics if exact else nan
        rows.extend((s, t, F[t], err[t], P[t], approx[t]) for t in range(T + 1))
    return [write_csv(
        Path(cfg.out) / "reversibility.csv", "reversibility", cfg,
        ["sigma", "t", "F_rev", "stderr", "purity_exact", "purity_harmonics_approx"],
        ((r[0], int(r[1])) + r[2:] for r in rows),
    )]


COMMANDS = {
    "evolve": cmd_evolve,
    "fidelity": cmd_fidelity,
    "entropy": cmd_entropy,
    "reversibility": cmd_reversibility,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kicked-oscillator", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*COMMANDS, "selfcheck"):
        p = sub.add_parser(name)
        if name == "selfcheck":
            continue
        p.add_argument("--config", type=Path, help="flat key = value file (an output CSV header works too)")
        p.add_argument("--sigma", type=parse_sigma_list, help="comma-separated noise levels; 'inf' for the strong-noise limit")
        p.add_argument("--t-max", type=int, dest="t_max")
        p.add_argument("--realizations", "-K", type=int)
        p.add_argument("--basis", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--engine", choices=("mc", "exact-rho", "markov"))
        p.add_argument("--out", type=str)
        p.add_argument("--workers", type=int)
        p.add_argument("--leak-tol", type=float, dest="leak_tol")
        p.add_argument("--tail-tol", type=float, dest="tail_tol")
        p.add_argument("--paper-scale", action="store_true",
                       help="N=6144, t_max=80, K=1000 (hours of CPU time)")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.command == "selfcheck":
        return EXIT_OK if run_selfcheck() else EXIT_SELFCHECK
    overrides = {k: getattr(args, k) for k in
                 ("sigma", "t_max", "realizations", "basis", "seed", "engine", "out",
                  "workers", "leak_tol", "tail_tol")}
    try:
        cfg = load_config(args.config, overrides, full_scale=args.paper_scale)
        _ = cfg.params  # validate physical parameters early
        written = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleEngine as exc:
        print(f"infeasible engine: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    except TruncationError as exc:
        need = f" (required N >= {exc.required_basis})" if exc.required_basis else ""
        print(f"basis truncation: {exc}{need}", file=sys.stderr)
        return EXIT_TRUNCATION
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
