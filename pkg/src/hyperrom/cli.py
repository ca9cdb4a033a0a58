"""Command-line pipeline: fom | pod | sample | rom | sweep.

Configuration is a flat "section.key = value" text file plus repeatable
``--set section.key=value`` overrides.  All outputs use fixed float
formatting so reruns on identical inputs are byte-identical (wall-clock
columns can be suppressed with io.timing=none).
"""

import argparse
import concurrent.futures
import math
import sys
from pathlib import Path

import numpy as np

from . import burgers, hyperreduction, rom, sampling, snapshots

DEFAULTS = {
    "fom.n": 1000,
    "fom.dx": 0.002,
    "fom.dt": 0.001,
    "fom.steps": 500,
    "fom.init": "sine_bump",
    "pod.k": 30,
    "pod.energy": "",
    "pod.u_ref": "initial",  # or "mean"
    "sample.algorithm": "s_opt",  # or "deim"
    "sample.n": 60,
    "sample.n_min": 30,
    "sample.n_max": 60,
    "rom.projection": "lspg",
    "rom.hyper": "gappy_pod",
    "rom.residual_basis": "sns",  # or "nonlinear_pod"
    "io.out": ".",
    "io.timing": "wall",  # or "none"
}

FMT = "%.17g"


class UsageError(Exception):
    pass


def _parse_value(text):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def load_config(path=None, overrides=()):
    cfg = dict(DEFAULTS)
    if path is not None:
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as e:
            raise UsageError(f"cannot read config file: {e}") from None
        for ln, line in enumerate(lines, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{ln}: expected 'section.key = value'")
            key, value = (t.strip() for t in line.split("=", 1))
            if key not in cfg:
                raise UsageError(f"{path}:{ln}: unknown config key {key!r}")
            cfg[key] = _parse_value(value)
    for item in overrides:
        if "=" not in item:
            raise UsageError(f"--set needs key=value, got {item!r}")
        key, value = (t.strip() for t in item.split("=", 1))
        if key not in cfg:
            raise UsageError(f"unknown config key {key!r}")
        cfg[key] = _parse_value(value)
    return cfg


def _burgers_config(cfg):
    return burgers.BurgersConfig(
        n_dof=int(cfg["fom.n"]),
        dx=float(cfg["fom.dx"]),
        dt=float(cfg["fom.dt"]),
        n_steps=int(cfg["fom.steps"]),
        domain_length=int(cfg["fom.n"]) * float(cfg["fom.dx"]),
        init=cfg["fom.init"],
    )


def _pod_order(cfg):
    if cfg["pod.energy"] != "":
        return float(cfg["pod.energy"])
    return int(cfg["pod.k"])


def _u_ref(cfg, traj):
    mode = cfg["pod.u_ref"]
    if mode == "initial":
        return traj.data[:, 0].copy()
    if mode == "mean":
        return traj.data.mean(axis=1)
    raise UsageError(f"unknown pod.u_ref mode {mode!r}")


def _out_dir(cfg):
    out = Path(cfg["io.out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _select(algorithm, modes, n):
    if algorithm == "s_opt":
        return sampling.select_s_opt(modes, n)
    if algorithm == "deim":
        return sampling.select_deim_oversampled(modes, n)
    raise UsageError(f"unknown sampling algorithm {algorithm!r}")


def _hyper_basis(cfg, basis, fom_cfg, traj):
    """Basis used for hyper-reduction sampling and reconstruction."""
    mode = cfg["rom.residual_basis"]
    if mode == "sns":
        # A = I for this model, so the residual basis is the solution basis
        return snapshots.sns_nonlinear_basis(basis, "identity")
    if mode == "nonlinear_pod":
        fsnaps = burgers.nonlinear_term_snapshots(traj, fom_cfg)
        b = snapshots.compute_pod(fsnaps, np.zeros(fom_cfg.n_dof), basis.n_modes)
        return b.with_kind("nonlinear_term")
    raise UsageError(f"unknown rom.residual_basis mode {mode!r}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_fom(cfg):
    out = _out_dir(cfg)
    traj, _ = burgers.solve_fom(_burgers_config(cfg))
    snapshots.write_matrix(out / "trajectory.txt", traj)
    print(f"wrote {out / 'trajectory.txt'} ({traj.n_dof}x{traj.n_snapshots})")
    return 0


def cmd_pod(cfg):
    out = _out_dir(cfg)
    traj = snapshots.read_matrix(out / "trajectory.txt")
    basis = snapshots.compute_pod(traj, _u_ref(cfg, traj), _pod_order(cfg))
    snapshots.write_matrix(out / "basis.txt", basis.modes)
    snapshots.write_matrix(out / "uref.txt", basis.u_ref[:, None])
    snapshots.write_matrix(out / "svals.txt", basis.singular_values[:, None])
    print(f"wrote {out / 'basis.txt'} ({basis.n_dof}x{basis.n_modes})")
    return 0


def _read_basis(out):
    modes = snapshots.read_matrix(out / "basis.txt").data
    u_ref = snapshots.read_matrix(out / "uref.txt").data[:, 0]
    svals = snapshots.read_matrix(out / "svals.txt").data[:, 0]
    return snapshots.PodBasis(modes, svals, u_ref)


def cmd_sample(cfg):
    out = _out_dir(cfg)
    basis = _read_basis(out)
    algorithm = cfg["sample.algorithm"]
    n = int(cfg["sample.n"])
    ss = _select(algorithm, basis.modes, n)
    path = out / f"samples_{algorithm}_{n}.txt"
    sampling.write_sample_set(path, ss)
    log = out / f"svalues_{algorithm}_{n}.csv"
    with open(log, "w", encoding="utf-8") as fh:
        fh.write("n_selected,s_value\n")
        for j in range(1, len(ss) + 1):
            sv = sampling.s_quantity(
                basis.modes[ss.indices[:j], : min(j, basis.n_modes)]
            ).value
            fh.write(f"{j},{FMT % sv}\n")
    print(f"wrote {path} and {log}")
    return 0


def _build_rom_config(cfg, basis, fom_cfg, samples, hyper_basis):
    return rom.RomConfig(
        basis=basis,
        fom=fom_cfg,
        projection=cfg["rom.projection"],
        hyper=cfg["rom.hyper"],
        nonlinear_basis=hyper_basis if cfg["rom.hyper"] == "gappy_pod" else None,
        samples=samples,
    )


def cmd_rom(cfg):
    out = _out_dir(cfg)
    fom_cfg = _burgers_config(cfg)
    traj = snapshots.read_matrix(out / "trajectory.txt")
    basis = _read_basis(out)
    samples = None
    hyper_basis = None
    if cfg["rom.hyper"] != "none":
        algorithm = cfg["sample.algorithm"]
        n = int(cfg["sample.n"])
        samples = sampling.read_sample_set(out / f"samples_{algorithm}_{n}.txt")
        hyper_basis = _hyper_basis(cfg, basis, fom_cfg, traj)
    rcfg = _build_rom_config(cfg, basis, fom_cfg, samples, hyper_basis)
    result = rom.run_rom(rcfg)
    e_max = rom.max_in_time_relative_error(traj, result)
    snapshots.write_matrix(out / "rom_trajectory.txt", result.states())
    wall = 0.0 if cfg["io.timing"] == "none" else result.wall_time
    with open(out / "rom_result.csv", "w", encoding="utf-8") as fh:
        fh.write("algorithm,n_samples,e_max,wall_seconds\n")
        fh.write(
            f"{cfg['sample.algorithm']},{len(samples) if samples else 0},"
            f"{FMT % e_max},{FMT % wall}\n"
        )
    print(f"e_max = {e_max:.6e}")
    return 0


def _sweep_task(args):
    cfg, algorithm, n, basis, fom_cfg, hyper_basis, fsnap_cols = args
    ss = _select(algorithm, hyper_basis.modes, n)
    reports = [
        hyperreduction.error_report(hyper_basis, ss, col) for col in fsnap_cols
    ]
    oblique = float(np.mean([r.oblique_error for r in reports]))
    orth = float(np.mean([r.orthogonal_error for r in reports]))
    try:
        rcfg = _build_rom_config(cfg, basis, fom_cfg, ss, hyper_basis)
        result = rom.run_rom(rcfg)
        return algorithm, n, result, oblique, orth, ""
    except (rom.RomDivergenceError, np.linalg.LinAlgError) as e:
        return algorithm, n, None, oblique, orth, str(e)


def cmd_sweep(cfg, jobs=1):
    out = _out_dir(cfg)
    fom_cfg = _burgers_config(cfg)
    traj, _ = burgers.solve_fom(fom_cfg)
    basis = snapshots.compute_pod(traj, _u_ref(cfg, traj), _pod_order(cfg))
    hyper_basis = _hyper_basis(cfg, basis, fom_cfg, traj)
    n_min, n_max = int(cfg["sample.n_min"]), int(cfg["sample.n_max"])
    p = hyper_basis.n_modes
    if n_min < p or n_max > fom_cfg.n_dof or n_min > n_max:
        raise UsageError(
            f"sweep range [{n_min}, {n_max}] must lie within [{p}, {fom_cfg.n_dof}]"
        )
    # projection-error diagnostics on a handful of logged snapshots
    fsnaps = burgers.nonlinear_term_snapshots(traj, fom_cfg)
    logged = np.linspace(1, fsnaps.n_snapshots - 1, num=min(5, fsnaps.n_snapshots - 1))
    fsnap_cols = [fsnaps.data[:, int(j)] for j in logged]

    tasks = [
        (cfg, alg, n, basis, fom_cfg, hyper_basis, fsnap_cols)
        for alg in ("deim", "s_opt")
        for n in range(n_min, n_max + 1)
    ]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]

    rows = []
    for algorithm, n, result, oblique, orth, failure in results:
        if result is None:
            e_max, wall = math.inf, 0.0
        else:
            e_max = rom.max_in_time_relative_error(traj, result)
            wall = result.wall_time
        if cfg["io.timing"] == "none":
            wall = 0.0
        rows.append((algorithm, n, e_max, oblique, orth, wall, failure))
    rows.sort(key=lambda r: (r[0], r[1]))

    path = out / "sweep.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("algorithm,n_samples,e_max,oblique_err_mean,orth_err_mean,wall_seconds\n")
        for algorithm, n, e_max, oblique, orth, wall, _ in rows:
            fh.write(
                f"{algorithm},{n},{FMT % e_max},{FMT % oblique},"
                f"{FMT % orth},{FMT % wall}\n"
            )
    failures = [(a, n, f) for a, n, *_rest, f in rows if f]
    for algorithm, n, f in failures:
        print(f"note: {algorithm} n={n} unstable: {f}", file=sys.stderr)
    print(f"wrote {path} ({len(rows)} rows, {len(failures)} unstable)")
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hyperrom",
        description="Burgers FOM -> POD -> sampling -> hyper-reduced ROM pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("fom", "pod", "sample", "rom", "sweep"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="config file path")
        sp.add_argument(
            "--set", action="append", default=[], metavar="KEY=VALUE",
            help="override a config entry (repeatable)",
        )
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--jobs", type=int, default=1, help="sweep worker count")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code not in (0, None) else 0
    try:
        cfg = load_config(args.config, args.set)
        if args.out is not None:
            cfg["io.out"] = args.out
        if args.command == "fom":
            return cmd_fom(cfg)
        if args.command == "pod":
            return cmd_pod(cfg)
        if args.command == "sample":
            return cmd_sample(cfg)
        if args.command == "rom":
            return cmd_rom(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, jobs=args.jobs)
        return 1
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: missing input file: {e}", file=sys.stderr)
        return 1
    except (
        ValueError,
        np.linalg.LinAlgError,
        burgers.NewtonDivergenceError,
        rom.RomDivergenceError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
