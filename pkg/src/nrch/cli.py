"""Command-line front end.

Every subcommand writes a JSON run manifest next to its outputs.  The output
directory is ``--outdir``, else ``$NRCH_OUTPUT_DIR``, else the working
directory.  Exit codes: 0 success, 1 numerical failure, 2 invalid input.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict

import numpy as np

from . import __version__
from .wavetrain import (
    DimensionalParams,
    ModelParams,
    build_profile,
    dimensional_speeds,
    solve_xi,
    speed,
    write_profile_csv,
)

OUTPUT_ENV = "NRCH_OUTPUT_DIR"


class NumericalFailure(Exception):
    pass


def _g(x):
    return format(float(x), ".17g")


def _float_list(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}")


def _int_list(text):
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}")


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def output_dir(args):
    d = args.outdir or os.environ.get(OUTPUT_ENV) or "."
    os.makedirs(d, exist_ok=True)
    return d


def _out_path(outdir, name):
    return name if os.path.isabs(name) else os.path.join(outdir, name)


class Run:
    """Collects outputs and writes the manifest for one subcommand."""

    def __init__(self, name, args, argv):
        self.name = name
        self.args = args
        self.argv = list(argv)
        self.outdir = output_dir(args)
        self.outputs = []
        self.inputs = {}
        self.params = {}
        self.t0 = time.perf_counter()

    def path(self, name):
        p = _out_path(self.outdir, name)
        self.outputs.append(p)
        return p

    def write_manifest(self):
        files = []
        for p in self.outputs:
            if os.path.isdir(p):
                for root, _, names in os.walk(p):
                    files += [os.path.join(root, n) for n in sorted(names)]
            elif os.path.exists(p):
                files.append(p)
        manifest = dict(
            subcommand=self.name,
            argv=self.argv,
            parameters=self.params,
            version=__version__,
            inputs=self.inputs,
            outputs={os.path.relpath(f, self.outdir): sha256(f) for f in sorted(files)},
            wall_time=time.perf_counter() - self.t0,
        )
        path = os.path.join(self.outdir, f"{self.name}_manifest.json")
        with open(path, "w") as fh:
            json.dump(manifest, fh, indent=2, default=_jsonable)
        return path


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


# -- speed -------------------------------------------------------------------

DIM_KEYS = ("kappa", "beta", "L", "H", "D12", "D21", "D22")


def cmd_speed(args, run):
    dims = {k: getattr(args, k) for k in DIM_KEYS}
    given = [k for k, v in dims.items() if v is not None]
    if given and len(given) != len(DIM_KEYS):
        raise ValueError("dimensional mode needs all of --" + " --".join(DIM_KEYS))
    lines = []
    if given:
        dp = DimensionalParams(**dims)
        theta = dp.theta
        if args.theta is not None and not math.isclose(args.theta, theta, rel_tol=1e-12):
            raise ValueError("--theta conflicts with D12*D21/D22^2")
        mp = dp.to_model()
        tau = mp.tau if args.tau is None else args.tau
    else:
        if args.theta is None or args.tau is None:
            raise ValueError("--theta and --tau are required")
        theta, tau = args.theta, args.tau
    if not tau > 0:
        raise ValueError("tau must be positive")
    xi = solve_xi(theta)
    c0 = speed(theta, tau, args.n_fronts)
    run.params = dict(theta=theta, tau=tau, n_fronts=args.n_fronts, **{k: v for k, v in dims.items() if v is not None})
    lines += [("xi", xi), ("c0", c0)]
    if given:
        ds = dimensional_speeds(dp, normalized=args.normalized)
        lines += [("theta", theta), ("epsilon", mp.epsilon), ("tau_model", mp.tau), ("rho", mp.rho)]
        lines += [("c_sharp", ds.c_sharp), ("c_bm", ds.c_bm)]
    for k, v in lines:
        print(f"{k}={_g(v)}")
    if args.out:
        with open(run.path(args.out), "w") as fh:
            fh.write("key,value\n")
            for k, v in lines:
                fh.write(f"{k},{_g(v)}\n")


# -- profile -----------------------------------------------------------------


def cmd_profile(args, run):
    if args.samples < 2:
        raise ValueError("--samples must be at least 2")
    params = ModelParams(epsilon=args.epsilon, tau=args.tau, theta=args.theta)
    prof = build_profile(params, args.n_fronts)
    run.params = dict(asdict(params), n_fronts=args.n_fronts, samples=args.samples)
    write_profile_csv(run.path(args.out), prof, params, args.samples)
    print(f"xi={_g(prof.xi)}")
    print(f"c0={_g(prof.c0)}")


# -- stability ---------------------------------------------------------------


def _mode(args):
    from .stability import Mode

    if (args.q is None) == (args.omega is None):
        raise ValueError("give exactly one of --q and --omega")
    if args.q is not None:
        return Mode.from_q(args.q, args.k, args.rho)
    return Mode(args.omega, args.k)


def cmd_stability(args, run):
    from .stability import stability_count

    mode = _mode(args)
    params = ModelParams(epsilon=1.0, tau=args.tau, theta=args.theta, rho=args.rho)
    run.params = dict(theta=args.theta, tau=args.tau, n_fronts=args.n_fronts, omega=mode.omega, k=mode.k, rho=args.rho, traveling=args.traveling, lambda_max=args.lambda_max)
    trace = stability_count(mode, params, args.n_fronts, traveling=args.traveling, lambda_max=args.lambda_max)
    if args.out:
        trace.write_csv(run.path(args.out))
    print(f"Z={trace.Z}")
    print(f"Z_raw={_g(trace.Z_raw)}")
    print(f"delta_arg={_g(trace.unwrapped_phase)}")


# -- threshold ---------------------------------------------------------------


def cmd_threshold(args, run):
    from .stability import threshold_scan

    if (args.q_grid is None) == (args.omega_grid is None):
        raise ValueError("give exactly one of --q-grid and --omega-grid")
    omegas = args.omega_grid if args.omega_grid is not None else [2 * math.pi * q / args.rho for q in args.q_grid]
    if any(o <= 0 for o in omegas):
        raise ValueError("omega values must be positive")
    if args.jobs < 1:
        raise ValueError("--jobs must be >= 1")
    run.params = dict(tau_grid=args.tau_grid, omega_grid=omegas, k_set=args.k_set, n_fronts=args.n_fronts, traveling=args.traveling, rho=args.rho, theta_min=args.theta_min, jobs=args.jobs)
    table = threshold_scan(args.tau_grid, omegas, args.k_set, args.n_fronts, traveling=args.traveling, theta_range=(-1.0, args.theta_min), jobs=args.jobs)
    table.write_csv(run.path(args.out))
    table.write_summary(run.path(os.path.splitext(args.out)[0] + "_summary.json"))
    conv = [r for r in table.rows if r.converged]
    print(f"rows={len(table.rows)} converged={len(conv)}")
    if conv:
        best = max(conv, key=lambda r: r.theta_star)
        print(f"max_theta_star={_g(best.theta_star)} at tau={_g(best.tau)} omega={_g(best.omega)} k={best.k}")


# -- simulate ----------------------------------------------------------------

SIM_KEYS = dict(
    theta=float,
    tau=float,
    epsilon=float,
    rho=float,
    nx=int,
    ny=int,
    dt=float,
    t_end=float,
    stabilization=float,
    order=int,
    dealias=_bool,
    output_every=int,
    snapshot_every=int,
    n_fronts=int,
    perturb_q=float,
    perturb_omega=float,
    perturb_k=int,
    perturb_amplitude=float,
    v_shift=float,
    stationary_start=_bool,
    track_row=float,
    t_min=float,
    snapshots=_bool,
)
SIM_DEFAULTS = dict(
    tau=1.0,
    rho=1.0,
    nx=0,
    ny=1,
    dt=1e-6,
    t_end=0.01,
    stabilization=2.0,
    order=1,
    dealias=True,
    output_every=100,
    snapshot_every=0,
    n_fronts=1,
    perturb_k=0,
    perturb_amplitude=0.0,
    v_shift=0.0,
    stationary_start=False,
    track_row=0.4,
    t_min=0.0,
    snapshots=True,
)


def read_config(path):
    """Flat key=value file; '#' starts a comment, later keys win."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in SIM_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = SIM_KEYS[key](val)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad value for {key}: {exc}")
    return out


def resolve_sim_settings(args):
    settings = dict(SIM_DEFAULTS)
    if args.config:
        settings.update(read_config(args.config))
    for key in SIM_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = val
    for key in ("theta", "epsilon"):
        if key not in settings:
            raise ValueError(f"{key} must be set (flag or config)")
    return settings


def sim_config(s):
    from .pde import Perturbation, SimConfig
    from .stability import Mode

    params = ModelParams(epsilon=s["epsilon"], tau=s["tau"], theta=s["theta"], rho=s["rho"])
    pert = None
    if s.get("perturb_q") is not None and s.get("perturb_omega") is not None:
        raise ValueError("give at most one of perturb_q and perturb_omega")
    if s.get("perturb_q") is not None or s.get("perturb_omega") is not None:
        mode = Mode.from_q(s["perturb_q"], s["perturb_k"], s["rho"]) if s.get("perturb_q") is not None else Mode(s["perturb_omega"], s["perturb_k"])
        mode.check(s["n_fronts"])
        pert = Perturbation(mode, s["perturb_amplitude"])
    return SimConfig(
        params,
        nx=s["nx"],
        ny=s["ny"],
        dt=s["dt"],
        t_end=s["t_end"],
        stabilization=s["stabilization"],
        dealias=s["dealias"],
        output_every=s["output_every"],
        n_fronts=s["n_fronts"],
        perturbation=pert,
        v_shift=s["v_shift"],
        stationary_start=s["stationary_start"],
        track_row=s["track_row"],
        order=s["order"],
    )


def cmd_simulate(args, run):
    from .pde import TrackingError, crossing_speed, measure_speed, run as simulate

    s = resolve_sim_settings(args)
    cfg = sim_config(s)
    run.params = dict(s, nx=cfg.nx)
    if args.config:
        run.inputs[os.path.abspath(args.config)] = sha256(args.config)
    snap_dir = run.path("snapshots") if s["snapshots"] else None
    res = simulate(cfg, out_dir=snap_dir, snapshot_every=s["snapshot_every"] or None)
    diag = res.diagnostics
    diag.write_csv(run.path("diagnostics.csv"), cfg.n_fronts)
    print(f"t_final={_g(res.state.t)}")
    print(f"mass_u_drift={_g(abs(diag.mass_u[-1] - diag.mass_u[0]))}")
    print(f"mass_v_drift={_g(abs(diag.mass_v[-1] - diag.mass_v[0]))}")
    track = np.asarray(diag.crossing_track)
    print(f"front_drift={_g(track[-1] - track[0])}")
    for name, fn in (("speed", measure_speed), ("speed_crossing", crossing_speed)):
        try:
            c = fn(diag, s["t_min"])
        except (ValueError, TrackingError) as exc:
            print(f"{name}=nan ({exc})")
            continue
        print(f"{name}={_g(c)}")
        if name == "speed":
            print(f"xi_num={_g(c * s['tau'] / (4 * cfg.n_fronts))}")


# -- rerun -------------------------------------------------------------------


def cmd_rerun(args, run):
    with open(args.manifest) as fh:
        man = json.load(fh)
    argv = list(man["argv"])
    # strip any output directory of the original run
    clean = []
    skip = False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--outdir":
            skip = True
            continue
        if a.startswith("--outdir="):
            continue
        clean.append(a)
    outdir = run.outdir
    code = main(clean + ["--outdir", outdir])
    if code != 0:
        raise NumericalFailure(f"replayed command failed with exit code {code}")
    with open(os.path.join(outdir, f"{man['subcommand']}_manifest.json")) as fh:
        new = json.load(fh)
    run.inputs[os.path.abspath(args.manifest)] = sha256(args.manifest)
    run.params = dict(manifest=args.manifest, replayed=clean)
    same = True
    for name, digest in man["outputs"].items():
        ok = new["outputs"].get(name) == digest
        same &= ok
        print(f"{'identical' if ok else 'DIFFERS'} {name}")
    if not same:
        raise NumericalFailure("replayed outputs differ from the manifest")


# -- parser ------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="nrch", description="Wave-trains of the non-reciprocal Cahn-Hilliard model.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--outdir", help=f"output directory (default ${OUTPUT_ENV} or .)")

    sp = sub.add_parser("speed", help="travelling speed of a wave-train")
    sp.add_argument("--theta", type=float)
    sp.add_argument("--tau", type=float)
    sp.add_argument("--n-fronts", type=int, default=1)
    for k in DIM_KEYS:
        sp.add_argument(f"--{k}", type=float, help="dimensional parameter")
    sp.add_argument("--normalized", action="store_true", help="scale dimensional speeds by sqrt|D12 D21|/L")
    sp.add_argument("--out", help="optional CSV of the printed values")
    common(sp)

    sp = sub.add_parser("profile", help="sample a wave-train profile to CSV")
    sp.add_argument("--theta", type=float, required=True)
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--n-fronts", type=int, default=1)
    sp.add_argument("--epsilon", type=float, default=0.01)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--out", default="profile.csv")
    common(sp)

    sp = sub.add_parser("stability", help="count unstable eigenvalues of one mode")
    sp.add_argument("--theta", type=float, required=True)
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--n-fronts", type=int, default=1)
    sp.add_argument("--q", type=float, help="transverse mode number, omega = 2 pi q / rho")
    sp.add_argument("--omega", type=float)
    sp.add_argument("--rho", type=float, default=1.0)
    sp.add_argument("--k", type=int, default=0)
    sp.add_argument("--traveling", action="store_true")
    sp.add_argument("--lambda-max", type=float, default=100.0)
    sp.add_argument("--out", help="CSV of the sampled dispersion trace")
    common(sp)

    sp = sub.add_parser("threshold", help="scan instability thresholds")
    sp.add_argument("--tau-grid", type=_float_list, required=True)
    sp.add_argument("--q-grid", type=_float_list)
    sp.add_argument("--omega-grid", type=_float_list)
    sp.add_argument("--rho", type=float, default=1.0)
    sp.add_argument("--k-set", type=_int_list, default=[0])
    sp.add_argument("--n-fronts", type=int, default=1)
    sp.add_argument("--traveling", action="store_true")
    sp.add_argument("--theta-min", type=float, default=-60.0)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", default="thresholds.csv")
    common(sp)

    sp = sub.add_parser("simulate", help="run the phase-field simulation")
    sp.add_argument("--config", help="key=value file; flags override it")
    for key, typ in SIM_KEYS.items():
        sp.add_argument("--" + key.replace("_", "-"), dest=key, type=typ, default=None)
    common(sp)

    sp = sub.add_parser("rerun", help="replay a run manifest and compare outputs")
    sp.add_argument("manifest")
    common(sp)
    return p


COMMANDS = dict(speed=cmd_speed, profile=cmd_profile, stability=cmd_stability, threshold=cmd_threshold, simulate=cmd_simulate, rerun=cmd_rerun)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on bad flags
    try:
        run = Run(args.command, args, argv)
        COMMANDS[args.command](args, run)
        run.write_manifest()
    except (ValueError, OSError) as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError, NumericalFailure) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
