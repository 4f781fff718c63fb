"""Command-line entry point.

Subcommands:
    simulate   run a scenario (optionally governed by a fitted model file)
    gen-data   generate the training trajectory set as CSV files
    fit        identify the state-space model and write it as JSON
    select     run the floating feature selection and write its report
    tune       grid-refine one PID loop
    serve      run a scenario as a live HTTP service

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from .config import ConfigError, default_config, load_config, save_config


def build_parser():
    parser = argparse.ArgumentParser(
        prog="saltgov",
        description="supervisory constraint-enforcement sandbox for a "
                    "salt-cooled reactor plant")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (defaults built in)")
        p.add_argument("--out", help="output directory or file")
        p.add_argument("--seed", type=int, help="override scenario seed")

    p = sub.add_parser("simulate", help="run one scenario")
    common(p)
    p.add_argument("--model", help="state-space model JSON (for the governor)")
    p.add_argument("--no-governor", action="store_true",
                   help="bypass the supervisory layer")
    p.add_argument("--noise", action="store_true", help="enable sensor noise")
    p.add_argument("--fit-on-the-fly", action="store_true",
                   help="generate data and fit the model before simulating")

    p = sub.add_parser("gen-data", help="generate training trajectories")
    common(p)

    p = sub.add_parser("fit", help="fit the state-space model")
    common(p)
    p.add_argument("--data", help="directory of train_*.csv (else generated)")

    p = sub.add_parser("select", help="run floating feature selection")
    common(p)
    p.add_argument("--k", type=int, default=5, help="supplement budget")

    p = sub.add_parser("tune", help="grid-refine PID gains")
    common(p)
    p.add_argument("--loop", default="power",
                   choices=("power", "t_c_out", "t_c_in"))
    p.add_argument("--kp", type=float, nargs="+", help="kp grid")
    p.add_argument("--ki", type=float, nargs="+", help="ki grid")

    p = sub.add_parser("serve", help="serve a live scenario over HTTP")
    common(p)
    p.add_argument("--model", help="state-space model JSON")
    p.add_argument("--no-governor", action="store_true")
    p.add_argument("--noise", action="store_true")
    p.add_argument("--bind", default="127.0.0.1:8008", help="host:port")
    p.add_argument("--speed", type=float, default=0.0,
                   help="wall-clock pacing multiple (0 = free-running)")
    p.add_argument("--max-ticks", type=int, help="stop after this many ticks")
    return parser


def _load(args):
    cfg = load_config(args.config) if args.config else default_config()
    if args.seed is not None:
        cfg["scenario"]["seed"] = args.seed
    if getattr(args, "no_governor", False):
        cfg["scenario"]["governor_enabled"] = False
    if getattr(args, "noise", False):
        cfg["scenario"]["noise_enabled"] = True
    return cfg


def _out_dir(args, default="out"):
    path = args.out or default
    os.makedirs(path, exist_ok=True)
    return path


def cmd_simulate(args):
    from .dmdc import StateSpaceModel
    from .orchestrator import (build_plant, fit_model_from_trajectories,
                               generate_training_set, run_scenario)

    cfg = _load(args)
    model = None
    if cfg["scenario"]["governor_enabled"]:
        if args.model:
            if not os.path.exists(args.model):
                raise ConfigError(f"model file not found: {args.model}")
            model = StateSpaceModel.load(args.model)
        elif args.fit_on_the_fly:
            trajs, _ = generate_training_set(cfg)
            model = fit_model_from_trajectories(cfg, build_plant(cfg), trajs)
        else:
            raise ConfigError("governed run needs --model or --fit-on-the-fly")
    out = _out_dir(args)
    loop, summary = run_scenario(cfg, model=model,
                                 log_path=os.path.join(out, "run.csv"))
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=1)
    print(json.dumps(summary, indent=1))
    return 0


def cmd_gen_data(args):
    from .orchestrator import generate_training_set

    cfg = _load(args)
    out = _out_dir(args, "training")
    trajs, skipped = generate_training_set(cfg, out_dir=out)
    print(f"wrote {len(trajs)} trajectories to {out}")
    for idx, profile, reason in skipped:
        print(f"skipped profile {idx} ({profile.get('kind')}): {reason}",
              file=sys.stderr)
    return 0


def cmd_fit(args):
    from .orchestrator import (build_plant, fit_model_from_trajectories,
                               generate_training_set, load_training_set)

    cfg = _load(args)
    if args.data:
        trajs = load_training_set(args.data)
        if not trajs:
            raise ConfigError(f"no train_*.csv files under {args.data}")
    else:
        trajs, _ = generate_training_set(cfg)
    model = fit_model_from_trajectories(cfg, build_plant(cfg), trajs)
    out = args.out or "model.json"
    if os.path.isdir(out):
        out = os.path.join(out, "model.json")
    model.save(out)
    print(f"model written to {out} (rank {model.svd_rank}, "
          f"spectral radius {model.spectral_radius:.6f})")
    return 0


def cmd_select(args):
    from .orchestrator import selection_problem_from_plant
    from .sffs import select, trace_rows

    cfg = _load(args)
    problem = selection_problem_from_plant(cfg, k_max=args.k)
    final, trace = select(problem)
    out = _out_dir(args, "selection")
    with open(os.path.join(out, "selection.json"), "w") as fh:
        json.dump({"selected": final}, fh, indent=1)
    with open(os.path.join(out, "selection_trace.csv"), "w") as fh:
        fh.write("step,action,feature,J,fold_std,set\n")
        for row in trace_rows(trace):
            fh.write(",".join(str(v) for v in row) + "\n")
    print("selected:", " ".join(final))
    return 0


def cmd_tune(args):
    from .orchestrator import tune_pid

    cfg = _load(args)
    base = cfg["pid"][args.loop]
    kp_grid = args.kp or [base["kp"] * f for f in (0.5, 1.0, 2.0)]
    ki_grid = args.ki or [base["ki"] * f for f in (0.5, 1.0, 2.0)]
    kp, ki, report = tune_pid(cfg, args.loop, kp_grid, ki_grid)
    out = _out_dir(args, "tuning")
    with open(os.path.join(out, f"tune_{args.loop}.csv"), "w") as fh:
        fh.write("kp,ki,cost\n")
        for row in report:
            fh.write(",".join(format(v, ".10g") for v in row) + "\n")
    with open(os.path.join(out, f"gains_{args.loop}.json"), "w") as fh:
        json.dump({"kp": kp, "ki": ki}, fh, indent=1)
    print(f"best {args.loop} gains: kp={kp:.6g} ki={ki:.6g}")
    return 0


def cmd_serve(args):
    from .dmdc import StateSpaceModel
    from .service import serve

    cfg = _load(args)
    model = None
    if cfg["scenario"]["governor_enabled"]:
        if not args.model:
            raise ConfigError("governed service needs --model")
        if not os.path.exists(args.model):
            raise ConfigError(f"model file not found: {args.model}")
        model = StateSpaceModel.load(args.model)
    host, _, port = args.bind.partition(":")
    serve(cfg, model=model, host=host or "127.0.0.1",
          port=int(port or 8008), speed=args.speed,
          max_ticks=args.max_ticks, log_dir=args.out)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "gen-data": cmd_gen_data,
    "fit": cmd_fit,
    "select": cmd_select,
    "tune": cmd_tune,
    "serve": cmd_serve,
}

NUMERIC_ERRORS = (FloatingPointError, np.linalg.LinAlgError, ArithmeticError)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except RuntimeError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
