"""``voxelsim`` command line.

Exit codes: 0 success, 2 configuration error, 3 simulation divergence.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .config import (
    ConfigError,
    description_from_config,
    dump_config,
    ea_from_config,
    load_config,
    locomotion_from_config,
)
from .errors import InvalidArgument, SimulationDiverged
from .evolution import (
    EAConfig,
    EvoDevoController,
    GaussianMixtureBody,
    LocomotionFitness,
    PhaseController,
    SensingMLP,
    evolve,
    shape_grid,
)
from .grid import Grid
from .rng import SeededRng
from .tasks import (
    CantileverConfig,
    FlatTerrain,
    LocomotionConfig,
    MeasureKind,
    UnevenTerrain,
    make_terrain,
    measure_svsps,
    run_cantilever_dynamic,
    run_cantilever_static,
    run_locomotion,
)
from .trace import fmt, write_trace
from .voxel import MaterialSpec, parse_scaffolding, scaffolding_label
from .vsr import VSRDescription

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

log = logging.getLogger("voxelsim")


def worker_count(flag: Optional[int]) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("VOXELSIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"VOXELSIM_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _parse_dims(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError(f"dimensions must be positive, got {text!r}")
    return w, h


def _csv_list(cast):
    def parse(text: str):
        try:
            return [cast(v) for v in text.split(",") if v]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None
    return parse


# ---------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    doc = load_config(args.config)
    if args.seed is not None:
        doc["seed"] = args.seed
    description = description_from_config(doc)
    config = locomotion_from_config(doc, args.duration)
    out = doc.get("output", {})
    trace_path = args.trace or out.get("trace")
    frames_dir = args.render or out.get("frames")
    record = bool(trace_path or frames_dir)
    outcome = run_locomotion(description, config, record=record)
    if trace_path or frames_dir:
        path = Path(trace_path) if trace_path else Path(frames_dir) / "trace.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            write_trace(outcome.snapshots, fh)
        if frames_dir:
            from .render import FrameSpec, render_frames
            rho = max(spec.max_area_change for _, _, spec in description.body.occupied())
            terrain = make_terrain(config.terrain).profile
            n = render_frames(path, FrameSpec(max_area_change=rho), frames_dir, terrain)
            print(f"# wrote {n} frames to {frames_dir}", file=sys.stderr)
    header = [m.value for m in outcome.measures]
    rows = [header, [fmt(v) for v in outcome.values]]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerows(rows)
    outcome_path = args.outcome or out.get("outcome")
    if outcome_path:
        with open(outcome_path, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    if outcome.diverged:
        print("error: simulation diverged", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


# ------------------------------------------------------------ characterize

def cmd_characterize(args) -> int:
    w = csv.writer(sys.stdout, lineterminator="\n")
    if args.mode == "static":
        w.writerow(["shape", "parameter", "value", "displacement"])
        for width, height in args.shapes:
            for fs in args.frequencies:
                cfg = CantileverConfig(width, height, MaterialSpec(sds_frequency=fs),
                                       force_magnitude=args.force, total_time=args.duration)
                w.writerow([f"{width}x{height}", "sds_frequency", fmt(fs), fmt(run_cantilever_static(cfg))])
            for sc in args.scaffoldings:
                groups = parse_scaffolding(sc)
                cfg = CantileverConfig(width, height, MaterialSpec(scaffolding=groups),
                                       force_magnitude=args.force, total_time=args.duration)
                w.writerow([f"{width}x{height}", "scaffolding", scaffolding_label(groups),
                            fmt(run_cantilever_static(cfg))])
        return EXIT_OK
    if args.mode == "dynamic":
        w.writerow(["shape", "parameter", "value", "time", "displacement"])
        for width, height in args.shapes:
            runs = [("sds_frequency", fmt(fs), MaterialSpec(sds_frequency=fs)) for fs in args.frequencies]
            runs += [("scaffolding", scaffolding_label(parse_scaffolding(sc)),
                      MaterialSpec(scaffolding=parse_scaffolding(sc))) for sc in args.scaffoldings]
            for name, value, material in runs:
                cfg = CantileverConfig(width, height, material, force_magnitude=args.force,
                                       force_duration=args.force_duration, total_time=args.duration)
                series = run_cantilever_dynamic(cfg)
                if series.diverged:
                    print("error: simulation diverged", file=sys.stderr)
                    return EXIT_DIVERGED
                for t, d in zip(series.times, series.displacements):
                    w.writerow([f"{width}x{height}", name, value, fmt(t), fmt(d)])
        return EXIT_OK
    # perf
    w.writerow(["w", "n_voxels", "n_steps", "wall_time", "svsps"])
    for width in args.widths:
        body = Grid(width, 3, MaterialSpec())
        funcs = Grid(width, 3, "sin(-2*pi*t + pi*x/4)")
        from .control import TimeFunctionController
        description = VSRDescription(body, TimeFunctionController(funcs))
        report = measure_svsps(description, LocomotionConfig(duration=args.duration))
        w.writerow([width, report.n_voxels, report.n_steps, fmt(report.wall_time), fmt(report.svsps)])
    return EXIT_OK


# ------------------------------------------------------------------ evolve

SCALED = {"n_pop": 20, "n_gen": 30, "duration": 10.0}
FULL = {"n_pop": 250, "n_gen": 500, "duration": 60.0}


def _representation(args):
    if args.case == "body":
        w, h = args.grid
        return GaussianMixtureBody(w, h)
    if args.case == "evodevo":
        w, h = args.grid if args.grid_given else (11, 4)
        body = Grid(w, h, MaterialSpec())
        if args.mode == "evo":
            return PhaseController(body)
        return EvoDevoController(body, t_final=args.duration)
    return SensingMLP(shape_grid(args.shape))


def cmd_evolve(args) -> int:
    scale = FULL if args.full_scale else SCALED
    args.duration = args.duration if args.duration is not None else scale["duration"]
    doc = load_config(args.config) if args.config else {}
    ea = ea_from_config(doc, args.seed) if args.config else EAConfig(seed=args.seed or 0)
    ea.n_pop = args.n_pop or (ea.n_pop if "n_pop" in doc.get("ea", {}) else scale["n_pop"])
    ea.n_gen = args.n_gen if args.n_gen is not None else (
        ea.n_gen if "n_gen" in doc.get("ea", {}) else scale["n_gen"])
    ea.n_tour = min(args.n_tour or ea.n_tour, ea.n_pop)
    ea.validate()
    rep = _representation(args)
    terrain = FlatTerrain() if args.terrain == "flat" else UnevenTerrain(seed=ea.seed)
    task = LocomotionConfig(duration=args.duration, terrain=terrain)
    workers = worker_count(args.workers)
    effective = {
        "case": args.case, "dimension": rep.dimension, "seed": ea.seed, "workers": workers,
        "duration": args.duration, "terrain": args.terrain,
        "ea": {k: getattr(ea, k) for k in ("n_pop", "n_tour", "n_gen", "p_crossover", "p_mutation",
                                           "mutation_sigma", "diversity_retries")},
    }
    print(f"# genotype dimension: {rep.dimension}")
    print("# effective config:\n" + "".join(f"#   {line}\n" for line in dump_config(effective).splitlines()),
          end="")
    sys.stdout.flush()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(dump_config(effective))

    def report(rec):
        print(f"{rec.iteration},{fmt(rec.best)},{fmt(rec.median)},{fmt(rec.sd)}", flush=True)

    print("iteration,best,median,sd")
    history = evolve(ea, rep.dimension, LocomotionFitness(rep, task), SeededRng(ea.seed),
                     init_range=rep.init_range, workers=workers, on_iteration=report)
    history.write_csv(out / "history.csv")
    np.savetxt(out / "best.txt", history.best.genotype, fmt="%.17g")
    return EXIT_OK


# ------------------------------------------------------------------ render

def cmd_render(args) -> int:
    from .render import FrameSpec, render_frames
    terrain = None
    if args.config:
        doc = load_config(args.config)
        terrain = make_terrain(locomotion_from_config(doc).terrain).profile
    spec = FrameSpec(pixels_per_meter=args.scale, max_area_change=args.max_area_change)
    n = render_frames(args.trace, spec, args.out, terrain)
    print(f"{n} frames")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="voxelsim", description="2-D voxel-based soft robot simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run the locomotion task of a config file")
    s.add_argument("config")
    s.add_argument("--duration", type=float, help="override simulated seconds")
    s.add_argument("--seed", type=int)
    s.add_argument("--trace", help="trace CSV path")
    s.add_argument("--outcome", help="outcome CSV path")
    s.add_argument("--render", metavar="DIR", help="also write SVG frames")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("characterize", help="cantilever and throughput experiments")
    c.add_argument("mode", choices=["static", "dynamic", "perf"])
    c.add_argument("--shapes", type=_csv_list(_parse_dims), default=None)
    c.add_argument("--frequencies", type=_csv_list(float), default=None)
    c.add_argument("--scaffoldings", type=_csv_list(str), default=None)
    c.add_argument("--widths", type=_csv_list(int), default=list(range(3, 46, 3)))
    c.add_argument("--force", type=float)
    c.add_argument("--force-duration", type=float, default=0.1)
    c.add_argument("--duration", type=float)
    c.set_defaults(func=cmd_characterize)

    e = sub.add_parser("evolve", help="evolve bodies or controllers for locomotion")
    e.add_argument("case", choices=["body", "evodevo", "sensing"])
    e.add_argument("--grid", type=_parse_dims)
    e.add_argument("--mode", choices=["evo", "evodevo"], default="evodevo")
    e.add_argument("--shape", choices=["worm", "biped", "tripod"], default="worm")
    e.add_argument("--config", help="YAML file with an 'ea' section")
    e.add_argument("--n-pop", type=int)
    e.add_argument("--n-gen", type=int)
    e.add_argument("--n-tour", type=int)
    e.add_argument("--duration", type=float)
    e.add_argument("--terrain", choices=["flat", "uneven"], default="flat")
    e.add_argument("--workers", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--full-scale", action="store_true", help="use the full-size EA settings")
    e.add_argument("--out", default="evolution-out")
    e.set_defaults(func=cmd_evolve)

    r = sub.add_parser("render", help="SVG frames from a trace CSV")
    r.add_argument("trace")
    r.add_argument("out")
    r.add_argument("--config", help="config whose terrain is drawn")
    r.add_argument("--scale", type=float, default=20.0, help="pixels per meter")
    r.add_argument("--max-area-change", type=float, default=0.2)
    r.set_defaults(func=cmd_render)
    return p


def _apply_characterize_defaults(args) -> None:
    if args.mode == "static":
        args.shapes = args.shapes or [(5, 2), (10, 2), (10, 4)]
        args.frequencies = args.frequencies if args.frequencies is not None else [4, 8, 10, 15, 20, 25, 30]
        args.scaffoldings = args.scaffoldings if args.scaffoldings is not None else []
        args.force = args.force if args.force is not None else 30.0
        args.duration = args.duration or 60.0
    elif args.mode == "dynamic":
        args.shapes = args.shapes or [(10, 4)]
        args.frequencies = args.frequencies if args.frequencies is not None else [4, 8, 15, 30]
        args.scaffoldings = args.scaffoldings if args.scaffoldings is not None else []
        args.force = args.force if args.force is not None else 800.0
        args.duration = args.duration or 15.0
    else:
        args.duration = args.duration or 60.0


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "characterize":
        _apply_characterize_defaults(args)
    if args.command == "evolve":
        args.grid_given = args.grid is not None
        args.grid = args.grid or (5, 5)
    try:
        return args.func(args)
    except SimulationDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (InvalidArgument, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
