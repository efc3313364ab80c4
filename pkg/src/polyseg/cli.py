"""Command-line entry points: run, eval, experiment, serve."""

from __future__ import annotations

import argparse
import json
import sys

from .backends import parse_backend_spec
from .errors import PolysegError
from .geometry import load_prompts
from .metrics import dice, stats
from .pipeline import RunConfig, experiment_rows_to_csv, experiment_transforms, run_pipeline
from .recompose import export_mesh
from .volume import load_mask, load_volume, save_mask


def _add_run_config_args(p: argparse.ArgumentParser):
    p.add_argument("--k", type=int, default=3, choices=(3, 4, 6, 10))
    p.add_argument("--stride", type=int, default=1, metavar="N")
    p.add_argument("--backend", default="flood:128", metavar="SPEC")
    p.add_argument("--min-axes", type=int, default=None, metavar="N")
    p.add_argument("--seed", type=int, default=0, metavar="N")
    p.add_argument("--largest-component", action="store_true")
    p.add_argument("--closing", type=int, default=0, choices=(0, 1, 2), metavar="R")
    p.add_argument("--workers", type=int, default=None, metavar="N")


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        k=args.k,
        stride_voxels=args.stride,
        backend=parse_backend_spec(args.backend),
        min_axes=args.min_axes,
        largest_component=args.largest_component,
        closing_radius=args.closing,
        seed=args.seed,
        workers=args.workers,
    )


def cmd_run(args) -> int:
    volume = load_volume(args.volume)
    prompts = load_prompts(args.prompts)
    cfg = _config_from_args(args)
    result = run_pipeline(volume, prompts, cfg)
    save_mask(result.mask, args.out)
    if args.mesh:
        if result.mesh is None:
            print("warning: empty mask, no mesh written", file=sys.stderr)
        else:
            export_mesh(result.mesh, args.mesh)
    print(json.dumps(result.stats, indent=2, default=float))
    return 0


def cmd_eval(args) -> int:
    pred = load_mask(args.pred)
    gt = load_mask(args.gt)
    report = {
        "dice": dice(pred, gt),
        "pred_stats": stats(pred).__dict__,
        "gt_stats": stats(gt).__dict__,
    }
    print(json.dumps(report, indent=2))
    return 0


def cmd_experiment(args) -> int:
    volume = load_volume(args.volume)
    prompts = load_prompts(args.prompts)
    gt = load_mask(args.gt)
    ks = [int(k) for k in args.ks.split(",")]
    cfg = _config_from_args(args)
    rows = experiment_transforms(volume, prompts, cfg, ks, gt)
    csv = experiment_rows_to_csv(rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv)
    else:
        print(csv, end="")
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(args.port, args.data_dir)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="seg", description="Polyline-prompted multi-axis 3D segmentation"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="segment a volume")
    p_run.add_argument("--volume", required=True, metavar="F")
    p_run.add_argument("--prompts", required=True, metavar="F")
    p_run.add_argument("--out", required=True, metavar="F")
    p_run.add_argument("--mesh", default=None, metavar="F")
    _add_run_config_args(p_run)
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("eval", help="compare a predicted mask to ground truth")
    p_eval.add_argument("--pred", required=True, metavar="F")
    p_eval.add_argument("--gt", required=True, metavar="F")
    p_eval.set_defaults(func=cmd_eval)

    p_exp = sub.add_parser("experiment", help="accuracy/time vs axis count")
    p_exp.add_argument("--volume", required=True, metavar="F")
    p_exp.add_argument("--prompts", required=True, metavar="F")
    p_exp.add_argument("--gt", required=True, metavar="F")
    p_exp.add_argument("--ks", default="3,4,6,10")
    p_exp.add_argument("--out", default=None, metavar="F")
    _add_run_config_args(p_exp)
    p_exp.set_defaults(func=cmd_experiment)

    p_srv = sub.add_parser("serve", help="run the HTTP service")
    p_srv.add_argument("--port", type=int, default=8750, metavar="P")
    p_srv.add_argument("--data-dir", required=True, metavar="D")
    p_srv.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PolysegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
