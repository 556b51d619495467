"""Command-line front door: mix, eval, bench, stats.

All tensors travel as CMTX containers; runs are archivable through a JSON
config whose keys mirror the hyperparameters.  Output files are written to
temporaries and renamed at the end, so a failing run never leaves partial
results behind.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import benchlab, tensorio
from .energy import Hyperparams, labeling_from_ratios, objective_eval
from .errors import ComixError, DimensionMismatch, InvalidColumn
from .optimizer import build_model
from .pipeline import run_comix

CONFIG_KEYS = {
    "beta",
    "gamma",
    "eta",
    "tau",
    "alpha",
    "omega",
    "level",
    "grid_side",
    "partition_size",
    "cycles",
    "seed",
    "max_sweeps",
}


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        raw = json.load(fh)
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        raise ComixError(f"unknown config keys: {sorted(unknown)}")
    return raw


_INT_KEYS = {"level", "grid_side", "partition_size", "cycles"}


def config_to_params(cfg: dict) -> Hyperparams:
    fields = {}
    for key, value in cfg.items():
        if key in ("seed", "max_sweeps"):
            continue
        fields[key] = int(value) if key in _INT_KEYS else float(value)
    params = Hyperparams(**fields)
    params.validate()
    return params


def _atomic_write_all(out_dir: str, files: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    staged = []
    try:
        for name, blob in files.items():
            tmp = os.path.join(out_dir, f".tmp-{name}")
            with open(tmp, "wb") as fh:
                fh.write(blob)
            staged.append((tmp, os.path.join(out_dir, name)))
        for tmp, final in staged:
            os.replace(tmp, final)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise


def _load_inputs(path: str) -> np.ndarray:
    if os.path.isdir(path):
        return tensorio.load_image_batch(path)
    arr = tensorio.load_array(path)
    if arr.ndim != 4:
        raise DimensionMismatch(f"input tensor must be 4-D, got shape {arr.shape}")
    return arr


def cmd_mix(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    seed = int(cfg.get("seed", 0))
    max_sweeps = int(cfg.get("max_sweeps", 10))
    params = config_to_params(cfg)
    inputs = _load_inputs(args.inputs)
    saliency = None if args.saliency == "proxy" else tensorio.load_array(args.saliency)
    labels = None if args.labels is None else tensorio.load_array(args.labels)
    result = run_comix(inputs, saliency, labels, params, seed, max_sweeps)

    files = {
        "outputs.cmtx": tensorio.write_container(
            tensorio.container_from_array(result.outputs)
        ),
        "soft_labels.cmtx": tensorio.write_container(
            tensorio.container_from_array(result.soft_labels)
        ),
        "labeling.cmtx": tensorio.write_container(
            tensorio.container_from_array(result.labeling.z)
        ),
        "stats.json": (json.dumps(result.stats, indent=2) + "\n").encode(),
    }
    if args.png:
        from io import BytesIO

        for j in range(result.outputs.shape[0]):
            buf = BytesIO()
            arr = np.clip(result.outputs[j], 0.0, 1.0)
            arr8 = np.round(arr * 255.0).astype(np.uint8)
            from PIL import Image

            if arr8.shape[0] == 1:
                Image.fromarray(arr8[0], mode="L").save(buf, format="PNG")
            else:
                Image.fromarray(arr8.transpose(1, 2, 0), mode="RGB").save(
                    buf, format="PNG"
                )
            files[f"mix_{j:03d}.png"] = buf.getvalue()
    _atomic_write_all(args.out, files)
    print(f"wrote {len(files)} files to {args.out}", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    params = config_to_params(cfg)
    try:
        z = tensorio.load_array(args.labeling)
        if z.ndim != 3:
            raise DimensionMismatch(f"labeling must be 3-D, got shape {z.shape}")
        labeling = labeling_from_ratios(z, params.level)
        saliency = tensorio.load_array(args.saliency)
        model, _ = build_model(saliency, params, m_out=labeling.counts.shape[0])
        breakdown = objective_eval(model, labeling)
    except (DimensionMismatch, InvalidColumn, ComixError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(breakdown.to_dict(), indent=2))
    return 0


def _parse_sizes(values: list) -> list:
    sizes = []
    for item in values:
        parts = [int(x) for x in item.split(",")]
        if len(parts) != 3:
            raise ComixError(f"size {item!r} must be m,m',n")
        sizes.append(tuple(parts))
    return sizes


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    params = config_to_params(cfg)
    sizes = _parse_sizes(args.sizes)
    jobs = args.jobs or int(os.environ.get("COMIX_JOBS", "1"))
    rows, summary = benchlab.run_suite(
        args.suite, sizes, args.seeds, params=params, jobs=jobs
    )
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, f"bench_{args.suite}.csv")
    tmp = csv_path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "m", "m_prime", "n", "seed", "value", "seconds"])
        for row in rows:
            writer.writerow(row)
    os.replace(tmp, csv_path)
    summary_path = os.path.join(args.out, f"bench_{args.suite}_summary.json")
    tmp = summary_path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    os.replace(tmp, summary_path)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_stats(args) -> int:
    if args.sweep != "tau":
        raise ComixError(f"unsupported sweep {args.sweep!r}")
    cfg = load_config(args.config)
    seed = int(cfg.get("seed", 0)) if args.seed is None else args.seed
    values = [float(v) for v in args.values.split(",")]
    if args.synthetic:
        saliency = benchlab.synthetic_saliency(args.synthetic, 32, 32, seed)
        inputs = saliency[:, None, :, :]
    else:
        inputs = _load_inputs(args.inputs)
        saliency = None
    rows = []
    for tau in values:
        cfg_tau = dict(cfg)
        cfg_tau["tau"] = tau
        params = config_to_params(cfg_tau)
        result = run_comix(inputs, saliency, None, params, seed)
        hist = result.stats["inputs_per_output"]
        rows.append(
            {
                "tau": tau,
                "diversity": result.stats["diversity"],
                "batch_saliency": result.stats["batch_saliency"],
                "histogram": ";".join(str(c) for c in hist),
            }
        )
    writer = csv.DictWriter(
        sys.stdout, fieldnames=["tau", "diversity", "batch_saliency", "histogram"]
    )
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    if args.out:
        with open(args.out + ".tmp", "w", newline="") as fh:
            w = csv.DictWriter(
                fh, fieldnames=["tau", "diversity", "batch_saliency", "histogram"]
            )
            w.writeheader()
            for row in rows:
                w.writerow(row)
        os.replace(args.out + ".tmp", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="comix", description="saliency-guided batch mixup optimizer"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_mix = sub.add_parser("mix", help="optimize and mix one batch")
    p_mix.add_argument("--inputs", required=True, help="CMTX tensor or PNG directory")
    p_mix.add_argument("--saliency", default="proxy", help="CMTX tensor or 'proxy'")
    p_mix.add_argument("--labels", default=None, help="CMTX one-hot label matrix")
    p_mix.add_argument("--config", default=None, help="JSON hyperparameter file")
    p_mix.add_argument("--seed", type=int, default=None)
    p_mix.add_argument("--out", required=True)
    p_mix.add_argument("--png", action="store_true", help="also write mixed PNGs")
    p_mix.set_defaults(func=cmd_mix)

    p_eval = sub.add_parser("eval", help="print the energy breakdown of a labeling")
    p_eval.add_argument("--labeling", required=True)
    p_eval.add_argument("--saliency", required=True)
    p_eval.add_argument("--config", default=None)
    p_eval.set_defaults(func=cmd_eval)

    p_bench = sub.add_parser("bench", help="run oracle/baseline comparisons")
    p_bench.add_argument("--suite", choices=("brute", "bp"), required=True)
    p_bench.add_argument("--seeds", type=int, default=100)
    p_bench.add_argument("--sizes", nargs="+", required=True, help="m,m',n triples")
    p_bench.add_argument("--config", default=None)
    p_bench.add_argument("--jobs", type=int, default=None)
    p_bench.add_argument("--out", required=True)
    p_bench.set_defaults(func=cmd_bench)

    p_stats = sub.add_parser("stats", help="sweep tau and report mixing statistics")
    p_stats.add_argument("--sweep", default="tau")
    p_stats.add_argument("--values", required=True, help="comma-separated tau values")
    p_stats.add_argument("--inputs", default=None)
    p_stats.add_argument("--synthetic", type=int, default=None, help="batch size")
    p_stats.add_argument("--config", default=None)
    p_stats.add_argument("--seed", type=int, default=None)
    p_stats.add_argument("--out", default=None)
    p_stats.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ComixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
