"""Command-line entry point: ``boomerang-kit <command> [flags]``.

Configuration comes from one JSON file (``--config``) with flag overrides;
flags win.  Every run writes its resolved configuration to ``config.json`` in
the output directory.  The seed is mandatory.

Exit codes: 0 success, 1 validation failure, 2 numerical failure.  Errors go
to stderr prefixed ``ERROR <code>:``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import artifacts, datasets
from .apps import (
    AugmentationProtocol, PreTask, augmentation_eval, default_classifier_config,
    pre_enhance, select_cascade,
)
from .denoiser import GaussianMixture, OracleDenoiser
from .metrics import LOCALITY_HEADER, locality_sweep
from .mlp import NumericalError, TrainConfig, load_checkpoint, save_checkpoint, train_mlp
from .rng import SeedStreams
from .sampler import BoomerangConfig, SampleTrace, boomerang, cascade, sample_global
from .schedule import NoiseSchedule, StrideSchedule, schedule_from_dict

COMMANDS = ("train", "sample", "boomerang", "sweep", "augment-eval", "pre", "selftest")

DEFAULTS = {
    "schedule": {"kind": "linear", "T": 1000, "beta_min": 1e-4, "beta_max": 0.02},
    "model": {"kind": "oracle", "dataset": "gmm2"},
    "dataset": {"name": "gmm2", "n": 2000},
    "t_boom": 0,
    "n_cascade": 1,
    "ratios": [0.1, 0.3, 0.5, 0.7, 0.9],
    "threshold": None,
    "n_samples": 1000,
    "train": {"epochs": 200, "batch_size": 128, "lr": 1e-2, "momentum": 0.9},
    "augment": {"mix_probability": 0.5, "n_train": 64, "n_test": 2000, "n_seeds": 5,
                "ratios": [0.0, 0.25, 0.5, 0.75, 1.0]},
    "pre": {"k": 2, "n": 200, "ratios": [0.05, 0.1, 0.2, 0.3], "cascade": [1, 2, 4, 8]},
}


class ValidationError(ValueError):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="boomerang-kit", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--seed", type=int, help="root seed (unsigned 64-bit)")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--t-boom", type=int, dest="t_boom")
    p.add_argument("--n-cascade", type=int, dest="n_cascade")
    p.add_argument("--ratios", help="comma-separated t_boom/T ratios")
    p.add_argument("--threads", type=int)
    p.add_argument("--input", type=Path, help="samples CSV for boomerang")
    p.add_argument("--checkpoint", type=Path, help="MLP checkpoint (model kind mlp)")
    return p


def resolve_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config is not None:
        if not args.config.exists():
            raise ValidationError(f"config file {args.config} does not exist")
        try:
            cfg = _merge(cfg, json.loads(args.config.read_text()))
        except json.JSONDecodeError as e:
            raise ValidationError(f"config file {args.config}: {e}") from e
    for key in ("seed", "t_boom", "n_cascade", "threads"):
        if getattr(args, key) is not None:
            cfg[key] = getattr(args, key)
    if args.out is not None:
        cfg["out"] = str(args.out)
    if args.ratios is not None:
        try:
            cfg["ratios"] = [float(r) for r in args.ratios.split(",") if r.strip()]
        except ValueError as e:
            raise ValidationError(f"--ratios: {e}") from e
    if args.input is not None:
        cfg["dataset"] = {"path": str(args.input)}
    if args.checkpoint is not None:
        cfg["model"] = {"kind": "mlp", "checkpoint": str(args.checkpoint)}
    if "threads" not in cfg:
        env = os.environ.get("BOOMERANG_KIT_THREADS")
        cfg["threads"] = int(env) if env else 1
    if cfg.get("seed") is None:
        raise ValidationError("a seed is required (--seed or \"seed\" in the config)")
    if not (0 <= int(cfg["seed"]) < 2**64):
        raise ValidationError("seed must be an unsigned 64-bit integer")
    cfg.setdefault("out", "out")
    _validate_paths(cfg)
    return cfg


def _validate_paths(cfg):
    model, data = cfg["model"], cfg["dataset"]
    for key, sect in (("checkpoint", model), ("gmm", model), ("path", data)):
        if sect.get(key) and not Path(sect[key]).exists():
            raise ValidationError(f"{key} file {sect[key]} does not exist")
    if model.get("kind") == "mlp" and not model.get("checkpoint"):
        raise ValidationError("model kind 'mlp' needs a checkpoint path")


def load_schedule(cfg) -> tuple[NoiseSchedule, NoiseSchedule | StrideSchedule]:
    try:
        sched = schedule_from_dict(cfg["schedule"])
    except (KeyError, ValueError) as e:
        raise ValidationError(f"schedule: {e}") from e
    if isinstance(sched, StrideSchedule):
        return sched.base, sched
    return sched, sched


def load_mixture(cfg) -> GaussianMixture:
    model = cfg["model"]
    if model.get("gmm"):
        return GaussianMixture.from_json(Path(model["gmm"]).read_text())
    name = model.get("dataset", cfg["dataset"].get("name"))
    if name == "spirals":
        return datasets.spirals()[0]
    if name not in datasets.BUILTIN_MIXTURES:
        raise ValidationError(f"no closed-form mixture for dataset {name!r}")
    return datasets.BUILTIN_MIXTURES[name]()


def load_model(cfg, base: NoiseSchedule):
    kind = cfg["model"].get("kind", "oracle")
    if kind == "oracle":
        return OracleDenoiser(load_mixture(cfg), base)
    if kind == "mlp":
        try:
            return load_checkpoint(cfg["model"]["checkpoint"], base)
        except (ValueError, OSError) as e:
            raise ValidationError(str(e)) from e
    raise ValidationError(f"unknown model kind {kind!r}")


def load_data(cfg, streams: SeedStreams):
    data = cfg["dataset"]
    if data.get("path"):
        path = Path(data["path"])
        if path.suffix.lower() == ".pgm":
            return artifacts.read_pgm(path).reshape(1, -1), None
        return artifacts.read_samples_csv(path), None
    n = int(data.get("n", 2000))
    try:
        x, y, _ = datasets.load_builtin(data.get("name", "gmm2"), n, streams.generator("dataset"))
    except ValueError as e:
        raise ValidationError(str(e)) from e
    return x, y


def _pool_map(fn, items, threads):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# -- commands ----------------------------------------------------------------


def cmd_train(cfg, out: Path, streams):
    base, _ = load_schedule(cfg)
    x, _ = load_data(cfg, streams)
    tc = cfg["train"]
    config = TrainConfig(epochs=int(tc["epochs"]), batch_size=int(tc["batch_size"]),
                         lr=float(tc["lr"]), momentum=float(tc["momentum"]),
                         seed=streams.child(1).seed)
    den, losses = train_mlp(x, base, config)
    save_checkpoint(out / "checkpoint.bmrk", den)
    artifacts.write_csv(out / "loss.csv", ["epoch", "loss"], enumerate(losses))
    return {"checkpoint": "checkpoint.bmrk", "loss": "loss.csv"}


def _image_shape(cfg):
    name = cfg["model"].get("dataset", cfg["dataset"].get("name"))
    return (16, 16) if name == "bumps16" else None


def cmd_sample(cfg, out, streams):
    base, active = load_schedule(cfg)
    den = load_model(cfg, base)
    d = den.gmm.d if hasattr(den, "gmm") else den.d
    x = sample_global(den, active, d, int(cfg["n_samples"]), streams).x
    files = {"samples": "samples.csv"}
    artifacts.write_samples_csv(out / "samples.csv", x)
    shape = _image_shape(cfg)
    if shape is not None:
        for i, row in enumerate(x[:16]):
            artifacts.write_pgm(out / f"sample_{i:03d}.pgm", row.reshape(shape))
        files["images"] = [f"sample_{i:03d}.pgm" for i in range(min(16, len(x)))]
    return files


def cmd_boomerang(cfg, out, streams):
    base, active = load_schedule(cfg)
    den = load_model(cfg, base)
    x, _ = load_data(cfg, streams)
    stride = active if isinstance(active, StrideSchedule) else None
    try:
        bc = BoomerangConfig(int(cfg["t_boom"]), int(cfg["n_cascade"]), streams.child(2).seed, stride)
        base.check_step(bc.t_boom)
    except ValueError as e:
        raise ValidationError(str(e)) from e
    trace = SampleTrace()
    run = cascade if bc.n_cascade > 1 else boomerang
    y = run(x, bc, den, base, trace=trace).x
    artifacts.write_samples_csv(out / "boomerang.csv", y)
    return {"boomerang": "boomerang.csv", "reverse_steps": trace.reverse_steps}


def cmd_sweep(cfg, out, streams):
    base, _ = load_schedule(cfg)
    den = load_model(cfg, base)
    x, _ = load_data(cfg, streams)
    ratios = [float(r) for r in cfg["ratios"]]
    if not ratios or any(not 0 <= r <= 1 for r in ratios):
        raise ValidationError("ratios must be non-empty and within [0, 1]")
    reports = locality_sweep(x, den, base, ratios, cfg.get("threshold"), seed=streams.child(3).seed)
    artifacts.write_csv(out / "sweep.csv", LOCALITY_HEADER, (r.row() for r in reports))
    return {"sweep": "sweep.csv"}


def cmd_augment(cfg, out, streams):
    base, _ = load_schedule(cfg)
    ac = cfg["augment"]
    name = cfg["dataset"].get("name", "spirals")
    gen = streams.generator("dataset")
    pool_n = max(int(ac["n_train"]) * 8, 512)
    x_pool, y_pool, gmm = datasets.load_builtin(name, pool_n, gen)
    x_test, y_test, _ = datasets.load_builtin(name, int(ac["n_test"]), gen)
    if gmm is None:
        raise ValidationError(f"augment-eval needs a mixture dataset, got {name!r}")
    den = OracleDenoiser(gmm, base) if cfg["model"].get("kind") == "oracle" else load_model(cfg, base)
    t_boom = int(cfg["t_boom"]) or int(round(0.3 * base.T))
    proto = AugmentationProtocol(t_boom, float(ac["mix_probability"]))
    seeds = [streams.child(10, i).seed % 2**32 for i in range(int(ac["n_seeds"]))]

    def one(s):
        return augmentation_eval(x_pool, y_pool, x_test, y_test, proto, den, base,
                                 n_train=int(ac["n_train"]), seeds=[s])

    results = _pool_map(one, seeds, int(cfg["threads"]))
    rows = [row for r in results for row in r.rows()]
    ratios = [float(r) for r in ac.get("ratios") or []]
    for ratio in ratios:
        p = AugmentationProtocol(int(round(ratio * base.T)), float(ac["mix_probability"]))

        def one_ratio(s, p=p):
            return augmentation_eval(x_pool, y_pool, x_test, y_test, p, den, base,
                                     n_train=int(ac["n_train"]), seeds=[s],
                                     conditions=("boomerang",))

        for s, r in zip(seeds, _pool_map(one_ratio, seeds, int(cfg["threads"]))):
            rows.append((f"sweep_{ratio:g}", s, "accuracy", r.boomerang[0]))
    artifacts.write_csv(out / "accuracy.csv", ["condition", "seed", "metric", "value"], rows)
    return {"accuracy": "accuracy.csv"}


def cmd_pre(cfg, out, streams):
    base, _ = load_schedule(cfg)
    cfg = _merge(cfg, {"model": {"dataset": "bumps16"}})
    den = load_model(cfg, base)
    if getattr(den, "gmm", None) is None or den.gmm.d != 256:
        raise ValidationError("pre expects a 16x16 image model (bumps16 oracle)")
    pc = cfg["pre"]
    gen = streams.generator("dataset")
    x_true, _ = den.gmm.sample(int(pc["n"]), gen)
    clean, _ = den.gmm.sample(int(pc["n"]), gen)
    task = PreTask(x_true, int(pc["k"]), (16, 16))
    seed = streams.child(4).seed
    rows, vanilla = [], {}
    for ratio in pc["ratios"]:
        t = int(round(float(ratio) * base.T))
        _, m = pre_enhance(PreTask(x_true, task.k, task.shape, t, 1, task.x_ds, task.x_up),
                           den, base, seed=seed, clean=clean)
        vanilla[t] = m["mmd2"]
        rows += [(f"vanilla_t{t}", seed, key, m[key]) for key in sorted(m)]
    best_t = int(cfg["t_boom"]) or min(vanilla, key=lambda t: (vanilla[t], t))
    rows.append(("vanilla_best", seed, "t_boom", best_t))
    best_n, table = select_cascade(task, den, base, best_t, clean, pc["cascade"], seed=seed)
    for n, m in table.items():
        rows += [(f"cascade_n{n}_t{best_t // n}", seed, key, m[key]) for key in sorted(m)]
    rows.append(("cascade_best", seed, "n_cascade", best_n))
    artifacts.write_csv(out / "pre_metrics.csv", ["condition", "seed", "metric", "value"], rows)
    enhanced, _ = pre_enhance(PreTask(x_true, task.k, task.shape, best_t // best_n, best_n,
                                      task.x_ds, task.x_up), den, base, seed=seed)
    images = []
    for i in range(min(4, len(x_true))):
        for tag, img in (("true", x_true[i]), ("interp", task.x_up[i]), ("enhanced", enhanced[i])):
            name = f"pre_{i:02d}_{tag}.pgm"
            artifacts.write_pgm(out / name, img.reshape(16, 16))
            images.append(name)
    return {"metrics": "pre_metrics.csv", "images": images}


def cmd_selftest(cfg, out, streams):
    from .selftest import run_all

    results = run_all(seed=int(cfg["seed"]))
    ok = True
    for name, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok &= passed
    if not ok:
        raise NumericalError("selftest failures")
    return {}


HANDLERS = {
    "train": cmd_train, "sample": cmd_sample, "boomerang": cmd_boomerang, "sweep": cmd_sweep,
    "augment-eval": cmd_augment, "pre": cmd_pre, "selftest": cmd_selftest,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # --help
        return 0 if e.code in (0, None) else 1
    except ValidationError as e:
        print(f"ERROR 1: {e}", file=sys.stderr)
        return 1
    try:
        cfg = resolve_config(args)
        streams = SeedStreams(int(cfg["seed"]))
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        files = HANDLERS[args.command](cfg, out, streams)
        if args.command != "selftest":
            artifacts.write_json(out / "config.json", {"command": args.command, **cfg})
            artifacts.write_json(out / "index.json", {"command": args.command, "artifacts": files})
    except (ValidationError, ValueError, OSError) as e:
        print(f"ERROR 1: {e}", file=sys.stderr)
        return 1
    except (NumericalError, FloatingPointError) as e:
        print(f"ERROR 2: {e}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
