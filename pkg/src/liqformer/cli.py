"""Command-line interface.

Thin wrappers over the pipeline/train/explain code the service also uses;
all outputs are machine-readable files under --out plus a short summary on
stdout. Exit codes: 0 success, 1 validation/usage error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .checkpoint import model_version, read_checkpoint, write_checkpoint
from .data import NULL_MOTION_ID
from .errors import InputError, LiqformerError
from .model import ModelConfig, count_params
from .pipeline import (
    Predictor,
    ablation_csv,
    load_motions_dir,
    load_prepared,
    prepare_from_files,
    run_ablation,
    save_prepared,
)
from .signal import NullMotion, SpectralConfig
from .train import TrainConfig, cross_validate, epoch_log_csv, evaluate, train


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); the contract is 1
        raise UsageError(message)


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--soil-heads", type=int, default=4)
    p.add_argument("--soil-loops", type=int, default=2)
    p.add_argument("--eq-heads", type=int, default=2)
    p.add_argument("--eq-loops", type=int, default=1)
    p.add_argument("--no-eq-stream", action="store_true")
    p.add_argument("--no-site-stream", action="store_true")
    p.add_argument("--h1", type=int, default=256)
    p.add_argument("--h2", type=int, default=64)
    p.add_argument("--dropout", type=float, default=0.1)


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--batch-size", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--weight-decay", type=float, default=1e-3)


def _model_config(args, l_spec: int) -> ModelConfig:
    return ModelConfig(
        soil_heads=args.soil_heads,
        soil_loops=args.soil_loops,
        eq_heads=args.eq_heads,
        eq_loops=args.eq_loops,
        use_eq_stream=not args.no_eq_stream,
        use_site_stream=not args.no_site_stream,
        l_spec=l_spec,
        h1=args.h1,
        h2=args.h2,
        dropout_rate=args.dropout,
        seed=args.seed,
    )


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        weight_decay=args.weight_decay,
        seed=args.seed,
    )


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def build_parser() -> _Parser:
    parser = _Parser(prog="liqformer", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="parse, convert, encode, augment, split, standardize")
    p.add_argument("--data", required=True, help="sites CSV")
    p.add_argument("--motions", required=True, help="directory of <motion_id>.csv files")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--val-fraction", type=float, default=0.05)
    p.add_argument("--l-spec", type=int, default=256)
    p.add_argument("--f-max", type=float, default=25.0)
    p.add_argument("--norm", choices=["energy", "max"], default="energy")

    p = sub.add_parser("train", help="train on the prepared 95/5 split")
    p.add_argument("--data", required=True, help="prepared.json from `prepare`")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_train_flags(p)
    _add_model_flags(p)

    p = sub.add_parser("cv", help="k-fold cross-validation")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--folds", type=int, default=10)
    _add_train_flags(p)
    _add_model_flags(p)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a partition")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--partition", choices=["val", "train", "all"], default="val")

    p = sub.add_parser("ablate", help="run the ablation configuration matrix")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_train_flags(p)
    _add_model_flags(p)

    p = sub.add_parser("explain", help="Shapley attribution for one site")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--site-id", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n-perms", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("sensitivity", help="PGA/SPT what-if grid for one site")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--motions", required=True)
    p.add_argument("--site-id", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pga-factors", default="0.0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
    p.add_argument("--spt-factors", default="1.0")

    p = sub.add_parser("serve", help="run the JSON service")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--motions", default=None)
    p.add_argument("--bind", default="127.0.0.1:8000")

    p = sub.add_parser("params", help="print the parameter count for a configuration")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--l-spec", type=int, default=256)
    _add_model_flags(p)

    return parser


def _predictor_from(args, prepared) -> Predictor:
    cfg, params = read_checkpoint(args.checkpoint)
    blob = Path(args.checkpoint).read_bytes()
    return Predictor(
        cfg, params, prepared.dataset.standardizer, prepared.dataset.spectral, model_version(blob)
    )


def _cmd_prepare(args) -> int:
    spectral = SpectralConfig(l_spec=args.l_spec, f_max=args.f_max, norm_kind=args.norm)
    prepared = prepare_from_files(args.data, args.motions, spectral, args.seed, args.val_fraction)
    out = _out_dir(args)
    save_prepared(out / "prepared.json", prepared)
    n_twins = sum(1 for s in prepared.dataset.sites if s.is_null_twin)
    print(
        f"prepared {len(prepared.dataset)} records ({len(prepared.dataset) - n_twins} sites "
        f"+ {n_twins} null-motion twins); train {len(prepared.train_ids)} / val {len(prepared.val_ids)}"
    )
    print(f"wrote {out / 'prepared.json'}")
    return 0


def _cmd_train(args) -> int:
    prepared = load_prepared(args.data)
    cfg = _model_config(args, prepared.dataset.spectral.l_spec)
    result = train(prepared.train, prepared.val, cfg, _train_config(args))
    out = _out_dir(args)
    write_checkpoint(out / "checkpoint.lqtf", cfg, result.best_params)
    (out / "epochs.csv").write_text(epoch_log_csv(result.log))
    best = result.best_metrics
    summary = {
        "best_epoch": result.best_epoch,
        "val_accuracy": best.accuracy,
        "val_recall": best.recall,
        "val_loss": best.loss,
        "n_params": count_params(cfg),
    }
    (out / "train_summary.json").write_text(json.dumps(summary))
    print(
        f"best epoch {result.best_epoch}: val_accuracy={best.accuracy:.4f}"
        + (f" recall={best.recall:.4f}" if best.recall is not None else "")
    )
    print(f"wrote {out / 'checkpoint.lqtf'} and {out / 'epochs.csv'}")
    return 0


def _cmd_cv(args) -> int:
    prepared = load_prepared(args.data)
    cfg = _model_config(args, prepared.dataset.spectral.l_spec)
    report = cross_validate(prepared.dataset, cfg, _train_config(args), k=args.folds)
    out = _out_dir(args)
    doc = {
        "folds": [
            {"accuracy": m.accuracy, "recall": m.recall, "loss": m.loss} for m in report.folds
        ],
        "mean_accuracy": report.mean_accuracy,
        "std_accuracy": report.std_accuracy,
    }
    (out / "cv.json").write_text(json.dumps(doc))
    print(f"{args.folds}-fold mean accuracy {report.mean_accuracy:.4f} (std {report.std_accuracy:.4f})")
    return 0


def _cmd_eval(args) -> int:
    prepared = load_prepared(args.data)
    cfg, params = read_checkpoint(args.checkpoint)
    part = {"val": prepared.val, "train": prepared.train, "all": prepared.dataset}[args.partition]
    m = evaluate(params, cfg, part)
    out = _out_dir(args)
    doc = {
        "partition": args.partition,
        "n": m.n,
        "loss": m.loss,
        "accuracy": m.accuracy,
        "recall": m.recall,
        "confusion": {"tp": m.tp, "fp": m.fp, "tn": m.tn, "fn": m.fn},
    }
    (out / "metrics.json").write_text(json.dumps(doc))
    print(f"{args.partition}: accuracy={m.accuracy:.4f} loss={m.loss:.4f} n={m.n}")
    return 0


def _cmd_ablate(args) -> int:
    prepared = load_prepared(args.data)
    cfg = _model_config(args, prepared.dataset.spectral.l_spec)
    rows = run_ablation(prepared, cfg, _train_config(args))
    out = _out_dir(args)
    (out / "ablation.csv").write_text(ablation_csv(rows))
    doc = [
        {
            "name": r.name,
            "val_accuracy": r.val_accuracy,
            "val_recall": r.val_recall,
            "best_epoch": r.best_epoch,
            "n_params": r.n_params,
        }
        for r in rows
    ]
    (out / "ablation.json").write_text(json.dumps(doc))
    for r in rows:
        print(f"{r.name:>18}: accuracy={r.val_accuracy:.4f} params={r.n_params}")
    return 0


def _find_site(prepared, site_id):
    for s in prepared.dataset.sites:
        if s.site_id == site_id:
            return s
    raise InputError(f"unknown site_id {site_id!r}")


def _cmd_explain(args) -> int:
    prepared = load_prepared(args.data)
    predictor = _predictor_from(args, prepared)
    site = _find_site(prepared, args.site_id)
    inst = predictor.instance_for_site(site, prepared.dataset.spectrum_for(site))
    background = predictor.background_from(prepared.train)
    attr = predictor.explain_instance(inst, background, n_perms=args.n_perms, seed=args.seed)
    from .explain import waterfall_export

    out = _out_dir(args)
    (out / "attribution.json").write_text(json.dumps(attr.to_json_dict()))
    (out / "waterfall.json").write_text(json.dumps(waterfall_export(attr)))
    top = sorted(attr.phi_by_name().items(), key=lambda kv: -abs(kv[1]))[:5]
    print(f"f(x)={attr.fx:.4f} base={attr.base_value:.4f}")
    for name, phi in top:
        print(f"  {name:>10}: {phi:+.4f}")
    return 0


def _cmd_sensitivity(args) -> int:
    prepared = load_prepared(args.data)
    predictor = _predictor_from(args, prepared)
    site = _find_site(prepared, args.site_id)
    if site.is_null_twin or site.motion_id == NULL_MOTION_ID:
        motion = NullMotion()
    else:
        motion = load_motions_dir(args.motions, {site.motion_id})[site.motion_id]
    pga = [float(v) for v in args.pga_factors.split(",") if v.strip()]
    spt = [float(v) for v in args.spt_factors.split(",") if v.strip()]
    grid = predictor.sensitivity(site, motion, pga, spt)
    out = _out_dir(args)
    (out / "sensitivity.json").write_text(json.dumps(grid.to_json_dict()))
    print(f"grid {len(pga)}x{len(spt)} written to {out / 'sensitivity.json'}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import build_state, create_app

    state = build_state(args.checkpoint, args.data, args.motions)
    app = create_app(state)
    host, _, port = args.bind.partition(":")
    print(f"serving on http://{args.bind} (model {state.predictor.version})")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="warning")
    return 0


def _cmd_params(args) -> int:
    cfg = _model_config(args, args.l_spec)
    print(count_params(cfg))
    return 0


_COMMANDS = {
    "prepare": _cmd_prepare,
    "train": _cmd_train,
    "cv": _cmd_cv,
    "eval": _cmd_eval,
    "ablate": _cmd_ablate,
    "explain": _cmd_explain,
    "sensitivity": _cmd_sensitivity,
    "serve": _cmd_serve,
    "params": _cmd_params,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except LiqformerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # internal failure
        print(f"internal error: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
