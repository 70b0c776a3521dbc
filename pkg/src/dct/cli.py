"""Command line interface.

Thin wrappers around the core package: each command reads files, calls
one pipeline stage and writes files plus a run manifest. Exit codes: 0
success, 1 failed numeric check (gradcheck), 2 usage or data error.
Logging verbosity comes from the DCT_LOG environment variable
(quiet | info | debug).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time

from . import datagen, features, nn, sentiment, tracker

log = logging.getLogger("dct")

GRADCHECK_THRESHOLD = 1e-4


class UsageError(Exception):
    """Bad invocation or bad data: exit code 2."""


def _configure_logging():
    level_name = os.environ.get("DCT_LOG", "info").lower()
    levels = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level_name not in levels:
        print(f"warning: DCT_LOG={level_name!r} not recognized, using info", file=sys.stderr)
        level_name = "info"
    logging.basicConfig(
        stream=sys.stderr, level=levels[level_name], format="%(levelname)s %(message)s"
    )


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _refuse_overwrite(paths, force: bool):
    if force:
        return
    for p in paths:
        if os.path.exists(p):
            raise UsageError(f"output {p} exists, pass --force to overwrite")


def _write_manifest(path, command, config, seed, inputs, outputs, started):
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(p): _sha256(p) for p in outputs},
        "duration_seconds": round(time.monotonic() - started, 3),
    }
    tmp = str(path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    os.replace(tmp, path)


def _load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from exc


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def cmd_simulate(args) -> int:
    started = time.monotonic()
    config = datagen.GenConfig.from_dict(_load_json(args.config)) if args.config else datagen.GenConfig()
    if args.seed is not None:
        config.seed = args.seed
    os.makedirs(args.out, exist_ok=True)
    data_path = os.path.join(args.out, "campaigns.jsonl")
    corpus_path = os.path.join(args.out, "sentiment_corpus.jsonl")
    _refuse_overwrite([data_path, corpus_path], args.force)
    campaigns, corpus = datagen.generate(config)
    features.save_campaigns(campaigns, data_path)
    sentiment.save_corpus(corpus, corpus_path)
    log.info("wrote %d campaigns and %d corpus documents to %s",
             len(campaigns), len(corpus), args.out)
    _write_manifest(
        os.path.join(args.out, "manifest.json"), "simulate", config.to_dict(),
        config.seed, [args.config] if args.config else [], [data_path, corpus_path], started,
    )
    return 0


def cmd_sentiment_train(args) -> int:
    started = time.monotonic()
    _refuse_overwrite([args.out], args.force)
    cfg = _load_json(args.config) if args.config else {}
    corpus = sentiment.load_corpus(args.data)
    model = sentiment.train_sentiment(
        corpus,
        epochs=int(cfg.get("epochs", 200)),
        learning_rate=float(cfg.get("learning_rate", 0.5)),
        seed=args.seed if args.seed is not None else int(cfg.get("seed", 0)),
    )
    sentiment.save_model(model, args.out)
    log.info("trained sentiment model on %d documents, vocabulary %d",
             len(corpus), len(model.vocabulary))
    _write_manifest(
        str(args.out) + ".manifest.json", "sentiment train", cfg,
        model.training_meta["seed"], [args.data], [args.out], started,
    )
    return 0


def cmd_sentiment_tag(args) -> int:
    started = time.monotonic()
    if not args.model or len(args.model) != 1:
        raise UsageError("sentiment tag needs exactly one --model")
    _refuse_overwrite([args.out], args.force)
    model = sentiment.load_model(args.model[0])
    campaigns = features.load_campaigns(args.data)
    n_tagged = 0
    for c in campaigns:
        for rec in c.days:
            for review in rec.reviews:
                if review.text is not None:
                    review.p_pos = sentiment.classify(model, review.text)
                    n_tagged += 1
                elif review.p_pos is None:
                    raise UsageError(
                        f"campaign {c.id} day {rec.day}: review has neither text nor p_pos"
                    )
    features.save_campaigns(campaigns, args.out)
    log.info("tagged %d reviews in %d campaigns", n_tagged, len(campaigns))
    _write_manifest(
        str(args.out) + ".manifest.json", "sentiment tag", {},
        None, [args.data, args.model[0]], [args.out], started,
    )
    return 0


def _loss_csv_path(checkpoint_path) -> str:
    base, _ = os.path.splitext(str(checkpoint_path))
    return base + ".loss.csv"


def cmd_train(args) -> int:
    started = time.monotonic()
    loss_path = _loss_csv_path(args.out)
    _refuse_overwrite([args.out, loss_path], args.force)
    cfg = _load_json(args.config) if args.config else {}
    variant = {"full": tracker.VARIANT_FULL, "funds-only": tracker.VARIANT_FUNDS_ONLY}[args.variant]
    config = tracker.TrainConfig(
        epochs=int(cfg.get("epochs", 30)),
        learning_rate=float(cfg.get("learning_rate", 0.15)),
        batch_size=int(cfg.get("batch_size", 16)),
        aux_weight=float(cfg.get("aux_weight", 0.2)),
        seed=args.seed if args.seed is not None else int(cfg.get("seed", 0)),
        clip_norm=float(cfg.get("clip_norm", 5.0)),
    )
    dataset = features.load_campaigns(args.data)
    params, history = tracker.train(
        dataset,
        config,
        variant=variant,
        static_dim=int(cfg.get("static_dim", 16)),
        hidden_dim=int(cfg.get("hidden_dim", 16)),
        bucket_count=int(cfg.get("bucket_count", features.DEFAULT_BUCKETS)),
    )
    tracker.save_checkpoint(params, args.out)
    with open(loss_path, "w", encoding="utf-8") as fh:
        fh.write("epoch,loss\n")
        for epoch, loss in enumerate(history):
            fh.write(f"{epoch},{_fmt(loss)}\n")
    log.info("trained %s model for %d epochs, final loss %.6f",
             variant, config.epochs, history[-1])
    _write_manifest(
        str(args.out) + ".manifest.json", "train", {**cfg, "variant": variant},
        config.seed, [args.data], [args.out, loss_path], started,
    )
    return 0


def _find_campaign(campaigns, campaign_id):
    for c in campaigns:
        if c.id == campaign_id:
            return c
    raise UsageError(f"campaign {campaign_id!r} not found in dataset")


def cmd_track(args) -> int:
    started = time.monotonic()
    if not args.model or len(args.model) != 2:
        raise UsageError("track needs --model FULL --model FUNDS_ONLY (two checkpoints)")
    _refuse_overwrite([args.out], args.force)
    params = tracker.load_checkpoint(args.model[0])
    params_funds = tracker.load_checkpoint(args.model[1])
    campaigns = features.load_campaigns(args.data)
    campaign = _find_campaign(campaigns, args.campaign)
    curve = tracker.track(campaign, params, params_funds)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("day,p_success_full,p_success_funds_only,emotion,emotion_prob\n")
        for day, p_full, p_funds, emotion, prob in curve.rows():
            fh.write(f"{day},{_fmt(p_full)},{_fmt(p_funds)},{emotion},{_fmt(prob)}\n")
    log.info("tracked campaign %s over %d days", campaign.id, len(curve.days))
    _write_manifest(
        str(args.out) + ".manifest.json", "track", {"campaign": args.campaign},
        None, [args.data, *args.model], [args.out], started,
    )
    return 0


def cmd_stats(args) -> int:
    started = time.monotonic()
    _refuse_overwrite([args.out], args.force)
    campaigns = features.load_campaigns(args.data)
    campaign = _find_campaign(campaigns, args.campaign)
    rows = features.stats_rows(campaign, args.pattern)
    with open(args.out, "w", encoding="utf-8") as fh:
        if args.pattern == "tile":
            fh.write("day,n_pos,n_neg\n")
            for day, n_pos, n_neg in rows:
                fh.write(f"{day},{n_pos},{n_neg}\n")
        else:
            fh.write("day,n_total,frac_pos,frac_neg\n")
            for day, n_total, frac_pos, frac_neg in rows:
                fh.write(f"{day},{n_total},{_fmt(frac_pos)},{_fmt(frac_neg)}\n")
    log.info("wrote %s statistics for campaign %s", args.pattern, campaign.id)
    _write_manifest(
        str(args.out) + ".manifest.json", "stats",
        {"campaign": args.campaign, "pattern": args.pattern},
        None, [args.data], [args.out], started,
    )
    return 0


def gradcheck_report(seed: int = 0, overrides: dict | None = None) -> dict:
    """Finite-difference check of every parameter group on a small model."""
    cfg = {
        "static_raw_dim": 6,
        "static_dim": 4,
        "hidden_dim": 3,
        "input_dim": 8,
        "n_days": 4,
        "aux_weight": 0.2,
        "epsilon": 1e-5,
    }
    cfg.update(overrides or {})
    if cfg["epsilon"] <= 0:
        raise ValueError("epsilon must be positive")
    groups = nn.gradcheck_model(
        static_raw_dim=int(cfg["static_raw_dim"]),
        static_dim=int(cfg["static_dim"]),
        hidden_dim=int(cfg["hidden_dim"]),
        input_dim=int(cfg["input_dim"]),
        n_days=int(cfg["n_days"]),
        aux_weight=float(cfg["aux_weight"]),
        epsilon=float(cfg["epsilon"]),
        seed=seed,
    )
    worst = max(groups.values())
    return {
        "config": cfg,
        "seed": seed,
        "threshold": GRADCHECK_THRESHOLD,
        "groups": {k: float(v) for k, v in groups.items()},
        "max_relative_error": float(worst),
        "pass": bool(worst < GRADCHECK_THRESHOLD),
    }


def cmd_gradcheck(args) -> int:
    overrides = _load_json(args.config) if args.config else {}
    report = gradcheck_report(seed=args.seed if args.seed is not None else 0,
                              overrides=overrides)
    text = json.dumps(report, indent=2)
    print(text)
    if args.out:
        _refuse_overwrite([args.out], args.force)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return 0 if report["pass"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dct", description="Campaign success tracking pipeline"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, data=False, model=False, out=False, seed=False,
                   config=False, campaign=False, pattern=False, variant=False):
        if data:
            p.add_argument("--data", required=True, help="input JSONL dataset")
        if model:
            p.add_argument("--model", action="append", help="model file (repeatable)")
        if out:
            p.add_argument("--out", required=True, help="output path")
        if seed:
            p.add_argument("--seed", type=int, default=None)
        if config:
            p.add_argument("--config", default=None, help="JSON config file")
        if campaign:
            p.add_argument("--campaign", required=True, help="campaign id")
        if pattern:
            p.add_argument("--pattern", choices=["tile", "stack"], required=True)
        if variant:
            p.add_argument("--variant", choices=["full", "funds-only"], default="full")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    add_common(p, out=True, seed=True, config=True)
    p.set_defaults(func=cmd_simulate)

    p_sent = sub.add_parser("sentiment", help="train or apply the review classifier")
    sent_sub = p_sent.add_subparsers(dest="subcommand", required=True)
    p = sent_sub.add_parser("train", help="fit the polarity classifier on a corpus")
    add_common(p, data=True, out=True, seed=True, config=True)
    p.set_defaults(func=cmd_sentiment_train)
    p = sent_sub.add_parser("tag", help="write p_pos into every review of a dataset")
    add_common(p, data=True, model=True, out=True)
    p.set_defaults(func=cmd_sentiment_tag)

    p = sub.add_parser("train", help="train a tracking model")
    add_common(p, data=True, out=True, seed=True, config=True, variant=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("track", help="per-day success curve for one campaign")
    add_common(p, data=True, model=True, out=True, campaign=True)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("stats", help="daily sentiment statistics for one campaign")
    add_common(p, data=True, out=True, campaign=True, pattern=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("gradcheck", help="verify analytic gradients numerically")
    add_common(p, seed=True, config=True)
    p.add_argument("--out", default=None, help="also write the JSON report here")
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
