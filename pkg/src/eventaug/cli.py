"""Multi-command front end for the full pipeline.

Commands: augment-text, fuse, train, eval, ratio-study, diagnose.
Global flags (accepted before or after the command): --config, --profile,
--seed, --out, --mock. Exit codes: 0 success, 2 config error, 3 provider
exhaustion, 4 data degeneracy, 1 anything else.

Every command writes resolved-config.json into the output directory so a
run can be reproduced from its snapshot.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import graph as graphmod
from .classify import (DegenerateDataError, TrainConfig, eval_report_json,
                       load_model, predict, ratio_study, save_model, train,
                       write_ratio_csv)
from .core import EmbeddingMatrix, read_embeddings, split, write_embeddings
from .diagnostics import export_plots, moments
from .ingest import attach_embeddings, parse_corpus, with_entities, write_corpus
from .metrics import evaluate
from .perturb import dataset_std, perturb
from .profiles import RunConfig, read_config_file, resolve_config
from .textaug import (EchoProvider, HttpProvider, ProviderError,
                      ShuffleProvider, Strategy, augment_corpus)

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_PROVIDER = 3
EXIT_DEGENERATE = 4

_MOCKS = {"echo": EchoProvider, "shuffle": ShuffleProvider}


class ConfigError(ValueError):
    pass


def _global_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", default=argparse.SUPPRESS,
                        help="INI config file")
    parent.add_argument("--profile", default=argparse.SUPPRESS,
                        help="dataset profile: kawarith6, twitter2012, twitter2018, custom")
    parent.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="master seed")
    parent.add_argument("--out", default=argparse.SUPPRESS,
                        help="output directory")
    parent.add_argument("--mock", nargs="?", const="echo", choices=sorted(_MOCKS),
                        default=argparse.SUPPRESS,
                        help="use an offline mock provider instead of HTTP")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _global_flags()
    parser = argparse.ArgumentParser(prog="eventaug", parents=[parent],
                                     description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("augment-text", parents=[parent],
                       help="generate LLM text variants of a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--strategy", action="append", dest="strategies",
                   metavar="NAME", help="repeatable; defaults to all five")
    p.add_argument("--copies", type=int, default=None)
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--train-only", action="store_true",
                   help="augment only the training split of the resolved split spec")
    p.add_argument("--out-corpus", default=None,
                   help="output JSONL path (default: <out>/augmented.jsonl)")

    p = sub.add_parser("fuse", parents=[parent],
                       help="build the social graph and write fused embeddings")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--dump-graph", action="store_true")

    for name in ("train", "ratio-study"):
        p = sub.add_parser(name, parents=[parent])
        p.add_argument("--corpus", required=True)
        p.add_argument("--fused", required=True)
        p.add_argument("--epochs", type=int, default=None)
        p.add_argument("--batch-size", type=int, default=None)
        p.add_argument("--lr", type=float, default=None)
        p.add_argument("--no-implicit", action="store_true",
                       help="disable the perturbation mixer during training")
        p.add_argument("--method", default=None,
                       help="perturbation method: GP, PGP, IDGP, CGP, FDP")
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--sigma", type=float, default=None)
        if name == "ratio-study":
            p.add_argument("--ratios", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7")

    p = sub.add_parser("eval", parents=[parent],
                       help="evaluate a saved model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--fused", required=True)
    p.add_argument("--model-file", required=True)
    p.add_argument("--split-part", default="test",
                   choices=("train", "val", "test", "all"))

    p = sub.add_parser("diagnose", parents=[parent],
                       help="distribution diagnostics for a perturbation")
    p.add_argument("--fused", required=True)
    p.add_argument("--method", default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--alpha-var", type=float, default=None)
    p.add_argument("--bins", type=int, default=100)
    return parser


def _resolve(args) -> RunConfig:
    file_values = {}
    config_path = getattr(args, "config", None)
    if config_path:
        if not os.path.exists(config_path):
            raise ConfigError(f"config file not found: {config_path}")
        file_values = read_config_file(config_path)
    overrides = {
        "run": {"seed": getattr(args, "seed", None),
                "out": getattr(args, "out", None)},
        "implicit": {"method": getattr(args, "method", None),
                     "alpha": getattr(args, "alpha", None),
                     "sigma": getattr(args, "sigma", None),
                     "alpha_var": getattr(args, "alpha_var", None)},
        "train": {"epochs": getattr(args, "epochs", None),
                  "batch_size": getattr(args, "batch_size", None),
                  "learning_rate": getattr(args, "lr", None)},
        "explicit": {"copies": getattr(args, "copies", None),
                     "cache_dir": getattr(args, "cache_dir", None),
                     "endpoint": getattr(args, "endpoint", None),
                     "model": getattr(args, "model", None)},
    }
    try:
        config = resolve_config(profile=getattr(args, "profile", None),
                                file_values=file_values, overrides=overrides)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    if getattr(args, "strategies", None):
        config.strategies = tuple(args.strategies)
    return config


def _require_file(path, what: str) -> str:
    if not os.path.exists(path):
        raise ConfigError(f"{what} not found: {path}")
    return path


def _write_snapshot(config: RunConfig, extra: dict | None = None) -> None:
    os.makedirs(config.out_dir, exist_ok=True)
    payload = config.to_dict()
    if extra:
        payload.update(extra)
    with open(os.path.join(config.out_dir, "resolved-config.json"), "w",
              encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _load_aligned(config: RunConfig, corpus_path, emb_path):
    corpus = parse_corpus(_require_file(corpus_path, "corpus"))
    emb = read_embeddings(_require_file(emb_path, "embeddings"))
    return attach_embeddings(corpus, emb)


def _split_rows(corpus, spec):
    """Split labeled originals; augmented messages follow their source into
    the training side only (never val/test, to avoid leakage)."""
    labeled = [m for m in corpus.messages
               if m.is_original and m.label is not None]
    if not labeled:
        raise DegenerateDataError("corpus has no labeled original messages")
    train_ids, val_ids, test_ids = split([m.id for m in labeled],
                                         [m.label for m in labeled], spec)
    train_set = set(train_ids)
    extra = [m.id for m in corpus.messages
             if m.origin is not None and m.label is not None
             and m.origin.source_id in train_set]
    return train_ids + extra, val_ids, test_ids


def cmd_augment_text(args) -> int:
    config = _resolve(args)
    _write_snapshot(config, {"command": "augment-text"})
    corpus = parse_corpus(_require_file(args.corpus, "corpus"))
    corpus = with_entities(corpus)

    mock = getattr(args, "mock", None)
    if mock:
        provider = _MOCKS[mock]()
        model_name = f"mock:{mock}"
    else:
        if not config.provider.endpoint:
            raise ConfigError("no provider endpoint; pass --endpoint or --mock")
        provider = HttpProvider(config.provider)
        model_name = config.provider.model

    try:
        strategies = [Strategy.from_cli_name(s) for s in config.strategies]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    result = augment_corpus(
        corpus, strategies, provider,
        cache_dir=config.cache_dir or os.path.join(config.out_dir, "cache"),
        copies_per_strategy=config.copies,
        split_spec=config.split if args.train_only else None,
        max_in_flight=config.provider.max_in_flight,
        model_name=model_name)

    out_path = args.out_corpus or os.path.join(config.out_dir, "augmented.jsonl")
    write_corpus(result.corpus, out_path)
    print(f"originals={result.originals} generated={result.generated} "
          f"skipped={result.skipped} cache_hits={result.cache_hits} "
          f"provider_calls={result.provider_calls}")
    print(f"wrote {out_path}")

    attempted = result.generated + result.skipped
    provider_failures = [f for f in result.failures if f[3] == "provider"]
    if attempted > 0 and result.generated == 0 and provider_failures \
            and len(provider_failures) == result.skipped:
        raise ProviderError("all augmentation requests failed")
    return EXIT_OK


def cmd_fuse(args) -> int:
    config = _resolve(args)
    _write_snapshot(config, {"command": "fuse"})
    corpus = parse_corpus(_require_file(args.corpus, "corpus"))
    corpus = with_entities(corpus)
    emb = read_embeddings(_require_file(args.embeddings, "embeddings"))
    aligned = attach_embeddings(corpus, emb)

    g = graphmod.build_graph(corpus)
    fused = graphmod.fuse(g, aligned.embeddings, corpus, config.fusion)
    fused_path = os.path.join(config.out_dir, "fused.sedemb")
    write_embeddings(fused, fused_path)

    stats = g.stats()
    stats.update({"input_dim": emb.dim, "fused_dim": fused.dim})
    with open(os.path.join(config.out_dir, "graph-stats.json"), "w",
              encoding="utf-8") as fh:
        fh.write(json.dumps(stats, sort_keys=True, indent=2) + "\n")
    if args.dump_graph:
        with open(os.path.join(config.out_dir, "graph.json"), "w",
                  encoding="utf-8") as fh:
            fh.write(g.to_json() + "\n")
    print(f"fused {fused.rows} messages: dim {emb.dim} -> {fused.dim}")
    print(f"graph: {stats['users']} users, {stats['entities']} entities, "
          f"{stats['entity_edges']} entity edges")
    return EXIT_OK


def _gather(aligned, ids):
    label_of = {m.id: m.label for m in aligned.corpus.messages}
    x = np.stack([aligned.embeddings.row(i) for i in ids]) if ids else \
        np.zeros((0, aligned.embeddings.dim))
    y = np.array([label_of[i] for i in ids], dtype=np.int64)
    return x, y


def cmd_train(args) -> int:
    config = _resolve(args)
    _write_snapshot(config, {"command": "train"})
    aligned = _load_aligned(config, args.corpus, args.fused)
    train_ids, _, test_ids = _split_rows(aligned.corpus, config.split)
    x_train, y_train = _gather(aligned, train_ids)
    x_test, y_test = _gather(aligned, test_ids)

    perturbation = None if args.no_implicit else config.perturbation
    train_config = TrainConfig(epochs=config.train.epochs,
                               batch_size=config.train.batch_size,
                               learning_rate=config.train.learning_rate,
                               seed=config.seed, perturbation=perturbation)
    stats = dataset_std(x_train)
    num_classes = aligned.corpus.num_classes
    model = train(x_train, y_train, train_config, stats=stats,
                  num_classes=num_classes)

    model_path = os.path.join(config.out_dir, "model.sedmdl")
    save_model(model, model_path)
    preds, _ = predict(model, x_test)
    report = evaluate(preds, y_test, num_classes)
    report_path = os.path.join(config.out_dir, "report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(eval_report_json(report))
    print(f"train_rows={len(train_ids)} test_rows={len(test_ids)} "
          f"classes={num_classes}")
    print(f"micro_f1={report.micro_f1:.4f} macro_f1={report.macro_f1:.4f}")
    print(f"wrote {model_path} and {report_path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    config = _resolve(args)
    _write_snapshot(config, {"command": "eval"})
    aligned = _load_aligned(config, args.corpus, args.fused)
    model = load_model(_require_file(args.model_file, "model"))

    train_ids, val_ids, test_ids = _split_rows(aligned.corpus, config.split)
    part = {"train": train_ids, "val": val_ids, "test": test_ids,
            "all": train_ids + val_ids + test_ids}[args.split_part]
    if not part:
        raise DegenerateDataError(f"split part {args.split_part!r} is empty")
    x, y = _gather(aligned, part)
    preds, _ = predict(model, x)
    report = evaluate(preds, y, max(aligned.corpus.num_classes, model.num_classes))
    report_path = os.path.join(config.out_dir, "report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(eval_report_json(report))
    print(f"split={args.split_part} rows={len(part)}")
    print(f"micro_f1={report.micro_f1:.4f} macro_f1={report.macro_f1:.4f}")
    return EXIT_OK


def cmd_ratio_study(args) -> int:
    config = _resolve(args)
    _write_snapshot(config, {"command": "ratio-study"})
    aligned = _load_aligned(config, args.corpus, args.fused)
    train_ids, _, test_ids = _split_rows(aligned.corpus, config.split)
    x_train, y_train = _gather(aligned, train_ids)
    x_test, y_test = _gather(aligned, test_ids)

    try:
        ratios = [float(r) for r in args.ratios.split(",") if r.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --ratios: {exc}") from exc

    perturbation = None if args.no_implicit else config.perturbation
    train_config = TrainConfig(epochs=config.train.epochs,
                               batch_size=config.train.batch_size,
                               learning_rate=config.train.learning_rate,
                               seed=config.seed, perturbation=perturbation)
    rows = ratio_study(x_train, y_train, x_test, y_test, ratios, train_config,
                       num_classes=aligned.corpus.num_classes)
    csv_path = os.path.join(config.out_dir, "ratio_study.csv")
    write_ratio_csv(rows, csv_path)
    print(f"wrote {csv_path} ({len(rows)} rows)")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    config = _resolve(args)
    _write_snapshot(config, {"command": "diagnose"})
    before = read_embeddings(_require_file(args.fused, "fused embeddings"))
    stats = dataset_std(before)
    rng = np.random.default_rng(config.seed)
    after_values = perturb(before.values, config.perturbation, stats, rng)
    after = EmbeddingMatrix([f"{i}*" for i in before.ids], after_values)

    export_plots(before, after, config.out_dir, bins=args.bins)
    report = moments(before, after, pooled=True)
    print(f"method={config.perturbation.method} n={report.count}")
    print(f"before: mean={report.before_mean:.6f} std={report.before_std:.6f}")
    print(f"after:  mean={report.after_mean:.6f} std={report.after_std:.6f}")
    return EXIT_OK


_HANDLERS = {
    "augment-text": cmd_augment_text,
    "fuse": cmd_fuse,
    "train": cmd_train,
    "eval": cmd_eval,
    "ratio-study": cmd_ratio_study,
    "diagnose": cmd_diagnose,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except DegenerateDataError as exc:
        print(f"degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except Exception as exc:  # noqa: BLE001 - map everything else to exit 1
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
