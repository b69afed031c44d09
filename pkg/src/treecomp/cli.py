"""Command-line entry point.

Exit status: 0 on success, 1 on data/IO errors (or a failed gradient check), 2 on
usage errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import kernels
from .corpus import build_vocab, label_set, load_instances, parse_argument, split_instances
from .errors import InvalidArgument, TreecompError
from .encoder import compile_tree
from .model import MODES
from .trainer import (
    Example,
    TrainingConfig,
    compile_instances,
    evaluate,
    gradient_check,
    load_model,
    parse_config_text,
    predict_labels,
    save_model,
    train,
)
from .treebank import iter_ptb, normalize, serialize

log = logging.getLogger("treecomp")

SEED_ENV = "TREECOMP_SEED"


def _resolve_config(args):
    values = {}
    if getattr(args, "config", None):
        try:
            values.update(parse_config_text(Path(args.config).read_text(encoding="utf-8")))
        except OSError as exc:
            raise TreecompError(f"cannot read config {args.config}: {exc}") from exc
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise TreecompError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        values[key.strip()] = value.strip()
    for key in ("mode", "epochs", "level", "lr", "hidden"):
        if getattr(args, key, None) is not None:
            values[key] = getattr(args, key)
    seed = getattr(args, "seed", None)
    if seed is None and os.environ.get(SEED_ENV):
        seed = os.environ[SEED_ENV]
    if seed is not None:
        values["seed"] = seed
    return TrainingConfig.from_dict(values)


def _artifact_paths(out):
    out = Path(out)
    return {
        "checkpoint": str(out),
        "log": str(out.with_name(out.name + ".log.jsonl")),
        "timing": str(out.with_name(out.name + ".timing.jsonl")),
        "vocab": str(out.with_name(out.name + ".vocab.json")),
        "manifest": str(out.with_name(out.name + ".manifest.json")),
    }


def cmd_preprocess(args):
    src = Path(args.input)
    fmt = args.format or ("ptb" if src.suffix in (".ptb", ".mrg", ".txt") else "jsonl")
    try:
        text = src.read_text(encoding="utf-8")
    except OSError as exc:
        raise TreecompError(f"cannot read {src}: {exc}") from exc
    lines = []
    if fmt == "ptb":
        for tree in iter_ptb(text):
            lines.append(serialize(normalize([tree])))
    else:
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TreecompError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
            for key in ("arg1", "arg2"):
                if key in record:
                    record[key] = serialize(parse_argument(record[key], lineno, key))
            lines.append(json.dumps(record, ensure_ascii=False, sort_keys=True))
    out = "".join(line + "\n" for line in lines)
    if args.output:
        Path(args.output).write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)
    return 0


def cmd_train(args):
    if args.from_manifest:
        manifest = json.loads(Path(args.from_manifest).read_text(encoding="utf-8"))
        config = TrainingConfig.from_dict(manifest["config"])
        data, embeddings = manifest["inputs"]["data"], manifest["inputs"].get("embeddings")
        out, threads = args.out or manifest["outputs"]["checkpoint"], args.threads or manifest.get("threads", 1)
    else:
        if not args.data or not args.out:
            raise UsageError("train needs --data and --out (or --from-manifest)")
        try:
            config = _resolve_config(args)
        except InvalidArgument as exc:
            raise UsageError(str(exc)) from exc
        data, embeddings, out, threads = args.data, args.embeddings, args.out, args.threads or 1

    paths = _artifact_paths(out)
    corpus = load_instances(data, config.level)
    resume = None
    if args.resume:
        rcfg, vocab, resume = load_model(args.resume)
        if rcfg.replace(epochs=config.epochs) != config:
            raise TreecompError("resume checkpoint was trained with a different configuration")
        word_emb = tag_emb = None
    else:
        rng = np.random.default_rng([config.seed, 0])
        vocab, word_emb, tag_emb = build_vocab(
            corpus, embeddings, config.word_dim, config.tag_dim, rng,
            label_names=label_set(config.level), init_scale=config.init_scale,
        )
    run_manifest = {
        "command": "train",
        "config": config.to_dict(),
        "seed": config.seed,
        "threads": threads,
        "backend": kernels.BACKEND,
        "inputs": {"data": str(data), "embeddings": embeddings, "resume": args.resume},
        "outputs": paths,
    }
    Path(paths["manifest"]).write_text(json.dumps(run_manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    vocab.save(paths["vocab"])

    logf = open(paths["log"], "w", encoding="utf-8")
    timef = open(paths["timing"], "w", encoding="utf-8")
    for rec in (resume.log if resume else []):
        logf.write(json.dumps(rec, sort_keys=True) + "\n")
    started = time.perf_counter()

    def on_epoch(rec):
        logf.write(json.dumps(rec, sort_keys=True) + "\n")
        logf.flush()
        timef.write(json.dumps({"epoch": rec["epoch"], "wall_time": time.perf_counter() - started}) + "\n")
        timef.flush()
        log.info("epoch %d train_loss %.4f dev_accuracy %s", rec["epoch"], rec["train_loss"], rec["dev_accuracy"])

    try:
        result = train(config, corpus, vocab, word_emb, tag_emb, threads=threads, resume=resume, on_epoch=on_epoch)
    finally:
        logf.close()
        timef.close()
    save_model(paths["checkpoint"], config, vocab, result)
    print(json.dumps({"checkpoint": paths["checkpoint"], "best_epoch": result.best_epoch,
                      "best_dev_accuracy": result.best_dev_accuracy}))
    return 0


def cmd_eval(args):
    config, vocab, result = load_model(args.model)
    instances = split_instances(load_instances(args.data, config.level), args.split)
    report = evaluate(result.params, compile_instances(instances, vocab), vocab.label_names)
    print(json.dumps(report.to_json(), sort_keys=True))
    return 0


def cmd_predict(args):
    config, vocab, result = load_model(args.model)
    out_lines = []
    try:
        lines = Path(args.data).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise TreecompError(f"cannot read {args.data}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TreecompError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
        if not isinstance(record, dict) or "arg1" not in record or "arg2" not in record:
            raise TreecompError(f"line {lineno}: record needs arg1 and arg2")
        ex = Example(
            compile_tree(parse_argument(record["arg1"], lineno, "arg1"), vocab),
            compile_tree(parse_argument(record["arg2"], lineno, "arg2"), vocab),
            (),
        )
        (pred, probs), = predict_labels(result.params, [ex])
        out = {"label": vocab.label_names[pred],
               "distribution": {name: float(p) for name, p in zip(vocab.label_names, probs)}}
        if "id" in record:
            out["id"] = record["id"]
        out_lines.append(json.dumps(out, sort_keys=True))
    text = "".join(line + "\n" for line in out_lines)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_gradcheck(args):
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get(SEED_ENV, "0"))
    config = TrainingConfig(word_dim=args.word_dim, tag_dim=args.tag_dim, hidden=args.hidden,
                            mode=args.mode, seed=seed, l2=args.l2)
    report = gradient_check(config, tolerance=args.tolerance)
    report["tensors"] = {k: float(v) for k, v in report["tensors"].items()}
    report["mode"] = args.mode
    print(json.dumps(report, sort_keys=True))
    return 0 if report["passed"] else 1


def cmd_export_tags(args):
    config, vocab, result = load_model(args.model)
    if "tag_emb" not in result.params.tensors:
        raise TreecompError(f"mode {config.mode!r} has no tag embeddings")
    table = result.params["tag_emb"]
    rows = []
    for tag, idx in vocab.tag_to_id.items():
        rows.append("\t".join([tag] + [repr(float(v)) for v in table[idx]]))
    text = "".join(r + "\n" for r in rows)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


class UsageError(Exception):
    pass


def build_parser():
    p = argparse.ArgumentParser(prog="treecomp", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("preprocess", help="normalize PTB or JSONL input to binary trees")
    sp.add_argument("--input", required=True)
    sp.add_argument("--output")
    sp.add_argument("--format", choices=["ptb", "jsonl"])
    sp.set_defaults(func=cmd_preprocess)

    sp = sub.add_parser("train", help="train a model")
    sp.add_argument("--config", help="key = value file with TrainingConfig fields")
    sp.add_argument("--data")
    sp.add_argument("--out")
    sp.add_argument("--embeddings", help="GloVe text file")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--mode", choices=sorted(MODES))
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--level", type=int, choices=[1, 2])
    sp.add_argument("--lr", type=float)
    sp.add_argument("--hidden", type=int)
    sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config field")
    sp.add_argument("--threads", type=int)
    sp.add_argument("--resume", help="continue from this checkpoint")
    sp.add_argument("--from-manifest", help="re-run a previous training run")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="accuracy on one split")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--split", default="test", choices=["train", "dev", "test"])
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("predict", help="label distribution per JSONL record")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("gradcheck", help="finite-difference check of all gradients")
    sp.add_argument("--mode", default="tag_tree_lstm", choices=sorted(MODES))
    sp.add_argument("--seed", type=int)
    sp.add_argument("--hidden", type=int, default=4)
    sp.add_argument("--word-dim", type=int, default=3)
    sp.add_argument("--tag-dim", type=int, default=2)
    sp.add_argument("--l2", type=float, default=0.0001)
    sp.add_argument("--tolerance", type=float, default=1e-4)
    sp.set_defaults(func=cmd_gradcheck)

    sp = sub.add_parser("export-tag-embeddings", help="tag vectors as TSV")
    sp.add_argument("--model", required=True)
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_export_tags)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "train" and args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except TreecompError as exc:
        print(f"treecomp: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
