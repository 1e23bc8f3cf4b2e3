"""Command-line interface: train, evaluate, and explain a trained model.

Exit codes are a stable contract: 0 success, 1 data or format error,
2 usage error.  The environment variable PWCN_SEED overrides --seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import (
    LABELS,
    Vocabulary,
    instances_from_records,
    load_embeddings,
    parse_conllu,
    parse_semeval_xml,
    tokenize_and_align,
)
from .errors import DataError, PwcnError
from .figures import save_confusion_matrix, save_proximity_heatmap, save_training_curves
from .nn import HyperParams, forward, load_checkpoint, save_checkpoint
from .proximity import match_forests, proximity_for_instance
from .train import (
    Example,
    TrainConfig,
    collate,
    encode_examples,
    evaluate,
    init_params,
    train,
)

MODE_ALIASES = {
    "pos": "position",
    "dep": "dependency",
    "position": "position",
    "dependency": "dependency",
}


@dataclass
class RunManifest:
    """Reproducibility record written next to every training run."""

    config: dict
    inputs: dict           # name -> {"path": ..., "sha1": ...}
    vocabulary_size: int
    class_distribution: dict

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n"


def git_blob_sha1(path) -> str:
    """Content hash in git's blob form, so it matches `git hash-object`."""
    data = Path(path).read_bytes()
    return hashlib.sha1(b"blob %d\x00" % len(data) + data).hexdigest()


def _class_distribution(instances) -> dict:
    counts = {name: 0 for name in LABELS}
    for inst in instances:
        counts[inst.label] += 1
    return counts


def _load_instances(xml_path):
    records = parse_semeval_xml(Path(xml_path).read_text(encoding="utf-8"))
    return instances_from_records(records)


def _proximities(instances, mode: str, conllu_path=None):
    if mode == "dependency":
        forests = parse_conllu(Path(conllu_path).read_text(encoding="utf-8"))
        matched = match_forests(instances, forests)
        return [proximity_for_instance(inst, mode, forest)
                for inst, forest in zip(instances, matched)]
    return [proximity_for_instance(inst, mode) for inst in instances]


def format_report(report) -> str:
    lines = [
        f"accuracy   {report.accuracy:.4f}",
        f"macro_f1   {report.macro_f1:.4f}",
        "",
        f"{'class':<10} {'precision':>9} {'recall':>9} {'f1':>9}",
    ]
    for k, name in enumerate(LABELS):
        lines.append(
            f"{name:<10} {report.precision[k]:>9.4f} "
            f"{report.recall[k]:>9.4f} {report.f1[k]:>9.4f}"
        )
    lines.append("")
    lines.append(f"{'gold/pred':<10} " + " ".join(f"{p:>9}" for p in LABELS))
    for i, gold in enumerate(LABELS):
        row = " ".join(f"{int(report.confusion[i, j]):>9d}" for j in range(len(LABELS)))
        lines.append(f"{gold:<10} {row}")
    return "\n".join(lines)


def write_report_tsv(path, report) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name, value in report.lines():
            fh.write(f"{name}\t{value:.12g}\n")


def ansi_heatmap(tokens, prox, aspect_start: int, aspect_len: int) -> str:
    """One line of tokens on green backgrounds scaled to the largest
    non-aspect weight; aspect tokens are bracketed and left unshaded."""
    prox = np.asarray(prox, dtype=np.float64)
    aspect = set(range(aspect_start, aspect_start + aspect_len))
    off_span = [prox[i] for i in range(len(tokens)) if i not in aspect]
    top = max(off_span) if off_span and max(off_span) > 0 else 1.0
    parts = []
    for i, token in enumerate(tokens):
        if i in aspect:
            parts.append(f"[{token}]")
            continue
        shade = prox[i] / top
        if shade <= 0:
            parts.append(token)
            continue
        green = round(255 * shade)
        fg = "0;0;0" if green >= 140 else "255;255;255"
        parts.append(f"\x1b[48;2;0;{green};0m\x1b[38;2;{fg}m{token}\x1b[0m")
    return " ".join(parts)


def html_heatmap(tokens, prox, aspect_start: int, aspect_len: int, label: str) -> str:
    prox = np.asarray(prox, dtype=np.float64)
    aspect = set(range(aspect_start, aspect_start + aspect_len))
    off_span = [prox[i] for i in range(len(tokens)) if i not in aspect]
    top = max(off_span) if off_span and max(off_span) > 0 else 1.0
    spans = []
    for i, token in enumerate(tokens):
        if i in aspect:
            spans.append(f'<span style="outline:2px solid #e8833a;padding:2px">{token}</span>')
        else:
            shade = max(prox[i] / top, 0.0)
            spans.append(
                f'<span style="background:rgba(46,160,67,{shade:.4f});padding:2px">{token}</span>'
            )
    body = "\n".join(spans)
    return (
        "<!doctype html>\n<meta charset=\"utf-8\">\n<title>proximity heatmap</title>\n"
        '<p style="font-family:sans-serif;font-size:1.3em;line-height:2">\n'
        f"{body}\n</p>\n"
        f'<p style="font-family:sans-serif">predicted label: <b>{label}</b></p>\n'
    )


def _load_checkpoint_sidecar(path):
    """Checkpoint plus its reconstructed vocabulary, hash-verified."""
    params, meta = load_checkpoint(path)
    vocab = Vocabulary.from_tokens(meta["vocab_tokens"])
    if vocab.content_hash() != meta["vocab_sha256"]:
        raise DataError("checkpoint vocabulary does not match its recorded hash")
    hyper = HyperParams(**meta["hyper"])
    return params, meta, vocab, hyper


def cmd_train(args, parser) -> int:
    mode = MODE_ALIASES[args.mode]
    if mode == "dependency" and (args.conllu_train is None or args.conllu_test is None):
        parser.error("dependency mode requires --conllu-train and --conllu-test")

    config = TrainConfig(
        learning_rate=args.lr,
        l2=args.l2,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        proximity_mode=mode,
        kernel=args.kernel,
        d_e=args.d_e,
        d_h=args.d_h,
        init_range=args.init_range,
        train_embeddings=not args.freeze_embeddings,
    )
    train_instances = _load_instances(args.train_xml)
    test_instances = _load_instances(args.test_xml)
    if not train_instances:
        raise DataError(f"no usable instances in {args.train_xml}")
    if not test_instances:
        raise DataError(f"no usable instances in {args.test_xml}")

    vocab = Vocabulary.from_instances(train_instances, test_instances)
    emb = load_embeddings(Path(args.embeddings).read_text(encoding="utf-8"),
                          vocab, config.d_e, seed=config.seed)

    train_prox = _proximities(train_instances, mode, args.conllu_train)
    test_prox = _proximities(test_instances, mode, args.conllu_test)
    train_examples = encode_examples(train_instances, train_prox, vocab)
    test_examples = encode_examples(test_instances, test_prox, vocab)

    params = init_params(config.hyper(), config.seed, emb, config.init_range)

    def progress(row):
        print(f"epoch {row.epoch:3d}  loss {row.train_loss:12.4f}  "
              f"test_acc {row.test_accuracy:.4f}  test_macro_f1 {row.test_macro_f1:.4f}",
              flush=True)

    result = train(config, params, train_examples, test_examples, on_epoch=progress)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    metadata = {
        "format_version": 1,
        "mode": mode,
        "seed": config.seed,
        "hyper": dataclasses.asdict(config.hyper()),
        "config": dataclasses.asdict(config),
        "vocab_tokens": vocab.tokens,
        "vocab_sha256": vocab.content_hash(),
        "best_epoch": result.best_epoch,
    }
    save_checkpoint(out_dir / "checkpoint.pwcn", result.best_params, metadata)

    with open(out_dir / "epochs.tsv", "w", encoding="utf-8") as fh:
        fh.write("epoch\ttrain_loss\ttest_accuracy\ttest_macro_f1\n")
        for row in result.log:
            fh.write(row.tsv() + "\n")

    inputs = {
        "train_xml": {"path": str(args.train_xml), "sha1": git_blob_sha1(args.train_xml)},
        "test_xml": {"path": str(args.test_xml), "sha1": git_blob_sha1(args.test_xml)},
        "embeddings": {"path": str(args.embeddings), "sha1": git_blob_sha1(args.embeddings)},
    }
    if mode == "dependency":
        inputs["conllu_train"] = {"path": str(args.conllu_train),
                                  "sha1": git_blob_sha1(args.conllu_train)}
        inputs["conllu_test"] = {"path": str(args.conllu_test),
                                 "sha1": git_blob_sha1(args.conllu_test)}
    manifest = RunManifest(
        config=dataclasses.asdict(config),
        inputs=inputs,
        vocabulary_size=len(vocab),
        class_distribution={
            "train": _class_distribution(train_instances),
            "test": _class_distribution(test_instances),
        },
    )
    (out_dir / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    save_training_curves(out_dir / "training_curves.png", result.log)

    print(f"best epoch {result.best_epoch}: "
          f"accuracy {result.best_report.accuracy:.4f}, "
          f"macro_f1 {result.best_report.macro_f1:.4f}")
    return 0


def cmd_eval(args, parser) -> int:
    params, meta, vocab, hyper = _load_checkpoint_sidecar(args.checkpoint)
    mode = meta["mode"]
    if mode == "dependency" and args.conllu_test is None:
        parser.error("this checkpoint uses dependency proximity; --conllu-test is required")

    instances = _load_instances(args.test_xml)
    if not instances:
        raise DataError(f"no usable instances in {args.test_xml}")
    prox = _proximities(instances, mode, args.conllu_test)
    examples = encode_examples(instances, prox, vocab)
    report = evaluate(params, hyper, examples)

    print(format_report(report))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_report_tsv(out_dir / "report.tsv", report)
    save_confusion_matrix(out_dir / "confusion_matrix.png", report.confusion)
    return 0


def cmd_explain(args, parser) -> int:
    params, meta, vocab, hyper = _load_checkpoint_sidecar(args.checkpoint)
    mode = meta["mode"]

    start = args.sentence.find(args.aspect)
    if start < 0:
        raise DataError(f"aspect {args.aspect!r} not found in sentence {args.sentence!r}")
    instance = tokenize_and_align(args.sentence, (start, start + len(args.aspect)))

    if mode == "dependency":
        # position mode must never read dependency files, so the flag is
        # consulted only on this branch
        if args.conllu_line is None:
            parser.error("this checkpoint uses dependency proximity; --conllu-line is required")
        forests = parse_conllu(Path(args.conllu_line).read_text(encoding="utf-8"))
        if not forests:
            raise DataError(f"no CoNLL-U block in {args.conllu_line}")
        prox = proximity_for_instance(instance, mode, forests[0])
    else:
        prox = proximity_for_instance(instance, mode)

    example = Example(token_ids=vocab.encode(instance.tokens), prox=prox, label=0)
    batch = collate([example])
    trace = forward(params, hyper, batch.token_ids, batch.prox, batch.mask)
    label = LABELS[int(trace.y[0].argmax())]

    aspect = set(range(instance.aspect_start, instance.aspect_stop))
    print("token\tweight\tis_aspect")
    for i, token in enumerate(instance.tokens):
        print(f"{token}\t{prox[i]:.6f}\t{int(i in aspect)}")
    print()
    print(ansi_heatmap(instance.tokens, prox, instance.aspect_start, instance.aspect_len))
    print(f"predicted label: {label}")

    if args.out_dir is not None:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "weights.tsv", "w", encoding="utf-8") as fh:
            fh.write("token\tweight\tis_aspect\n")
            for i, token in enumerate(instance.tokens):
                fh.write(f"{token}\t{prox[i]:.12g}\t{int(i in aspect)}\n")
        save_proximity_heatmap(out_dir / "proximity_heatmap.png", instance.tokens,
                               prox, instance.aspect_start, instance.aspect_len)
        if args.html:
            (out_dir / "heatmap.html").write_text(
                html_heatmap(instance.tokens, prox, instance.aspect_start,
                             instance.aspect_len, label),
                encoding="utf-8",
            )
    elif args.html:
        parser.error("--html requires --out-dir")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pwcn",
        description="Proximity-weighted convolution network for aspect sentiment",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    defaults = TrainConfig()

    p_train = sub.add_parser("train", help="train a model and write a checkpoint")
    p_train.add_argument("--mode", required=True, choices=sorted(MODE_ALIASES),
                         help="proximity scheme: pos[ition] or dep[endency]")
    p_train.add_argument("--train-xml", required=True)
    p_train.add_argument("--test-xml", required=True)
    p_train.add_argument("--embeddings", required=True,
                         help="word-vector text file (word then values, space-separated)")
    p_train.add_argument("--conllu-train", help="dependency parses for the training XML")
    p_train.add_argument("--conllu-test", help="dependency parses for the test XML")
    p_train.add_argument("--out-dir", required=True)
    p_train.add_argument("--epochs", type=int, default=defaults.epochs)
    p_train.add_argument("--batch-size", type=int, default=defaults.batch_size)
    p_train.add_argument("--lr", type=float, default=defaults.learning_rate)
    p_train.add_argument("--l2", type=float, default=defaults.l2)
    p_train.add_argument("--seed", type=int, default=defaults.seed)
    p_train.add_argument("--kernel", type=int, default=defaults.kernel,
                         help="convolution window length (odd; 1 = pointwise)")
    p_train.add_argument("--d-e", type=int, default=defaults.d_e, help="embedding width")
    p_train.add_argument("--d-h", type=int, default=defaults.d_h, help="LSTM hidden width")
    p_train.add_argument("--init-range", type=float, default=defaults.init_range)
    p_train.add_argument("--freeze-embeddings", action="store_true")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a test XML")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--test-xml", required=True)
    p_eval.add_argument("--conllu-test", help="required for dependency-mode checkpoints")
    p_eval.add_argument("--out-dir", required=True)
    p_eval.set_defaults(func=cmd_eval)

    p_explain = sub.add_parser("explain",
                               help="show proximity weights and prediction for one sentence")
    p_explain.add_argument("--checkpoint", required=True)
    p_explain.add_argument("--sentence", required=True)
    p_explain.add_argument("--aspect", required=True,
                           help="aspect term; must occur verbatim in the sentence")
    p_explain.add_argument("--conllu-line",
                           help="file holding the sentence's CoNLL-U block (dependency mode only)")
    p_explain.add_argument("--out-dir", help="also write weights.tsv and the heatmap figure")
    p_explain.add_argument("--html", action="store_true",
                           help="write heatmap.html under --out-dir")
    p_explain.set_defaults(func=cmd_explain)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    env_seed = os.environ.get("PWCN_SEED")
    if env_seed is not None and hasattr(args, "seed"):
        try:
            args.seed = int(env_seed)
        except ValueError:
            parser.error(f"PWCN_SEED must be an integer, got {env_seed!r}")
    try:
        return args.func(args, parser)
    except PwcnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
