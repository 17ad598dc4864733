"""Command-line interface.

::

    nertagger train <config>
    nertagger predict <model> <in.conll> <out.conll> [--aux FILE]
    nertagger eval <gold.conll> <pred.conll>
    nertagger compare <gold.conll> <a.conll> <b.conll> [--iters N] [--seed S]

Exit codes: 0 success, 2 usage/config error, 3 numeric failure (training
diverged), 4 data or model incompatibility.

The training config is a UTF-8 ``key = value`` file, one entry per line,
``#`` starting a comment.  Path keys: ``train_path``, ``dev_path``,
``test_path``, ``embeddings_path``, ``aux_path``, ``model_out``; every other
key is a :class:`~nertagger.trainer.TrainConfig` field.  ``aux_path`` must
contain a ``{split}`` placeholder (``train``/``dev``/``test``).  The epoch
log is written next to the model as ``<model_out>.log``.
"""
import argparse
import logging
import os
import sys
import typing
from dataclasses import dataclass, field

from . import data, modelfile
from .encoder import ZoneoutConfig
from .errors import ConfigError, DataError, DivergenceError
from .evaluation import f1_score, randomization_test
from .trainer import TrainConfig, evaluate, predict, train

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_DATA = 0, 2, 3, 4
PATH_KEYS = ("train_path", "dev_path", "test_path", "embeddings_path", "aux_path", "model_out")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    train_path: str = None
    dev_path: str = None
    test_path: str = None
    embeddings_path: str = None
    aux_path: str = None
    model_out: str = None
    train: TrainConfig = field(default_factory=TrainConfig)


def _coerce(name, kind, text):
    if typing.get_origin(kind) is typing.Union:
        if text.lower() in ("", "none", "null"):
            return None
        kind = next(a for a in typing.get_args(kind) if a is not type(None))
    try:
        if kind is bool:
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return kind(text)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {text!r} as {kind.__name__}") from None


def parse_config(path):
    """Read a key=value run configuration; unknown keys are rejected."""
    hints = typing.get_type_hints(TrainConfig)
    paths, values = {}, {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key in PATH_KEYS:
                paths[key] = value or None
            elif key in hints:
                values[key] = _coerce(key, hints[key], value)
            else:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
    cfg = RunConfig(**paths, train=TrainConfig(**values))
    cfg.train.validate()
    return cfg


def _check_paths(cfg):
    for key in ("train_path", "dev_path", "model_out"):
        if not getattr(cfg, key):
            raise ConfigError(f"config is missing {key}")
    for key in ("train_path", "dev_path", "test_path", "embeddings_path"):
        value = getattr(cfg, key)
        if value and not os.path.isfile(value):
            raise ConfigError(f"{key}: no such file {value}")
    if cfg.aux_path:
        if "{split}" not in cfg.aux_path:
            raise ConfigError("aux_path must contain a {split} placeholder")
        splits = ["train", "dev"] + (["test"] if cfg.test_path else [])
        for split in splits:
            if not os.path.isfile(cfg.aux_path.format(split=split)):
                raise ConfigError(f"aux_path: no such file {cfg.aux_path.format(split=split)}")
    out_dir = os.path.dirname(os.path.abspath(cfg.model_out))
    if not os.path.isdir(out_dir):
        raise ConfigError(f"model_out directory does not exist: {out_dir}")


def _load_split(path, scheme, aux_pattern, split):
    sentences = data.read_conll(path)
    if any(s.labels is None for s in sentences):
        raise DataError(f"{path}: labelled data needs at least two columns")
    if scheme != "iob2":
        sentences = data.convert_scheme(sentences, scheme, "iob2")
    if aux_pattern:
        data.load_aux_vectors(aux_pattern.format(split=split), sentences)
    return sentences


def cmd_train(config_path, out=None):
    out = out or sys.stdout
    cfg = parse_config(config_path)
    _check_paths(cfg)
    tc = cfg.train
    train_set = _load_split(cfg.train_path, tc.scheme, cfg.aux_path, "train")
    dev_set = _load_split(cfg.dev_path, tc.scheme, cfg.aux_path, "dev")
    embeddings = None
    if cfg.embeddings_path:
        embeddings = data.read_embedding_file(cfg.embeddings_path, tc.word_dim)

    lines = []

    def log(line):
        lines.append(line)
        print(line, file=out, flush=True)

    try:
        checkpoint = train(tc, train_set, dev_set, embeddings, log=log)
        log(f"best epoch {checkpoint.epoch} dev_f1 {100 * checkpoint.dev_f1:.2f}")
        if cfg.test_path:
            test_set = _load_split(cfg.test_path, tc.scheme, cfg.aux_path, "test")
            checkpoint.model.prepare(test_set, with_labels=False)
            zcfg = ZoneoutConfig(tc.zc, tc.zh, "eval")
            rep = evaluate(checkpoint.model, test_set, zcfg)
            log(f"test p {100 * rep.precision:.2f} r {100 * rep.recall:.2f} "
                f"f1 {100 * rep.f1:.2f}")
        modelfile.save_model(cfg.model_out, checkpoint)
    finally:
        with open(cfg.model_out + ".log", "w", encoding="utf-8") as fh:
            fh.writelines(line + "\n" for line in lines)
    return EXIT_OK


def cmd_predict(model_path, input_path, output_path, aux_path=None):
    for p in (model_path, input_path):
        if not os.path.isfile(p):
            raise UsageError(f"no such file {p}")
    checkpoint = modelfile.load_model(model_path)
    sentences = data.read_conll(input_path)
    if aux_path:
        data.load_aux_vectors(aux_path, sentences)
    labels = predict(checkpoint, sentences)
    if checkpoint.config.scheme != "iob2":
        labels = [data.convert_labels(x, "iob2", checkpoint.config.scheme) for x in labels]
    data.write_conll(output_path, sentences, labels)
    return EXIT_OK


def _read_aligned(gold_path, *pred_paths):
    for p in (gold_path, *pred_paths):
        if not os.path.isfile(p):
            raise UsageError(f"no such file {p}")
    gold = data.read_conll(gold_path)
    preds = []
    for path in pred_paths:
        pred = data.read_conll(path)
        for k in range(max(len(gold), len(pred))):
            if (k >= len(gold) or k >= len(pred) or gold[k].tokens != pred[k].tokens
                    or gold[k].labels is None or pred[k].labels is None):
                raise DataError(f"{path}: sentence {k} does not align with {gold_path}")
        preds.append([s.labels for s in pred])
    return [s.labels for s in gold], preds


def cmd_eval(gold_path, pred_path, out=None):
    out = out or sys.stdout
    gold, (pred,) = _read_aligned(gold_path, pred_path)
    report = f1_score(gold, pred)
    print(report.format_text(), file=out)
    print(file=out)
    print(report.format_kv(), file=out)
    return EXIT_OK


def cmd_compare(gold_path, a_path, b_path, iterations=10000, seed=1, out=None):
    out = out or sys.stdout
    if iterations < 1:
        raise UsageError(f"--iters must be >= 1, got {iterations}")
    gold, (a, b) = _read_aligned(gold_path, a_path, b_path)
    res = randomization_test(gold, a, b, iterations, seed)
    print(f"f1_a={res.f1_a!r}", file=out)
    print(f"f1_b={res.f1_b!r}", file=out)
    print(f"delta={res.delta!r}", file=out)
    print(f"p={res.p_value!r}", file=out)
    print(f"iterations={res.iterations}", file=out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="nertagger", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("train", help="train a tagger from a config file")
    p.add_argument("config")
    p = sub.add_parser("predict", help="tag a CoNLL file")
    p.add_argument("model")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--aux", default=None, help="auxiliary vector file for the input")
    p = sub.add_parser("eval", help="entity-level P/R/F1 of predictions")
    p.add_argument("gold")
    p.add_argument("pred")
    p = sub.add_parser("compare", help="approximate randomization test between two systems")
    p.add_argument("gold")
    p.add_argument("pred_a")
    p.add_argument("pred_b")
    p.add_argument("--iters", type=int, default=10000)
    p.add_argument("--seed", type=int, default=1)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "train":
            return cmd_train(args.config)
        if args.command == "predict":
            return cmd_predict(args.model, args.input, args.output, args.aux)
        if args.command == "eval":
            return cmd_eval(args.gold, args.pred)
        return cmd_compare(args.gold, args.pred_a, args.pred_b, args.iters, args.seed)
    except (UsageError, ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
