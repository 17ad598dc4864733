"""Binary model files.

Layout::

    NERTAGGER-MODEL <version> <header JSON>\\n
    <parameter blocks>            little-endian float64, row-major, in the
                                  order listed under "params" in the header
    <sha256 digest>               32 bytes over everything before it

The header carries the vocabularies, label set, dimensions, the training
config and the dev score.  JSON keys are sorted, so saving a loaded model
reproduces the file byte for byte.
"""
import hashlib
import json

import numpy as np

from .data import LabelSet, Vocab
from .errors import CompatibilityError
from .trainer import Checkpoint, Tagger, TrainConfig

MAGIC = b"NERTAGGER-MODEL"
VERSION = 1
_DIGEST = 32


def dumps(checkpoint):
    model = checkpoint.model
    params = model.parameters()
    header = {
        "aux_dim": model.aux_dim,
        "chars": model.chars.itos,
        "config": checkpoint.config.to_dict(),
        "dev_f1": checkpoint.dev_f1,
        "epoch": checkpoint.epoch,
        "labels": model.labels.itos,
        "params": [[name, list(p.shape)] for name, p in params],
        "words": model.words.itos,
        "words_lowercase": model.words.lowercase,
        "words_normalize_digits": model.words.normalize_digits,
    }
    text = json.dumps(header, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    body = [MAGIC + b" " + str(VERSION).encode() + b" " + text.encode("utf-8") + b"\n"]
    body += [np.ascontiguousarray(p.data, dtype="<f8").tobytes() for _, p in params]
    payload = b"".join(body)
    return payload + hashlib.sha256(payload).digest()


def save_model(path, checkpoint):
    with open(path, "wb") as fh:
        fh.write(dumps(checkpoint))


def loads(blob):
    if len(blob) < _DIGEST or hashlib.sha256(blob[:-_DIGEST]).digest() != blob[-_DIGEST:]:
        raise CompatibilityError("model file checksum mismatch (truncated or corrupted)")
    payload = blob[:-_DIGEST]
    end = payload.find(b"\n")
    first = payload[:end].split(b" ", 2)
    if end < 0 or len(first) != 3 or first[0] != MAGIC:
        raise CompatibilityError("not a nertagger model file")
    if first[1] != str(VERSION).encode():
        raise CompatibilityError(
            f"model format version {first[1].decode(errors='replace')} is not supported "
            f"(expected {VERSION})")
    header = json.loads(first[2].decode("utf-8"))

    config = TrainConfig.from_dict(header["config"])
    words = Vocab(header["words_lowercase"], header["words_normalize_digits"],
                  list(header["words"]))
    chars = Vocab(False, False, list(header["chars"]))
    labels = LabelSet(header["labels"][1:])
    if labels.itos != header["labels"]:
        raise CompatibilityError("label set in model header is malformed")
    model = Tagger.init(config, words, chars, labels, np.random.default_rng(0),
                        aux_dim=header["aux_dim"])

    arrays = []
    offset = end + 1
    expected = model.parameters()
    if [n for n, _ in expected] != [n for n, _ in header["params"]]:
        raise CompatibilityError("parameter layout in model file does not match this version")
    for name, shape in header["params"]:
        count = int(np.prod(shape))
        chunk = payload[offset:offset + 8 * count]
        if len(chunk) != 8 * count:
            raise CompatibilityError(f"model file ends inside parameter {name}")
        arrays.append(np.frombuffer(chunk, dtype="<f8").reshape(shape).astype(np.float64))
        offset += 8 * count
    if offset != len(payload):
        raise CompatibilityError("trailing bytes after the last parameter block")
    model.load_state(arrays)
    return Checkpoint(model, config, header["dev_f1"], header["epoch"])


def load_model(path):
    with open(path, "rb") as fh:
        return loads(fh.read())
