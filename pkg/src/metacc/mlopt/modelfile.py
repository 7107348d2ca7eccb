"""Line-oriented model file with a trailing checksum."""

from __future__ import annotations

import hashlib
from pathlib import Path

from .forest import ForestModel, ForestParams, Node

MAGIC = "MCMODEL"
VERSION = 1
_PARAM_NAMES = ("n_trees", "max_depth", "min_samples_leaf", "feature_subset_size", "max_categories", "seed")


class CorruptModel(ValueError):
    pass


class VersionMismatch(ValueError):
    pass


def _tree_lines(node: Node, out: list) -> None:
    if node.is_leaf:
        out.append(f"L {node.cls}")
        return
    out.append(f"N {node.feature} {node.threshold!r}")
    _tree_lines(node.left, out)
    _tree_lines(node.right, out)


def dumps(model: ForestModel) -> str:
    p = model.params
    lines = [f"{MAGIC} {VERSION}", f"mode {model.mode}",
             "schema " + " ".join(model.schema),
             "classes " + " ".join(model.class_labels),
             "params " + " ".join(f"{k}={getattr(p, k)}" for k in _PARAM_NAMES),
             f"oob {model.oob_accuracy!r}"]
    for i, tree in enumerate(model.trees):
        body: list = []
        _tree_lines(tree, body)
        lines.append(f"T {i} {len(body)}")
        lines.extend(body)
    text = "\n".join(lines) + "\n"
    return text + f"checksum {hashlib.sha256(text.encode()).hexdigest()}\n"


def save_model(model: ForestModel, path) -> Path:
    path = Path(path)
    path.write_text(dumps(model))
    return path


def _field(line: str, key: str) -> str:
    word, _, rest = line.partition(" ")
    if word != key:
        raise CorruptModel(f"expected {key!r} line")
    return rest


def loads(text: str) -> ForestModel:
    body, sep, tail = text.rpartition("checksum ")
    if not sep or not tail.endswith("\n") or tail.count("\n") != 1 or (body and not body.endswith("\n")):
        raise CorruptModel("missing checksum")
    if hashlib.sha256(body.encode()).hexdigest() != tail[:-1]:
        raise CorruptModel("checksum mismatch")
    lines = body.splitlines()
    head = lines[0].split(" ") if lines else []
    if len(head) != 2 or head[0] != MAGIC or not head[1].isdigit():
        raise CorruptModel("not a model file")
    if int(head[1]) != VERSION:
        raise VersionMismatch(f"model format {head[1]}, expected {VERSION}")
    try:
        mode = _field(lines[1], "mode")
        schema = tuple(_field(lines[2], "schema").split())
        classes = tuple(_field(lines[3], "classes").split())
        kv = dict(item.split("=", 1) for item in _field(lines[4], "params").split())
        params = ForestParams(**{k: int(kv[k]) for k in _PARAM_NAMES})
        oob = float(_field(lines[5], "oob"))
        pos = 6
        trees = []

        def node() -> Node:
            nonlocal pos
            parts = lines[pos].split(" ")
            pos += 1
            if parts[0] == "L" and len(parts) == 2:
                cls = int(parts[1])
                if not 0 <= cls < len(classes):
                    raise CorruptModel("class index out of range")
                return Node(cls=cls)
            if parts[0] == "N" and len(parts) == 3:
                feat = int(parts[1])
                if not 0 <= feat < len(schema):
                    raise CorruptModel("feature index out of range")
                thr = float(parts[2])
                left = node()
                return Node(feat, thr, left, node())
            raise CorruptModel(f"bad node line {pos}")

        while pos < len(lines):
            t, i, count = lines[pos].split(" ")
            if t != "T" or int(i) != len(trees):
                raise CorruptModel("bad tree header")
            pos += 1
            start = pos
            trees.append(node())
            if pos - start != int(count):
                raise CorruptModel("tree node count mismatch")
    except CorruptModel:
        raise
    except (IndexError, KeyError, ValueError, TypeError, RecursionError) as exc:
        raise CorruptModel(f"malformed model: {exc}") from None
    if len(trees) != params.n_trees:
        raise CorruptModel("tree count mismatch")
    return ForestModel(params, schema, classes, trees, oob, mode)


def load_model(path) -> ForestModel:
    try:
        text = Path(path).read_text()
    except UnicodeDecodeError:
        raise CorruptModel("not a text model file") from None
    return loads(text)
