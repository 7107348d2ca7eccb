"""Random decision forest: bagged Gini trees over random feature subsets."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field

import numpy as np

from .features import FeatureVector, SchemaMismatch, schema_hash

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 25
    min_samples_leaf: int = 5
    feature_subset_size: int = 20
    max_categories: int = 15  # kept for config fidelity; every feature is numeric
    seed: int = 0

    def validate(self) -> None:
        for name in ("n_trees", "max_depth", "min_samples_leaf", "feature_subset_size", "max_categories"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class Node:
    feature: int = -1
    threshold: float = 0.0
    left: "Node | None" = None
    right: "Node | None" = None
    cls: int = -1
    n_samples: int = field(default=0, compare=False)

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def walk(self, depth: int = 0):
        yield self, depth
        if not self.is_leaf:
            yield from self.left.walk(depth + 1)
            yield from self.right.walk(depth + 1)

    def predict(self, x) -> int:
        node = self
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.cls


@dataclass
class ForestModel:
    params: ForestParams
    schema: tuple
    class_labels: tuple
    trees: list
    oob_accuracy: float
    mode: str = "serial"
    bootstrap: list | None = field(default=None, compare=False, repr=False)

    @property
    def schema_hash(self) -> str:
        return schema_hash(self.schema)

    def depth(self) -> int:
        return max(d for t in self.trees for _, d in t.walk())


def _tree_rng(seed: int, index: int) -> random.Random:
    # one stream per tree so trees can be grown in any order
    return random.Random(f"metacc-forest:{seed}:{index}")


def _majority(counts) -> int:
    # ties go to the lowest class index
    return int(np.argmax(counts))


def _best_split(X, y, idx, features, n_classes, min_leaf):
    """Lowest weighted Gini over candidate features; thresholds are value midpoints."""
    n = len(idx)
    onehot = np.zeros((n, n_classes), dtype=np.int64)
    onehot[np.arange(n), y[idx]] = 1
    total = onehot.sum(axis=0)
    parent = n - (total ** 2).sum() / n
    best = None  # (impurity, feature, threshold)
    for f in features:
        col = X[idx, f]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        left = np.cumsum(onehot[order], axis=0)[:-1]      # split after position i
        nl = np.arange(1, n)
        nr = n - nl
        ok = (xs[:-1] < xs[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
        if not ok.any():
            continue
        right = total - left
        imp = (nl - (left ** 2).sum(axis=1) / nl) + (nr - (right ** 2).sum(axis=1) / nr)
        imp = np.where(ok, imp, np.inf)
        i = int(np.argmin(imp))
        if best is None or imp[i] < best[0]:
            best = (float(imp[i]), f, float((xs[i] + xs[i + 1]) / 2.0))
    if best is None or best[0] >= parent - 1e-12:
        return None
    return best[1], best[2]


def _grow(X, y, idx, depth, params, m, n_classes, rng) -> Node:
    counts = np.bincount(y[idx], minlength=n_classes)
    leaf = Node(cls=_majority(counts), n_samples=len(idx))
    if depth >= params.max_depth or np.count_nonzero(counts) <= 1 or len(idx) < 2 * params.min_samples_leaf:
        return leaf
    features = rng.sample(range(X.shape[1]), m)
    split = _best_split(X, y, idx, features, n_classes, params.min_samples_leaf)
    if split is None:
        return leaf
    f, thr = split
    mask = X[idx, f] <= thr
    return Node(f, thr,
                _grow(X, y, idx[mask], depth + 1, params, m, n_classes, rng),
                _grow(X, y, idx[~mask], depth + 1, params, m, n_classes, rng),
                n_samples=len(idx))


def train(dataset, params: ForestParams | None = None, schema=None, class_labels=None,
          mode: str = "serial", debug: bool = False, bootstrap=None) -> ForestModel:
    """Train on TrainingInstances; deterministic for a given seed.

    ``schema`` is the ordered event list the feature vectors were built from.
    ``bootstrap`` replaces the drawn sample indices (one list per tree); with
    ``debug`` the indices used are kept on the model.
    """
    params = params or ForestParams()
    if schema is None:
        raise ValueError("the feature schema is required")
    params.validate()
    if not dataset:
        raise ValueError("empty dataset")
    k = len(dataset[0].features.values)
    h = dataset[0].features.schema_hash
    if any(len(t.features.values) != k or t.features.schema_hash != h for t in dataset):
        raise SchemaMismatch("instances disagree on the feature schema")
    if schema_hash(schema) != h:
        raise SchemaMismatch("schema does not match the instances")
    labels = tuple(sorted(class_labels or {t.label for t in dataset}))
    unknown = {t.label for t in dataset} - set(labels)
    if unknown:
        raise ValueError(f"labels {sorted(unknown)} not among class labels")
    X = np.array([t.features.floats() for t in dataset], dtype=float).reshape(len(dataset), k)
    y = np.array([labels.index(t.label) for t in dataset], dtype=np.int64)
    n = len(dataset)
    m = params.feature_subset_size
    if m > k:
        log.warning("feature subset %d exceeds the %d features; using %d", m, k, k)
        m = k
    if len(set(y.tolist())) < 2:
        log.warning("single-class dataset: every tree is a constant predictor")

    trees, boots = [], []
    votes = np.zeros((n, len(labels)), dtype=np.int64)
    for t in range(params.n_trees):
        rng = _tree_rng(params.seed, t)
        boot = [rng.randrange(n) for _ in range(n)]
        if bootstrap is not None:
            boot = list(bootstrap[t])
        idx = np.array(sorted(boot), dtype=np.int64)
        if k:
            root = _grow(X, y, idx, 0, params, m, len(labels), rng)
        else:
            root = Node(cls=_majority(np.bincount(y[idx], minlength=len(labels))), n_samples=n)
        trees.append(root)
        boots.append(boot)
        inbag = set(boot)
        for i in range(n):
            if i not in inbag:
                votes[i, root.predict(X[i])] += 1

    if len(set(y.tolist())) < 2:
        oob = 1.0
    else:
        voted = votes.sum(axis=1) > 0
        if not voted.any():
            log.warning("no out-of-bag instances; OOB accuracy unavailable")
            oob = 0.0
        else:
            pred = np.argmax(votes[voted], axis=1)
            oob = float((pred == y[voted]).mean())
    return ForestModel(params, tuple(schema), labels, trees, oob, mode, boots if debug else None)


def vote(model: ForestModel, values) -> list[int]:
    counts = [0] * len(model.class_labels)
    for t in model.trees:
        counts[t.predict(values)] += 1
    return counts


def predict(model: ForestModel, fv: FeatureVector) -> str:
    if fv.schema_hash != model.schema_hash or len(fv.values) != len(model.schema):
        raise SchemaMismatch(f"{fv.loop_id}: feature schema differs from the model's")
    counts = vote(model, fv.floats())
    # ties go to the earlier class label
    return model.class_labels[max(range(len(counts)), key=lambda i: (counts[i], -i))]
