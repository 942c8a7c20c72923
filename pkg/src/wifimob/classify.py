"""Activity classifiers: gain-ratio decision tree, Gaussian naive Bayes, random forest.

Class labels are handled internally as indices into ``LABELS``
(stationary=0, walking=1, running=2). Missing feature values are NaN.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import modelio
from .features import DEFAULT_CLASSIFIER_FEATURES, FeatureRecord
from .trace import LABELS, Activity

VARIANCE_FLOOR = 1e-9
# Gain ratios closer than this are treated as tied.
TIE_EPS = 1e-12

LABEL_INDEX = {lab: i for i, lab in enumerate(LABELS)}


class ArityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(0, len(self.feature_names))
        if X.ndim != 2:
            raise ValueError("X must be 2-d")
        y = np.array([LABEL_INDEX[Activity(v)] if not isinstance(v, (int, np.integer)) else int(v) for v in self.y], dtype=int)
        if len(y) != len(X):
            raise ValueError("X and y lengths differ")
        if len(y) and (y.min() < 0 or y.max() >= len(LABELS)):
            raise ValueError("labels must be stationary, walking or running")
        if X.shape[1] != len(self.feature_names):
            raise ValueError(f"X has {X.shape[1]} columns but {len(self.feature_names)} feature names")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self):
        return len(self.y)

    @property
    def arity(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.feature_names)

    @classmethod
    def from_records(cls, records: Sequence[FeatureRecord], names: Sequence[str] = DEFAULT_CLASSIFIER_FEATURES):
        """Labeled rows only; records without a classifiable label are dropped."""
        rows, labels = [], []
        for r in records:
            if r.label is None or r.label not in LABEL_INDEX:
                continue
            rows.append(r.vector(names))
            labels.append(LABEL_INDEX[r.label])
        X = np.array(rows, dtype=float).reshape(len(rows), len(names))
        return cls(X, np.array(labels, dtype=int), tuple(names))


def entropy(label_counts) -> float:
    """Shannon entropy in bits of a class-count vector."""
    c = np.asarray(label_counts, dtype=float)
    total = c.sum()
    if total <= 0:
        raise ValueError("entropy of an empty count vector")
    p = c[c > 0] / total
    return float(-(p * np.log2(p)).sum())


def _entropy_rows(counts: np.ndarray) -> np.ndarray:
    # Row-wise entropy of a (m, C) count matrix with positive row sums.
    tot = counts.sum(axis=1, keepdims=True)
    p = counts / tot
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=1)


def _feature_split(values: np.ndarray, y: np.ndarray, n_classes: int, min_leaf: int):
    """Best (gain_ratio, threshold) for one feature, or None."""
    known = ~np.isnan(values)
    v, yk = values[known], y[known]
    m = len(v)
    if m < 2:
        return None
    order = np.argsort(v, kind="stable")
    v, yk = v[order], yk[order]
    onehot = np.zeros((m, n_classes))
    onehot[np.arange(m), yk] = 1.0
    cum = np.cumsum(onehot, axis=0)
    # Candidate cut after position i when v[i] < v[i+1].
    cut = np.nonzero(v[:-1] < v[1:])[0]
    if cut.size == 0:
        return None
    n_left = cut + 1.0
    n_right = m - n_left
    ok = (n_left >= min_leaf) & (n_right >= min_leaf)
    cut, n_left, n_right = cut[ok], n_left[ok], n_right[ok]
    if cut.size == 0:
        return None
    left = cum[cut]
    right = cum[-1] - left
    parent = entropy(cum[-1])
    children = (n_left * _entropy_rows(left) + n_right * _entropy_rows(right)) / m
    gain = parent - children
    pl, pr = n_left / m, n_right / m
    split_info = -(pl * np.log2(pl) + pr * np.log2(pr))
    ratio = gain / split_info
    ratio[gain <= TIE_EPS] = -np.inf
    best = ratio.max()
    if not np.isfinite(best):
        return None
    i = int(np.nonzero(ratio >= best - TIE_EPS)[0][0])
    threshold = (v[cut[i]] + v[cut[i] + 1]) / 2.0
    return float(ratio[i]), float(threshold)


def _best_split(X, y, features, n_classes, min_leaf):
    found = []
    for f in features:
        r = _feature_split(X[:, f], y, n_classes, min_leaf)
        if r is not None:
            found.append((f, r[1], r[0]))
    if not found:
        return None
    top = max(g for _, _, g in found)
    return min((f, t, g) for f, t, g in found if g >= top - TIE_EPS)


def best_split(dataset: Dataset, candidate_features: Sequence[int] | None = None, min_leaf: int = 1):
    """(feature, threshold, gain_ratio) maximising gain ratio, or None.

    Thresholds are midpoints between consecutive distinct values. Rows
    missing the feature are left out of that feature's evaluation. Ties
    resolve to the lower feature index, then the lower threshold.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    feats = range(dataset.arity) if candidate_features is None else sorted(candidate_features)
    return _best_split(dataset.X, dataset.y, feats, len(LABELS), min_leaf)


# -- tree ---------------------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    label: int
    counts: tuple[int, ...]


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "Node"
    right: "Node"
    label: int
    counts: tuple[int, ...]
    missing_left: bool


Node = Union[Leaf, Split]


def _majority(counts) -> int:
    # First maximum, i.e. lowest label index on ties.
    return int(np.argmax(counts))


@dataclass(frozen=True)
class TreeConfig:
    min_leaf: int = 5
    max_depth: int = 20

    def __post_init__(self):
        if self.min_leaf < 1 or self.max_depth < 0:
            raise ValueError("min_leaf must be >= 1 and max_depth >= 0")


@dataclass(frozen=True)
class TreeModel:
    root: Node
    feature_names: tuple[str, ...]

    def depth(self) -> int:
        def d(n):
            return 0 if isinstance(n, Leaf) else 1 + max(d(n.left), d(n.right))

        return d(self.root)


def _grow(X, y, rows, depth, config: TreeConfig, pick_features) -> Node:
    counts = np.bincount(y[rows], minlength=len(LABELS))
    label = _majority(counts)
    tcounts = tuple(int(c) for c in counts)
    if (
        (counts > 0).sum() <= 1
        or len(rows) < 2 * config.min_leaf
        or depth >= config.max_depth
    ):
        return Leaf(label, tcounts)
    sub_X, sub_y = X[rows], y[rows]
    split = _best_split(sub_X, sub_y, pick_features(), len(LABELS), config.min_leaf)
    if split is None:
        return Leaf(label, tcounts)
    f, thr, _ = split
    col = sub_X[:, f]
    known = ~np.isnan(col)
    goes_left = known & (col <= thr)
    n_left, n_right = goes_left.sum(), (known & ~goes_left).sum()
    missing_left = bool(n_left >= n_right)
    if missing_left:
        goes_left |= ~known
    left_rows, right_rows = rows[goes_left], rows[~goes_left]
    return Split(
        feature=int(f),
        threshold=float(thr),
        left=_grow(X, y, left_rows, depth + 1, config, pick_features),
        right=_grow(X, y, right_rows, depth + 1, config, pick_features),
        label=label,
        counts=tcounts,
        missing_left=missing_left,
    )


def train_tree(dataset: Dataset, config: TreeConfig = TreeConfig()) -> TreeModel:
    if len(dataset) == 0:
        raise ValueError("cannot train a tree on an empty dataset")
    all_features = list(range(dataset.arity))
    root = _grow(dataset.X, dataset.y, np.arange(len(dataset)), 0, config, lambda: all_features)
    return TreeModel(root, dataset.feature_names)


def _tree_leaf(root: Node, row: np.ndarray) -> Leaf:
    node = root
    while isinstance(node, Split):
        v = row[node.feature]
        if math.isnan(v):
            node = node.left if node.missing_left else node.right
        else:
            node = node.left if v <= node.threshold else node.right
    return node


# -- naive Bayes --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NaiveBayesModel:
    classes: tuple[int, ...]
    priors: np.ndarray  # per class
    means: np.ndarray  # (class, feature)
    variances: np.ndarray  # (class, feature)
    feature_names: tuple[str, ...]

    def log_scores(self, row: np.ndarray) -> np.ndarray:
        """Unnormalised log posterior per class; missing features skipped."""
        use = ~np.isnan(row) & ~np.isnan(self.means).any(axis=0)
        x = row[use]
        mu, var = self.means[:, use], self.variances[:, use]
        ll = -0.5 * np.log(2 * math.pi * var) - (x - mu) ** 2 / (2 * var)
        return np.log(self.priors) + ll.sum(axis=1)


def train_naive_bayes(dataset: Dataset, classes: Sequence[Activity] | None = None) -> NaiveBayesModel:
    """Laplace-smoothed priors and per-class Gaussian feature models.

    ``classes`` defaults to the labels present in the dataset. Variances are
    population variances, floored at 1e-9. A feature with no observed value
    in some class is ignored at prediction time.
    """
    if len(dataset) == 0:
        raise ValueError("cannot train naive Bayes on an empty dataset")
    if classes is None:
        cls = tuple(sorted(set(int(c) for c in dataset.y)))
    else:
        cls = tuple(sorted(LABEL_INDEX[Activity(c)] for c in classes))
    n, k = len(dataset), len(cls)
    priors, means, variances = [], [], []
    for c in cls:
        Xc = dataset.X[dataset.y == c]
        if len(Xc) == 0:
            raise ValueError(f"class {LABELS[c].value!r} has no training rows")
        priors.append((len(Xc) + 1) / (n + k))
        mu, var = [], []
        for j in range(dataset.arity):
            col = Xc[:, j]
            col = col[~np.isnan(col)]
            if col.size == 0:
                mu.append(math.nan)
                var.append(math.nan)
                continue
            m = float(col.mean())
            mu.append(m)
            var.append(max(float(((col - m) ** 2).mean()), VARIANCE_FLOOR))
        means.append(mu)
        variances.append(var)
    return NaiveBayesModel(
        classes=cls,
        priors=np.array(priors),
        means=np.array(means).reshape(k, dataset.arity),
        variances=np.array(variances).reshape(k, dataset.arity),
        feature_names=dataset.feature_names,
    )


# -- forest -------------------------------------------------------------------


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    features_per_split: int | None = None  # None -> ceil(sqrt(arity))
    seed: int = 0
    bootstrap: bool = True
    min_leaf: int = 1
    max_depth: int = 20


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[TreeModel, ...]
    features_per_split: int
    seed: int
    bootstrap: bool
    feature_names: tuple[str, ...]
    tree_seeds: tuple[tuple[int, int], ...] = field(default=())

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def bootstrap_indices(n: int, seed: int, tree_index: int) -> np.ndarray:
    """n draws with replacement from the stream seeded by (seed, tree_index)."""
    return np.random.default_rng([seed, tree_index]).integers(0, n, size=n)


def _forest_tree(dataset: Dataset, config: ForestConfig, k: int, i: int) -> TreeModel:
    rng = np.random.default_rng([config.seed, i])
    n = len(dataset)
    rows = rng.integers(0, n, size=n) if config.bootstrap else np.arange(n)
    arity = dataset.arity
    if k >= arity:
        pick = lambda: list(range(arity))  # noqa: E731
    else:
        pick = lambda: sorted(int(f) for f in rng.choice(arity, size=k, replace=False))  # noqa: E731
    tc = TreeConfig(config.min_leaf, config.max_depth)
    sub = dataset.subset(rows)
    root = _grow(sub.X, sub.y, np.arange(n), 0, tc, pick)
    return TreeModel(root, dataset.feature_names)


def train_forest(dataset: Dataset, config: ForestConfig = ForestConfig(), n_jobs: int = 1) -> ForestModel:
    """Bagged trees with per-split feature sampling.

    Each tree draws its bootstrap sample and split candidates from its own
    generator seeded by ``(seed, tree_index)``, so the model does not depend
    on ``n_jobs``.
    """
    if len(dataset) == 0:
        raise ValueError("cannot train a forest on an empty dataset")
    if config.n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    k = config.features_per_split or math.ceil(math.sqrt(dataset.arity))
    if not 1 <= k <= dataset.arity:
        raise ValueError(f"features_per_split must be in [1, {dataset.arity}], got {k}")
    idx = range(config.n_trees)
    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            trees = list(pool.map(lambda i: _forest_tree(dataset, config, k, i), idx))
    else:
        trees = [_forest_tree(dataset, config, k, i) for i in idx]
    return ForestModel(
        trees=tuple(trees),
        features_per_split=k,
        seed=config.seed,
        bootstrap=config.bootstrap,
        feature_names=dataset.feature_names,
        tree_seeds=tuple((config.seed, i) for i in idx),
    )


# -- prediction ---------------------------------------------------------------

Model = Union[TreeModel, NaiveBayesModel, ForestModel]


def _scores_dict(vec) -> dict[Activity, float]:
    return {lab: float(vec[i]) for i, lab in enumerate(LABELS)}


def predict_label(model: Model, row) -> tuple[Activity, dict[Activity, float]]:
    """Predicted label and per-class scores (summing to 1) for one feature row."""
    row = np.asarray(row, dtype=float)
    if row.ndim != 1 or len(row) != len(model.feature_names):
        raise ArityError(
            f"row has {row.size} features but the model expects {len(model.feature_names)} "
            f"({', '.join(model.feature_names)})"
        )
    if isinstance(model, TreeModel):
        leaf = _tree_leaf(model.root, row)
        c = np.array(leaf.counts, dtype=float)
        return LABELS[leaf.label], _scores_dict(c / c.sum())
    if isinstance(model, NaiveBayesModel):
        logs = model.log_scores(row)
        post = np.exp(logs - logs.max())
        post /= post.sum()
        full = np.zeros(len(LABELS))
        full[list(model.classes)] = post
        best = model.classes[int(np.argmax(logs))]
        return LABELS[best], _scores_dict(full)
    if isinstance(model, ForestModel):
        votes = np.zeros(len(LABELS))
        mass = np.zeros(len(LABELS))
        for t in model.trees:
            leaf = _tree_leaf(t.root, row)
            votes[leaf.label] += 1
            mass += np.array(leaf.counts, dtype=float)
        tied = np.nonzero(votes == votes.max())[0]
        best = int(tied[np.argmax(mass[tied])])
        return LABELS[best], _scores_dict(votes / votes.sum())
    raise TypeError(f"not a classifier model: {type(model).__name__}")


def predict_many(model: Model, X) -> list[Activity]:
    return [predict_label(model, row)[0] for row in np.asarray(X, dtype=float)]


# -- serialization ------------------------------------------------------------


def _node_to_dict(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"leaf": LABELS[node.label].value, "counts": list(node.counts)}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "label": LABELS[node.label].value,
        "counts": list(node.counts),
        "missing": "left" if node.missing_left else "right",
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(d: dict) -> Node:
    if "leaf" in d:
        return Leaf(LABEL_INDEX[Activity(d["leaf"])], tuple(d["counts"]))
    return Split(
        feature=int(d["feature"]),
        threshold=float(d["threshold"]),
        left=_node_from_dict(d["left"]),
        right=_node_from_dict(d["right"]),
        label=LABEL_INDEX[Activity(d["label"])],
        counts=tuple(d["counts"]),
        missing_left=d["missing"] == "left",
    )


KIND = {TreeModel: "tree", NaiveBayesModel: "nb", ForestModel: "forest"}


def to_payload(model: Model) -> dict:
    if isinstance(model, TreeModel):
        return {"feature_names": list(model.feature_names), "root": _node_to_dict(model.root)}
    if isinstance(model, NaiveBayesModel):
        return {
            "feature_names": list(model.feature_names),
            "classes": [LABELS[c].value for c in model.classes],
            "priors": model.priors.tolist(),
            # NaN marks a feature unobserved in a class; JSON has no NaN.
            "means": [[None if math.isnan(v) else v for v in r] for r in model.means.tolist()],
            "variances": [[None if math.isnan(v) else v for v in r] for r in model.variances.tolist()],
        }
    if isinstance(model, ForestModel):
        return {
            "feature_names": list(model.feature_names),
            "features_per_split": model.features_per_split,
            "seed": model.seed,
            "bootstrap": model.bootstrap,
            "tree_seeds": [list(s) for s in model.tree_seeds],
            "trees": [_node_to_dict(t.root) for t in model.trees],
        }
    raise TypeError(f"not a classifier model: {type(model).__name__}")


def from_payload(kind: str, p: dict) -> Model:
    names = tuple(p["feature_names"])
    if kind == "tree":
        return TreeModel(_node_from_dict(p["root"]), names)
    if kind == "nb":
        k = len(p["classes"])

        def arr(rows):
            return np.array([[math.nan if v is None else v for v in r] for r in rows], dtype=float).reshape(k, len(names))

        return NaiveBayesModel(
            classes=tuple(LABEL_INDEX[Activity(c)] for c in p["classes"]),
            priors=np.array(p["priors"], dtype=float),
            means=arr(p["means"]),
            variances=arr(p["variances"]),
            feature_names=names,
        )
    if kind == "forest":
        return ForestModel(
            trees=tuple(TreeModel(_node_from_dict(t), names) for t in p["trees"]),
            features_per_split=int(p["features_per_split"]),
            seed=int(p["seed"]),
            bootstrap=bool(p["bootstrap"]),
            feature_names=names,
            tree_seeds=tuple(tuple(s) for s in p["tree_seeds"]),
        )
    raise modelio.ModelFormatError(f"unknown classifier kind {kind!r}")


def dumps_model(model: Model, config: dict | None = None) -> str:
    return modelio.dumps(KIND[type(model)], to_payload(model), config)


def loads_model(text: str) -> Model:
    kind, payload, _ = modelio.loads(text)
    return from_payload(kind, payload)
