"""Missing-aware gradient-boosted regression trees for unit price.

One model per property type. Trees grow leaf-wise (best split first) on
squared-error gradients of the, by default, log-transformed target, with
histogram-binned split search. Every split carries a default branch for
missing values: when the node contains missing rows the branch is the
gradient-optimal side, otherwise it deterministically defaults to the left
child (the same behavior the popular histogram boosters exhibit for values
never seen missing in training). Categorical features split on label
subsets over the corpus's most frequent labels, the remainder pooled as
"other".

Training is sequential and fully deterministic for fixed inputs; histogram
construction could be parallelized across features, but any such variant
must reproduce the sequential result bit for bit. Trained models are
immutable and safe for concurrent prediction.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .domain import (
    Categorical,
    FeatureKind,
    FeatureSchema,
    Numeric,
    Property,
    PropertyType,
    SchemaMismatchError,
    Temporal,
    is_missing,
)
from .ingest import Dataset

MODEL_FORMAT_VERSION = 1
MAX_CATEGORIES = 32      # most frequent labels kept per feature; rest pool to "other"
_MIN_GAIN = 1e-12

NUMERIC_SPLIT = 0
CATEGORICAL_SPLIT = 1


class TrainingError(Exception):
    pass


@dataclass(frozen=True)
class TrainParams:
    num_trees: int = 200
    max_leaves: int = 31
    min_samples_leaf: int = 20
    learning_rate: float = 0.05
    feature_histogram_bins: int = 64
    seed: int = 0
    # reserved for stochastic extensions (row/column subsampling); training
    # is currently fully deterministic regardless of seed
    target_transform: str = "log"

    def __post_init__(self):
        if min(self.num_trees, self.max_leaves, self.min_samples_leaf,
               self.feature_histogram_bins) < 1:
            raise ValueError("tree-shape parameters must be positive")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.target_transform not in ("identity", "log"):
            raise ValueError(f"unknown target_transform {self.target_transform!r}")


@dataclass(frozen=True)
class ModelFeature:
    """How one schema feature enters the model matrix (one column each)."""

    name: str
    kind: str                             # numeric | categorical | temporal
    categories: tuple[str, ...] = ()      # categorical vocabulary, most frequent first

    @property
    def other_code(self) -> int:
        return len(self.categories)


def build_model_features(schema: FeatureSchema, stats) -> tuple[ModelFeature, ...]:
    out = []
    for decl in schema:
        if decl.kind is FeatureKind.CATEGORICAL:
            freq = stats.categorical[decl.name].frequencies
            top = sorted(freq, key=lambda lbl: (-freq[lbl], lbl))[:MAX_CATEGORIES]
            out.append(ModelFeature(decl.name, "categorical", tuple(top)))
        else:
            out.append(ModelFeature(decl.name, decl.kind.value))
    return tuple(out)


def encode_value(mf: ModelFeature, v) -> float:
    if is_missing(v):
        return math.nan
    if mf.kind == "categorical":
        if not isinstance(v, Categorical):
            return math.nan
        try:
            return float(mf.categories.index(v.label))
        except ValueError:
            return float(mf.other_code)
    if isinstance(v, Numeric):
        return v.value
    if isinstance(v, Temporal):
        return v.value
    return math.nan


def encode_properties(properties: Sequence[Property],
                      features: Sequence[ModelFeature]) -> np.ndarray:
    X = np.empty((len(properties), len(features)))
    for i, p in enumerate(properties):
        for j, mf in enumerate(features):
            X[i, j] = encode_value(mf, p.feature(mf.name))
    return X


# ---------------------------------------------------------------------------
# Trees


@dataclass
class Tree:
    """Flattened binary tree. ``feature[i] < 0`` marks node i as a leaf."""

    feature: np.ndarray       # int32
    kind: np.ndarray          # int8, NUMERIC_SPLIT or CATEGORICAL_SPLIT
    threshold: np.ndarray     # float64; numeric rule is value <= threshold
    cat_mask: np.ndarray      # uint64 bitset of category codes routed left
    default_left: np.ndarray  # bool, branch taken by missing values
    left: np.ndarray          # int32
    right: np.ndarray         # int32
    value: np.ndarray         # float64, leaf output
    count: np.ndarray         # int32, training rows that reached the node

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.zeros(X.shape[0])
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            nid, rows = stack.pop()
            if rows.size == 0:
                continue
            if self.feature[nid] < 0:
                out[rows] = self.value[nid]
                continue
            col = X[rows, self.feature[nid]]
            missing = np.isnan(col)
            if self.kind[nid] == NUMERIC_SPLIT:
                with np.errstate(invalid="ignore"):
                    go_left = col <= self.threshold[nid]
            else:
                codes = np.where(missing, 0.0, col).astype(np.uint64)
                go_left = (np.right_shift(self.cat_mask[nid], codes)
                           & np.uint64(1)).astype(bool)
            go_left = np.where(missing, self.default_left[nid], go_left)
            stack.append((int(self.left[nid]), rows[go_left]))
            stack.append((int(self.right[nid]), rows[~go_left]))
        return out

    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.feature < 0))


@dataclass(frozen=True)
class GbdtModel:
    """Additive ensemble: inverse_transform(base_score + lr * sum of trees)."""

    property_type: PropertyType
    schema_hash: str
    base_score: float
    learning_rate: float
    target_transform: str
    features: tuple[ModelFeature, ...]
    trees: tuple[Tree, ...]
    params: TrainParams
    train_loss: tuple[float, ...]   # squared error on the transform scale, per tree

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        raw = np.full(X.shape[0], self.base_score)
        for tree in self.trees:
            raw += self.learning_rate * tree.predict(X)
        if self.target_transform == "log":
            return np.exp(raw)
        return raw

    def predict_properties(self, properties: Sequence[Property]) -> np.ndarray:
        return self.predict_matrix(encode_properties(properties, self.features))


def predict(model: GbdtModel, p: Property, schema: FeatureSchema | None = None) -> float:
    """Unit price for one property; missing features route via default branches."""
    if schema is not None and schema.hash() != model.schema_hash:
        raise SchemaMismatchError("model was trained under a different schema")
    return float(model.predict_properties([p])[0])


# ---------------------------------------------------------------------------
# Training


class _Binning:
    """Per-feature histogram codes. Missing maps to the extra bin nbins[j]."""

    def __init__(self, X: np.ndarray, features: Sequence[ModelFeature], bins: int):
        n, d = X.shape
        self.codes = np.zeros((n, d), dtype=np.uint8)
        self.nbins = np.zeros(d, dtype=np.int64)
        self.edges: list[np.ndarray | None] = []
        for j, mf in enumerate(features):
            col = X[:, j]
            missing = np.isnan(col)
            if mf.kind == "categorical":
                nb = mf.other_code + 1
                self.codes[:, j] = np.where(missing, nb, col).astype(np.uint8)
                self.edges.append(None)
            else:
                observed = col[~missing]
                if observed.size:
                    qs = np.linspace(0.0, 1.0, bins + 1)[1:-1]
                    e = np.unique(np.quantile(observed, qs))
                else:
                    e = np.empty(0)
                nb = e.size + 1
                idx = np.searchsorted(e, col, side="left")
                self.codes[:, j] = np.where(missing, nb, idx).astype(np.uint8)
                self.edges.append(e)
            self.nbins[j] = nb


@dataclass(frozen=True)
class _Split:
    gain: float
    feature: int
    kind: int
    bin_t: int                     # numeric: bins < bin_t go left
    left_codes: tuple[int, ...]    # categorical codes routed left
    threshold: float
    default_left: bool


def _best_split(rows: np.ndarray, g: np.ndarray, binning: _Binning,
                features: Sequence[ModelFeature], min_leaf: int) -> _Split | None:
    """Exact histogram scan; deterministic tie-breaks (first feature, first
    threshold, missing-left) so training is reproducible."""
    g_rows = g[rows]
    G = float(g_rows.sum())
    C = rows.size
    parent = G * G / C
    best: _Split | None = None
    for j in range(len(features)):
        nb = int(binning.nbins[j])
        cj = binning.codes[rows, j]
        gh = np.bincount(cj, weights=g_rows, minlength=nb + 1)
        ch = np.bincount(cj, minlength=nb + 1)
        g_miss, c_miss = float(gh[nb]), int(ch[nb])
        categorical = features[j].kind == "categorical"
        if categorical:
            observed = np.flatnonzero(ch[:nb] > 0)
            if observed.size < 2:
                continue
            means = gh[observed] / ch[observed]
            order = observed[np.lexsort((observed, means))]
        else:
            if nb < 2:
                continue
            order = np.arange(nb)
        g_ord = gh[order]
        c_ord = ch[order]
        gl = np.cumsum(g_ord)[:-1]
        cl = np.cumsum(c_ord)[:-1]
        g_obs = float(g_ord.sum())
        c_obs = int(c_ord.sum())
        # With missing rows present the default branch is whichever side gives
        # more gain; without any, the gains tie and missing behaves like a
        # zero value (below positive thresholds, pooled with the most frequent
        # category), matching how histogram boosters treat never-seen-missing.
        options = (True, False) if c_miss > 0 else (None,)
        for default_left in options:
            if default_left:
                GL, CL = gl + g_miss, cl + c_miss
                GR, CR = (g_obs - gl), (c_obs - cl)
            elif default_left is False:
                GL, CL = gl, cl
                GR, CR = (g_obs - gl) + g_miss, (c_obs - cl) + c_miss
            else:
                GL, CL = gl, cl
                GR, CR = (g_obs - gl), (c_obs - cl)
            valid = (CL >= min_leaf) & (CR >= min_leaf)
            if not valid.any():
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                gain = np.where(valid, GL**2 / CL + GR**2 / CR - parent, -np.inf)
            t = int(np.argmax(gain))
            if gain[t] > _MIN_GAIN and (best is None or gain[t] > best.gain):
                if categorical:
                    left_codes = tuple(int(c) for c in order[:t + 1])
                    resolved = (0 in left_codes) if default_left is None else default_left
                    best = _Split(float(gain[t]), j, CATEGORICAL_SPLIT, 0,
                                  left_codes, math.nan, resolved)
                else:
                    threshold = float(binning.edges[j][t])
                    resolved = (0.0 <= threshold) if default_left is None else default_left
                    best = _Split(float(gain[t]), j, NUMERIC_SPLIT, t + 1, (),
                                  threshold, resolved)
    return best


def _partition(rows: np.ndarray, split: _Split, binning: _Binning) -> tuple[np.ndarray, np.ndarray]:
    cj = binning.codes[rows, split.feature]
    nb = int(binning.nbins[split.feature])
    if split.kind == NUMERIC_SPLIT:
        go_left = cj < split.bin_t
    else:
        go_left = np.isin(cj, np.array(split.left_codes, dtype=np.uint8))
    go_left = np.where(cj == nb, split.default_left, go_left)
    return rows[go_left], rows[~go_left]


def _grow_tree(g: np.ndarray, binning: _Binning, features: Sequence[ModelFeature],
               params: TrainParams) -> tuple[Tree, list[tuple[int, np.ndarray]]]:
    feature: list[int] = []
    kind: list[int] = []
    threshold: list[float] = []
    cat_mask: list[int] = []
    default_left: list[bool] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []
    count: list[int] = []

    leaf_rows: dict[int, np.ndarray] = {}

    def new_leaf(rows: np.ndarray) -> int:
        nid = len(feature)
        feature.append(-1)
        kind.append(NUMERIC_SPLIT)
        threshold.append(math.nan)
        cat_mask.append(0)
        default_left.append(True)
        left.append(-1)
        right.append(-1)
        value.append(float(-g[rows].sum() / rows.size))
        count.append(rows.size)
        leaf_rows[nid] = rows
        return nid

    all_rows = np.arange(g.shape[0])
    root = new_leaf(all_rows)
    heap: list[tuple[float, int, int, _Split]] = []
    counter = 0
    split = _best_split(all_rows, g, binning, features, params.min_samples_leaf)
    if split is not None:
        heapq.heappush(heap, (-split.gain, counter, root, split))
        counter += 1

    n_leaves = 1
    while heap and n_leaves < params.max_leaves:
        _, _, nid, split = heapq.heappop(heap)
        rows = leaf_rows.pop(nid)
        rows_left, rows_right = _partition(rows, split, binning)
        feature[nid] = split.feature
        kind[nid] = split.kind
        threshold[nid] = split.threshold
        cat_mask[nid] = sum(1 << c for c in split.left_codes)
        default_left[nid] = split.default_left
        left[nid] = new_leaf(rows_left)
        right[nid] = new_leaf(rows_right)
        n_leaves += 1
        for child in (left[nid], right[nid]):
            child_split = _best_split(leaf_rows[child], g, binning, features,
                                      params.min_samples_leaf)
            if child_split is not None:
                heapq.heappush(heap, (-child_split.gain, counter, child, child_split))
                counter += 1

    tree = Tree(np.array(feature, dtype=np.int32),
                np.array(kind, dtype=np.int8),
                np.array(threshold),
                np.array(cat_mask, dtype=np.uint64),
                np.array(default_left, dtype=bool),
                np.array(left, dtype=np.int32),
                np.array(right, dtype=np.int32),
                np.array(value),
                np.array(count, dtype=np.int32))
    return tree, list(leaf_rows.items())


def train(dataset: Dataset, params: TrainParams = TrainParams()) -> GbdtModel:
    """Fit one boosted ensemble on a complete single-type dataset.

    Each round fits a tree to the current squared-error gradients and steps
    predictions toward the per-leaf mean residual scaled by the learning
    rate, so the training loss never increases with tree count.
    """
    n = len(dataset.records)
    if n < 2 * params.min_samples_leaf:
        raise TrainingError(f"need at least {2 * params.min_samples_leaf} records, got {n}")
    features = build_model_features(dataset.schema, dataset.stats)
    X = encode_properties(dataset.records, features)
    y_raw = np.array([p.unit_price for p in dataset.records], dtype=float)
    y = np.log(y_raw) if params.target_transform == "log" else y_raw

    if np.all(y == y[0]):
        return GbdtModel(dataset.property_type, dataset.schema.hash(), float(y[0]),
                         params.learning_rate, params.target_transform,
                         features, (), params, ())

    base = float(np.mean(y))
    binning = _Binning(X, features, params.feature_histogram_bins)
    F = np.full(n, base)
    trees: list[Tree] = []
    losses: list[float] = []
    for _ in range(params.num_trees):
        g = F - y
        tree, leaves = _grow_tree(g, binning, features, params)
        for nid, rows in leaves:
            F[rows] += params.learning_rate * tree.value[nid]
        trees.append(tree)
        losses.append(float(np.mean((F - y) ** 2)))
    return GbdtModel(dataset.property_type, dataset.schema.hash(), base,
                     params.learning_rate, params.target_transform,
                     features, tuple(trees), params, tuple(losses))


# ---------------------------------------------------------------------------
# Persistence: versioned JSON container with the schema hash embedded


def model_to_json(model: GbdtModel) -> dict:
    return {
        "version": MODEL_FORMAT_VERSION,
        "property_type": model.property_type.value,
        "schema_hash": model.schema_hash,
        "base_score": model.base_score,
        "learning_rate": model.learning_rate,
        "target_transform": model.target_transform,
        "features": [{"name": f.name, "kind": f.kind, "categories": list(f.categories)}
                     for f in model.features],
        "params": {
            "num_trees": model.params.num_trees,
            "max_leaves": model.params.max_leaves,
            "min_samples_leaf": model.params.min_samples_leaf,
            "learning_rate": model.params.learning_rate,
            "feature_histogram_bins": model.params.feature_histogram_bins,
            "seed": model.params.seed,
            "target_transform": model.params.target_transform,
        },
        "train_loss": list(model.train_loss),
        "trees": [{
            "feature": t.feature.tolist(),
            "kind": t.kind.tolist(),
            "threshold": t.threshold.tolist(),
            "cat_mask": [int(m) for m in t.cat_mask],
            "default_left": t.default_left.tolist(),
            "left": t.left.tolist(),
            "right": t.right.tolist(),
            "value": t.value.tolist(),
            "count": t.count.tolist(),
        } for t in model.trees],
    }


def model_from_json(payload: dict, schema: FeatureSchema | None = None) -> GbdtModel:
    if payload.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {payload.get('version')!r}")
    if schema is not None and payload["schema_hash"] != schema.hash():
        raise SchemaMismatchError("model file was trained under a different schema")
    features = tuple(ModelFeature(f["name"], f["kind"], tuple(f["categories"]))
                     for f in payload["features"])
    trees = tuple(Tree(np.array(t["feature"], dtype=np.int32),
                       np.array(t["kind"], dtype=np.int8),
                       np.array(t["threshold"], dtype=float),
                       np.array(t["cat_mask"], dtype=np.uint64),
                       np.array(t["default_left"], dtype=bool),
                       np.array(t["left"], dtype=np.int32),
                       np.array(t["right"], dtype=np.int32),
                       np.array(t["value"], dtype=float),
                       np.array(t["count"], dtype=np.int32))
                  for t in payload["trees"])
    return GbdtModel(PropertyType.from_label(payload["property_type"]),
                     payload["schema_hash"],
                     float(payload["base_score"]),
                     float(payload["learning_rate"]),
                     payload["target_transform"],
                     features, trees,
                     TrainParams(**payload["params"]),
                     tuple(payload["train_loss"]))


def save_model(model: GbdtModel, path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_json(model)))


def load_model(path: Path | str, schema: FeatureSchema | None = None) -> GbdtModel:
    return model_from_json(json.loads(Path(path).read_text()), schema)
