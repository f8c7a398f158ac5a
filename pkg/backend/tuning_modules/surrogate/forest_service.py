"""
Random-forest regression surrogate with ensemble variance.

Trees are grown on bootstrap resamples with variance-reduction splits.
Categorical columns (raw category indices) split on category subsets: the
categories present in a node are ordered by their mean target and cut like a
numeric column, which finds the best binary partition for squared error.
"""
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import TunerSettings, get_tuner_settings

from ..errors import InsufficientDataError, ModelFitError, SpaceError

# Setup logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1
    bootstrap: bool = True
    feature_fraction: float = 5.0 / 6.0
    seed: int = 0

    @classmethod
    def from_settings(cls, settings: Optional[TunerSettings] = None, seed: int = 0, **overrides: Any) -> "ForestParams":
        settings = settings or get_tuner_settings()
        values = dict(
            n_trees=settings.forest_trees,
            max_depth=settings.forest_max_depth,
            min_samples_leaf=settings.forest_min_samples_leaf,
            bootstrap=settings.forest_bootstrap,
            feature_fraction=settings.forest_feature_fraction,
            seed=seed,
        )
        values.update(overrides)
        return cls(**values)


@dataclass
class RegressionTree:
    """Array-backed binary tree; node 0 is the root, feature -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    categorical: np.ndarray
    left_categories: List[Tuple[int, ...]]
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    depth: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "categorical": self.categorical.tolist(),
            "left_categories": [list(c) for c in self.left_categories],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_samples": self.n_samples.tolist(),
            "depth": self.depth,
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "RegressionTree":
        return cls(
            feature=np.asarray(doc["feature"], dtype=int),
            threshold=np.asarray(doc["threshold"], dtype=float),
            categorical=np.asarray(doc["categorical"], dtype=bool),
            left_categories=[tuple(int(c) for c in cats) for cats in doc["left_categories"]],
            left=np.asarray(doc["left"], dtype=int),
            right=np.asarray(doc["right"], dtype=int),
            value=np.asarray(doc["value"], dtype=float),
            n_samples=np.asarray(doc["n_samples"], dtype=int),
            depth=int(doc.get("depth", 0)),
        )


@dataclass
class _PackedForest:
    roots: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    categorical: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    category_table: np.ndarray
    max_depth: int


def _pack(trees: Sequence[RegressionTree]) -> _PackedForest:
    """Concatenate all trees so every tree is traversed in one vectorized pass."""
    offsets = np.cumsum([0] + [t.n_nodes for t in trees])
    width = 1
    for t in trees:
        for cats in t.left_categories:
            if cats:
                width = max(width, max(cats) + 1)
    total = int(offsets[-1])
    table = np.zeros((total, width), dtype=bool)
    left, right = [], []
    for t, off in zip(trees, offsets[:-1]):
        left.append(np.where(t.left >= 0, t.left + off, -1))
        right.append(np.where(t.right >= 0, t.right + off, -1))
        for i, cats in enumerate(t.left_categories):
            if cats:
                table[off + i, list(cats)] = True
    return _PackedForest(
        roots=offsets[:-1].astype(int),
        feature=np.concatenate([t.feature for t in trees]),
        threshold=np.concatenate([t.threshold for t in trees]),
        categorical=np.concatenate([t.categorical for t in trees]),
        left=np.concatenate(left),
        right=np.concatenate(right),
        value=np.concatenate([t.value for t in trees]),
        category_table=table,
        max_depth=max(t.depth for t in trees),
    )


@dataclass
class ForestModel:
    """Fitted forest; read-only after construction."""

    params: ForestParams
    trees: List[RegressionTree]
    categorical_columns: Tuple[bool, ...]
    inbag: Optional[np.ndarray] = None       # (n_trees, n_train) bootstrap counts
    X_train: Optional[np.ndarray] = None
    _packed: _PackedForest = field(init=False, repr=False)

    def __post_init__(self):
        self.categorical_columns = tuple(bool(c) for c in self.categorical_columns)
        self._packed = _pack(self.trees)

    @property
    def n_features(self) -> int:
        return len(self.categorical_columns)


def _candidate_features(n_features: int, fraction: float, rng: np.random.Generator) -> np.ndarray:
    k = max(1, int(np.ceil(fraction * n_features - 1e-9)))
    if k >= n_features:
        return np.arange(n_features)
    return np.sort(rng.choice(n_features, size=k, replace=False))


def _best_split(
    Xn: np.ndarray,
    yn: np.ndarray,
    features: np.ndarray,
    categorical: np.ndarray,
    min_leaf: int,
) -> Optional[Tuple[int, float, Optional[Tuple[int, ...]], np.ndarray]]:
    """Best (feature, threshold, left categories, go-left mask) by squared-error reduction."""
    n = len(yn)
    if n < 2 * min_leaf:
        return None
    if np.max(yn) - np.min(yn) <= 1e-12 * max(1.0, float(np.max(np.abs(yn)))):
        return None

    Z = Xn[:, features].astype(float)
    category_ranks: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
    for jj, f in enumerate(features):
        if not categorical[f]:
            continue
        codes = np.floor(Xn[:, f] + 0.5).astype(int)
        cats, inverse = np.unique(codes, return_inverse=True)
        means = np.bincount(inverse, weights=yn) / np.bincount(inverse)
        rank = np.empty(len(cats))
        rank[np.argsort(means, kind="stable")] = np.arange(len(cats))
        Z[:, jj] = rank[inverse]
        category_ranks[jj] = (cats, rank)

    order = np.argsort(Z, axis=0, kind="stable")
    Zs = np.take_along_axis(Z, order, axis=0)
    Ys = yn[order]
    csum = np.cumsum(Ys, axis=0)
    csq = np.cumsum(Ys * Ys, axis=0)

    n_left = np.arange(1, n, dtype=float)[:, None]
    n_right = n - n_left
    s_left, q_left = csum[:-1], csq[:-1]
    s_right, q_right = csum[-1] - s_left, csq[-1] - q_left
    sse = (q_left - s_left ** 2 / n_left) + (q_right - s_right ** 2 / n_right)
    valid = (Zs[1:] > Zs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    sse = np.where(valid, sse, np.inf)

    best_rows = np.argmin(sse, axis=0)
    best_per_feature = sse[best_rows, np.arange(len(features))]
    jj = int(np.argmin(best_per_feature))
    if not np.isfinite(best_per_feature[jj]):
        return None
    parent_sse = float(csq[-1, 0] - csum[-1, 0] ** 2 / n)
    if parent_sse - best_per_feature[jj] <= 1e-12 * max(parent_sse, 1e-300):
        return None

    i = int(best_rows[jj])
    lo, hi = Zs[i, jj], Zs[i + 1, jj]
    threshold = 0.5 * (lo + hi)
    if threshold >= hi:
        threshold = lo
    go_left = Z[:, jj] <= threshold

    left_categories = None
    if jj in category_ranks:
        cats, rank = category_ranks[jj]
        left_categories = tuple(int(c) for c in sorted(cats[rank <= threshold]))
    return int(features[jj]), float(threshold), left_categories, go_left


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    sample: np.ndarray,
    categorical: np.ndarray,
    params: ForestParams,
    rng: np.random.Generator,
) -> RegressionTree:
    feature: List[int] = []
    threshold: List[float] = []
    is_cat: List[bool] = []
    left_cats: List[Tuple[int, ...]] = []
    left: List[int] = []
    right: List[int] = []
    value: List[float] = []
    n_samples: List[int] = []

    def new_node(idx: np.ndarray) -> int:
        feature.append(-1)
        threshold.append(0.0)
        is_cat.append(False)
        left_cats.append(())
        left.append(-1)
        right.append(-1)
        value.append(float(np.mean(y[idx])))
        n_samples.append(len(idx))
        return len(feature) - 1

    max_depth_seen = 0
    stack = [(new_node(sample), sample, 0)]
    while stack:
        node, idx, depth = stack.pop()
        max_depth_seen = max(max_depth_seen, depth)
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        features = _candidate_features(X.shape[1], params.feature_fraction, rng)
        split = _best_split(X[idx], y[idx], features, categorical, params.min_samples_leaf)
        if split is None:
            continue
        f, thr, cats, go_left = split
        left_id = new_node(idx[go_left])
        right_id = new_node(idx[~go_left])
        feature[node], threshold[node], left[node], right[node] = f, thr, left_id, right_id
        if cats is not None:
            is_cat[node], left_cats[node] = True, cats
        stack.append((right_id, idx[~go_left], depth + 1))
        stack.append((left_id, idx[go_left], depth + 1))

    return RegressionTree(
        feature=np.asarray(feature, dtype=int),
        threshold=np.asarray(threshold, dtype=float),
        categorical=np.asarray(is_cat, dtype=bool),
        left_categories=left_cats,
        left=np.asarray(left, dtype=int),
        right=np.asarray(right, dtype=int),
        value=np.asarray(value, dtype=float),
        n_samples=np.asarray(n_samples, dtype=int),
        depth=max_depth_seen,
    )


def rf_fit(
    X: np.ndarray,
    y: np.ndarray,
    params: Optional[ForestParams] = None,
    categorical: Optional[Sequence[bool]] = None,
) -> ForestModel:
    """Grow a forest on raw-encoded inputs; `categorical` flags index-coded columns"""
    params = params or ForestParams.from_settings()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != len(y):
        raise ModelFitError(f"{X.shape[0]} inputs but {len(y)} targets")
    if len(y) == 0:
        raise InsufficientDataError("forest needs at least one observation")
    if not np.all(np.isfinite(y)):
        raise ModelFitError("targets contain non-finite values")
    cat_mask = np.zeros(X.shape[1], dtype=bool) if categorical is None else np.asarray(categorical, dtype=bool)
    if len(cat_mask) != X.shape[1]:
        raise ModelFitError(f"categorical mask has {len(cat_mask)} entries for {X.shape[1]} columns")

    n = len(y)
    trees: List[RegressionTree] = []
    inbag = np.zeros((params.n_trees, n), dtype=int)
    for t in range(params.n_trees):
        rng = np.random.default_rng([params.seed, t])
        sample = rng.integers(0, n, size=n) if params.bootstrap else np.arange(n)
        inbag[t] = np.bincount(sample, minlength=n)
        trees.append(_grow_tree(X, y, sample, cat_mask, params, rng))

    logger.debug(f"Fitted forest of {params.n_trees} trees on {n} points x {X.shape[1]} columns")
    return ForestModel(params=params, trees=trees, categorical_columns=tuple(cat_mask), inbag=inbag, X_train=X)


def per_tree_predictions(m: ForestModel, Q: np.ndarray) -> np.ndarray:
    """(n_queries, n_trees) matrix of leaf values"""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape[1] != m.n_features:
        raise SpaceError(f"query has {Q.shape[1]} columns, forest expects {m.n_features}")
    p = m._packed
    rows = np.arange(Q.shape[0])[:, None]
    nodes = np.broadcast_to(p.roots, (Q.shape[0], len(p.roots))).copy()
    width = p.category_table.shape[1]
    for _ in range(p.max_depth + 1):
        feat = p.feature[nodes]
        internal = feat >= 0
        if not internal.any():
            break
        x = Q[rows, np.where(internal, feat, 0)]
        codes = np.floor(x + 0.5).astype(int)
        in_table = (codes >= 0) & (codes < width)
        cat_left = p.category_table[nodes, np.clip(codes, 0, width - 1)] & in_table
        go_left = np.where(p.categorical[nodes], cat_left, x <= p.threshold[nodes])
        nodes = np.where(internal, np.where(go_left, p.left[nodes], p.right[nodes]), nodes)
    return p.value[nodes]


def rf_predict_batch(m: ForestModel, Q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    preds = per_tree_predictions(m, Q)
    return preds.mean(axis=1), preds.var(axis=1)


def rf_predict(m: ForestModel, q: np.ndarray) -> Tuple[float, float]:
    """Mean and population variance of the per-tree predictions"""
    mean, var = rf_predict_batch(m, np.asarray(q, dtype=float).reshape(1, -1))
    return float(mean[0]), float(var[0])


def oob_predict(m: ForestModel) -> Tuple[np.ndarray, np.ndarray]:
    """Out-of-bag mean/variance per training point (all trees when a point is never out of bag)"""
    if m.X_train is None or m.inbag is None:
        raise InsufficientDataError("forest carries no training data for out-of-bag predictions")
    preds = per_tree_predictions(m, m.X_train)
    out = (m.inbag == 0).T
    counts = out.sum(axis=1)
    mask = np.where(counts[:, None] > 0, out, True)
    weights = mask / mask.sum(axis=1, keepdims=True)
    mean = np.sum(preds * weights, axis=1)
    var = np.sum(weights * (preds - mean[:, None]) ** 2, axis=1)
    return mean, var


def split_counts(m: ForestModel) -> np.ndarray:
    """Number of internal nodes splitting on each column, summed over trees"""
    counts = np.zeros(m.n_features, dtype=int)
    for tree in m.trees:
        used = tree.feature[tree.feature >= 0]
        counts += np.bincount(used, minlength=m.n_features)
    return counts


def forest_to_dict(m: ForestModel) -> Dict[str, Any]:
    return {
        "params": asdict(m.params),
        "categorical_columns": list(m.categorical_columns),
        "trees": [t.to_dict() for t in m.trees],
    }


def forest_from_dict(doc: Dict[str, Any]) -> ForestModel:
    try:
        return ForestModel(
            params=ForestParams(**doc["params"]),
            trees=[RegressionTree.from_dict(t) for t in doc["trees"]],
            categorical_columns=tuple(doc["categorical_columns"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFitError(f"malformed forest document: {e}") from e
