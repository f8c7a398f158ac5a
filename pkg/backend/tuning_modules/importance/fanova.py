"""
First-order functional ANOVA over the partitions of fitted regression trees.

Inputs are taken as uniformly distributed over each knob domain (continuous
interval, integer grid or category set). Each leaf is a box; its probability
is the product of per-knob coverage fractions. Marginal predictions are
piecewise constant between split thresholds, so their variance is computed
exactly segment by segment.
"""
import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..models.space_models import ConfigSpace, KnobKind
from ..surrogate.forest_service import ForestModel, RegressionTree

# Setup logging
logger = logging.getLogger(__name__)


@dataclass
class LeafPartition:
    values: np.ndarray            # (n_leaves,)
    lower: np.ndarray             # (n_leaves, m) exclusive lower bound (numeric knobs)
    upper: np.ndarray             # (n_leaves, m) inclusive upper bound (numeric knobs)
    allowed: List[np.ndarray]     # per knob: (n_leaves, k) category masks, empty for numeric
    fractions: np.ndarray         # (n_leaves, m) probability mass of the leaf range per knob


def _numeric_fraction(knob, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    L, U = knob.lower, knob.upper
    if knob.kind == KnobKind.INTEGER:
        count = np.floor(np.minimum(hi, U)) - np.maximum(np.floor(lo), L - 1)
        return np.clip(count, 0, None) / (U - L + 1)
    return np.clip(np.minimum(hi, U) - np.maximum(lo, L), 0, None) / (U - L)


def leaf_partition(tree: RegressionTree, space: ConfigSpace) -> LeafPartition:
    """Boxes and coverage fractions of every leaf of a raw-encoded tree"""
    m = len(space)
    stack = [(0, np.full(m, -np.inf), np.full(m, np.inf),
              [np.ones(k.n_categories, dtype=bool) for k in space.knobs])]
    leaves = []
    while stack:
        node, lo, hi, allowed = stack.pop()
        f = tree.feature[node]
        if f < 0:
            leaves.append((tree.value[node], lo, hi, allowed))
            continue
        l_lo, l_hi, r_lo, r_hi = lo.copy(), hi.copy(), lo.copy(), hi.copy()
        l_allowed, r_allowed = list(allowed), list(allowed)
        if tree.categorical[node]:
            in_left = np.zeros(space.knobs[f].n_categories, dtype=bool)
            in_left[[c for c in tree.left_categories[node] if c < len(in_left)]] = True
            l_allowed[f] = allowed[f] & in_left
            r_allowed[f] = allowed[f] & ~in_left
        else:
            l_hi[f] = min(hi[f], tree.threshold[node])
            r_lo[f] = max(lo[f], tree.threshold[node])
        stack.append((tree.right[node], r_lo, r_hi, r_allowed))
        stack.append((tree.left[node], l_lo, l_hi, l_allowed))

    values = np.array([leaf[0] for leaf in leaves])
    lower = np.vstack([leaf[1] for leaf in leaves])
    upper = np.vstack([leaf[2] for leaf in leaves])
    allowed = [
        np.vstack([leaf[3][j] for leaf in leaves]) if not knob.is_numeric else np.zeros((len(leaves), 0), dtype=bool)
        for j, knob in enumerate(space.knobs)
    ]
    fractions = np.ones((len(leaves), m))
    for j, knob in enumerate(space.knobs):
        if knob.is_numeric:
            fractions[:, j] = _numeric_fraction(knob, lower[:, j], upper[:, j])
        else:
            fractions[:, j] = allowed[j].sum(axis=1) / knob.n_categories
    return LeafPartition(values, lower, upper, allowed, fractions)


def _segments(knob, thresholds: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Representative points and probability weights of the constant pieces of a numeric knob."""
    start = knob.lower - 1 if knob.kind == KnobKind.INTEGER else knob.lower
    inner = thresholds[(thresholds > start) & (thresholds < knob.upper)]
    edges = np.unique(np.concatenate([[start], inner, [knob.upper]]))
    points = 0.5 * (edges[:-1] + edges[1:])
    if knob.kind == KnobKind.INTEGER:
        weights = (np.floor(edges[1:]) - np.floor(edges[:-1])) / (knob.upper - knob.lower + 1)
    else:
        weights = np.diff(edges) / (knob.upper - knob.lower)
    return points, weights


def tree_variance_fractions(tree: RegressionTree, space: ConfigSpace) -> Tuple[np.ndarray, float]:
    """Per-knob first-order variance of one tree and its total variance"""
    part = leaf_partition(tree, space)
    mass = np.prod(part.fractions, axis=1)
    mean = float(np.sum(part.values * mass))
    total = float(np.sum(part.values ** 2 * mass) - mean ** 2)
    variances = np.zeros(len(space))
    if total <= 0:
        return variances, 0.0

    for j, knob in enumerate(space.knobs):
        others = np.prod(np.delete(part.fractions, j, axis=1), axis=1)
        w = part.values * others
        if knob.is_numeric:
            split_on_j = (tree.feature == j) & ~tree.categorical
            points, weights = _segments(knob, tree.threshold[split_on_j])
            inside = (part.lower[:, j][None, :] < points[:, None]) & (points[:, None] <= part.upper[:, j][None, :])
        else:
            weights = np.full(knob.n_categories, 1.0 / knob.n_categories)
            inside = part.allowed[j].T
        marginal = inside.astype(float) @ w
        marginal_mean = float(np.sum(weights * marginal))
        variances[j] = max(float(np.sum(weights * marginal ** 2)) - marginal_mean ** 2, 0.0)
    return variances, total


def fanova_fractions(forest: ForestModel, space: ConfigSpace) -> np.ndarray:
    """First-order variance fractions averaged over trees with non-zero variance; NaNs when none"""
    fractions = []
    for tree in forest.trees:
        variances, total = tree_variance_fractions(tree, space)
        if total > 1e-12:
            fractions.append(np.clip(variances / total, 0.0, 1.0))
    if not fractions:
        return np.full(len(space), np.nan)
    return np.mean(fractions, axis=0)
