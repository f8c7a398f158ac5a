"""
Surrogate tuning benchmarks: dataset assembly, surrogate model selection,
packaging and cheap deterministic evaluation
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError
from scipy.stats import loguniform
from sklearn.linear_model import Ridge
from sklearn.metrics import mean_squared_error, r2_score
from sklearn.model_selection import KFold, ParameterSampler
from sklearn.neighbors import KNeighborsRegressor

from config.settings import TunerSettings, get_tuner_settings

from ..datastore.tabular_store import PathLike, frame_to_training_set, read_training_frame
from ..errors import BenchmarkError, InsufficientDataError, SpaceError
from ..models.benchmark_models import BenchmarkDocument, CandidateScore, ModelSelectionResult, SurrogateKind
from ..models.history_models import Sense, Status
from ..models.importance_models import TrainingSet
from ..models.space_models import ConfigSpace, Configuration, EncodingScheme
from ..space.space_service import encode_matrix, get_layout, parse_space
from ..surrogate.forest_service import ForestModel, ForestParams, forest_from_dict, forest_to_dict, rf_fit, rf_predict_batch

# Setup logging
logger = logging.getLogger(__name__)

SEARCH_SPACES: Dict[SurrogateKind, Dict[str, Any]] = {
    SurrogateKind.RF: {
        "n_trees": [20, 50, 100],
        "min_samples_leaf": [1, 2, 3, 5],
        "max_depth": [None, 10, 20],
        "feature_fraction": [0.5, 5.0 / 6.0, 1.0],
    },
    SurrogateKind.KNN: {
        "n_neighbors": list(range(1, 16)),
        "weights": ["uniform", "distance"],
    },
    SurrogateKind.RIDGE: {
        "alpha": loguniform(1e-4, 1e2),
    },
}

# rf wins ties
CANDIDATE_ORDER = (SurrogateKind.RF, SurrogateKind.KNN, SurrogateKind.RIDGE)


def _scheme(kind: SurrogateKind) -> EncodingScheme:
    return EncodingScheme.RAW if kind == SurrogateKind.RF else EncodingScheme.UNIT_ONEHOT


class _ForestRegressor:
    """fit/predict wrapper so the forest joins the sklearn candidates in cross-validation"""

    def __init__(self, params: ForestParams, categorical: Sequence[bool]):
        self.params = params
        self.categorical = categorical
        self.model_: Optional[ForestModel] = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "_ForestRegressor":
        self.model_ = rf_fit(X, y, self.params, self.categorical)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        return rf_predict_batch(self.model_, X)[0]


def _forest_params(params: Dict[str, Any], seed: int, settings: TunerSettings) -> ForestParams:
    """Forest constants from settings with the searched values on top"""
    return ForestParams.from_settings(settings, seed=seed, **params)


def _make_estimator(
    kind: SurrogateKind, params: Dict[str, Any], space: ConfigSpace, seed: int, n_train: int, settings: TunerSettings
):
    if kind == SurrogateKind.RF:
        layout = get_layout(space, EncodingScheme.RAW)
        return _ForestRegressor(_forest_params(params, seed, settings), layout.categorical)
    if kind == SurrogateKind.KNN:
        return KNeighborsRegressor(n_neighbors=min(int(params["n_neighbors"]), n_train), weights=params["weights"])
    return Ridge(alpha=float(params["alpha"]))


def _plain(params: Dict[str, Any]) -> Dict[str, Any]:
    return {k: (v.item() if isinstance(v, np.generic) else v) for k, v in params.items()}


def _targets(data: TrainingSet, log_target: bool) -> np.ndarray:
    if not log_target:
        return data.values
    if np.any(data.values <= 0):
        raise BenchmarkError("log target needs strictly positive performance values")
    return np.log(data.values)


def assemble_dataset(
    sources: Sequence[PathLike],
    space: ConfigSpace,
    sense: Union[Sense, str] = Sense.MAXIMIZE,
) -> TrainingSet:
    """Concatenate LHS and trajectory CSVs; keep the first of exact duplicates, drop failed rows"""
    frame = read_training_frame(sources, space)
    total = len(frame)
    frame = frame[frame["status"] != Status.FAILED.value]
    failed = total - len(frame)
    frame = frame.drop_duplicates(subset=space.names, keep="first")
    logger.info(
        f"Assembled {len(frame)} samples from {len(sources)} files "
        f"({failed} failed rows, {total - failed - len(frame)} duplicates dropped)"
    )
    return frame_to_training_set(frame, space, Sense(sense))


def model_select(
    data: TrainingSet,
    candidates: Optional[Sequence[Union[SurrogateKind, str]]] = None,
    folds: Optional[int] = None,
    seed: int = 0,
    settings: Optional[TunerSettings] = None,
    log_target: bool = False,
) -> ModelSelectionResult:
    """
    Randomized hyper-search per candidate scored by mean K-fold RMSE; R² is
    computed per fold and averaged. Lowest RMSE wins, rf on ties.
    """
    settings = settings or get_tuner_settings()
    folds = folds or settings.cv_folds
    kinds = [k for k in CANDIDATE_ORDER if candidates is None or k in {SurrogateKind(c) for c in candidates}]
    if not kinds:
        raise BenchmarkError("no surrogate candidates to select from")
    if len(data) < folds:
        raise InsufficientDataError(f"{folds}-fold cross-validation needs at least {folds} samples, got {len(data)}")

    y = _targets(data, log_target)
    splits = list(KFold(n_splits=folds, shuffle=True, random_state=seed).split(y))
    scores: List[CandidateScore] = []
    for kind in kinds:
        X = encode_matrix(data.configs, data.space, _scheme(kind))
        best: Optional[CandidateScore] = None
        draws = ParameterSampler(SEARCH_SPACES[kind], n_iter=settings.cv_search_draws, random_state=seed)
        for params in draws:
            rmses, r2s = [], []
            for train, test in splits:
                estimator = _make_estimator(kind, params, data.space, seed, len(train), settings)
                estimator.fit(X[train], y[train])
                predicted = estimator.predict(X[test])
                rmses.append(float(np.sqrt(mean_squared_error(y[test], predicted))))
                r2s.append(float(r2_score(y[test], predicted)))
            candidate = CandidateScore(kind=kind, rmse=float(np.mean(rmses)), r2=float(np.mean(r2s)), params=_plain(params))
            if best is None or candidate.rmse < best.rmse:
                best = candidate
        logger.info(f"{kind.value}: CV RMSE {best.rmse:.4g}, R² {best.r2:.4f}")
        scores.append(best)

    winner = min(scores, key=lambda s: (s.rmse, CANDIDATE_ORDER.index(s.kind)))
    return ModelSelectionResult(winner=winner.kind, folds=folds, candidates=scores)


@dataclass
class TuningBenchmark:
    """A fitted surrogate standing in for the system under tuning"""

    space: ConfigSpace
    kind: SurrogateKind
    sense: Sense
    default_config: Configuration
    default_value: float
    forest: Optional[ForestModel] = None
    model: Optional[Dict[str, Any]] = None
    log_target: bool = False
    provenance: Dict[str, Any] = field(default_factory=dict)
    _knn: Optional[KNeighborsRegressor] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.kind = SurrogateKind(self.kind)
        self.sense = Sense(self.sense)
        if self.kind == SurrogateKind.RF and self.forest is None:
            raise BenchmarkError("rf benchmark carries no forest")
        if self.kind != SurrogateKind.RF and self.model is None:
            raise BenchmarkError(f"{self.kind.value} benchmark carries no model")
        if self.forest is not None and self.forest.n_features != len(self.space):
            raise BenchmarkError(f"forest expects {self.forest.n_features} columns, space has {len(self.space)} knobs")
        if self.kind == SurrogateKind.KNN:
            self._knn = KNeighborsRegressor(
                n_neighbors=int(self.model["n_neighbors"]), weights=self.model["weights"]
            ).fit(np.asarray(self.model["X"], dtype=float), np.asarray(self.model["y"], dtype=float))

    def predict(self, configs: Sequence[Configuration]) -> np.ndarray:
        X = encode_matrix(configs, self.space, _scheme(self.kind))
        if self.kind == SurrogateKind.RF:
            raw = rf_predict_batch(self.forest, X)[0]
        elif self.kind == SurrogateKind.KNN:
            raw = self._knn.predict(X)
        else:
            raw = X @ np.asarray(self.model["coef"], dtype=float) + float(self.model["intercept"])
        return np.exp(raw) if self.log_target else raw

    def __call__(self, config: Configuration) -> float:
        return bench_evaluate(self, config)


def bench_evaluate(bench: TuningBenchmark, config: Configuration) -> float:
    """Surrogate prediction for one valid configuration"""
    return float(bench.predict([bench.space.validate(config)])[0])


def _fit_winner(
    kind: SurrogateKind,
    params: Dict[str, Any],
    data: TrainingSet,
    y: np.ndarray,
    seed: int,
    settings: TunerSettings,
) -> Dict[str, Any]:
    X = encode_matrix(data.configs, data.space, _scheme(kind))
    if kind == SurrogateKind.RF:
        forest_params = _forest_params(params, seed, settings)
        return {"forest": rf_fit(X, y, forest_params, get_layout(data.space, EncodingScheme.RAW).categorical)}
    if kind == SurrogateKind.KNN:
        k = min(int(params["n_neighbors"]), len(y))
        return {"model": {"n_neighbors": k, "weights": params["weights"], "X": X.tolist(), "y": y.tolist()}}
    ridge = Ridge(alpha=float(params["alpha"])).fit(X, y)
    return {"model": {"alpha": float(params["alpha"]), "coef": ridge.coef_.tolist(), "intercept": float(ridge.intercept_)}}


def build_benchmark(
    data: TrainingSet,
    seed: int = 0,
    candidates: Optional[Sequence[Union[SurrogateKind, str]]] = None,
    log_target: bool = False,
    settings: Optional[TunerSettings] = None,
    provenance: Optional[Dict[str, Any]] = None,
) -> TuningBenchmark:
    """Select a surrogate, fit it on all data and record the default's prediction"""
    settings = settings or get_tuner_settings()
    if len(data) == 0:
        raise BenchmarkError("cannot build a benchmark from an empty dataset")
    y = _targets(data, log_target)
    provenance = dict(provenance or {})
    provenance["n_samples"] = len(data)

    if len(data) >= settings.cv_folds:
        selection = model_select(data, candidates, seed=seed, settings=settings, log_target=log_target)
        kind = selection.winner
        params = selection.score_of(kind).params
        provenance["model_selection"] = selection.model_dump(mode="json")
    else:
        logger.warning(f"{len(data)} samples are too few for {settings.cv_folds}-fold selection; using rf")
        kind, params = SurrogateKind.RF, {}
        provenance["model_selection"] = None

    fitted = _fit_winner(kind, params, data, y, seed, settings)
    bench = TuningBenchmark(
        space=data.space,
        kind=kind,
        sense=data.sense,
        default_config=data.space.validate(data.default_config),
        default_value=0.0,
        log_target=log_target,
        provenance=provenance,
        **fitted,
    )
    bench.default_value = bench_evaluate(bench, bench.default_config)
    logger.info(f"Built {kind.value} benchmark on '{data.space.name}': default value {bench.default_value:g}")
    return bench


def benchmark_to_document(bench: TuningBenchmark) -> BenchmarkDocument:
    return BenchmarkDocument(
        space=bench.space.to_document(),
        surrogate_kind=bench.kind,
        forest=forest_to_dict(bench.forest) if bench.forest is not None else None,
        model=bench.model,
        log_target=bench.log_target,
        sense=bench.sense,
        default_config=dict(bench.default_config),
        default_value=bench.default_value,
        provenance=bench.provenance,
    )


def save_benchmark(bench: TuningBenchmark, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(benchmark_to_document(bench).model_dump(mode="json"), f)
    logger.info(f"Saved benchmark to {path}")
    return path


def load_benchmark(path: PathLike) -> TuningBenchmark:
    try:
        with open(path) as f:
            doc = BenchmarkDocument.model_validate(json.load(f))
    except (ValidationError, json.JSONDecodeError) as e:
        raise BenchmarkError(f"malformed benchmark file {path}: {e}") from e
    space = parse_space(doc.space)
    try:
        default_config = space.validate(doc.default_config)
    except SpaceError as e:
        raise BenchmarkError(f"benchmark default configuration is invalid: {e}") from e
    return TuningBenchmark(
        space=space,
        kind=doc.surrogate_kind,
        sense=doc.sense,
        default_config=default_config,
        default_value=doc.default_value,
        forest=forest_from_dict(doc.forest) if doc.forest is not None else None,
        model=doc.model,
        log_target=doc.log_target,
        provenance=doc.provenance,
    )
