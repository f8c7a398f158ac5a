"""
CSV storage for session trajectories and training data
"""
import logging
import math
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..errors import BenchmarkError, SpaceError
from ..models.history_models import History, Observation, Sense, Status
from ..models.importance_models import TrainingSet
from ..models.space_models import ConfigSpace, Configuration

# Setup logging
logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
PERFORMANCE_COLUMNS = ("performance", "value")
_RESERVED = {"iteration", "value", "status", "best_so_far", "metrics", "performance"}


def _metrics_to_text(metrics) -> str:
    return "" if metrics is None else ";".join(repr(float(m)) for m in metrics)


def _metrics_from_text(text) -> Optional[tuple]:
    if text is None or (isinstance(text, float) and math.isnan(text)) or str(text).strip() == "":
        return None
    return tuple(float(part) for part in str(text).split(";"))


def trajectory_frame(
    history: History,
    space: ConfigSpace,
    completion: Optional[Callable[[Configuration], Configuration]] = None,
) -> pd.DataFrame:
    """Trajectory table: iteration, knob columns, value, status, best_so_far"""
    rows = []
    best = math.nan
    for record in history:
        config = completion(record.config) if completion else record.config
        if record.ok and (math.isnan(best) or history.sense.is_better(record.value, best)):
            best = record.value
        row = {"iteration": record.iteration}
        row.update(config)
        row.update({"value": record.value, "status": record.status.value, "best_so_far": best})
        if record.metrics is not None:
            row["metrics"] = _metrics_to_text(record.metrics)
        rows.append(row)
    names = completion.full_space.names if completion is not None and hasattr(completion, "full_space") else space.names
    columns = ["iteration", *names, "value", "status", "best_so_far"]
    frame = pd.DataFrame(rows)
    if "metrics" in frame.columns:
        columns.append("metrics")
    return frame.reindex(columns=columns)


def write_trajectory(
    history: History,
    space: ConfigSpace,
    path: PathLike,
    completion: Optional[Callable[[Configuration], Configuration]] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trajectory_frame(history, space, completion).to_csv(path, index=False)
    logger.debug(f"Wrote {len(history)} trajectory rows to {path}")
    return path


def _require_columns(frame: pd.DataFrame, space: ConfigSpace, path: PathLike) -> None:
    missing = [name for name in space.names if name not in frame.columns]
    if missing:
        raise BenchmarkError(f"{path}: missing knob columns {missing}")
    unknown = [c for c in frame.columns if c not in space and c not in _RESERVED]
    if unknown:
        raise BenchmarkError(f"{path}: columns {unknown} are not knobs of space '{space.name}'")


def _row_config(row: pd.Series, space: ConfigSpace) -> Configuration:
    config = {}
    for knob in space.knobs:
        value = row[knob.name]
        config[knob.name] = str(value) if not knob.is_numeric else float(value)
    return space.validate(config)


def read_trajectory(path: PathLike, space: ConfigSpace, sense: Sense) -> History:
    """Load a trajectory CSV back into a History"""
    frame = pd.read_csv(path, dtype={k.name: str for k in space.knobs if not k.is_numeric})
    _require_columns(frame, space, path)
    history = History(Sense(sense))
    for i, row in frame.iterrows():
        status = Status(str(row.get("status", "ok")))
        history.append(Observation(
            config=_row_config(row, space),
            value=float(row["value"]),
            status=status,
            iteration=int(row.get("iteration", i)),
            metrics=_metrics_from_text(row.get("metrics")),
        ))
    return history


def _performance_column(frame: pd.DataFrame, path: PathLike) -> str:
    for name in PERFORMANCE_COLUMNS:
        if name in frame.columns:
            return name
    raise BenchmarkError(f"{path}: no performance column (expected one of {list(PERFORMANCE_COLUMNS)})")


def read_training_frame(paths: Sequence[PathLike], space: ConfigSpace) -> pd.DataFrame:
    """Concatenate training/trajectory CSVs into knob columns + performance (+ status)"""
    frames: List[pd.DataFrame] = []
    for path in paths:
        frame = pd.read_csv(path, dtype={k.name: str for k in space.knobs if not k.is_numeric})
        _require_columns(frame, space, path)
        perf = _performance_column(frame, path)
        part = frame[space.names].copy()
        part["performance"] = frame[perf].astype(float)
        part["status"] = frame["status"].astype(str) if "status" in frame.columns else Status.OK.value
        part["source"] = str(path)
        frames.append(part)
    if not frames:
        raise BenchmarkError("no training data files given")
    return pd.concat(frames, ignore_index=True)


def frame_to_training_set(
    frame: pd.DataFrame,
    space: ConfigSpace,
    sense: Sense = Sense.MAXIMIZE,
) -> TrainingSet:
    configs: List[Configuration] = []
    for _, row in frame.iterrows():
        try:
            configs.append(_row_config(row, space))
        except (SpaceError, ValueError) as e:
            raise BenchmarkError(f"training row {len(configs)} is invalid: {e}") from e
    values = frame["performance"].to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        raise BenchmarkError("training data contains non-finite performance values")
    return TrainingSet(space=space, configs=configs, values=values, sense=Sense(sense))


def load_training_set(
    path: Union[PathLike, Sequence[PathLike]],
    space: ConfigSpace,
    sense: Sense = Sense.MAXIMIZE,
) -> TrainingSet:
    """Training CSV(s) with failed rows dropped"""
    paths = [path] if isinstance(path, (str, Path)) else list(path)
    frame = read_training_frame(paths, space)
    frame = frame[frame["status"] != Status.FAILED.value]
    return frame_to_training_set(frame, space, sense)
