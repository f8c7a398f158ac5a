"""
Objective backed by a user-supplied command.

The command template gets the path of a JSON file holding the configuration
through a `{config_path}` placeholder. The last non-empty stdout line must be
one real number. An optional `metrics: a, b, c` line carries the internal
metrics profile used by workload mapping.
"""
import json
import logging
import math
import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from typing import List, Optional, Tuple

from ..errors import ObjectiveError
from ..models.history_models import EvaluationResult, Status
from ..models.space_models import Configuration

# Setup logging
logger = logging.getLogger(__name__)

PLACEHOLDER = "{config_path}"


def parse_objective_output(stdout: str) -> Tuple[float, Optional[Tuple[float, ...]]]:
    """Value from the last non-empty line, metrics from a `metrics:` line"""
    lines = [line.strip() for line in stdout.splitlines() if line.strip()]
    metrics = None
    for line in lines:
        if line.lower().startswith("metrics:"):
            try:
                metrics = tuple(float(p) for p in line.split(":", 1)[1].replace(",", " ").split())
            except ValueError as e:
                raise ObjectiveError(f"unparseable metrics line {line!r}") from e
    values = [line for line in lines if not line.lower().startswith("metrics:")]
    if not values:
        raise ObjectiveError("command printed no value")
    try:
        value = float(values[-1])
    except ValueError as e:
        raise ObjectiveError(f"last output line {values[-1]!r} is not a number") from e
    if not math.isfinite(value):
        raise ObjectiveError(f"command returned non-finite value {value}")
    return value, metrics


@dataclass(frozen=True)
class CommandObjective:
    command: str
    timeout: Optional[float] = None

    def __post_init__(self):
        if PLACEHOLDER not in self.command:
            raise ObjectiveError(f"objective command must contain {PLACEHOLDER}")

    def argv(self, config_path: str) -> List[str]:
        return [token.replace(PLACEHOLDER, config_path) for token in shlex.split(self.command)]

    def __call__(self, config: Configuration) -> EvaluationResult:
        return external_objective(self, config)


def external_objective(spec: CommandObjective, config: Configuration) -> EvaluationResult:
    """Run the command on one configuration; any failure is a failed observation"""
    handle, config_path = tempfile.mkstemp(prefix="knob-config-", suffix=".json")
    try:
        with os.fdopen(handle, "w") as f:
            json.dump(config, f)
        try:
            result = subprocess.run(
                spec.argv(config_path),
                capture_output=True,
                text=True,
                timeout=spec.timeout,
                check=False,
            )
        except subprocess.TimeoutExpired:
            return EvaluationResult(math.nan, Status.FAILED, message=f"timed out after {spec.timeout}s")
        except OSError as e:
            return EvaluationResult(math.nan, Status.FAILED, message=f"could not start command: {e}")
        if result.returncode != 0:
            tail = result.stderr.strip().splitlines()[-1:] or [""]
            return EvaluationResult(math.nan, Status.FAILED, message=f"exit status {result.returncode}: {tail[0]}")
        try:
            value, metrics = parse_objective_output(result.stdout)
        except ObjectiveError as e:
            return EvaluationResult(math.nan, Status.FAILED, message=str(e))
        return EvaluationResult(value, Status.OK, metrics)
    finally:
        try:
            os.unlink(config_path)
        except OSError:
            logger.debug(f"Could not remove {config_path}")
