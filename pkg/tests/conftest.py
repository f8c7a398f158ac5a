"""
Shared fixtures for the knob tuning test suite
"""
import json
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from config.settings import TunerSettings  # noqa: E402
from backend.tuning_modules.space import parse_space  # noqa: E402

MIXED_SPACE_DOC = {
    "name": "mixed",
    "knobs": [
        {"name": "buffer_mb", "type": "continuous", "min": 0, "max": 10, "default": 2.5},
        {"name": "workers", "type": "integer", "min": 1, "max": 5, "default": 1},
        {"name": "policy", "type": "categorical", "categories": ["a", "b", "c"], "default": "a"},
    ],
}


@pytest.fixture
def mixed_space_doc():
    return json.loads(json.dumps(MIXED_SPACE_DOC))


@pytest.fixture
def mixed_space():
    return parse_space(MIXED_SPACE_DOC)


@pytest.fixture
def numeric_space():
    return parse_space({
        "name": "numeric",
        "knobs": [
            {"name": "x0", "type": "continuous", "min": 0, "max": 1, "default": 0},
            {"name": "x1", "type": "continuous", "min": 0, "max": 1, "default": 0},
        ],
    })


@pytest.fixture
def space_file(tmp_path, mixed_space_doc):
    path = tmp_path / "space.json"
    path.write_text(json.dumps(mixed_space_doc))
    return path


@pytest.fixture
def small_settings():
    """Cheap algorithm constants so optimizer tests stay fast"""
    return TunerSettings(
        n_init=4,
        hyper_restarts=5,
        hyper_max_evals=20,
        forest_trees=10,
        acq_random_candidates=50,
        acq_local_starts=2,
        acq_local_budget=5,
        turbo_candidates=50,
        ga_population=4,
        importance_trees=20,
        shap_permutations=20,
        rgpe_samples=20,
        cv_folds=3,
        cv_search_draws=2,
    )
