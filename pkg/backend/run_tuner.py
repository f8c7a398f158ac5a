"""
Knob tuning toolkit runner - run from the repository root:

    python backend/run_tuner.py tune --benchmark out/benchmark.json --optimizer smac --budget 100 --seed 7
"""
import sys
from pathlib import Path

# Add project root to path for imports
project_root = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(project_root))

from backend.tuning_modules.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
