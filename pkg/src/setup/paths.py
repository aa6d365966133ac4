import os
from pathlib import Path

from tqdm import tqdm


PARENT_DIR = Path(__file__).parent.parent.parent.resolve()
SCENARIOS_DIR = PARENT_DIR/"scenarios"

DATA_DIR = PARENT_DIR/"data"
ENVIRONMENTS_DIR = DATA_DIR/"environments"

RESULTS_DIR = PARENT_DIR/"results"


def make_needed_directories() -> None:

    major_paths = [DATA_DIR, ENVIRONMENTS_DIR, RESULTS_DIR]

    for path in tqdm(iterable=major_paths, desc="Creating data directories..."):
        if not Path(path).exists():
            os.makedirs(path, exist_ok=True)
