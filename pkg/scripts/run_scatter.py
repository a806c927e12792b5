"""Run the scatter experiment from configs/scatter.yaml.

Extra arguments are passed to the CLI, e.g. ``--seed 3`` or ``--paper-scale``.
"""

import sys
from pathlib import Path

from flo_mitigate.cli import main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "scatter.yaml"

if __name__ == "__main__":
    sys.exit(main(["scatter", "--config", str(CONFIG), *sys.argv[1:]]))
