"""Run every desk-scale experiment in turn (the VQE run takes about an hour)."""

import subprocess
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent

if __name__ == "__main__":
    status = 0
    for name in ("flo_check", "heatmap", "scatter", "vqe"):
        print(f"== {name}", flush=True)
        status |= subprocess.call([sys.executable, str(HERE / f"run_{name}.py"), *sys.argv[1:]])
    sys.exit(status)
