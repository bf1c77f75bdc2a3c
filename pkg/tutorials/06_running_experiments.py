"""Running experiments from Python and from the command line.

Equivalent shell commands:

    ach-forge preglue-sweep --config tutorials/configs/preglue-sweep.toml --out out
    ACH_FORGE_THREADS=4 ach-forge einstein-residual --n 3 --N 200 --out out
"""

import tempfile
from pathlib import Path

from achforge.cli import main
from achforge.config import load_config
from achforge.experiments import run

here = Path(__file__).parent
cfg = load_config(here / "configs" / "preglue-sweep.toml")
rep = run(cfg)
for c in rep.checks:
    print(rep.check_line(c))
print("overall:", "PASS" if rep.passed else "FAIL")

with tempfile.TemporaryDirectory() as out:
    status = main(["einstein-residual", "--n", "3", "--N", "20", "--out", out, "--quiet"])
    print("exit status:", status, "files:", sorted(p.name for p in Path(out).iterdir()))
