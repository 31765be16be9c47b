import subprocess
import sys
from pathlib import Path

import pytest

TUTORIALS = Path(__file__).resolve().parent.parent / "tutorials"
ARGS = {"02_power_sweep.py": ["3"], "04_verify.py": ["2"]}


@pytest.mark.parametrize("script", sorted(p.name for p in TUTORIALS.glob("*.py")))
def test_tutorial_runs(script):
    res = subprocess.run(
        [sys.executable, str(TUTORIALS / script), *ARGS.get(script, [])],
        capture_output=True, text=True, timeout=300, check=False,
    )
    assert res.returncode == 0, res.stderr
    assert res.stdout.strip()
