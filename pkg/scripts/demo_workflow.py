#!/usr/bin/env python3
"""End-to-end walkthrough of the command-line workflow.

Builds a constants table, integrates the example configuration, verifies the
full battery of inequalities along the archived run, fits the spectral decay
rate of the final checkpoint and compares two truncation levels.  Everything
lands in ./demo_out (or the directory given as the first argument).
"""

import json
import sys
from pathlib import Path

from mhdgevrey.cli import main

HERE = Path(__file__).resolve().parent


def run(argv):
    print("$ mhdgevrey " + " ".join(argv))
    code = main(argv)
    if code != 0:
        raise SystemExit("command failed with exit code %d" % code)


def demo(outdir):
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = str(HERE / "example_run.json")
    table = str(outdir / "constants.json")
    trace = str(outdir / "trace")

    run(["constants", "--s", "0.5", "0.75", "1.0", "0.0",
         "--out", table])
    run(["run", cfg, "--out", trace, "--table", table])
    run(["verify", trace, "--table", table,
         "--s", "2.0", "1.0", "0.0", "-1.0", "-3.0"])
    ck = sorted(Path(trace, "checkpoints").iterdir())[-1]
    run(["spectrum", str(ck)])
    run(["compare", cfg, "--N", "6", "8",
         "--out", str(outdir / "compare"), "--table", table])

    report = json.loads(Path(trace, "report.json").read_text())
    verdicts = sorted({r["verdict"] for r in report})
    print("verified %d inequality instances, verdicts: %s"
          % (len(report), ", ".join(verdicts)))


if __name__ == "__main__":
    demo(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_out"))
