"""The command-line surface, end to end, from a temp directory.

synth writes an event file, fuse summarizes it, tensorize runs the whole
pipeline to an OMNX artifact, and info/selfcheck report on the build.
"""

import subprocess
import sys
import tempfile
from pathlib import Path

HERE = Path(__file__).resolve().parent


def run(*args):
    cmd = [sys.executable, "-m", "omnievent", *args]
    print(f"$ omnievent {' '.join(args)}")
    out = subprocess.run(cmd, capture_output=True, text=True, check=True)
    body = out.stdout.strip() or out.stderr.strip()
    print("\n".join("  " + line for line in body.splitlines()[:12]))
    print()


with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    cfg = str(HERE / "reduced.cfg")
    events = str(tmp / "events.evt1")
    fused = str(tmp / "fused.csv")
    grid = str(tmp / "grid.omnx")

    run("synth", "--scene", "square", "--frames", "12",
        "--set", "geometry.H=32", "--set", "geometry.W=32", "-o", events)
    run("fuse", "-i", events, "--T", "8", "-o", fused)
    run("serialize", "-i", events, "--config", cfg, "--order", "hilbert",
        "--shift", "5", "--limit", "5")
    run("tensorize", "--config", cfg, "-i", events, "-o", grid)
    run("encode", "--order", "hilbert", "--bits", "5", "12,7", "0,31")
    run("info")
