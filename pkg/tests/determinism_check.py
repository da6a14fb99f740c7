#!/usr/bin/env python3
"""
CPTrap - Determinism Check

Runs the CLI end to end in fresh interpreters and verifies:
1. `selftest --quick` passes
2. Two runs with the same seed give byte-identical stdout
3. The sus, stationary, family and evolve artifacts are byte-identical as well

Exit Codes:
  0 - Success (all artifacts reproducible)
  1 - Failure (a run failed or two runs differ)
"""

import hashlib
import os
import subprocess
import sys
import time


# =============================================================================
# Configuration
# =============================================================================

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SOURCE_DIR = os.path.join(REPO_ROOT, "src", "python")
SEED = 7

RUNS = [
    ["selftest", "--quick", "--seed", str(SEED)],
    ["sus"],
    ["stationary"],
    ["family", "--points", "21"],
    ["evolve", "--horizon", "2", "--samples", "20"],
    ["--format", "json", "evolve", "--exact", "--horizon", "5", "--samples", "10"],
]


# =============================================================================
# Helper Functions
# =============================================================================

def log(msg):
    """Print timestamped log message."""
    print(f"[{time.strftime('%H:%M:%S')}] {msg}")


def run_cli(argv):
    """Run `python -m cptrap` in a clean subprocess; returns (exit code, stdout)."""
    env = dict(os.environ)
    env["PYTHONPATH"] = SOURCE_DIR + os.pathsep + env.get("PYTHONPATH", "")
    env.pop("CPTRAP_OUTPUT_DIR", None)
    env.pop("CPTRAP_PUSHGATEWAY", None)
    result = subprocess.run(
        [sys.executable, "-m", "cptrap", *argv],
        cwd=REPO_ROOT,
        env=env,
        capture_output=True,
        text=True,
    )
    if result.returncode != 0:
        print(f"STDERR: {result.stderr}")
    return result.returncode, result.stdout


def digest(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# =============================================================================
# Main Check
# =============================================================================

def main():
    log("=" * 60)
    log("CPTrap - Determinism Check")
    log("=" * 60)

    failures = 0
    for argv in RUNS:
        label = " ".join(argv)
        first_code, first = run_cli(argv)
        second_code, second = run_cli(argv)

        if first_code != 0 or second_code != 0:
            log(f"❌ FAIL: `{label}` exited with {first_code}/{second_code}")
            failures += 1
            continue
        if digest(first) != digest(second):
            log(f"❌ FAIL: `{label}` is not reproducible")
            failures += 1
            continue
        log(f"✓ {label}  sha256={digest(first)[:16]}")

    log("=" * 60)
    if failures:
        log(f"✗ DETERMINISM CHECK FAILED ({failures} of {len(RUNS)} runs)")
        return 1
    log("✓ DETERMINISM CHECK PASSED")
    log("=" * 60)
    return 0


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        log("Interrupted by user")
        sys.exit(130)
    except Exception as e:
        log(f"ERROR: {e}")
        sys.exit(1)
