#!/usr/bin/env python3
"""Simulated-listener personalization scene vs the audiogram baseline."""

import sys
from pathlib import Path

from oraclebo.harness import cli_main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    sys.exit(
        cli_main(
            ["audio-sim", "--config", str(ROOT / "configs" / "audio_random_desk.json"), "--out-dir", "out"]
            + sys.argv[1:]
        )
    )
