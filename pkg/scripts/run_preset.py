#!/usr/bin/env python3
"""Run one named experiment preset and print its summary.

Usage: python scripts/run_preset.py fig3b [--out runs] [--jobs N]
"""

import sys

from mpemba_lab import cli

if __name__ == "__main__":
    if len(sys.argv) < 2 or sys.argv[1] not in cli.PRESETS:
        print(f"usage: run_preset.py {{{','.join(sorted(cli.PRESETS))}}} [--out DIR]")
        raise SystemExit(2)
    raise SystemExit(cli.main(["--preset", *sys.argv[1:]]))
