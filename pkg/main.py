"""Command-line launcher for the Cesàro operator laboratory.

Usage:
    python main.py orbit --sequence log-slow --N 100000 --nmax 1024 --out hist.csv
"""
import sys

from app.cli import run

if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
