# Runs the mgec command line from a source checkout, e.g.
#   python main.py gen -o data/synth --lam 0.5 --seed 0
#   python main.py sweep -o results/sweep --jobs 4
# see `python main.py --help` for every subcommand

import sys

from mgec.cli import main

if __name__ == "__main__":
    sys.exit(main())
