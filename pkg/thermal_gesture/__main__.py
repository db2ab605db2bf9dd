import sys

from thermal_gesture.cli.service import run_cli

if __name__ == "__main__":
    sys.exit(run_cli())
