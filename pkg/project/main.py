"""jlab entry point.

    python project/main.py modpoly 2
    python project/main.py synth doc.json
    python project/main.py oracle jet --tau 1.1i

All verbs live in ``lib/jcli.py``; this file only makes ``lib`` importable
and forwards the arguments.
"""

import sys
from pathlib import Path

LIB_DIR = Path(__file__).resolve().parent / "lib"
if str(LIB_DIR) not in sys.path:
    sys.path.insert(0, str(LIB_DIR))

import jcli  # noqa: E402


def main(argv=None):
    try:
        return jcli.main(argv)
    except KeyboardInterrupt:
        print("Interrupted.")
        return 130


if __name__ == "__main__":
    sys.exit(main())
