#!/usr/bin/env python3
"""
Run script for the scene graph workbench.
Keeps the package importable when launched from a checkout.
"""

import os
import sys

script_dir = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, script_dir)

from scenebench.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
