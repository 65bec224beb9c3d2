"""``python -m spraylab``."""

import sys

from spraylab.cli import main

sys.exit(main())
