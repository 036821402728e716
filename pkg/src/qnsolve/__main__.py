import sys

from qnsolve.cli import main

sys.exit(main())
