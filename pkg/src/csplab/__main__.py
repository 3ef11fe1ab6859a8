import sys

from csplab.cli import main

sys.exit(main())
