import sys

from permfsk.cli import main

sys.exit(main())
