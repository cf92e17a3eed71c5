import sys

from tomocheck.cli import main

sys.exit(main())
