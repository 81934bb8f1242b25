import sys

from augmap.cli import main

sys.exit(main())
