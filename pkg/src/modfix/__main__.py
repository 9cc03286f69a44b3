import sys

from modfix.cli import main

sys.exit(main())
