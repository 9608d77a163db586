import sys

from lureid.cli import main

sys.exit(main())
