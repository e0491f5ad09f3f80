import sys

from netwide.cli import main

sys.exit(main())
