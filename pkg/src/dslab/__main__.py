import sys

from dslab.cli import main

sys.exit(main())
