import sys

from scanb.cli import main

sys.exit(main())
