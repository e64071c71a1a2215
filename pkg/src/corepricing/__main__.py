import sys

from corepricing.cli import main

sys.exit(main())
