import sys

from mlstab.cli import main

sys.exit(main())
