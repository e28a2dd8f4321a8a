import sys

from velocity_estimation.cli import main

sys.exit(main())
