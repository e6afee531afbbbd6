import sys

from quicksim.cli import main

sys.exit(main())
