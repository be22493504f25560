import sys

from gptd.cli import main

sys.exit(main())
