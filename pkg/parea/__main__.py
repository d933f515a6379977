import sys

from parea.cli import main

sys.exit(main())
