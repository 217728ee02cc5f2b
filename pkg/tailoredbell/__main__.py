import sys

from tailoredbell.cli import main

sys.exit(main())
