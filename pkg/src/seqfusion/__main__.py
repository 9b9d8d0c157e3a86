import sys

from seqfusion.cli import main

sys.exit(main())
