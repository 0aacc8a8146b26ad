"""python -m chylab 入口"""

import sys

from chylab.cli import main

if __name__ == "__main__":
    sys.exit(main())
