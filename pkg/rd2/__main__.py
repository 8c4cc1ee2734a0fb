import sys

from rd2.cli import main

if __name__ == "__main__":
    sys.exit(main())
