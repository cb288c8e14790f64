"""
The quantlqg command launcher.
"""

import sys

from quantlqg.cli import main


if __name__ == '__main__':
    sys.exit(main(sys.argv[1:]))
