#!/usr/bin/env python

import sys

from cutoff.run import main

if __name__ == '__main__':
    sys.exit(main())
