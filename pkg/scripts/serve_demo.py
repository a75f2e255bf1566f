#!/usr/bin/env python3
"""Start the live session service for the browser client (frontend/)."""

import sys

from oraclebo.harness import cli_main

if __name__ == "__main__":
    sys.exit(cli_main(["serve", "--listen", "127.0.0.1:8080", "--storage-dir", "out/sessions"] + sys.argv[1:]))
