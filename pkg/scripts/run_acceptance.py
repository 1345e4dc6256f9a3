#!/usr/bin/env python
"""Run the acceptance suite and show its PASS/FAIL lines."""

import argparse
import os
import sys

import pytest

HERE = os.path.dirname(os.path.abspath(__file__))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-k", dest="keyword", help="only run criteria matching this pytest keyword")
    args = ap.parse_args()
    argv = [os.path.join(HERE, "..", "tests", "test_acceptance.py"), "-q", "-p", "no:cacheprovider"]
    if args.keyword:
        argv += ["-k", args.keyword]
    sys.exit(pytest.main(argv))


if __name__ == "__main__":
    main()
