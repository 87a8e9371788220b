import argparse
import sys

from .convert import ArchiveError, convert


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="deap-convert",
        description="Convert DEAP preprocessed per-subject archives (s01.dat ...) "
        "into EVKT tensor containers plus a dataset manifest",
    )
    parser.add_argument("archives", nargs="+", help="pickled per-subject archive files")
    parser.add_argument("--out", required=True, help="output directory")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        manifest = convert(args.archives, args.out)
    except (ArchiveError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(manifest['trials'])} trial containers to {args.out}")
    return 0


def entry():
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
