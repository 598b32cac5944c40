import sys

from src import run_qes


def main():
    try:
        return run_qes.main()
    except KeyboardInterrupt:
        print("\nInterrupted by user", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
