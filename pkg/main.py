import sys

from app.cli.commands import run


def main() -> int:
    result = run(sys.argv[1:])
    if result.output:
        sys.stdout.write(result.output)
    if result.error:
        sys.stderr.write(result.error.rstrip('\n') + '\n')
    return result.exit_code


if __name__ == '__main__':
    sys.exit(main())
