import os
import platform
import sys
import traceback
from typing import Any

if os.name != "nt":
    from signal import SIG_DFL, SIGPIPE, signal

from ..exceptions import SubsupException
from ..utils import cl, colors, set_debug
from ..version import __version__
from .common import COMMAND_HANDLERS, exit_code
from .setup import setup


def _cli_excepthook(exc_type: type, exc_value: BaseException, exc_traceback: Any) -> None:
    """Custom exception handler for CLI mode - suppresses tracebacks unless in debug mode."""
    print(f"{exc_type.__name__}: {exc_value}", file=sys.stderr)


def print_short(parser: Any) -> None:
    parser.print_usage()

    print()
    print("subsup command line interface - no options supplied")
    print()
    print("  subsup -h, --help                   print a concise help")
    print("  subsup <command> -h                 help for one command")
    print()
    print("  subsup eigen -f scenario.ini        first Dirichlet eigenpair")
    print("  subsup bounds -f scenario.ini       build and certify the sub/supersolution pair")
    print("  subsup continue -f scenario.ini     run the ε = 1/n ladder")
    print("  subsup run scenario.ini [...]       full pipeline with invariant gates")


def run_cli_wrapped() -> None:
    colors()

    raw_args = sys.argv[1:]

    (parser, args) = setup(raw_args)

    # Install custom exception handler unless in debug mode
    if not args["debug"]:
        sys.excepthook = _cli_excepthook

    if len(raw_args) == 0:
        print_short(parser)
        return

    if args["version"]:
        print(f"subsup {__version__}")
        return

    if args["debug"]:
        set_debug(True)
        print(f"Platform: {platform.platform()}", file=sys.stderr)
        print(f"Python: {sys.version.splitlines()[0]}", file=sys.stderr)

    command = args["command"]
    if command is None:
        print_short(parser)
        return

    try:
        code = COMMAND_HANDLERS[command](args)
    except SubsupException as e:
        if args["debug"]:
            traceback.print_exc()
        print(f"{cl.FAIL} ✗ {cl.ENDC}{type(e).__name__}: {e}", file=sys.stderr)
        sys.exit(exit_code(e))
    finally:
        set_debug(False)

    if code:
        sys.exit(code)


def run_cli() -> None:
    if os.name != "nt":
        signal(SIGPIPE, SIG_DFL)  # supress broken pipe error
    try:
        run_cli_wrapped()
    except KeyboardInterrupt:
        pass


__all__ = ["run_cli"]
