import os
import platform
import re
import sys
import unicodedata
from typing import Any, Dict, List, Optional, cast

OUTPUT_DIR = "subsup-out"
OUTPUT_ENV = "SUBSUP_OUTPUT_DIR"


# find ansi escape sequences in string
ansi_escape = re.compile(r"\x1B(?:[@-Z\\-_]|\[[0-?]*[ -/]*[@-~])")


def strip_ansi(text: str) -> str:
    return ansi_escape.sub("", text)


class cl:
    HEADER = "\033[95m"
    OKBLUE = "\033[94m"
    OKCYAN = "\033[96m"
    OKGREEN = "\033[92m"
    WARNING = "\033[93m"
    FAIL = "\033[91m"
    ENDC = "\033[0m"
    BOLD = "\033[1m"
    FGGRAY = "\033[38;5;246m"


def disable_colors() -> None:
    c = cast(Any, cl)
    c.HEADER = ""
    c.OKBLUE = ""
    c.OKCYAN = ""
    c.OKGREEN = ""
    c.WARNING = ""
    c.FAIL = ""
    c.ENDC = ""
    c.BOLD = ""
    c.FGGRAY = ""


def colors() -> None:
    # ignore color disable if --color in argv
    if os.name == "nt":
        from colorama import just_fix_windows_console  # type: ignore

        just_fix_windows_console()

    if "--color" in sys.argv:
        return

    # disable colors if not supported
    for handle in [sys.stdout, sys.stderr]:
        if (hasattr(handle, "isatty") and handle.isatty()) or ("TERM" in os.environ and os.environ["TERM"] == "ANSI"):
            if platform.system() == "Windows" and not ("TERM" in os.environ and os.environ["TERM"] == "ANSI"):
                disable_colors()
        else:
            disable_colors()


_debug_enabled = False


def set_debug(enabled: bool) -> None:
    global _debug_enabled
    _debug_enabled = enabled


def debug(message: str, enabled: bool = False) -> None:
    """
    Print a diagnostic line to stderr when debugging is on, either
    globally (--debug) or for this call.
    """
    if not (enabled or _debug_enabled):
        return
    print(f"{cl.FGGRAY}[debug] {message}{cl.ENDC}", file=sys.stderr)


def get_output_dir(flag: Optional[str] = None, scenario: Optional[str] = None) -> str:
    """
    Resolve the output directory: flag > environment > scenario > default
    """
    return flag or os.getenv(OUTPUT_ENV) or scenario or OUTPUT_DIR


def check_mark(ok: bool) -> str:
    if ok:
        return f"{cl.OKGREEN} ✓ {cl.ENDC}"
    return f"{cl.FAIL} ✗ {cl.ENDC}"


def pretty_format(values: List[Dict[str, Any]], order: List[Dict[str, Any]]) -> str:
    """
    Constructs a pretty print table of the values in values
    in the order of List
    """

    colors()

    # lets' get total terminal width (we use 120 as default)
    try:
        (col, row) = os.get_terminal_size()
    except OSError:
        col = 120

    return pretty_format_inner(values, order, col - 2)


def pretty_format_inner(values: List[Dict[str, Any]], order: List[Dict[str, Any]], col: int) -> str:
    # padding width
    pw = 2

    # unicode aware string length
    def ucl(word: str) -> int:
        if not word:
            return 0
        return sum(1 for ch in word if unicodedata.combining(ch) == 0)

    def render(o: Dict[str, Any], v: Any) -> str:
        if v is None:
            return ""
        if "fmt" in o:
            return str(o["fmt"](v))
        return str(v)

    # construct width map
    wm: Dict[str, int] = {}
    for o in order:
        k = o["key"]
        cand = max([ucl(strip_ansi(render(o, x.get(k)))) for x in values], default=0)
        wm[k] = max(cand, len(o["header"]))

    # squeeze the widest columns if we overflow, numbers are never cut
    total_padding = (len(order) - 1) * pw
    overflow = sum(wm.values()) + total_padding - col
    if overflow > 0:
        for o in sorted(order, key=lambda x: -wm[x["key"]]):
            if o.get("align") == "right" or overflow <= 0:
                continue
            cut = min(overflow, wm[o["key"]] - max(5, len(o["header"])))
            wm[o["key"]] -= max(cut, 0)
            overflow -= max(cut, 0)

    los = f"{cl.BOLD}"
    for o in order:
        los += f'{o["header"]:<{wm[o["key"]]}}' + " " * pw
    los = los.rstrip() + f"{cl.ENDC}\n"

    for o in order:
        los += "╌" * wm[o["key"]] + " " * pw
    los = los.rstrip() + "\n"

    for p in values:
        line = ""
        for o in order:
            val = strip_ansi(render(o, p.get(o["key"])))
            width = wm[o["key"]]
            if len(val) > width:
                val = val[0 : width - 3] + "..."
            align = ">" if o.get("align") == "right" else "<"
            cell = f"{val:{align}{width}}"
            if "clr" in o:
                cell = f'{o["clr"]}{cell}{cl.ENDC}'
            line += cell + " " * pw
        los += line.rstrip() + "\n"

    return los
