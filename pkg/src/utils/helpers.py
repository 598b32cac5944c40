import json
import logging
import math
import os
import sys
from typing import Any, Iterable, List, Optional

import pandas as pd

FLOAT_DIGITS_ENV = "QES2X2_FLOAT_DIGITS"
DEFAULT_FLOAT_DIGITS = 15


def float_digits() -> int:
    raw = os.environ.get(FLOAT_DIGITS_ENV)
    if raw is None:
        return DEFAULT_FLOAT_DIGITS
    try:
        digits = int(raw)
    except ValueError:
        logging.getLogger(__name__).warning(f"Warning: ignoring {FLOAT_DIGITS_ENV}={raw!r}")
        return DEFAULT_FLOAT_DIGITS
    return min(max(digits, 1), 17)


def round_float(x: float, digits: Optional[int] = None) -> Optional[float]:
    """Round to significant digits; non-finite values become None"""
    if not math.isfinite(x):
        return None
    return float(f"{x:.{digits or float_digits()}g}")


def round_floats(obj: Any, digits: Optional[int] = None) -> Any:
    digits = digits or float_digits()
    if isinstance(obj, float):
        return round_float(obj, digits)
    if isinstance(obj, dict):
        return {key: round_floats(value, digits) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(value, digits) for value in obj]
    if hasattr(obj, "item") and callable(obj.item):
        return round_floats(obj.item(), digits)
    return obj


def to_json(obj: Any) -> str:
    return json.dumps(round_floats(obj), indent=2, ensure_ascii=False) + "\n"


def _emit(text: str, path: Optional[str]):
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w') as f:
        f.write(text)


def write_json(obj: Any, path: Optional[str] = None):
    _emit(to_json(obj), path)


def records_to_csv(records: Iterable[dict], columns: Optional[List[str]] = None) -> str:
    frame = pd.DataFrame([round_floats(r) for r in records], columns=columns)
    return frame.to_csv(index=False)


def write_csv(records: Iterable[dict], path: Optional[str] = None, columns: Optional[List[str]] = None):
    _emit(records_to_csv(records, columns), path)


def write_text(lines: Iterable[str], path: Optional[str] = None):
    _emit("".join(line + "\n" for line in lines), path)


def setup_logging(verbose: bool = False, debug: bool = False):
    level = logging.DEBUG if debug else logging.INFO if verbose else logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr, force=True,
                        format="%(levelname)s %(name)s: %(message)s")
