"""
Helper Utilities
Formatting, validation and CSV output used across the application
"""
import math
from datetime import datetime
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import pandas as pd

CSV_FLOAT_FORMAT = '%.10g'

SURFACE_TERMS = ('gradient', 'entropy', 'noise', 'fused')


def format_value(value: float) -> str:
    """Fixed six-decimal, locale-independent rendering for printed results"""
    if not math.isfinite(value):
        return str(value)
    # +0.0 folds negative zero
    return f"{value + 0.0:.6f}"


def format_timestamp(timestamp: Optional[Union[str, datetime]] = None) -> str:
    """Format timestamp to readable string"""
    if timestamp is None:
        timestamp = datetime.now()

    if isinstance(timestamp, str):
        try:
            timestamp = datetime.fromisoformat(timestamp)
        except ValueError:
            return timestamp

    return timestamp.strftime("%Y-%m-%d %H:%M:%S")


def parse_float_list(text: str) -> List[float]:
    """Parse '1,5,10' into [1.0, 5.0, 10.0]"""
    values = [part.strip() for part in text.split(',') if part.strip()]
    if not values:
        raise ValueError("empty list")
    return [float(v) for v in values]


def validate_sigmas(sigmas: Sequence[float]) -> Tuple[bool, str]:
    """
    Validate injected noise levels

    Returns:
        (is_valid, error_message)
    """
    if not sigmas:
        return False, "at least one sigma is required"
    if any(not math.isfinite(s) or s < 0 for s in sigmas):
        return False, "sigmas must be finite and non-negative"
    return True, ""


def validate_trials(trials: int) -> Tuple[bool, str]:
    """
    Validate the number of noise draws per image

    Returns:
        (is_valid, error_message)
    """
    if trials < 2:
        return False, f"trials must be at least 2, got {trials}"
    return True, ""


def validate_terms(terms: Iterable[str]) -> Tuple[bool, str]:
    """
    Validate surface term names

    Returns:
        (is_valid, error_message)
    """
    terms = list(terms)
    if not terms:
        return False, "at least one term is required"
    unknown = [t for t in terms if t not in SURFACE_TERMS]
    if unknown:
        return False, f"unknown terms {unknown}; choose from {list(SURFACE_TERMS)}"
    return True, ""


def to_csv_text(table: pd.DataFrame) -> str:
    """RFC-4180 CSV with '\\n' line endings and a trailing newline"""
    return table.to_csv(index=False, lineterminator='\n', float_format=CSV_FLOAT_FORMAT)


def write_csv(table: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Write a table as CSV, creating parent directories"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_csv_text(table), encoding='utf-8')
    return path
