"""
Storage Utilities
Report files under the output directory
"""
import logging
import re
from pathlib import Path
from typing import Tuple, Union

import pandas as pd

from backend.utils.errors import ConfigError
from backend.utils.helpers import write_csv

logger = logging.getLogger(__name__)

# sweep_ranking.csv, control_trace.csv, surface_dense_fused.csv, ...
REPORT_NAME = re.compile(r'[A-Za-z0-9][A-Za-z0-9_.-]*\.csv')


def validate_report_name(name: str) -> Tuple[bool, str]:
    """
    Reports are plain .csv file names inside the output directory

    Returns:
        (is_valid, error_message)
    """
    if not REPORT_NAME.fullmatch(name):
        return False, f"report name must be a plain .csv file name, got {name!r}"
    return True, ""


class FileStorage:
    """CSV reports written by CLI commands"""

    def __init__(self, out_dir: Union[str, Path] = "out"):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def save_table(self, name: str, table: pd.DataFrame) -> Path:
        """
        Write one report

        Raises:
            ConfigError: name is not a plain .csv file name
        """
        is_valid, error = validate_report_name(name)
        if not is_valid:
            raise ConfigError(error)
        path = write_csv(table, self.out_dir / name)
        logger.info("wrote %s (%d rows)", path, len(table))
        return path
