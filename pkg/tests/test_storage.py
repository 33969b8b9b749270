import pandas as pd
import pytest

from backend.utils.errors import ConfigError
from backend.utils.storage import FileStorage, validate_report_name


@pytest.mark.parametrize("name", ['sweep_ranking.csv', 'surface_dense_fused.csv', 'run-2.v1.csv'])
def test_report_names_accepted(name):
    assert validate_report_name(name) == (True, "")


@pytest.mark.parametrize("name", ['../ranking.csv', 'sub/trace.csv', 'trace.txt', '.csv', 'trace', ''])
def test_report_names_rejected(name):
    is_valid, error = validate_report_name(name)
    assert not is_valid and "plain .csv" in error


def test_save_table_writes_under_out_dir(tmp_path):
    storage = FileStorage(tmp_path / 'nested' / 'out')
    path = storage.save_table('noise_eval.csv', pd.DataFrame({'sigma': [1.0, 5.0]}))
    assert path == tmp_path / 'nested' / 'out' / 'noise_eval.csv'
    assert path.read_text() == "sigma\n1\n5\n"


def test_save_table_refuses_paths(tmp_path):
    with pytest.raises(ConfigError):
        FileStorage(tmp_path).save_table('../escape.csv', pd.DataFrame({'a': [1]}))
    assert not (tmp_path.parent / 'escape.csv').exists()
