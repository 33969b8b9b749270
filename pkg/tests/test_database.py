import pytest

from backend.db.database import Database


@pytest.fixture
def db(tmp_path):
    return Database(str(tmp_path / 'nested' / 'runs.db'))


def test_save_and_list(db):
    run_id = db.save_run('control', 'surface', 1.25, {'alpha': 0.4}, exposure_ms=12.0, gain_db=3.0, iterations=17)
    [record] = db.get_recent_runs()
    assert record['id'] == run_id
    assert record['command'] == 'control'
    assert record['settings'] == {'alpha': 0.4}
    assert (record['exposure_ms'], record['gain_db'], record['iterations']) == (12.0, 3.0, 17)


def test_missing_optional_fields(db):
    db.save_run('score', 'a.pgm', 0.5, {})
    [record] = db.get_recent_runs()
    assert record['exposure_ms'] is None and record['iterations'] is None
    assert record['settings'] == {}


def test_recent_runs_newest_first(db):
    ids = [db.save_run('score', f'img{i}.pgm', float(i), {}) for i in range(4)]
    recent = db.get_recent_runs(limit=2)
    assert [r['id'] for r in recent] == ids[:-3:-1]
