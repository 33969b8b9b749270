"""
Database Module
Handles SQLite storage of score and control results
"""
import sqlite3
import json
from typing import Dict, List, Optional, Any, Tuple
from pathlib import Path

COLUMNS = (
    'id', 'command', 'source', 'exposure_ms', 'gain_db', 'fused',
    'iterations', 'settings', 'created_at'
)


class Database:
    """Run history of the exposure tools"""

    def __init__(self, db_path: str = "runs.db"):
        """Initialize database connection"""
        # Ensure directory exists
        Path(db_path).parent.mkdir(parents=True, exist_ok=True)
        self.db_path = db_path
        self.init_db()

    def get_connection(self) -> sqlite3.Connection:
        """Get database connection"""
        return sqlite3.connect(self.db_path)

    def init_db(self) -> None:
        """Initialize database schema"""
        conn = self.get_connection()
        cursor = conn.cursor()

        cursor.execute('''
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                command TEXT NOT NULL,
                source TEXT,
                exposure_ms REAL,
                gain_db REAL,
                fused REAL,
                iterations INTEGER,
                settings TEXT,
                created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            )
        ''')

        conn.commit()
        conn.close()

    def save_run(
        self,
        command: str,
        source: str,
        fused: float,
        settings: Dict[str, Any],
        exposure_ms: Optional[float] = None,
        gain_db: Optional[float] = None,
        iterations: Optional[int] = None
    ) -> int:
        """
        Save one result

        Returns:
            Run ID
        """
        conn = self.get_connection()
        cursor = conn.cursor()

        cursor.execute('''
            INSERT INTO runs
            (command, source, exposure_ms, gain_db, fused, iterations, settings)
            VALUES (?, ?, ?, ?, ?, ?, ?)
        ''', (
            command,
            source,
            exposure_ms,
            gain_db,
            fused,
            iterations,
            json.dumps(settings, sort_keys=True)
        ))

        run_id = cursor.lastrowid
        conn.commit()
        conn.close()

        return int(run_id) if run_id is not None else 0

    @staticmethod
    def _to_dict(row: Tuple) -> Dict[str, Any]:
        record = dict(zip(COLUMNS, row))
        record['settings'] = json.loads(record['settings']) if record['settings'] else {}
        return record

    def get_recent_runs(self, limit: int = 10) -> List[Dict[str, Any]]:
        """Get most recent runs, newest first"""
        conn = self.get_connection()
        cursor = conn.cursor()

        cursor.execute(f'''
            SELECT {", ".join(COLUMNS)} FROM runs
            ORDER BY id DESC
            LIMIT ?
        ''', (limit,))

        rows: List[Tuple] = cursor.fetchall()
        conn.close()

        return [self._to_dict(row) for row in rows]
