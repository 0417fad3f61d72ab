import os
import sqlite3
import threading
from collections import Counter
from datetime import datetime, timezone

import orjson


DEFAULT_DB_PATH = "yb_logs.db"


def _encode(details):

    try:
        return orjson.dumps(details, default=str, option=orjson.OPT_SERIALIZE_NUMPY).decode()
    except TypeError:
        return orjson.dumps(str(details)).decode()


class LoggingService:

    def __init__(self, db_path=None, enabled=None):

        self.db_path = db_path or os.getenv("YB_LOG_DB", DEFAULT_DB_PATH)

        if enabled is None:
            enabled = os.getenv("YB_EVENT_LOG", "1") != "0"

        self.enabled = enabled
        self._lock = threading.Lock()

        if self.enabled:
            self._init_db()

    def _init_db(self):
        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()

        cursor.execute("""
        CREATE TABLE IF NOT EXISTS logs (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            timestamp TEXT,
            event_type TEXT,
            details TEXT
        )
        """)

        conn.commit()
        conn.close()

    def log(self, event_type, details=None):

        if not self.enabled:
            return

        with self._lock:
            conn = sqlite3.connect(self.db_path, timeout=10)
            cursor = conn.cursor()

            cursor.execute("""
            INSERT INTO logs (timestamp, event_type, details)
            VALUES (?, ?, ?)
            """, (datetime.now(timezone.utc).isoformat(), event_type, _encode(details)))

            conn.commit()
            conn.close()

    # =====================================================
    # READ BACK
    # =====================================================

    def recent(self, limit=20):

        if not self.enabled or not os.path.exists(self.db_path):
            return []

        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()

        cursor.execute("""
        SELECT timestamp, event_type, details
        FROM logs
        ORDER BY id DESC
        LIMIT ?
        """, (limit,))

        rows = cursor.fetchall()
        conn.close()

        events = []

        for timestamp, event_type, details in rows:

            try:
                parsed = orjson.loads(details)
            except orjson.JSONDecodeError:
                parsed = details

            events.append({
                "timestamp": timestamp,
                "event_type": event_type,
                "details": parsed
            })

        return events

    def event_counts(self):

        if not self.enabled or not os.path.exists(self.db_path):
            return Counter()

        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()

        cursor.execute("SELECT event_type FROM logs")
        counts = Counter(row[0] for row in cursor.fetchall())

        conn.close()

        return counts


_shared = None
_shared_lock = threading.Lock()


def get_logger():

    global _shared

    with _shared_lock:

        if _shared is None:
            _shared = LoggingService()

        return _shared


def reset_logger(service=None):
    """Replace the process-wide logger (tests point it at a temporary database)."""

    global _shared

    with _shared_lock:
        _shared = service
