import os
from typing import Any, Optional

from src.errors import DuplicateRunError
from src.record import RunRecord
from src.repositories import RunRepositoryInterface

try:
    from pymongo import ASCENDING
    from pymongo import MongoClient as PyMongoClient
    from pymongo.errors import DuplicateKeyError
except Exception:  # pragma: no cover - optional dependency shim
    ASCENDING = 1
    PyMongoClient = None  # type: ignore
    DuplicateKeyError = None  # type: ignore

try:
    from mongomock import DuplicateKeyError as MockDuplicateKeyError
    from mongomock import MongoClient as MockMongoClient
except Exception:  # pragma: no cover - optional dependency shim
    MockDuplicateKeyError = None  # type: ignore
    MockMongoClient = None  # type: ignore

_DUPLICATE_ERRORS = tuple(
    error for error in (DuplicateKeyError, MockDuplicateKeyError) if error is not None
)
IDENTITY_FIELDS = ("stem", "seed", "config_hash")


class MongoRunRepository(RunRepositoryInterface):
    """MongoDB run archive; a compound unique index enforces one document per run identity."""

    def __init__(
        self,
        connection_string: Optional[str] = None,
        database_name: str = "oracle_complexity",
        collection_name: str = "runs",
        client: Optional[Any] = None,
    ):
        """
        Args:
            connection_string: MongoDB URI; mongomock:// selects an in-process mock
            database_name: Database holding the archive
            collection_name: Collection holding one document per run
            client: Pre-configured client (real or mock), overrides connection_string
        """
        if client is not None:
            self.client = client
        else:
            conn = connection_string or os.getenv("MONGO_URI", "mongodb://localhost:27017/")
            if conn.startswith("mongomock://"):
                if MockMongoClient is None:  # pragma: no cover
                    raise RuntimeError("mongomock is required for mongomock:// connections")
                self.client = MockMongoClient()
            else:  # pragma: no cover
                if PyMongoClient is None:
                    raise RuntimeError("pymongo must be installed to use MongoRunRepository")
                self.client = PyMongoClient(conn)

        self.collection = self.client[database_name][collection_name]
        self.collection.create_index(
            [(name, ASCENDING) for name in IDENTITY_FIELDS], unique=True
        )

    @staticmethod
    def to_document(record: RunRecord) -> dict:
        return {
            "stem": record.stem,
            "seed": record.seed,
            "config_hash": record.config_hash,
            "mode": record.mode,
            "config_text": record.config_text,
            "header": list(record.header),
            "rows": [list(row) for row in record.rows],
            "reports": list(record.reports),
        }

    @staticmethod
    def from_document(doc: dict) -> RunRecord:
        record = RunRecord(
            stem=doc["stem"],
            seed=doc["seed"],
            mode=doc["mode"],
            config_text=doc["config_text"],
            header=doc.get("header", []),
            rows=doc.get("rows", []),
            reports=doc.get("reports", []),
        )
        if record.config_hash != doc["config_hash"]:
            raise ValueError(f"Stored config of {record.run_key} does not match its hash")
        return record

    def add(self, record: RunRecord) -> None:
        try:
            self.collection.insert_one(self.to_document(record))
        except _DUPLICATE_ERRORS as exc:
            raise DuplicateRunError(record.run_key, record.config_hash) from exc

    def find(self, stem: str, seed: int, config_hash: str) -> Optional[RunRecord]:
        doc = self.collection.find_one({"stem": stem, "seed": seed, "config_hash": config_hash})
        return None if doc is None else self.from_document(doc)

    def close(self) -> None:
        close_fn = getattr(self.client, "close", None)
        if callable(close_fn):
            close_fn()
