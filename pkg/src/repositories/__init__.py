from abc import ABC, abstractmethod
from typing import Optional

from src.record import RunRecord


class RunRepositoryInterface(ABC):
    """Storage for archived runs, keyed by (stem, seed, config hash)"""

    @abstractmethod
    def add(self, record: RunRecord) -> None:  # pragma: no cover
        """Store a run; raises DuplicateRunError if its identity is taken"""

    @abstractmethod
    def find(self, stem: str, seed: int, config_hash: str) -> Optional[RunRecord]:  # pragma: no cover
        """The run with this identity, or None"""

    def close(self) -> None:
        """Release the backend connection, if any"""
