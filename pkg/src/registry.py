import logging
from typing import Optional

from src.errors import DuplicateRunError
from src.record import RunRecord
from src.repositories import RunRepositoryInterface

logger = logging.getLogger(__name__)


class RunRegistry:
    """Archive front: one stored run per (stem, seed, config hash)"""

    def __init__(self, repository: RunRepositoryInterface):
        self._repository = repository

    def add_run(self, record: RunRecord) -> None:
        """
        Archive a completed run.

        Raises:
            DuplicateRunError: If the same config already ran under this stem and seed
        """
        if self.find_run(*record.identity) is not None:
            raise DuplicateRunError(record.run_key, record.config_hash)
        self._repository.add(record)
        logger.info("Archived run %s (config %s)", record.run_key, record.config_hash[:12])

    def find_run(self, stem: str, seed: int, config_hash: str) -> Optional[RunRecord]:
        return self._repository.find(stem, seed, config_hash)
