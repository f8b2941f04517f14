import hashlib
from unittest.mock import Mock

import pytest

from src.errors import DuplicateRunError
from src.record import RunRecord
from src.registry import RunRegistry
from src.repositories import RunRepositoryInterface


@pytest.fixture
def repository():
    repository = Mock(spec=RunRepositoryInterface)
    repository.find.return_value = None
    return repository


@pytest.fixture
def registry(repository):
    return RunRegistry(repository)


@pytest.fixture
def sec41_run():
    return RunRecord("sec41", 1, "experiment", "[sweep]\nseed = 1\n")


class TestRunRecord:
    def test_run_key_joins_stem_and_seed(self, sec41_run):
        assert sec41_run.run_key == "sec41_1"

    def test_config_hash_is_sha256_of_config_text(self, sec41_run):
        assert sec41_run.config_hash == hashlib.sha256(b"[sweep]\nseed = 1\n").hexdigest()
        assert len(sec41_run.config_hash) == 64
        assert sec41_run.identity == ("sec41", 1, sec41_run.config_hash)

    def test_config_hash_tracks_config_text(self, sec41_run):
        edited = RunRecord("sec41", 1, "experiment", "[sweep]\nseed = 1\ntrials = 60\n")
        same = RunRecord("sec41", 1, "complexity", "[sweep]\nseed = 1\n")

        assert edited.config_hash != sec41_run.config_hash
        assert same.config_hash == sec41_run.config_hash


class TestRunRegistry:
    def test_add_run_stores_new_run(self, registry, repository, sec41_run):
        registry.add_run(sec41_run)

        repository.find.assert_called_once_with("sec41", 1, sec41_run.config_hash)
        repository.add.assert_called_once_with(sec41_run)

    def test_find_run_delegates_to_repository(self, registry, repository, sec41_run):
        repository.find.return_value = sec41_run

        assert registry.find_run(*sec41_run.identity) is sec41_run

    def test_duplicate_run_raises_error(self, registry, repository, sec41_run):
        """Archiving the same config under the same stem and seed twice raises"""
        repository.find.return_value = sec41_run

        with pytest.raises(DuplicateRunError) as exc_info:
            registry.add_run(RunRecord("sec41", 1, "experiment", "[sweep]\nseed = 1\n"))

        assert exc_info.value.run_key == "sec41_1"
        assert exc_info.value.config_hash == sec41_run.config_hash
        repository.add.assert_not_called()
