import pytest
from mongomock import MongoClient

from src.errors import DuplicateRunError
from src.record import RunRecord
from src.repositories.mongo_repository import MongoRunRepository


@pytest.fixture
def mongo_repo():
    """Create a MongoRunRepository with mongomock client"""
    client = MongoClient()
    repo = MongoRunRepository(
        client=client,
        database_name="test_oracle_complexity",
        collection_name="runs",
    )
    yield repo
    repo.collection.delete_many({})
    client.close()


@pytest.fixture
def sec41_run():
    return RunRecord(
        stem="sec41",
        seed=1,
        mode="experiment",
        config_text="[sweep]\nseed = 1\n",
        header=["horizon", "mean_err"],
        rows=[[1, 0.08], [10, 0.01]],
        reports=[
            {
                "name": "ir_upper",
                "value_nats": 0.1,
                "validity": [],
            }
        ],
    )


@pytest.fixture
def thm4_run():
    return RunRecord(
        stem="thm4",
        seed=4,
        mode="experiment",
        config_text="[bound]\nwhich = thm4\n",
        reports=[
            {
                "name": "thm4",
                "value_nats": 18.87,
                "validity": [{"condition": "c^(1-α) < min(L^α / 2, 1)", "satisfied": False}],
            }
        ],
    )


class TestMongoRunRepository:
    """Tests for the MongoDB run archive"""

    def test_add_run(self, mongo_repo, sec41_run):
        """Test adding a run to MongoDB"""
        mongo_repo.add(sec41_run)

        assert mongo_repo.collection.count_documents({}) == 1
        found = mongo_repo.find(*sec41_run.identity)
        assert found is not None
        assert found.run_key == "sec41_1"
        assert found.mode == "experiment"
        assert found.header == ["horizon", "mean_err"]
        assert found.rows == [[1, 0.08], [10, 0.01]]

    def test_reports_preserved(self, mongo_repo, thm4_run):
        """Test that bound reports and their validity survive storage"""
        mongo_repo.add(thm4_run)

        found = mongo_repo.find(*thm4_run.identity)
        assert found.reports[0]["validity"][0]["satisfied"] is False

    def test_find_misses_other_seed_or_config(self, mongo_repo, sec41_run):
        mongo_repo.add(sec41_run)

        assert mongo_repo.find("sec41", 2, sec41_run.config_hash) is None
        assert mongo_repo.find("sec41", 1, "0" * 64) is None

    def test_duplicate_identity_raises_error(self, mongo_repo, sec41_run):
        """The compound unique index rejects a second run with the same stem, seed and config"""
        mongo_repo.add(sec41_run)
        duplicate = RunRecord("sec41", 1, "complexity", sec41_run.config_text)

        with pytest.raises(DuplicateRunError) as exc_info:
            mongo_repo.add(duplicate)

        assert exc_info.value.run_key == "sec41_1"
        assert mongo_repo.collection.count_documents({}) == 1

    def test_edited_config_archives_separately(self, mongo_repo, sec41_run):
        """Same stem and seed with a different config is a different run"""
        edited = RunRecord("sec41", 1, "experiment", sec41_run.config_text + "trials = 60\n")

        mongo_repo.add(sec41_run)
        mongo_repo.add(edited)

        assert mongo_repo.collection.count_documents({"stem": "sec41", "seed": 1}) == 2
        assert mongo_repo.find(*edited.identity).config_text.endswith("trials = 60\n")

    def test_document_carries_identity(self, sec41_run):
        doc = MongoRunRepository.to_document(sec41_run)

        assert (doc["stem"], doc["seed"], doc["config_hash"]) == sec41_run.identity
        assert doc["config_text"] == "[sweep]\nseed = 1\n"
        assert doc["reports"][0]["name"] == "ir_upper"

    def test_from_document_defaults(self):
        text = "x"
        doc = {
            "stem": "thm8",
            "seed": 8,
            "config_hash": RunRecord("thm8", 8, "", text).config_hash,
            "mode": "active_learning",
            "config_text": text,
        }

        record = MongoRunRepository.from_document(doc)

        assert record.run_key == "thm8_8"
        assert record.rows == []
        assert record.reports == []

    def test_from_document_rejects_tampered_config(self):
        doc = {"stem": "thm8", "seed": 8, "config_hash": "0" * 64, "mode": "x", "config_text": "x"}

        with pytest.raises(ValueError, match="does not match"):
            MongoRunRepository.from_document(doc)

    def test_mongomock_uri(self, sec41_run):
        repo = MongoRunRepository(connection_string="mongomock://localhost")

        assert repo.find(*sec41_run.identity) is None
        repo.close()
