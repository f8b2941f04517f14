import hashlib
from dataclasses import dataclass, field
from typing import List, Tuple


@dataclass(frozen=True)
class RunRecord:
    """
    One archived run: the config it ran in normal form and what it emitted.

    A run is identified by its stem, its seed and a digest of the config text,
    so rerunning a preset with an edited sweep archives a separate run.
    """

    stem: str
    seed: int
    mode: str
    config_text: str
    header: List[str] = field(default_factory=list)
    rows: List[list] = field(default_factory=list)
    reports: List[dict] = field(default_factory=list)

    @property
    def run_key(self) -> str:
        return f"{self.stem}_{self.seed}"

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.config_text.encode("utf-8")).hexdigest()

    @property
    def identity(self) -> Tuple[str, int, str]:
        return self.stem, self.seed, self.config_hash
