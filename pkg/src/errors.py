from typing import Any, Sequence


class OracleBoundsError(Exception):
    """Base class for every error raised by the testbed"""


class DomainViolationError(OracleBoundsError):
    """Raised when a query point lies outside the instance domain"""

    def __init__(self, point: Any, domain: Any):
        self.point = point
        self.domain = domain
        super().__init__(f"Point {point} lies outside {domain}")


class ParameterOutOfRangeError(OracleBoundsError):
    """Raised when a construction parameter violates its admissible range"""

    def __init__(self, name: str, value: Any, admissible: str):
        self.name = name
        self.value = value
        self.admissible = admissible
        super().__init__(f"Parameter {name}={value} violates {admissible}")


class PackingConstructionError(OracleBoundsError):
    """Raised when the greedy random packing exhausts its retry budget"""

    def __init__(self, dim: int, restarts: int):
        self.dim = dim
        self.restarts = restarts
        super().__init__(
            f"Greedy sign packing for n={dim} failed after {restarts} restarts"
        )


class SinglePointPackingError(OracleBoundsError):
    """Raised when the requested separation exceeds the domain diameter"""

    def __init__(self, sep: float, diameter: float):
        self.sep = sep
        self.diameter = diameter
        super().__init__(
            f"Separation {sep} exceeds diameter {diameter}; "
            "a packing of size >= 2 is impossible"
        )


class IncompatibleInstancesError(OracleBoundsError):
    """Raised when two instances do not share family and domain"""

    def __init__(self, left: Any, right: Any):
        self.left = left
        self.right = right
        super().__init__(f"Instances are not comparable: {left} vs {right}")


class IncompatibleOracleError(OracleBoundsError):
    """Raised when an oracle cannot answer queries about an instance"""

    def __init__(self, oracle_kind: Any, reason: str):
        self.oracle_kind = oracle_kind
        self.reason = reason
        super().__init__(f"Oracle {oracle_kind} is incompatible: {reason}")


class UnsupportedOracleError(OracleBoundsError):
    """Raised when an operation has no closed form for the oracle kind"""

    def __init__(self, oracle_kind: Any, operation: str):
        self.oracle_kind = oracle_kind
        self.operation = operation
        super().__init__(f"{operation} is not supported for oracle {oracle_kind}")


class UnsupportedCountError(OracleBoundsError):
    """Raised for hypothesis counts the Fano bounds do not cover"""

    def __init__(self, count: int):
        self.count = count
        super().__init__(
            f"Fano bound is defined for N = 2 or N > 4 hypotheses, got N={count}"
        )


class UnsupportedEnsembleError(OracleBoundsError):
    """Raised when an ensemble lacks a property an operation needs"""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"Unsupported ensemble: {reason}")


class ConfigError(OracleBoundsError):
    """Raised with every violation found while parsing an experiment config"""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("Invalid configuration:\n  " + "\n  ".join(self.violations))


class DuplicateRunError(OracleBoundsError):
    """Raised when a run with the same stem, seed and config is already archived"""

    def __init__(self, run_key: str, config_hash: str):
        self.run_key = run_key
        self.config_hash = config_hash
        super().__init__(f"Run {run_key} with config {config_hash[:12]} already exists")
