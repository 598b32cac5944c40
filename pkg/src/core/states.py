from enum import Enum, IntEnum


class Command(Enum):
    VERIFY = "verify"
    SPECTRUM = "spectrum"
    CROSSCHECK = "crosscheck"
    SCAN = "scan"
    CATALOG = "catalog"


class ExitCode(IntEnum):
    OK = 0
    USAGE = 1           # bad arguments or config
    COUNTEREXAMPLE = 2
    UNCONFIRMED = 3     # certified, numerics disagree at tolerance


class Track(Enum):
    POLYNOMIAL = "polynomial"
    ELLIPTIC = "elliptic"


class CertStatus(Enum):
    CERTIFIED = "certified"
    COUNTEREXAMPLE = "counterexample"
    DECOUPLED = "decoupled (theta=0)"
    FAILED = "failed"
