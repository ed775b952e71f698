from .session import (DEFAULT_TTL_BLOCKS, ExecutedTest, NOT_REPLICABLE, OK,
                      REPLICABLE, ReplicabilityVerdict, S1, S2, S3, S4,
                      TIME_SEPARATION_REQUIRED, TestSession, TxtNode, clone_tx)
from .service import create_app

__all__ = [
    "DEFAULT_TTL_BLOCKS", "ExecutedTest", "NOT_REPLICABLE", "OK", "REPLICABLE",
    "ReplicabilityVerdict", "S1", "S2", "S3", "S4", "TIME_SEPARATION_REQUIRED",
    "TestSession", "TxtNode", "clone_tx", "create_app",
]
