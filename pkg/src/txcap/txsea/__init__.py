from .cache import (EXPIRED, MODE_SENDER_AWARE, MODE_STRICT,
                    SENDER_AWARE_RECORD_BYTES, STRICT_RECORD_BYTES, UNEXPIRED,
                    ExpirationMap, cache_transaction, expiration_test,
                    sequence_expiration_test)
from .oracle import brute_force_expiration
from .retry import retry_success_probability

__all__ = [
    "EXPIRED", "UNEXPIRED", "MODE_STRICT", "MODE_SENDER_AWARE",
    "STRICT_RECORD_BYTES", "SENDER_AWARE_RECORD_BYTES", "ExpirationMap",
    "cache_transaction", "expiration_test", "sequence_expiration_test",
    "brute_force_expiration", "retry_success_probability",
]
