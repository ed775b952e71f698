"""Expiration cache: algorithm branches, oracle equivalence, footprint."""

import random
import threading

import pytest

from txcap.chain.types import Address, Transaction
from txcap.errors import DomainError, UnminedTransaction
from txcap.txsea.cache import (EXPIRED, MODE_SENDER_AWARE, MODE_STRICT,
                               SENDER_AWARE_RECORD_BYTES, STRICT_RECORD_BYTES,
                               UNEXPIRED, ExpirationMap)
from txcap.txsea.oracle import brute_force_expiration
from txcap.txsea.retry import retry_success_probability

from helpers import HistoryTx, random_history, random_query

A = Address.from_int(0xA)
B = Address.from_int(0xB)
S1 = Address.from_int(0x51)
S2 = Address.from_int(0x52)


def probe(sender, recipient, block) -> HistoryTx:
    return HistoryTx(sender, recipient, block)


def feed(emap: ExpirationMap, *txs: HistoryTx) -> None:
    for tx in txs:
        emap.cache_transaction(tx)


def test_cache_records_and_overwrites():
    emap = ExpirationMap(mode=MODE_STRICT)
    feed(emap, probe(S1, A, 5))
    assert emap.entries[A].last_block == 5
    feed(emap, probe(S1, A, 9))
    assert emap.entries[A].last_block == 9
    feed(emap, probe(S1, B, 9))
    assert emap.entries[A].last_block == 9
    assert emap.entries[B].last_block == 9


def test_unmined_transaction_rejected():
    emap = ExpirationMap()
    tx = Transaction(nonce=0, gas_price=1, gas_offer=1, sender=S1,
                     recipient=A, value=0)
    with pytest.raises(UnminedTransaction):
        emap.cache_transaction(tx)
    with pytest.raises(UnminedTransaction):
        emap.expiration_test(tx)


def test_three_branches_of_the_expiration_test():
    emap = ExpirationMap(mode=MODE_STRICT)
    # absent recipient: trivially unexpired
    assert emap.expiration_test(probe(S1, A, 5)) == UNEXPIRED
    feed(emap, probe(S1, A, 7))
    # cached block at the probe block: expired
    assert emap.expiration_test(probe(S2, A, 7)) == EXPIRED
    # cached block strictly earlier: unexpired
    assert emap.expiration_test(probe(S2, A, 10)) == UNEXPIRED


def test_strict_mode_counts_own_later_transaction():
    emap = ExpirationMap(mode=MODE_STRICT)
    feed(emap, probe(S1, A, 9))
    assert emap.expiration_test(probe(S1, A, 5)) == EXPIRED  # conservative


def test_sender_aware_ignores_own_later_transaction():
    emap = ExpirationMap(mode=MODE_SENDER_AWARE)
    feed(emap, probe(S1, A, 9))
    assert emap.expiration_test(probe(S1, A, 5)) == UNEXPIRED
    assert emap.expiration_test(probe(S2, A, 5)) == EXPIRED


def test_sender_aware_keeps_foreign_witness_behind_own_latest():
    emap = ExpirationMap(mode=MODE_SENDER_AWARE)
    feed(emap, probe(S2, A, 7), probe(S1, A, 9))
    # the latest entry is S1's own, but S2 interfered at block 7
    assert emap.expiration_test(probe(S1, A, 6)) == EXPIRED
    assert emap.expiration_test(probe(S1, A, 8)) == UNEXPIRED


def test_oracle_equivalence_small():
    rng = random.Random(1234)
    for _ in range(60):
        history = random_history(rng, max_txs=400)
        at_block = history[-1].block_included
        strict = ExpirationMap(mode=MODE_STRICT)
        aware = ExpirationMap(mode=MODE_SENDER_AWARE)
        for tx in history:
            strict.cache_transaction(tx)
            aware.cache_transaction(tx)
        for _ in range(60):
            q = random_query(rng, history)
            assert strict.expiration_test(q) == brute_force_expiration(
                history, q, at_block, sender_blind=True)
            assert aware.expiration_test(q) == brute_force_expiration(
                history, q, at_block)


def test_genesis_only_history_everything_unexpired():
    assert brute_force_expiration([], probe(S1, A, 1), 100) == UNEXPIRED


def test_single_foreign_witness_is_enough():
    history = [probe(S2, A, 8)]
    assert brute_force_expiration(history, probe(S1, A, 5), 10) == EXPIRED
    assert brute_force_expiration(history, probe(S1, B, 5), 10) == UNEXPIRED


def test_monotonicity_no_unexpiring():
    rng = random.Random(5)
    emap = ExpirationMap()
    queries = [probe(S1, A, b) for b in range(0, 30, 3)]
    expired_seen = set()
    block = 0
    for _ in range(200):
        block += rng.choice((0, 1, 2))
        emap.cache_transaction(probe(rng.choice((S1, S2)), A, block))
        for q in queries:
            if emap.expiration_test(q) == EXPIRED:
                expired_seen.add(q.block_included)
            else:
                assert q.block_included not in expired_seen, \
                    "a query flipped back from expired"


def test_partition_is_total():
    emap = ExpirationMap()
    feed(emap, probe(S1, A, 3))
    for b in range(0, 6):
        assert emap.expiration_test(probe(S2, A, b)) in (EXPIRED, UNEXPIRED)


def test_sequence_expiration():
    emap = ExpirationMap()
    seq = [probe(S1, A, 11), probe(S1, A, 12)]
    # quiet window: unexpired
    assert emap.sequence_expiration_test(seq) == UNEXPIRED
    # foreign traffic to another contract: still fine
    feed(emap, probe(S2, B, 12))
    assert emap.sequence_expiration_test(seq) == UNEXPIRED
    # foreign traffic to the same contract inside the window: expired
    feed(emap, probe(S2, A, 11))
    assert emap.sequence_expiration_test(seq) == EXPIRED


def test_sequence_rejects_empty():
    with pytest.raises(DomainError):
        ExpirationMap().sequence_expiration_test([])


def test_strict_footprint_is_exactly_52_bytes_per_entry():
    emap = ExpirationMap(mode=MODE_STRICT)
    for i in range(1, 40):
        emap.cache_transaction(probe(S1, Address.from_int(i), i))
        blob = emap.dump()
        assert len(blob) == STRICT_RECORD_BYTES * i


def test_dump_load_round_trip_both_modes():
    rng = random.Random(9)
    history = random_history(rng, max_txs=300)
    for mode in (MODE_STRICT, MODE_SENDER_AWARE):
        emap = ExpirationMap(mode=mode)
        for tx in history:
            emap.cache_transaction(tx)
        blob = emap.dump()
        size = STRICT_RECORD_BYTES if mode == MODE_STRICT else SENDER_AWARE_RECORD_BYTES
        assert len(blob) == size * len(emap)
        again = ExpirationMap.load(blob, mode=mode)
        assert again.entries == emap.entries
        at_block = history[-1].block_included
        for _ in range(40):
            q = random_query(rng, history)
            assert again.expiration_test(q) == emap.expiration_test(q)


def test_concurrent_readers_never_see_torn_entries():
    emap = ExpirationMap(mode=MODE_SENDER_AWARE)
    stop = threading.Event()
    errors = []

    def writer():
        block = 0
        sender_flip = [S1, S2]
        i = 0
        while not stop.is_set():
            block += 1
            emap.cache_transaction(probe(sender_flip[i % 2], A, block))
            i += 1

    def reader():
        while not stop.is_set():
            entry = emap.entries.get(A)
            if entry is None:
                continue
            # a consistent snapshot always satisfies: the foreign witness
            # never outruns the latest block
            if entry.other_sender_block is not None and \
                    entry.other_sender_block > entry.last_block:
                errors.append(entry)

    threads = [threading.Thread(target=writer)] + \
        [threading.Thread(target=reader) for _ in range(3)]
    for t in threads:
        t.start()
    import time
    time.sleep(0.3)
    stop.set()
    for t in threads:
        t.join()
    assert not errors


def test_retry_formula_values():
    # k=1 returns the single-attempt probability unchanged
    assert retry_success_probability(0.9319, 1) == 0.9319
    # frozen from independent evaluation: 1 - (1 - 0.9319)^2
    assert retry_success_probability(0.9319, 2) == pytest.approx(0.99536239, abs=1e-5)
    assert retry_success_probability(1.0, 7) == 1.0
    assert retry_success_probability(0.0, 5) == 0.0


def test_retry_domain_errors():
    with pytest.raises(DomainError):
        retry_success_probability(-0.1, 1)
    with pytest.raises(DomainError):
        retry_success_probability(1.1, 1)
    with pytest.raises(DomainError):
        retry_success_probability(0.5, 0)
