"""Trace language: parsing, canonical printing, round trips, matching."""

import random

import pytest

from txcap.cases.runner import golden_dir
from txcap.errors import TraceSyntaxError, UnknownVariable
from txcap.tracelang import (Amount, doc_from_json, doc_to_json, match_docs,
                             parse, print_doc)
from txcap.tracelang.render import RunStep, VarSpec, render_execution

from helpers import random_trace_doc


def test_single_entry_with_pre_and_post():
    doc = parse("1: Foo.deposit (msg.value=1 ether) [this.balance=1 ether]")
    assert len(doc.entries) == 1
    entry = doc.entries[0]
    assert (entry.contract, entry.function) == ("Foo", "deposit")
    assert len(entry.pre) == 1 and len(entry.post) == 1
    assert entry.pre[0].rhs == Amount(1, "ether")


def test_empty_pre_and_revert_post():
    doc = parse("1: C.f () [REVERT]")
    entry = doc.entries[0]
    assert entry.pre == []
    assert entry.reverted


def test_revert_is_exclusive_with_assignments():
    with pytest.raises(TraceSyntaxError):
        parse("1: C.f () [REVERT, x=1]")


def test_nested_call_between_header_and_post():
    doc = parse("""1: Foo.withdraw (this.balance=1 ether)
  2: Bar.fallback (msg.value=1000000000 wei) [REVERT]
  [REVERT]""")
    entry = doc.entries[0]
    assert len(entry.children) == 1
    assert entry.children[0].contract == "Bar"
    assert entry.children[0].reverted and entry.reverted
    assert doc.revert_count() == 2


def test_circled_numerals_accepted():
    doc = parse("① Foo.deposit (msg.value=1 ether) [x=1]\n"
                "❷ Foo.withdraw () [REVERT]")
    assert [e.index for e in doc.entries] == [1, 2]


def test_shannon_and_gwei_normalize_to_wei():
    assert Amount(80, "shannon").normalized() == ("wei", 80 * 10**9)
    assert Amount(80, "gwei").normalized() == ("wei", 80 * 10**9)
    assert Amount(1, "ether").normalized() == ("wei", 10**18)
    assert Amount(5, "").normalized() == ("wei", 5)
    assert Amount(3, "TOK").normalized() == ("unit:TOK", 3)


def test_syntax_error_carries_position_and_expectation():
    with pytest.raises(TraceSyntaxError) as err:
        parse("1: Foo.deposit (msg.value=) [x=1]")
    assert err.value.line == 1
    assert err.value.col > 0
    assert "value" in err.value.expected


def test_round_trip_500_generated_docs():
    rng = random.Random(2024)
    for _ in range(500):
        doc = random_trace_doc(rng)
        printed = print_doc(doc)
        assert parse(printed) == doc


def test_print_is_deterministic():
    rng = random.Random(3)
    doc = random_trace_doc(rng)
    assert print_doc(doc) == print_doc(doc)


def test_all_golden_files_parse():
    goldens = sorted(golden_dir().glob("*.trc"))
    assert len(goldens) == 5
    for path in goldens:
        doc = parse(path.read_text(encoding="utf-8"))
        assert doc.entries


def test_json_codec_round_trip():
    rng = random.Random(4)
    for _ in range(50):
        doc = random_trace_doc(rng)
        assert doc_from_json(doc_to_json(doc)) == doc


def test_matcher_unifies_and_detects():
    golden = parse("1: C.f (x=V_1) [y=V_1 + V_2, z=V_2]")
    good = parse("1: C.f (x=5) [y=12, z=7]")
    assert match_docs(golden, good).ok
    bad = parse("1: C.f (x=5) [y=13, z=7]")
    assert not match_docs(golden, bad).ok
    shape = parse("1: C.g (x=5) [y=12, z=7]")
    assert not match_docs(golden, shape).ok


def test_matcher_flags_revert_placement():
    golden = parse("1: C.f () [REVERT]")
    actual = parse("1: C.f () [x=1]")
    result = match_docs(golden, actual)
    assert not result.ok
    assert any("REVERT" in m for m in result.mismatches)


def test_render_empty_selection_outcome_only():
    from txcap.cases.runner import case_genesis, load_contract
    from txcap.chain.genesis import genesis_chain
    from txcap.chain.state import snapshot, restore
    from txcap.chain.types import CREATE, Transaction
    from txcap.cases.runner import DEPLOYER

    compiled = load_contract("case2")
    chain = genesis_chain(case_genesis())
    tx = Transaction(nonce=0, gas_price=10**9, gas_offer=2_000_000,
                     sender=DEPLOYER, recipient=CREATE, value=0,
                     args=compiled.deployment_args([]))
    pre = restore(snapshot(chain.state))
    chain.mine([tx])
    receipt, trace = chain.receipts[tx.hash]
    step = RunStep(contract_label="Contract", fn_label="constructor", tx=tx,
                   pre_state=pre, post_state=chain.state, receipt=receipt,
                   trace=trace)
    doc = render_execution([step], {receipt.contract_address: compiled})
    text = print_doc(doc)
    assert "()" in text
    assert doc.entries[0].post == []


def test_render_unknown_variable():
    from txcap.cases.runner import case_genesis, load_contract, DEPLOYER
    from txcap.chain.genesis import genesis_chain
    from txcap.chain.state import snapshot, restore
    from txcap.chain.types import CREATE, Transaction

    compiled = load_contract("case2")
    chain = genesis_chain(case_genesis())
    tx = Transaction(nonce=0, gas_price=10**9, gas_offer=2_000_000,
                     sender=DEPLOYER, recipient=CREATE, value=0,
                     args=compiled.deployment_args([]))
    pre = restore(snapshot(chain.state))
    chain.mine([tx])
    receipt, trace = chain.receipts[tx.hash]
    step = RunStep(contract_label="Contract", fn_label="constructor", tx=tx,
                   pre_state=pre, post_state=chain.state, receipt=receipt,
                   trace=trace, post=[VarSpec("storage", "nope")])
    with pytest.raises(UnknownVariable):
        render_execution([step], {receipt.contract_address: compiled})
