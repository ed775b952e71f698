"""Shared test machinery: deterministic generators and scenario harnesses."""

from __future__ import annotations

import random
from dataclasses import dataclass

from txcap.asm import ast
from txcap.asm.compiler import CompiledContract, compile_contract, encode_args
from txcap.chain.genesis import genesis_chain
from txcap.chain.types import Address, CREATE, ETHER, Transaction
from txcap.evm.trace import flatten_trace
from txcap.gossip.network import NodePolicy, SimNetwork
from txcap.node.session import TxtNode, clone_tx

GWEI = 10**9

DEPLOYER = Address.from_hex("0x" + "d0" * 20)
USERS = [Address.from_hex("0x" + f"{i:02x}" * 20) for i in range(1, 9)]
INTERFERER = Address.from_hex("0x" + "fe" * 20)


def dev_genesis(extra_accounts: int = 0) -> dict:
    accounts = [{"address": DEPLOYER.hex(), "balance": 1000 * ETHER, "nonce": 0},
                {"address": INTERFERER.hex(), "balance": 1000 * ETHER, "nonce": 0}]
    accounts += [{"address": u.hex(), "balance": 100 * ETHER, "nonce": 0}
                 for u in USERS[:2 + extra_accounts]]
    return {"params": {"base_fee": GWEI, "gas_limit": 30_000_000,
                       "block_time_quantum": 12},
            "accounts": accounts}


def one_node_network(genesis_doc: dict | None = None) -> SimNetwork:
    doc = genesis_doc or dev_genesis()
    return SimNetwork(lambda: genesis_chain(doc),
                      [NodePolicy(min_gas_price=GWEI, is_instrumented=True)], [])


def two_node_network(genesis_doc: dict | None = None) -> SimNetwork:
    doc = genesis_doc or dev_genesis()
    return SimNetwork(lambda: genesis_chain(doc),
                      [NodePolicy(min_gas_price=GWEI, is_instrumented=True),
                       NodePolicy(min_gas_price=GWEI)], [(0, 1)])


def dev_node(**kwargs) -> TxtNode:
    return TxtNode(one_node_network(), **kwargs)


def deploy(node: TxtNode, compiled: CompiledContract, args: list | None = None,
           value: int = 0, sender: Address = DEPLOYER) -> Address:
    """Deploy canonically through gossip so every replica converges."""
    tx = Transaction(nonce=node.chain.state.peek(sender).nonce,
                     gas_price=node.market_gas_price(), gas_offer=2_000_000,
                     sender=sender, recipient=CREATE, value=value,
                     args=compiled.deployment_args(args or []))
    node.network.broadcast(node.node.node_id, tx)
    node.network.mine(node.node.node_id)
    receipt, _ = node.chain.receipts[tx.hash]
    assert receipt.ok, f"deployment reverted: {receipt.error}"
    node.sync()
    node.register_contract(receipt.contract_address, compiled)
    return receipt.contract_address


def call_tx(node: TxtNode, sender: Address, target: Address,
            compiled: CompiledContract, fn: str, args: list | None = None,
            value: int = 0, gas_price: int = 1, nonce: int | None = None) -> Transaction:
    if nonce is None:
        nonce = node.chain.state.peek(sender).nonce
    return Transaction(nonce=nonce, gas_price=gas_price, gas_offer=1_000_000,
                       sender=sender, recipient=target, value=value,
                       function_selector=compiled.selector_of(fn),
                       args=encode_args(args or []))


# --------------------------------------------------------------------------
# random expiration histories
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HistoryTx:
    """Lightweight transaction stand-in for expiration bookkeeping."""
    sender: Address
    recipient: Address
    block_included: int


def random_history(rng: random.Random, max_txs: int = 2000,
                   n_contracts: int = 50, n_senders: int = 20) -> list[HistoryTx]:
    contracts = [Address.from_int(0xC0000 + i) for i in range(1, n_contracts + 1)]
    senders = [Address.from_int(0x50000 + i) for i in range(1, n_senders + 1)]
    n = rng.randint(1, max_txs)
    block = 0
    out: list[HistoryTx] = []
    for _ in range(n):
        block += rng.choice((0, 0, 1, 1, 1, 2, 5))
        out.append(HistoryTx(rng.choice(senders), rng.choice(contracts), block))
    return out


def random_query(rng: random.Random, history: list[HistoryTx]) -> HistoryTx:
    last_block = history[-1].block_included if history else 10
    contracts = [Address.from_int(0xC0000 + i) for i in range(1, 51)]
    senders = [Address.from_int(0x50000 + i) for i in range(1, 21)]
    return HistoryTx(rng.choice(senders), rng.choice(contracts),
                     rng.randint(0, last_block + 2))


# --------------------------------------------------------------------------
# grammar-driven trace-document generator (round-trip property)
# --------------------------------------------------------------------------

from txcap.tracelang.ast import (Amount, Assignment, Combo, Hex, Name, Text,
                                 TraceDoc, TraceEntry)

_IDENT_WORDS = ("owner", "investor", "deposited_sem", "balance", "supply",
                "msg", "sender", "value", "this", "state", "flag", "x", "y")
_UNITS = ("", "wei", "ether", "shannon", "gwei", "TOK")


def _gen_ident(rng: random.Random) -> str:
    parts = rng.sample(_IDENT_WORDS, rng.randint(1, 3))
    return ".".join(parts)


def _gen_name(rng: random.Random) -> Name:
    text = _gen_ident(rng)
    if rng.random() < 0.25:
        text += f"(A_{rng.choice('bcd')})"
    return Name(text)


def _gen_value(rng: random.Random, allow_combo: bool = True):
    roll = rng.random()
    if roll < 0.35:
        return Amount(rng.randint(0, 10**12), rng.choice(_UNITS))
    if roll < 0.5:
        return Hex("0x" + "".join(rng.choices("0123456789abcdef",
                                              k=rng.choice((8, 40)))))
    if roll < 0.65:
        return Text(rng.choice(("Oakland Token", "SNP", 'quo"ted', "back\\slash")))
    if roll < 0.8 or not allow_combo:
        return Name(rng.choice((f"A_{rng.choice('bcd')}", f"V_{rng.randint(1, 3)}",
                                _gen_ident(rng))))
    return Combo(_gen_value(rng, False), rng.choice("+-"),
                 _gen_value(rng, False))


def _gen_assigns(rng: random.Random) -> list[Assignment]:
    return [Assignment(_gen_name(rng), _gen_value(rng))
            for _ in range(rng.randint(0, 3))]


def _gen_entry(rng: random.Random, counter: list[int], depth: int) -> TraceEntry:
    counter[0] += 1
    entry = TraceEntry(index=counter[0],
                       contract=rng.choice(("Foo", "Bar", "PiggyBank", "C")),
                       function=rng.choice(("deposit", "withdraw", "put", "get",
                                            "fallback", "constructor")),
                       pre=_gen_assigns(rng))
    if depth < 2 and rng.random() < 0.35:
        for _ in range(rng.randint(1, 2)):
            entry.children.append(_gen_entry(rng, counter, depth + 1))
    entry.post = None if rng.random() < 0.3 else _gen_assigns(rng)
    return entry


def random_trace_doc(rng: random.Random) -> TraceDoc:
    counter = [0]
    return TraceDoc([_gen_entry(rng, counter, 0)
                     for _ in range(rng.randint(1, 4))])


# --------------------------------------------------------------------------
# random deterministic contracts (replicability harness)
# --------------------------------------------------------------------------

_PROBE_STMTS = (
    lambda: ast.Assign(ast.VarRef("a"), ast.Builtin("block.number")),
    lambda: ast.Assign(ast.VarRef("a"), ast.Builtin("block.timestamp")),
    lambda: ast.Assign(ast.VarRef("a"), ast.Builtin("block.difficulty")),
    lambda: ast.Assign(ast.VarRef("a"), ast.Builtin("block.coinbase")),
    lambda: ast.Assign(ast.VarRef("a"), ast.Builtin("block.gaslimit")),
    lambda: ast.Assign(ast.VarRef("a"), ast.Builtin("tx.gasprice")),
    lambda: ast.Assign(ast.VarRef("a"), ast.BalanceOf(ast.Builtin("msg.sender"))),
    lambda: ast.Assign(ast.VarRef("a"), ast.BlockHash(ast.IntLit(1))),
)

_STORAGE_VARS = ("a", "b", "c")


def _rand_expr(rng: random.Random, params: list[str], depth: int = 0) -> ast.Expr:
    leaves = [lambda: ast.IntLit(rng.randint(0, 1000)),
              lambda: ast.VarRef(rng.choice(_STORAGE_VARS)),
              lambda: ast.Builtin("msg.value"),
              lambda: ast.Builtin("this.balance")]
    if params:
        leaves.append(lambda: ast.VarRef(rng.choice(params)))
    if depth >= 2 or rng.random() < 0.45:
        return rng.choice(leaves)()
    op = rng.choice(("+", "-", "*", "/"))
    return ast.BinOp(op, _rand_expr(rng, params, depth + 1),
                     _rand_expr(rng, params, depth + 1))


def _rand_cond(rng: random.Random, params: list[str]) -> ast.Expr:
    op = rng.choice(("<", ">", "==", "!=", "<=", ">="))
    return ast.BinOp(op, _rand_expr(rng, params, 1), _rand_expr(rng, params, 1))


def _rand_stmt(rng: random.Random, params: list[str]) -> ast.Stmt:
    roll = rng.random()
    if roll < 0.55:
        return ast.Assign(ast.VarRef(rng.choice(_STORAGE_VARS)),
                          _rand_expr(rng, params))
    if roll < 0.75:
        return ast.Require(_rand_cond(rng, params))
    if roll < 0.95:
        return ast.If(_rand_cond(rng, params),
                      [ast.Assign(ast.VarRef(rng.choice(_STORAGE_VARS)),
                                  _rand_expr(rng, params))],
                      [ast.Assign(ast.VarRef(rng.choice(_STORAGE_VARS)),
                                  _rand_expr(rng, params))])
    return ast.Transfer(ast.Builtin("msg.sender"),
                        ast.BinOp("/", ast.Builtin("this.balance"),
                                  ast.IntLit(rng.randint(2, 10))))


def random_contract(rng: random.Random, *, with_probe: bool = False,
                    name: str = "Gen") -> ast.ContractProgram:
    """A contract drawn from the replay-safe statement grammar.

    With ``with_probe`` one chain-attribute read is placed first in every
    function body, guaranteeing the probe executes on any call path.
    """
    program = ast.ContractProgram(
        name=name,
        storage=[ast.StorageDecl(v, "uint") for v in _STORAGE_VARS])
    n_fns = rng.randint(1, 3)
    for i in range(n_fns):
        params = [("x", "uint")] if rng.random() < 0.5 else []
        body: list[ast.Stmt] = []
        if with_probe:
            body.append(rng.choice(_PROBE_STMTS)())
        body += [_rand_stmt(rng, [p for p, _ in params])
                 for _ in range(rng.randint(1, 4))]
        program.functions[f"fn{i}"] = ast.FunctionDef(
            name=f"fn{i}", params=params, payable=rng.random() < 0.6, body=body)
    return program


def contract_pool(seed: int, size: int, with_probe: bool = False) -> list[CompiledContract]:
    rng = random.Random(seed)
    return [compile_contract(random_contract(rng, with_probe=with_probe))
            for _ in range(size)]


# --------------------------------------------------------------------------
# one replicability scenario
# --------------------------------------------------------------------------

@dataclass
class ScenarioResult:
    kind: str
    verdict: str
    reason: str
    traces_equal: bool | None  # None when not replayed


def run_replicability_scenario(rng: random.Random, kind: str,
                               clean_pool: list[CompiledContract],
                               probe_pool: list[CompiledContract]) -> ScenarioResult:
    """Execute one randomized session and check the replay contract.

    kinds: clean (expect replicable + identical replay), field (expect a
    field-mismatch refusal), sigma (expect the nondeterminism refusal),
    interference (expect the expiration refusal).
    """
    node = dev_node()
    compiled = rng.choice(probe_pool if kind == "sigma" else clean_pool)
    target = deploy(node, compiled)
    user = rng.choice(USERS[:2])
    bystander = Address.from_int(0xBEEF)  # unrelated contract-less account

    session = node.open_session()
    n_txs = rng.randint(1, 2)
    fn_names = list(compiled.program.functions)
    executed = []
    base_nonce = node.chain.state.peek(user).nonce
    for i in range(n_txs):
        fn = rng.choice(fn_names)
        fn_def = compiled.program.functions[fn]
        value = rng.randint(0, 10**15) if fn_def.payable else 0
        args = [rng.randint(0, 10**6)] if fn_def.params else []
        tx = call_tx(node, user, target, compiled, fn, args, value,
                     nonce=base_nonce + i)
        executed.append(node.submit_test(session.id, tx))

    # background traffic that must NOT break replicability
    if rng.random() < 0.5:
        noise = Transaction(nonce=node.chain.state.peek(INTERFERER).nonce,
                            gas_price=GWEI, gas_offer=30_000, sender=INTERFERER,
                            recipient=bystander, value=123)
        node.chain.mine([noise])
        node.sync()

    finals = [clone_tx(e.tx, gas_price=GWEI) for e in executed]

    if kind == "field":
        i = rng.randrange(len(finals))
        field = rng.choice(("value", "args", "gas_offer", "nonce"))
        tx = finals[i]
        if field == "value":
            finals[i] = clone_tx(tx, value=tx.value + 1)
        elif field == "args":
            finals[i] = clone_tx(tx, args=tx.args + b"\x01")
        elif field == "gas_offer":
            finals[i] = clone_tx(tx, gas_offer=tx.gas_offer + 1)
        else:
            finals[i] = clone_tx(tx, nonce=tx.nonce + 7)
    elif kind == "interference":
        foreign = Transaction(nonce=node.chain.state.peek(INTERFERER).nonce,
                              gas_price=GWEI, gas_offer=1_000_000,
                              sender=INTERFERER, recipient=target, value=0,
                              function_selector=compiled.selector_of(fn_names[0]),
                              args=encode_args([1] if compiled.program.functions[fn_names[0]].params else []))
        node.chain.mine([foreign])
        node.sync()

    verdict = node.verify_replicability(session.id, finals)
    traces_equal = None
    if verdict.replicable:
        traces_equal = True
        for e, final in zip(executed, finals):
            node.chain.mine([final])
            receipt, trace = node.chain.receipts[final.hash]
            if flatten_trace(trace) != flatten_trace(e.trace):
                traces_equal = False
    return ScenarioResult(kind, verdict.verdict, verdict.reason, traces_equal)
