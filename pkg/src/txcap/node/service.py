"""HTTP JSON API around the instrumented node.

All hashes and addresses render as lowercase 0x-hex; every error body is
``{"code", "rule", "detail"}``. The session endpoints are the contract the
browser console consumes; the admin endpoints drive the surrounding
simulated network (canonical traffic and mining) so interference and
finalization can be demonstrated end to end.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..asm.compiler import encode_args
from ..chain.types import Address, Transaction
from ..errors import (DomainError, NotS1, SequenceRuleViolation, SessionExpiredTtl,
                      SessionNotFound, TimeSeparationRequired, TxcapError,
                      ValidationFailure)
from .session import TxtNode

_HTTP_STATUS = {
    SessionNotFound: 404,
    SessionExpiredTtl: 410,
    NotS1: 409,
    TimeSeparationRequired: 422,
}


class TxRequest(BaseModel):
    sender: str
    recipient: str
    value: int = 0
    gas_price: int = 0
    gas_offer: int = 1_000_000
    nonce: Optional[int] = None
    function: str = ""              # function name (registry) or 0x-selector
    args: list[int | str] = Field(default_factory=list)
    args_hex: str = ""              # raw pre-encoded argument bytes


class SessionCreated(BaseModel):
    session: str
    fork_base_block: int
    status: str
    ttl_blocks: int


class ReceiptModel(BaseModel):
    status: str
    gas_used: int
    return_data: str
    error: str
    contract_address: Optional[str]


class SubmitResult(BaseModel):
    session: str
    tx_hash: str
    fork_block: int
    receipt: ReceiptModel
    classification: dict
    status: str
    trace_opcode_count: int
    trace: dict


class StatusResponse(BaseModel):
    session: str
    status: str
    classification: Optional[dict]
    expiration: dict
    fork_base_block: int
    ttl_blocks_left: int
    receipts: list[dict]


class FinalizeResult(BaseModel):
    session: str
    tx_hash: str
    gas_price: int
    propagation: dict
    mined_block: Optional[int]


class AccountView(BaseModel):
    address: str
    balance: int
    nonce: int
    is_contract: bool
    contract_name: Optional[str]


class TrafficRequest(BaseModel):
    sender: str
    recipient: str
    value: int = 0
    gas_price: Optional[int] = None
    gas_offer: int = 1_000_000
    function: str = ""
    args: list[int | str] = Field(default_factory=list)
    mine: bool = True


def _parse_function(node: TxtNode, recipient: Address, name: str) -> bytes:
    if not name:
        return b""
    if name.startswith("0x"):
        return bytes.fromhex(name[2:])
    compiled = node.registry.get(recipient)
    if compiled is None or name not in compiled.selectors:
        raise DomainError(f"unknown function {name!r} for {recipient.hex()}")
    return compiled.selector_of(name)


def _build_tx(node: TxtNode, req: TxRequest, *, session_id: Optional[str] = None,
              default_gas_price: Optional[int] = None) -> Transaction:
    sender = Address.from_hex(req.sender)
    recipient = Address.from_hex(req.recipient)
    nonce = req.nonce
    if nonce is None:
        if session_id is not None:
            session = node.sessions.get(session_id)
            state = session.fork.state if session else node.chain.state
        else:
            state = node.chain.state
        nonce = state.peek(sender).nonce
    args = bytes.fromhex(req.args_hex[2:]) if req.args_hex.startswith("0x") \
        else encode_args([_coerce(a) for a in req.args])
    gas_price = req.gas_price if default_gas_price is None else default_gas_price
    return Transaction(nonce=nonce, gas_price=gas_price, gas_offer=req.gas_offer,
                       sender=sender, recipient=recipient, value=req.value,
                       function_selector=_parse_function(node, recipient, req.function),
                       args=args)


def _coerce(value: int | str):
    if isinstance(value, str) and value.startswith("0x") and len(value) == 42:
        return Address.from_hex(value)
    return value


def create_app(node: TxtNode, ui_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="txcap instrumented node", version="0.1.0")
    app.state.node = node

    @app.exception_handler(TxcapError)
    async def _txcap_error(_req: Request, exc: TxcapError):
        status = _HTTP_STATUS.get(type(exc), 400 if isinstance(exc, ValidationFailure) else 500)
        rule = getattr(exc, "rule", "")
        return JSONResponse(status_code=status,
                            content={"code": exc.code, "rule": rule,
                                     "detail": exc.detail})

    @app.get("/healthz")
    def healthz():
        return {"ok": True, "head": node.chain.head.number}

    @app.post("/sessions", response_model=SessionCreated)
    def open_session():
        session = node.open_session()
        return SessionCreated(session=session.id,
                              fork_base_block=session.fork_base_block,
                              status=session.status, ttl_blocks=session.ttl_blocks)

    @app.post("/sessions/{session_id}/tx", response_model=SubmitResult)
    def submit_tx(session_id: str, req: TxRequest):
        tx = _build_tx(node, req, session_id=session_id)
        executed = node.submit_test(session_id, tx)
        session = node.sessions[session_id]
        return SubmitResult(
            session=session_id,
            tx_hash=executed.tx.hash_hex(),
            fork_block=executed.fork_block,
            receipt=ReceiptModel(**executed.receipt.to_json()),
            classification=executed.classification.to_json(),
            status=session.status,
            trace_opcode_count=len(executed.trace.opcodes),
            trace=executed.trace.to_json(),
        )

    @app.get("/sessions/{session_id}/status", response_model=StatusResponse)
    def session_status(session_id: str):
        return StatusResponse(**node.poll_status(session_id))

    @app.post("/sessions/{session_id}/finalize", response_model=FinalizeResult)
    def finalize(session_id: str, tx_index: int = 0, mine: bool = True):
        final, report = node.finalize(session_id, tx_index)
        mined_block = None
        if mine and report.admitted:
            miner = next((i for i in report.admitted
                          if not node.network.nodes[i].policy.is_instrumented),
                         report.admitted[0])
            block = node.network.mine(miner)
            if any(tx.hash == final.hash for tx in block.transactions):
                mined_block = block.number
        node.sync()
        return FinalizeResult(session=session_id, tx_hash=final.hash_hex(),
                              gas_price=final.gas_price,
                              propagation=report.to_json(), mined_block=mined_block)

    @app.get("/chain/head")
    def chain_head():
        head = node.chain.head.to_json()
        head["transactions"] = [tx["hash"] for tx in head["transactions"]]
        return head

    @app.get("/accounts/{addr}", response_model=AccountView)
    def account(addr: str):
        address = Address.from_hex(addr)
        acct = node.chain.state.peek(address)
        compiled = node.registry.get(address)
        return AccountView(address=address.hex(), balance=acct.balance,
                           nonce=acct.nonce, is_contract=acct.is_contract(),
                           contract_name=compiled.name if compiled else None)

    @app.get("/contracts")
    def contracts():
        out = []
        for addr, compiled in sorted(node.registry.items()):
            fns = []
            for name, fn in compiled.program.functions.items():
                fns.append({"name": name,
                            "selector": "0x" + compiled.selector_of(name).hex(),
                            "payable": fn.payable,
                            "params": [{"name": p, "type": t} for p, t in fn.params]})
            out.append({"address": addr.hex(), "name": compiled.name,
                        "functions": fns})
        return {"contracts": out}

    @app.post("/admin/traffic")
    def admin_traffic(req: TrafficRequest):
        """Inject canonical traffic (simulated interference) and mine it."""
        tx = _build_tx(node,
                       TxRequest(**req.model_dump(exclude={"mine", "gas_price"})),
                       default_gas_price=req.gas_price or node.market_gas_price())
        report = node.network.broadcast(node.node.node_id, tx)
        mined = None
        if req.mine:
            block = node.network.mine(node.node.node_id)
            mined = block.number
        node.sync()
        return {"tx_hash": tx.hash_hex(), "propagation": report.to_json(),
                "mined_block": mined}

    @app.post("/admin/mine")
    def admin_mine(node_id: Optional[int] = None):
        block = node.network.mine(node.node.node_id if node_id is None else node_id)
        node.sync()
        return {"number": block.number, "hash": block.hash_hex(),
                "transactions": [tx.hash_hex() for tx in block.transactions]}

    if ui_dir is not None and ui_dir.exists():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
