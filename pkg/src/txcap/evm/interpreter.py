"""Stack interpreter over the curated opcode subset.

Execution is a pure function of (code, input, context); all account writes
are buffered in a :class:`StateView` and only reach the underlying world
state when the outermost frame succeeds and the caller commits. A reverted
frame rolls its buffered writes back, so its state delta is empty.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..primitives import Address, WORD_MAX
from .opcodes import BY_BYTE, OpInfo
from .trace import Frame, OUTCOME_REVERT, OUTCOME_SUCCESS, TraceOp

CALL_DEPTH_LIMIT = 64
STACK_LIMIT = 1024
MEMORY_LIMIT = 1 << 20
ADDR_MASK = 2**160 - 1


class StateView:
    """Copy-on-write view over a WorldState with checkpoint/rollback."""

    def __init__(self, base: WorldState):
        self.base = base
        self._delta: dict[Address, Account] = {}
        self._destroyed: set[Address] = set()

    # -- reads ---------------------------------------------------------
    def _read(self, addr: Address) -> Account:
        acct = self._delta.get(addr)
        if acct is None:
            acct = self.base.peek(addr)
        return acct

    def balance_of(self, addr: Address) -> int:
        return self._read(addr).balance

    def nonce_of(self, addr: Address) -> int:
        return self._read(addr).nonce

    def code_of(self, addr: Address) -> bytes:
        return self._read(addr).code

    def storage_get(self, addr: Address, key: int) -> int:
        return self._read(addr).storage.get(key, 0)

    # -- writes (copy on first touch) -----------------------------------
    def _owned(self, addr: Address) -> Account:
        acct = self._delta.get(addr)
        if acct is None:
            acct = self.base.peek(addr).copy()
            self._delta[addr] = acct
        return acct

    def add_balance(self, addr: Address, amount: int) -> None:
        self._owned(addr).balance += amount

    def sub_balance(self, addr: Address, amount: int) -> None:
        acct = self._owned(addr)
        if acct.balance < amount:
            raise ValueError("balance underflow")
        acct.balance -= amount

    def bump_nonce(self, addr: Address) -> None:
        self._owned(addr).nonce += 1

    def storage_set(self, addr: Address, key: int, value: int) -> None:
        acct = self._owned(addr)
        if value == 0:
            acct.storage.pop(key, None)
        else:
            acct.storage[key] = value

    def set_code(self, addr: Address, code: bytes) -> None:
        self._owned(addr).code = code

    def destroy(self, addr: Address) -> None:
        self._owned(addr).balance = 0
        self._destroyed.add(addr)

    # -- checkpoints -----------------------------------------------------
    def checkpoint(self) -> tuple[dict[Address, Account], set[Address]]:
        return ({a: acct.copy() for a, acct in self._delta.items()},
                set(self._destroyed))

    def rollback(self, cp: tuple[dict[Address, Account], set[Address]]) -> None:
        self._delta, self._destroyed = cp

    def commit(self) -> None:
        """Apply buffered writes to the underlying world state."""
        for addr, acct in self._delta.items():
            self.base.accounts[addr] = acct
        for addr in self._destroyed:
            self.base.accounts.pop(addr, None)
        self._delta = {}
        self._destroyed = set()


@dataclass
class VmContext:
    """Read-only execution environment for one transaction.

    ``block`` answers the block-attribute opcodes, ``tx_gas_price`` answers
    GASPRICE, and ``state`` answers BALANCE/SLOAD through the buffered view.
    """

    block: Block
    tx_gas_price: int
    state: StateView
    block_hashes: dict[int, bytes] = field(default_factory=dict)

    def blockhash(self, number: int) -> int:
        # zero for the current block, future blocks, and anything older
        # than the most recent 256 blocks
        if number >= self.block.number or self.block.number - number > 256:
            return 0
        raw = self.block_hashes.get(number)
        return int.from_bytes(raw, "big") if raw else 0


@dataclass
class ExecResult:
    outcome: str
    return_data: bytes
    frame: Frame
    gas_used: int

    @property
    def ok(self) -> bool:
        return self.outcome == OUTCOME_SUCCESS


class GasSchedule:
    """Flat gas model: a fixed cost per opcode plus a per-tx intrinsic charge."""

    def __init__(self, per_opcode: int = 1, intrinsic: int = 21_000):
        self.per_opcode = per_opcode
        self.intrinsic = intrinsic

    def cost(self, info: OpInfo) -> int:
        return self.per_opcode


DEFAULT_GAS = GasSchedule()


class _Halt(Exception):
    def __init__(self, outcome: str, data: bytes = b"", error: str = ""):
        self.outcome = outcome
        self.data = data
        self.error = error


def _jump_targets(code: bytes) -> set[int]:
    """Positions of JUMPDEST opcodes that are not inside push immediates."""
    targets: set[int] = set()
    pc = 0
    while pc < len(code):
        info = BY_BYTE.get(code[pc])
        if info is None:
            pc += 1
            continue
        if info.mnemonic == "JUMPDEST":
            targets.add(pc)
        pc += 1 + info.immediate
    return targets


def execute(code: bytes, input: bytes, ctx: VmContext, depth: int = 0, *,
            address: Address, caller: Address, value: int = 0,
            gas: int = 10**9, static: bool = False,
            gas_schedule: GasSchedule = DEFAULT_GAS) -> ExecResult:
    """Run ``code`` in one frame, recursing through CALL/STATICCALL.

    The value transfer into ``address`` happens inside the frame boundary,
    so a revert undoes it. Every structural failure (stack underflow, bad
    jump, unknown opcode, out of gas) maps to a reverted frame rather than
    an exception.
    """
    state = ctx.state
    frame = Frame(callee=address, caller=caller, value=value, input=input)
    cp = state.checkpoint()
    if value:
        if state.balance_of(caller) < value:
            # caller cannot fund the transfer; frame never starts
            frame.outcome = OUTCOME_REVERT
            frame.error = "insufficient value"
            return ExecResult(OUTCOME_REVERT, b"", frame, 0)
        state.sub_balance(caller, value)
        state.add_balance(address, value)

    stack: list[int] = []
    memory = bytearray()
    targets = _jump_targets(code)
    gas_left = gas
    return_data = b""
    outcome = OUTCOME_SUCCESS
    error = ""

    def mem_write(offset: int, data: bytes) -> None:
        end = offset + len(data)
        if end > MEMORY_LIMIT:
            raise _Halt(OUTCOME_REVERT, error="memory limit")
        if end > len(memory):
            memory.extend(b"\x00" * (end - len(memory)))
        memory[offset:end] = data

    def mem_read(offset: int, size: int) -> bytes:
        end = offset + size
        if end > MEMORY_LIMIT:
            raise _Halt(OUTCOME_REVERT, error="memory limit")
        if end > len(memory):
            memory.extend(b"\x00" * (end - len(memory)))
        return bytes(memory[offset:end])

    pc = 0
    try:
        while pc < len(code):
            byte = code[pc]
            info = BY_BYTE.get(byte)
            if info is None:
                frame.opcodes.append(TraceOp(f"0x{byte:02x}"))
                raise _Halt(OUTCOME_REVERT, error="unknown opcode")
            operand: Optional[int] = None
            if info.immediate:
                raw = code[pc + 1: pc + 1 + info.immediate]
                if len(raw) < info.immediate:
                    frame.opcodes.append(TraceOp(info.mnemonic))
                    raise _Halt(OUTCOME_REVERT, error="truncated push")
                operand = int.from_bytes(raw, "big")
            frame.opcodes.append(TraceOp(info.mnemonic, operand))
            op_index = len(frame.opcodes) - 1

            gas_left -= gas_schedule.cost(info)
            if gas_left < 0:
                raise _Halt(OUTCOME_REVERT, error="out of gas")
            if len(stack) < info.pops:
                raise _Halt(OUTCOME_REVERT, error="stack underflow")

            pc += 1 + info.immediate
            m = info.mnemonic

            if m == "STOP":
                raise _Halt(OUTCOME_SUCCESS)
            elif m == "ADD":
                a, b = stack.pop(), stack.pop()
                stack.append((a + b) & WORD_MAX)
            elif m == "MUL":
                a, b = stack.pop(), stack.pop()
                stack.append((a * b) & WORD_MAX)
            elif m == "SUB":
                a, b = stack.pop(), stack.pop()
                stack.append((a - b) & WORD_MAX)
            elif m == "DIV":
                a, b = stack.pop(), stack.pop()
                stack.append(0 if b == 0 else a // b)
            elif m == "LT":
                a, b = stack.pop(), stack.pop()
                stack.append(1 if a < b else 0)
            elif m == "GT":
                a, b = stack.pop(), stack.pop()
                stack.append(1 if a > b else 0)
            elif m == "EQ":
                a, b = stack.pop(), stack.pop()
                stack.append(1 if a == b else 0)
            elif m == "ISZERO":
                stack.append(1 if stack.pop() == 0 else 0)
            elif m == "AND":
                stack.append(stack.pop() & stack.pop())
            elif m == "OR":
                stack.append(stack.pop() | stack.pop())
            elif m == "NOT":
                stack.append(stack.pop() ^ WORD_MAX)
            elif m == "ADDRESS":
                stack.append(address.to_int())
            elif m == "BALANCE":
                who = Address.from_int(stack.pop() & ADDR_MASK)
                stack.append(state.balance_of(who))
            elif m == "CALLER":
                stack.append(caller.to_int())
            elif m == "CALLVALUE":
                stack.append(value)
            elif m == "CALLDATALOAD":
                off = stack.pop()
                word = input[off:off + 32] if off < len(input) else b""
                stack.append(int.from_bytes(word.ljust(32, b"\x00"), "big"))
            elif m == "CALLDATASIZE":
                stack.append(len(input))
            elif m == "GASPRICE":
                stack.append(ctx.tx_gas_price)
            elif m == "BLOCKHASH":
                stack.append(ctx.blockhash(stack.pop()))
            elif m == "COINBASE":
                stack.append(ctx.block.coinbase.to_int())
            elif m == "TIMESTAMP":
                stack.append(ctx.block.timestamp)
            elif m == "NUMBER":
                stack.append(ctx.block.number)
            elif m == "DIFFICULTY":
                stack.append(ctx.block.difficulty)
            elif m == "GASLIMIT":
                stack.append(ctx.block.gas_limit)
            elif m == "SELFBALANCE":
                stack.append(state.balance_of(address))
            elif m == "POP":
                stack.pop()
            elif m == "MLOAD":
                off = stack.pop()
                stack.append(int.from_bytes(mem_read(off, 32), "big"))
            elif m == "MSTORE":
                off, val = stack.pop(), stack.pop()
                mem_write(off, val.to_bytes(32, "big"))
            elif m == "SLOAD":
                stack.append(state.storage_get(address, stack.pop()))
            elif m == "SSTORE":
                if static:
                    raise _Halt(OUTCOME_REVERT, error="write in static call")
                key, val = stack.pop(), stack.pop()
                state.storage_set(address, key, val)
            elif m == "JUMP":
                dest = stack.pop()
                if dest not in targets:
                    raise _Halt(OUTCOME_REVERT, error="invalid jump")
                pc = dest
            elif m == "JUMPI":
                dest, cond = stack.pop(), stack.pop()
                if cond:
                    if dest not in targets:
                        raise _Halt(OUTCOME_REVERT, error="invalid jump")
                    pc = dest
            elif m == "JUMPDEST":
                pass
            elif m == "LOG0":
                stack.pop(), stack.pop()
                if static:
                    raise _Halt(OUTCOME_REVERT, error="write in static call")
            elif m in ("CALL", "STATICCALL"):
                if m == "CALL":
                    c_gas, c_to, c_val = stack.pop(), stack.pop(), stack.pop()
                else:
                    c_gas, c_to = stack.pop(), stack.pop()
                    c_val = 0
                a_off, a_len, r_off, r_len = (stack.pop(), stack.pop(),
                                              stack.pop(), stack.pop())
                if static and c_val:
                    raise _Halt(OUTCOME_REVERT, error="write in static call")
                if depth + 1 > CALL_DEPTH_LIMIT:
                    stack.append(0)
                    continue
                callee = Address.from_int(c_to & ADDR_MASK)
                sub_input = mem_read(a_off, a_len)
                sub_gas = min(c_gas, gas_left)
                sub = execute(state.code_of(callee), sub_input, ctx, depth + 1,
                              address=callee, caller=address, value=c_val,
                              gas=sub_gas, static=static or m == "STATICCALL",
                              gas_schedule=gas_schedule)
                frame.children.append((op_index, sub.frame))
                gas_left -= sub.gas_used
                return_data = sub.return_data
                if sub.ok and r_len:
                    mem_write(r_off, sub.return_data[:r_len].ljust(r_len, b"\x00"))
                stack.append(1 if sub.ok else 0)
            elif m == "RETURN":
                off, size = stack.pop(), stack.pop()
                raise _Halt(OUTCOME_SUCCESS, mem_read(off, size))
            elif m == "REVERT":
                off, size = stack.pop(), stack.pop()
                raise _Halt(OUTCOME_REVERT, mem_read(off, size), error="revert")
            elif m == "SELFDESTRUCT":
                if static:
                    raise _Halt(OUTCOME_REVERT, error="write in static call")
                heir = Address.from_int(stack.pop() & ADDR_MASK)
                balance = state.balance_of(address)
                if heir != address:
                    state.sub_balance(address, balance)
                    state.add_balance(heir, balance)
                state.destroy(address)
                raise _Halt(OUTCOME_SUCCESS)
            elif m.startswith("PUSH"):
                stack.append(operand)
            elif m.startswith("DUP"):
                n = int(m[3:])
                stack.append(stack[-n])
            elif m.startswith("SWAP"):
                n = int(m[4:])
                stack[-1], stack[-n - 1] = stack[-n - 1], stack[-1]
            else:  # pragma: no cover - table is closed
                raise _Halt(OUTCOME_REVERT, error="unknown opcode")

            if len(stack) > STACK_LIMIT:
                raise _Halt(OUTCOME_REVERT, error="stack overflow")
    except _Halt as halt:
        outcome, return_data, error = halt.outcome, halt.data, halt.error
    # falling off the end of code behaves like STOP

    if outcome == OUTCOME_REVERT:
        state.rollback(cp)
    frame.outcome = outcome
    frame.error = error
    gas_used = gas - max(gas_left, 0)
    return ExecResult(outcome, return_data, frame, gas_used)
