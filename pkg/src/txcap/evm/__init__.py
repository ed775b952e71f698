from .opcodes import OPCODES, STATE_PROBE_OPCODES
from .trace import ExecutionTrace, Frame, TraceOp, flatten_trace, mnemonics
from .interpreter import (CALL_DEPTH_LIMIT, DEFAULT_GAS, ExecResult, GasSchedule,
                          StateView, VmContext, execute)
from .disasm import assemble, decode, disassemble, validate

__all__ = [
    "OPCODES", "STATE_PROBE_OPCODES", "ExecutionTrace", "Frame", "TraceOp",
    "flatten_trace", "mnemonics", "CALL_DEPTH_LIMIT", "DEFAULT_GAS",
    "ExecResult", "GasSchedule", "StateView", "VmContext", "execute",
    "assemble", "decode", "disassemble", "validate",
]
