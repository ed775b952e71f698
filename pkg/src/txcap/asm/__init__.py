from . import ast
from .parser import parse_contract
from .compiler import (CompiledContract, CompileError, SlotInfo, compile,
                       compile_contract, compile_source, encode_arg,
                       encode_args, selector, string_word, word_string)

__all__ = [
    "ast", "parse_contract", "CompiledContract", "CompileError", "SlotInfo",
    "compile", "compile_contract", "compile_source", "encode_arg",
    "encode_args", "selector", "string_word", "word_string",
]
