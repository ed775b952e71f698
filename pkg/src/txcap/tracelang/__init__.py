from .ast import (Amount, Assignment, Combo, Hex, Name, Text, TraceDoc,
                  TraceEntry, Value, doc_from_json, doc_to_json,
                  value_from_json, value_to_json)
from .parser import parse
from .printer import print_doc
from .matcher import MatchResult, match_docs
from .render import RunStep, VarSpec, render_execution

__all__ = [
    "Amount", "Assignment", "Combo", "Hex", "Name", "Text", "TraceDoc",
    "TraceEntry", "Value", "doc_from_json", "doc_to_json", "value_from_json",
    "value_to_json", "parse", "print_doc", "MatchResult", "match_docs",
    "RunStep", "VarSpec", "render_execution",
]
