"""Canonical trace printing: parse(print_doc(d)) reproduces d exactly.

One entry header per line; nested entries and the parent's closing post
bracket are indented two spaces per level; leaf entries keep their post on
the header line.
"""

from __future__ import annotations

from .ast import Assignment, TraceDoc, TraceEntry

INDENT = "  "


def _assigns(items: list[Assignment]) -> str:
    return ", ".join(str(a) for a in items)


def _post(entry: TraceEntry) -> str:
    if entry.post is None:
        return "[REVERT]"
    return f"[{_assigns(entry.post)}]"


def _entry_lines(entry: TraceEntry, depth: int) -> list[str]:
    pad = INDENT * depth
    header = f"{pad}{entry.index}: {entry.contract}.{entry.function} ({_assigns(entry.pre)})"
    if not entry.children:
        return [f"{header} {_post(entry)}"]
    lines = [header]
    for child in entry.children:
        lines.extend(_entry_lines(child, depth + 1))
    lines.append(f"{pad}{INDENT}{_post(entry)}")
    return lines


def print_doc(doc: TraceDoc) -> str:
    lines: list[str] = []
    for entry in doc.entries:
        lines.extend(_entry_lines(entry, 0))
    return "\n".join(lines) + ("\n" if lines else "")
