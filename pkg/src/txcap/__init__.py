"""txcap: preview account-chain transactions on an isolated instrumented node.

The package hosts a miniature account-based chain, a stack interpreter that
records recursive execution traces, an expiration cache answering "is this
test still valid" in constant time, sigma-determinism classification with
vulnerability markers, a gossip simulator demonstrating underpricing
isolation, and the session service tying them together.
"""

__version__ = "0.1.0"
