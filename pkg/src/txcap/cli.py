"""Operator command line.

Batch subcommands (sim, sigma, txsea, trace, case, prob) run in process;
session subcommands are a thin HTTP client for a running ``node serve``.
Exit codes: 0 ok, 2 usage, 3 validation, 4 runtime failure.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from . import __version__
from .cases.runner import CASE_NAMES, run_case, scenario_dir
from .chain.types import Address, Transaction
from .config import Config, load_config
from .errors import TxcapError, ValidationFailure
from .evm.trace import Frame
from .gossip.scenario import run_scenario
from .sigma import classify_transaction
from .tracelang import doc_from_json, doc_to_json, parse, print_doc
from .txsea.cache import ExpirationMap
from .txsea.retry import retry_success_probability

EXIT_VALIDATION = 3
EXIT_RUNTIME = 4


def _fail(exc: TxcapError, code: int) -> None:
    click.echo(json.dumps({"code": exc.code, "detail": exc.detail}), err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationFailure as exc:
            _fail(exc, EXIT_VALIDATION)
        except TxcapError as exc:
            _fail(exc, EXIT_RUNTIME)
    return wrapper


@click.group()
@click.version_option(__version__)
def main():
    """Preview transactions on an isolated instrumented node."""


# ---------------------------------------------------------------- node serve
@main.group()
def node():
    """Run the instrumented node service."""


@node.command("serve")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--scenario", type=click.Path(exists=True), default=None)
@click.option("--genesis", type=click.Path(exists=True), default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--ttl-blocks", type=int, default=None)
@click.option("--txsea-mode", type=click.Choice(["sender-aware", "strict-52"]),
              default=None)
@click.option("--with-ui", is_flag=True, help="serve the built browser console")
@click.option("--ui-dir", type=click.Path(), default=None)
@handle_errors
def node_serve(config_path, scenario, genesis, host, port, ttl_blocks,
               txsea_mode, with_ui, ui_dir):
    """Start the HTTP session service (and optionally the console UI)."""
    import uvicorn

    from .node.bootstrap import build_node
    from .node.service import create_app

    cfg = load_config(config_path, {
        "scenario": scenario, "genesis": genesis, "host": host, "port": port,
        "ttl_blocks": ttl_blocks, "txsea_mode": txsea_mode, "ui_dir": ui_dir,
    })
    ui_path = None
    if with_ui or cfg.ui_dir:
        ui_path = Path(cfg.ui_dir) if cfg.ui_dir else \
            Path(__file__).resolve().parents[2] / "frontend" / "dist"
    txt_node = build_node(cfg)
    app = create_app(txt_node, ui_dir=ui_path)
    click.echo(f"instrumented node on http://{cfg.host}:{cfg.port} "
               f"(head block {txt_node.chain.head.number})")
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="warning")


# ------------------------------------------------------------------- sim run
@main.group()
def sim():
    """Gossip network simulations."""


@sim.command("run")
@click.argument("scenario", type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
@handle_errors
def sim_run(scenario, as_json):
    """Execute a scenario file and report propagation and mining."""
    report = run_scenario(json.loads(Path(scenario).read_text()))
    if as_json:
        click.echo(json.dumps(report, indent=2))
        return
    for prop in report["propagation"]:
        click.echo(f"tx {prop['tx_hash'][:18]}… from node {prop['origin']}: "
                   f"admitted by {prop['admitted']}, rejected by {prop['rejected']}, "
                   f"unseen by {prop['unseen']}")
    for mined in report["mined"]:
        click.echo(f"node {mined['node']} mined block {mined['number']} "
                   f"({len(mined['transactions'])} txs)")
    click.echo(f"converged: {report['converged']}; heads {report['heads']}")
    if report["desync_events"]:
        click.echo(f"desync events: {report['desync_events']}")


@sim.command("scenarios")
def sim_scenarios():
    """List scenario files shipped with the package."""
    for path in sorted(scenario_dir().glob("*.json")):
        click.echo(str(path))


# ----------------------------------------------------------------- sessions
@main.group()
def session():
    """Drive test sessions against a running node (thin HTTP client)."""


def _client(server: str):
    import httpx
    return httpx.Client(base_url=server, timeout=30.0)


def _echo_response(resp) -> None:
    if resp.status_code >= 400:
        click.echo(resp.text, err=True)
        sys.exit(EXIT_VALIDATION if resp.status_code < 500 else EXIT_RUNTIME)
    click.echo(json.dumps(resp.json(), indent=2))


_server_option = click.option("--server", default="http://127.0.0.1:8440",
                              envvar="TXCAP_SERVER", show_default=True)


@session.command("open")
@_server_option
def session_open(server):
    with _client(server) as client:
        _echo_response(client.post("/sessions"))


@session.command("tx")
@_server_option
@click.option("--session", "session_id", required=True)
@click.option("--sender", required=True)
@click.option("--recipient", required=True)
@click.option("--value", type=int, default=0)
@click.option("--gas-price", type=int, default=0)
@click.option("--gas-offer", type=int, default=1_000_000)
@click.option("--function", "function_name", default="")
@click.option("--arg", "args", multiple=True,
              help="function argument (int, 0x-address, or string); repeatable")
def session_tx(server, session_id, sender, recipient, value, gas_price,
               gas_offer, function_name, args):
    def parse_arg(a: str):
        try:
            return int(a, 0)
        except ValueError:
            return a
    body = {"sender": sender, "recipient": recipient, "value": value,
            "gas_price": gas_price, "gas_offer": gas_offer,
            "function": function_name, "args": [parse_arg(a) for a in args]}
    with _client(server) as client:
        _echo_response(client.post(f"/sessions/{session_id}/tx", json=body))


@session.command("status")
@_server_option
@click.option("--session", "session_id", required=True)
def session_status(server, session_id):
    with _client(server) as client:
        _echo_response(client.get(f"/sessions/{session_id}/status"))


@session.command("finalize")
@_server_option
@click.option("--session", "session_id", required=True)
@click.option("--index", type=int, default=0)
def session_finalize(server, session_id, index):
    with _client(server) as client:
        _echo_response(client.post(f"/sessions/{session_id}/finalize",
                                   params={"tx_index": index}))


# -------------------------------------------------------------------- sigma
@main.group()
def sigma():
    """Classify execution traces."""


@sigma.command("classify")
@click.argument("trace_file", type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
@handle_errors
def sigma_classify(trace_file, as_json):
    """Classify a JSON execution trace (frame tree with opcodes)."""
    frame = Frame.from_json(json.loads(Path(trace_file).read_text()))
    cls = classify_transaction(frame)
    if as_json:
        click.echo(json.dumps(cls.to_json(), indent=2))
        return
    click.echo(f"verdict: {cls.verdict}")
    click.echo(f"partition: {cls.partition}")
    for source in sorted(cls.sources, key=lambda s: s.opcode):
        click.echo(f"  {source.opcode}: {source.marker or 'no marker'}")


# -------------------------------------------------------------------- txsea
@main.group()
def txsea():
    """Inspect and query expiration cache files."""


_mode_option = click.option("--mode", type=click.Choice(["sender-aware", "strict-52"]),
                            default="sender-aware", show_default=True)


@txsea.command("dump")
@click.argument("cache_file", type=click.Path(exists=True))
@_mode_option
@click.option("--json", "as_json", is_flag=True)
@handle_errors
def txsea_dump(cache_file, mode, as_json):
    emap = ExpirationMap.load(Path(cache_file).read_bytes(), mode=mode)
    rows = []
    for addr in sorted(emap.entries):
        entry = emap.entries[addr]
        row = {"contract": addr.hex(), "last_block": entry.last_block}
        if mode == "sender-aware":
            row["last_sender"] = entry.last_sender.hex() if entry.last_sender else None
            row["other_sender_block"] = entry.other_sender_block
        rows.append(row)
    if as_json:
        click.echo(json.dumps({"mode": mode, "entries": rows}, indent=2))
    else:
        for row in rows:
            click.echo(" ".join(f"{k}={v}" for k, v in row.items()))
        click.echo(f"{len(rows)} entries, {emap.record_size()} bytes each")


@txsea.command("query")
@click.argument("cache_file", type=click.Path(exists=True))
@_mode_option
@click.option("--recipient", required=True)
@click.option("--sender", default="0x" + "00" * 20, show_default=False,
              help="querying sender (sender-aware mode)")
@click.option("--block", type=int, required=True,
              help="first block the tested state did not include")
@handle_errors
def txsea_query(cache_file, mode, recipient, sender, block):
    emap = ExpirationMap.load(Path(cache_file).read_bytes(), mode=mode)
    probe = Transaction(nonce=0, gas_price=0, gas_offer=1,
                        sender=Address.from_hex(sender),
                        recipient=Address.from_hex(recipient), value=0)
    probe.block_included = block
    click.echo(emap.expiration_test(probe))


# -------------------------------------------------------------------- trace
@main.group()
def trace():
    """Parse and print trace-language documents."""


@trace.command("parse")
@click.argument("trc_file", type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
@handle_errors
def trace_parse(trc_file, as_json):
    doc = parse(Path(trc_file).read_text(encoding="utf-8"))
    if as_json:
        click.echo(json.dumps(doc_to_json(doc), indent=2, ensure_ascii=False))
    else:
        click.echo(print_doc(doc), nl=False)


@trace.command("print")
@click.argument("json_file", type=click.Path(exists=True))
@handle_errors
def trace_print(json_file):
    doc = doc_from_json(json.loads(Path(json_file).read_text(encoding="utf-8")))
    click.echo(print_doc(doc), nl=False)


# --------------------------------------------------------------------- case
@main.group()
def case():
    """Reproduce the documented case studies."""


@case.command("run")
@click.argument("name", type=click.Choice(CASE_NAMES))
@click.option("--json", "as_json", is_flag=True)
@handle_errors
def case_run(name, as_json):
    result = run_case(name)
    if as_json:
        click.echo(json.dumps(result.to_json(), indent=2, ensure_ascii=False))
        return
    click.echo(result.text, nl=False)
    click.echo(f"classification: {result.classification.verdict}")
    click.echo(f"verdict: {result.verdict}")
    click.echo(f"golden match: {'ok' if result.match.ok else 'MISMATCH'}")
    if not result.match.ok:
        for m in result.match.mismatches:
            click.echo(f"  {m}", err=True)
        sys.exit(EXIT_RUNTIME)


# --------------------------------------------------------------------- prob
@main.group()
def prob():
    """Probability helpers."""


@prob.command("retry")
@click.option("--p", "p_single", type=float, required=True,
              help="single-attempt success probability")
@click.option("--k", type=int, required=True, help="number of attempts")
@handle_errors
def prob_retry(p_single, k):
    """Success probability of at least one of k repeated tests."""
    click.echo(f"{retry_success_probability(p_single, k):.12g}")


if __name__ == "__main__":
    main()
