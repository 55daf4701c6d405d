"""SPARQL-protocol HTTP endpoint over an immutable graph snapshot.

Supports GET with a ``query`` parameter and POST with an
``application/sparql-query`` body; answers SPARQL results JSON. Anything
outside the query subset yields HTTP 400 with a diagnostic.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from .bgp import Binding, match_bgp
from .sparql import SparqlError, parse_query
from .terms import Graph, IriTerm, Term

logger = logging.getLogger(__name__)

RESULTS_JSON = "application/sparql-results+json"


def term_to_json(t: Term) -> dict:
    if isinstance(t, IriTerm):
        return {"type": "uri", "value": t.value}
    out: dict = {"type": "literal", "value": t.lexical}
    if t.language:
        out["xml:lang"] = t.language
    elif t.datatype != "http://www.w3.org/2001/XMLSchema#string":
        out["datatype"] = t.datatype
    return out


def results_to_json(variables: tuple[str, ...], rows: list[Binding]) -> dict:
    return {
        "head": {"vars": list(variables)},
        "results": {"bindings": [
            {v: term_to_json(row[v]) for v in variables if v in row}
            for row in rows
        ]},
    }


class _Handler(BaseHTTPRequestHandler):
    # self.server is the ThreadingHTTPServer; the graph hangs off it.
    # HTTP/1.1 keeps client connections alive between queries; Nagle is off
    # so small response writes are not held back waiting for ACKs.
    protocol_version = "HTTP/1.1"
    disable_nagle_algorithm = True

    def log_message(self, format: str, *args) -> None:
        logger.debug("endpoint: " + format, *args)

    def _reply(self, status: int, content_type: str, body: bytes) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _bad_request(self, message: str) -> None:
        self._reply(400, "text/plain; charset=utf-8", message.encode("utf-8"))

    def _answer(self, query_text: str) -> None:
        try:
            query = parse_query(query_text)
        except SparqlError as e:
            self._bad_request(f"unsupported or malformed query: {e}")
            return
        rows = match_bgp(self.server.graph, query)
        body = json.dumps(results_to_json(query.variables, rows)).encode("utf-8")
        self._reply(200, RESULTS_JSON, body)

    def do_GET(self) -> None:
        params = parse_qs(urlsplit(self.path).query)
        queries = params.get("query")
        if not queries:
            self._bad_request("missing query parameter")
            return
        self._answer(queries[0])

    def do_POST(self) -> None:
        ctype = self.headers.get("Content-Type", "").split(";")[0].strip().lower()
        if ctype != "application/sparql-query":
            self._bad_request(f"unsupported content type {ctype!r}; "
                              "use application/sparql-query")
            return
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length).decode("utf-8")
        self._answer(body)


class EndpointServer:
    """A running endpoint; use as a context manager or call shutdown()."""

    def __init__(self, graph: Graph, port: int = 0, host: str = "127.0.0.1") -> None:
        self.graph = graph
        self._httpd = ThreadingHTTPServer((host, port), _Handler)
        self._httpd.daemon_threads = True
        # Handlers reach the graph through self.server.
        self._httpd.graph = graph  # type: ignore[attr-defined]
        self.host = host
        self.port = self._httpd.server_address[1]
        self.url = f"http://{host}:{self.port}/sparql"
        self._thread: threading.Thread | None = None

    def start(self) -> "EndpointServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def shutdown(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread:
            self._thread.join(timeout=5)

    def __enter__(self) -> "EndpointServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.shutdown()


def serve(graph: Graph, port: int = 0, host: str = "127.0.0.1") -> EndpointServer:
    """Start an endpoint serving *graph*; port 0 picks a free port."""
    return EndpointServer(graph, port, host).start()
