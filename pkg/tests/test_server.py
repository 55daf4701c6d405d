import json
import urllib.error
import urllib.parse
import urllib.request
from concurrent.futures import ThreadPoolExecutor

import pytest

from kif import codec
from kif.rdf.server import serve
from kif.stores.backed import decode_results_json
from kif.rdf.terms import IriTerm

import paper_fixtures as pf

WD = pf.WD


@pytest.fixture(scope="module")
def endpoint():
    graph = codec.encode_dataset(pf.wikidata_pairs(), pf.wikidata_descriptors())
    with serve(graph) as server:
        yield server


def _get(server, query: str):
    url = server.url + "?" + urllib.parse.urlencode({"query": query})
    with urllib.request.urlopen(url, timeout=10) as resp:
        assert resp.headers["Content-Type"] == "application/sparql-results+json"
        return json.loads(resp.read())


def _post(server, body: bytes, content_type: str):
    req = urllib.request.Request(
        server.url, data=body, headers={"Content-Type": content_type},
        method="POST")
    with urllib.request.urlopen(req, timeout=10) as resp:
        return json.loads(resp.read())


def test_get_query_returns_marie_curie(endpoint):
    payload = _get(endpoint, "SELECT ?x WHERE { ?x wdt:P166 wd:Q38104 }")
    assert payload["head"]["vars"] == ["x"]
    values = [b["x"]["value"] for b in payload["results"]["bindings"]]
    assert values == [WD + "Q7286"]


def test_post_sparql_query_body(endpoint):
    payload = _post(endpoint,
                    b"SELECT ?x WHERE { ?x wdt:P166 wd:Q38104 }",
                    "application/sparql-query")
    assert [b["x"]["value"] for b in payload["results"]["bindings"]] == [WD + "Q7286"]


def test_star_projection_is_rejected_with_400(endpoint):
    with pytest.raises(urllib.error.HTTPError) as err:
        _get(endpoint, "SELECT * WHERE {}")
    assert err.value.code == 400
    assert "star projection" in err.value.read().decode()


def test_limit_is_applied(endpoint):
    payload = _get(endpoint,
                   "SELECT ?y WHERE { wd:Q7286 wdt:P166 ?y } LIMIT 1")
    assert len(payload["results"]["bindings"]) == 1


def test_malformed_query_and_missing_parameter(endpoint):
    with pytest.raises(urllib.error.HTTPError) as err:
        _get(endpoint, "SELECT WHERE {")
    assert err.value.code == 400
    with pytest.raises(urllib.error.HTTPError) as err:
        urllib.request.urlopen(endpoint.url, timeout=10)
    assert err.value.code == 400


def test_unsupported_content_type_is_rejected(endpoint):
    with pytest.raises(urllib.error.HTTPError) as err:
        _post(endpoint, b"query=x", "application/x-www-form-urlencoded")
    assert err.value.code == 400


def test_unsupported_feature_is_rejected_with_diagnostic(endpoint):
    with pytest.raises(urllib.error.HTTPError) as err:
        _get(endpoint, "SELECT ?s WHERE { OPTIONAL { ?s ?p ?o } }")
    assert err.value.code == 400
    assert "OPTIONAL" in err.value.read().decode()


def test_responses_round_trip_through_the_results_decoder(endpoint):
    payload = _get(endpoint, "SELECT ?y WHERE { wd:Q7286 wdt:P166 ?y }")
    rows = decode_results_json(payload)
    assert {row["y"] for row in rows} == {IriTerm(WD + "Q38104"),
                                          IriTerm(WD + "Q902788")}
    # Literals with datatype and language tags survive the round trip too.
    amount = _get(endpoint,
                  "SELECT ?v WHERE { wd:Q2270 wdt:P2177 ?v }")
    (row,) = decode_results_json(amount)
    assert row["v"].lexical == "0.07"
    labels = _get(endpoint, "SELECT ?l WHERE { wd:Q7286 rdfs:label ?l }")
    (lrow,) = decode_results_json(labels)
    assert lrow["l"].language == "en" and lrow["l"].lexical == "Marie Curie"


def test_concurrent_requests(endpoint):
    def ask(_):
        return _get(endpoint, "SELECT ?x WHERE { ?x wdt:P166 wd:Q38104 }")

    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(ask, range(16)))
    assert all(r["results"]["bindings"] for r in results)
