"""JSON interchange format for signatures, structures and amalgams.

A structure file is one JSON object::

    {
      "signature": {
        "relations": [{"name": "R", "properties": ["transitive", "reflexive"]}],
        "coarser_than": [["R", "S"]],
        "operations": [{"name": "f", "preserves": ["R"], "reverses": [],
                        "strict": false, "bijective": false}]
      },
      "domain": ["a", "b"],
      "relations": {"R": [["a", "a"], ["a", "b"], ["b", "b"]]},
      "operations": {"f": {"a": "a", "b": "a"}}
    }

Pair lists are order-insensitive; a repeated pair is an error.  Amalgam files
add ``"witnesses": {relation: [[x, y, c], ...]}``.  Output is written with
sorted pair lists and two-space indentation so files are byte-stable.
"""

from __future__ import annotations

import json
from pathlib import Path

from .core import PROPERTIES, OperationSpec, Signature, Structure
from .errors import FormatError, RelamalgError

_SIG_KEYS = {"relations", "coarser_than", "operations"}
_STRUCT_KEYS = {"signature", "domain", "relations", "operations"}


def signature_to_dict(sig: Signature) -> dict:
    return {
        "relations": [{"name": n, "properties": [p for p in PROPERTIES if p in props]}
                      for n, props in sig.relations],
        "coarser_than": [list(p) for p in sorted(sig.coarser_than)],
        "operations": [{"name": op.name, "preserves": sorted(op.preserves),
                        "reverses": sorted(op.reverses), "strict": op.strict,
                        "bijective": op.bijective} for op in sig.operations],
    }


def _expect(cond, message):
    if not cond:
        raise FormatError(message)


def signature_from_dict(doc: dict) -> Signature:
    _expect(isinstance(doc, dict), "signature must be an object")
    extra = set(doc) - _SIG_KEYS
    _expect(not extra, f"unknown signature keys {sorted(extra)}")
    try:
        relations = []
        for r in doc.get("relations", []):
            props = r.get("properties", [])
            _expect(len(set(props)) == len(props), f"duplicate property for {r.get('name')}")
            relations.append((r["name"], frozenset(props)))
        coarser = []
        for pair in doc.get("coarser_than", []):
            _expect(isinstance(pair, list) and len(pair) == 2, f"bad coarseness pair {pair!r}")
            coarser.append(tuple(pair))
        _expect(len(set(coarser)) == len(coarser), "duplicate coarseness pair")
        ops = [OperationSpec(o["name"], frozenset(o.get("preserves", [])),
                             frozenset(o.get("reverses", [])), bool(o.get("strict", False)),
                             bool(o.get("bijective", False)))
               for o in doc.get("operations", [])]
        return Signature(tuple(relations), frozenset(coarser), tuple(ops))
    except (KeyError, TypeError, AttributeError) as exc:
        raise FormatError(f"malformed signature: {exc}") from exc
    except RelamalgError as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(str(exc)) from exc


def structure_to_dict(s: Structure) -> dict:
    return {
        "signature": signature_to_dict(s.signature),
        "domain": list(s.order),
        "relations": {n: [list(p) for p in sorted(s.extents[n])] for n in s.signature.relation_names},
        "operations": {n: dict(sorted(s.tables[n].items())) for n in s.signature.operation_names},
    }


def structure_from_dict(doc: dict) -> Structure:
    _expect(isinstance(doc, dict), "structure must be an object")
    extra = set(doc) - _STRUCT_KEYS - {"witnesses"}
    _expect(not extra, f"unknown keys {sorted(extra)}")
    _expect("signature" in doc and "domain" in doc, "structure needs 'signature' and 'domain'")
    sig = signature_from_dict(doc["signature"])
    domain = doc["domain"]
    _expect(isinstance(domain, list), "domain must be a list")
    _expect(len(set(domain)) == len(domain), "duplicate domain token")
    extents = {}
    for name, pairs in doc.get("relations", {}).items():
        seen = set()
        for pair in pairs:
            _expect(isinstance(pair, list) and len(pair) == 2, f"bad pair {pair!r} in {name}")
            key = tuple(pair)
            _expect(key not in seen, f"duplicate pair {pair} in {name}")
            seen.add(key)
        extents[name] = seen
    tables = doc.get("operations", {})
    _expect(isinstance(tables, dict), "operations must be an object")
    try:
        return Structure(sig, domain, extents, tables)
    except RelamalgError as exc:
        raise FormatError(str(exc)) from exc


def amalgam_to_dict(amalgam) -> dict:
    doc = structure_to_dict(amalgam.d)
    doc["witnesses"] = {rel: [list(w) for w in amalgam.witness_triples(rel)]
                        for rel in amalgam.d.signature.relation_names}
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def loads(text: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc


def load_structure(path) -> Structure:
    return structure_from_dict(loads(Path(path).read_text(encoding="utf-8")))


def dump_structure(s: Structure, path):
    Path(path).write_text(dumps(structure_to_dict(s)), encoding="utf-8")


def load_signature(path) -> Signature:
    """A signature file, or the signature section of a structure file."""
    doc = loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(doc, dict) and "signature" in doc:
        doc = doc["signature"]
    return signature_from_dict(doc)
