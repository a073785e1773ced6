"""JSON wire formats for chains, networks, trees and vectors.

Complex scalars are two-element ``[re, im]`` arrays (bare numbers are
accepted as reals); vectors over vertex sets are ``{id: value}`` maps,
so ordering is never significant on the wire.  Interior transition rows
are listed as explicit edges; boundary rows are implied absorbing.
"""

from __future__ import annotations

import json
from typing import Any, Mapping

import numpy as np

from .chain import Chain, Network, build_chain, build_network
from .tree import ForwardTree, build_tree


class FormatError(ValueError):
    """Malformed input document."""


def parse_complex(text: str) -> complex:
    """Parse a CLI scalar: ``RE`` or ``RE,IM``."""
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise FormatError(f"cannot parse complex scalar {text!r} (want RE or RE,IM)")


def value_to_complex(v: Any) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 \
            and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise FormatError(f"cannot read {v!r} as a number or [re, im] pair")


def complex_to_value(z: complex):
    z = complex(z)
    if z.imag == 0.0:
        return z.real
    return [z.real, z.imag]


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and complex numbers into
    JSON-encodable structures."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        return complex_to_value(complex(obj))
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    return str(obj)


def _require(doc: Mapping, key: str, path: str):
    if key not in doc:
        raise FormatError(f"{path}: missing key {key!r}")
    return doc[key]


def chain_from_doc(doc: Mapping, path: str = "chain") -> Chain:
    vertices = _require(doc, "vertices", path)
    boundary = _require(doc, "boundary", path)
    edges = _require(doc, "edges", path)
    index = {str(v): i for i, v in enumerate(vertices)}
    n = len(index)
    trans = np.zeros((n, n))
    boundary_set = {str(w) for w in boundary}
    for e in edges:
        u, v = str(_require(e, "from", path)), str(_require(e, "to", path))
        if u not in index or v not in index:
            raise FormatError(f"{path}: edge {u!r}->{v!r} uses unknown vertex")
        if u in boundary_set:
            raise FormatError(f"{path}: boundary vertex {u!r} must not have explicit edges")
        trans[index[u], index[v]] += float(_require(e, "p", path))
    for w in boundary_set:
        trans[index[w], index[w]] = 1.0
    interior = [str(v) for v in vertices if str(v) not in boundary_set]
    return build_chain([str(v) for v in vertices], interior, sorted(boundary_set), trans)


def network_from_doc(doc: Mapping, path: str = "network") -> Network:
    boundary = _require(doc, "boundary", path)
    edges = _require(doc, "edges", path)
    parsed = []
    for e in edges:
        parsed.append((
            str(_require(e, "u", path)),
            str(_require(e, "v", path)),
            float(_require(e, "a", path)),
        ))
    return build_network(parsed, [str(w) for w in boundary])


def load_chain(path: str) -> Chain:
    """Load a chain JSON file; network documents (edges carrying ``a``)
    are converted through their random-walk chain."""
    from .chain import from_network

    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: top level must be an object")
    edges = doc.get("edges", [])
    if edges and isinstance(edges[0], dict) and "a" in edges[0]:
        return from_network(network_from_doc(doc, path))
    return chain_from_doc(doc, path)


def chain_to_doc(chain: Chain) -> dict:
    edges = []
    for i in chain.interior:
        for j in np.nonzero(chain.trans[i] > 0)[0]:
            edges.append({
                "from": chain.vertices[i],
                "to": chain.vertices[int(j)],
                "p": float(chain.trans[i, int(j)]),
            })
    return {
        "vertices": list(chain.vertices),
        "boundary": list(chain.boundary_ids),
        "edges": edges,
    }


def tree_from_doc(doc: Mapping, path: str = "tree") -> tuple[ForwardTree, list[str] | None]:
    children = _require(doc, "children", path)
    if not isinstance(children, dict):
        raise FormatError(f"{path}: 'children' must be an object")
    measure = doc.get("measure")
    forward_p = doc.get("forward_p")
    try:
        tree = build_tree(children, measure=measure, forward_probs=forward_p)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if "depth" in doc and int(doc["depth"]) != tree.max_depth:
        raise FormatError(
            f"{path}: declared depth {doc['depth']} != stored depth {tree.max_depth}"
        )
    section = doc.get("section")
    if section is not None:
        section = [str(s) for s in section]
    return tree, section


def load_tree(path: str) -> tuple[ForwardTree, list[str] | None]:
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: top level must be an object")
    return tree_from_doc(doc, path)


def tree_to_doc(tree: ForwardTree, section=None) -> dict:
    doc = {
        "children": {v: list(tree.children[v]) for v in tree.vertices if tree.children[v]},
        "measure": {v: tree.measure[v] for v in tree.vertices},
        "depth": tree.max_depth,
    }
    if section:
        doc["section"] = sorted(section)
    return doc


def load_vector(path: str) -> dict[str, complex]:
    """Load a ``{vertex-id: value}`` map with complex-aware values."""
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: vector file must be an object")
    return {str(k): value_to_complex(v) for k, v in doc.items()}
