"""
Control-flow-graph data model and its canonical JSON form.

One graph per `.cfg.json` file:

    {"name": "...", "label": "malicious", "entry": 0,
     "nodes": [{"id": 0, "name": "entry0"}, ...],
     "edges": [[0, 1], ...]}

`label` is optional; unknown keys are ignored on parse.
"""
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import networkx as nx

from ..common.exceptions import MalformedJsonError, SchemaViolationError

_WHITESPACE = re.compile(r"\s")
# subword continuation marker; no function name may start with it
RESERVED_PREFIX = "##"


class Label(str, Enum):
    """Sample class; the integer index is the classifier target."""
    BENIGN = "benign"
    MALICIOUS = "malicious"

    @property
    def index(self) -> int:
        return 0 if self is Label.BENIGN else 1


@dataclass(frozen=True, order=True)
class FunctionNode:
    id: int
    name: str


@dataclass(frozen=True)
class ControlFlowGraph:
    """
    Directed call graph with an entry node.
    Nodes are kept sorted by id and edges sorted and de-duplicated, so two
    graphs that differ only in listing order compare equal.
    """
    name: str
    entry: int
    nodes: Tuple[FunctionNode, ...]
    edges: Tuple[Tuple[int, int], ...] = ()
    label: Optional[Label] = None

    def __post_init__(self):
        nodes = tuple(sorted(self.nodes, key=lambda n: n.id))
        ids = [n.id for n in nodes]
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise SchemaViolationError(f"duplicate node id(s) {dupes}", self.name)
        for node in nodes:
            _check_node(node, self.name)
        known = set(ids)
        if self.entry not in known:
            raise SchemaViolationError(f"entry {self.entry} is not a node", self.name)
        edges = tuple(sorted({(int(s), int(d)) for s, d in self.edges}))
        for src, dst in edges:
            if src not in known or dst not in known:
                raise SchemaViolationError(f"dangling edge [{src}, {dst}]", self.name)
        label = Label(self.label) if self.label is not None else None

        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "label", label)

    @property
    def function_names(self) -> Dict[int, str]:
        return {n.id: n.name for n in self.nodes}

    def to_networkx(self) -> nx.DiGraph:
        """DiGraph keyed by node id with a `name` attribute per node."""
        graph = nx.DiGraph(name=self.name, entry=self.entry)
        for node in self.nodes:
            graph.add_node(node.id, name=node.name)
        graph.add_edges_from(self.edges)
        return graph

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"name": self.name}
        if self.label is not None:
            data["label"] = self.label.value
        data["entry"] = self.entry
        data["nodes"] = [{"id": n.id, "name": n.name} for n in self.nodes]
        data["edges"] = [[s, d] for s, d in self.edges]
        return data


@dataclass(frozen=True)
class FunctionSequence:
    """Linear function-call sequence produced by a traversal."""
    name: str
    label: Optional[Label]
    calls: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "calls", tuple(self.calls))

    def __len__(self) -> int:
        return len(self.calls)

    @property
    def text(self) -> str:
        """Whitespace-joined call string as fed to the tokenizer."""
        return " ".join(self.calls)

    def window(self, max_calls: Optional[int]) -> 'FunctionSequence':
        if max_calls is None or len(self.calls) <= max_calls:
            return self
        return FunctionSequence(self.name, self.label, self.calls[:max_calls])

    def replace_calls(self, mapping: Mapping[str, str]) -> 'FunctionSequence':
        """Renames every occurrence of the mapped names; order and length are kept."""
        return FunctionSequence(
            self.name, self.label, tuple(mapping.get(c, c) for c in self.calls)
        )


def _check_node(node: FunctionNode, source: str):
    if isinstance(node.id, bool) or not isinstance(node.id, int) or node.id < 0:
        raise SchemaViolationError(f"node id {node.id!r} is not a non-negative integer", source)
    if not isinstance(node.name, str) or not node.name:
        raise SchemaViolationError(f"node {node.id} has an empty name", source)
    if _WHITESPACE.search(node.name):
        raise SchemaViolationError(f"node {node.id} name {node.name!r} contains whitespace", source)
    if node.name.startswith(RESERVED_PREFIX):
        raise SchemaViolationError(f"node {node.id} name {node.name!r} starts with '{RESERVED_PREFIX}'", source)


def _require(data: Mapping[str, Any], key: str, source: Optional[str]):
    if key not in data:
        raise SchemaViolationError(f"missing required key '{key}'", source)
    return data[key]


def _as_int(value: Any, what: str, source: Optional[str]) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaViolationError(f"{what} must be an integer, got {value!r}", source)
    return value


def graph_from_dict(data: Any, source: Optional[str] = None) -> ControlFlowGraph:
    if not isinstance(data, dict):
        raise SchemaViolationError("top-level value must be an object", source)

    name = _require(data, "name", source)
    if not isinstance(name, str):
        raise SchemaViolationError("name must be a string", source)
    entry = _as_int(_require(data, "entry", source), "entry", source)

    raw_nodes = _require(data, "nodes", source)
    if not isinstance(raw_nodes, list):
        raise SchemaViolationError("nodes must be a list", source)
    nodes: List[FunctionNode] = []
    for raw in raw_nodes:
        if not isinstance(raw, dict):
            raise SchemaViolationError("each node must be an object", source)
        node_id = _as_int(_require(raw, "id", source), "node id", source)
        node_name = _require(raw, "name", source)
        nodes.append(FunctionNode(node_id, node_name))

    raw_edges = _require(data, "edges", source)
    if not isinstance(raw_edges, list):
        raise SchemaViolationError("edges must be a list", source)
    edges: List[Tuple[int, int]] = []
    for raw in raw_edges:
        if not isinstance(raw, (list, tuple)) or len(raw) != 2:
            raise SchemaViolationError(f"edge {raw!r} must be a [src, dst] pair", source)
        edges.append((_as_int(raw[0], "edge src", source), _as_int(raw[1], "edge dst", source)))

    label = data.get("label")
    if label is not None:
        try:
            label = Label(label)
        except ValueError:
            raise SchemaViolationError(f"unknown label {label!r}", source)

    return ControlFlowGraph(name=name, entry=entry, nodes=tuple(nodes), edges=tuple(edges), label=label)


def parse_cfg_json(payload: Union[bytes, str], source: Optional[str] = None) -> ControlFlowGraph:
    """
    Parses and validates one CFG document.

    Raises:
        MalformedJsonError on undecodable / syntactically invalid input
        SchemaViolationError on missing keys, duplicate ids, dangling references
    """
    try:
        text = payload.decode("utf-8") if isinstance(payload, (bytes, bytearray)) else payload
        data = json.loads(text)
    except UnicodeDecodeError as e:
        raise MalformedJsonError(f"not UTF-8 ({e.reason})", source)
    except json.JSONDecodeError as e:
        raise MalformedJsonError(f"{e.msg} at line {e.lineno} column {e.colno}", source)
    return graph_from_dict(data, source)


def serialize_cfg(graph: ControlFlowGraph) -> str:
    """Canonical text: fixed key order, sorted nodes and edges, trailing newline."""
    return json.dumps(graph.to_dict(), ensure_ascii=False, separators=(",", ":")) + "\n"
