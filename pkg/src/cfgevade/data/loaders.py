import logging
import os
from pathlib import Path
from typing import List, Optional, Union

from ..common.exceptions import SchemaViolationError
from ..graph.cfg import ControlFlowGraph, FunctionSequence, Label, parse_cfg_json, serialize_cfg
from ..graph.traversal import dfs_linearize

logger = logging.getLogger(__name__)

CFG_SUFFIX = ".cfg.json"

PathLike = Union[str, os.PathLike]


class CorpusLoader:
    """
    Loader for a CFG corpus directory.

    Layout: `benign/*.cfg.json`, `malicious/*.cfg.json`; files directly under
    the root are accepted as unlabeled. Files load in sorted relative-path
    order so every run sees the same corpus order.
    """

    def __init__(self, root: PathLike):
        self.root = Path(root)

    def paths(self) -> List[Path]:
        if not self.root.is_dir():
            raise FileNotFoundError(f"Corpus directory not found: {self.root}")
        return sorted(self.root.rglob(f"*{CFG_SUFFIX}"), key=lambda p: p.relative_to(self.root).as_posix())

    def load(self) -> List[ControlFlowGraph]:
        graphs = [load_cfg(path, expected=self._label_for(path)) for path in self.paths()]
        logger.info("Loaded %d graphs from %s", len(graphs), self.root)
        return graphs

    def _label_for(self, path: Path) -> Optional[Label]:
        parent = path.parent.name if path.parent != self.root else None
        try:
            return Label(parent) if parent else None
        except ValueError:
            return None


def load_cfg(path: PathLike, expected: Optional[Label] = None) -> ControlFlowGraph:
    """
    Reads one `.cfg.json` file. A missing label is taken from `expected`
    (the corpus subdirectory); a contradicting label is a schema violation.
    """
    path = Path(path)
    graph = parse_cfg_json(path.read_bytes(), source=str(path))
    if expected is None:
        return graph
    if graph.label is None:
        return ControlFlowGraph(graph.name, graph.entry, graph.nodes, graph.edges, expected)
    if graph.label is not expected:
        raise SchemaViolationError(
            f"label '{graph.label.value}' contradicts directory '{expected.value}'", str(path)
        )
    return graph


def save_corpus(graphs: List[ControlFlowGraph], root: PathLike) -> List[Path]:
    """Writes each graph as canonical JSON under its label subdirectory."""
    root = Path(root)
    written = []
    for graph in graphs:
        folder = root / graph.label.value if graph.label is not None else root
        folder.mkdir(parents=True, exist_ok=True)
        path = folder / f"{graph.name}{CFG_SUFFIX}"
        path.write_text(serialize_cfg(graph), encoding="utf-8")
        written.append(path)
    logger.info("Saved %d graphs to %s", len(written), root)
    return written


def load_corpus(root: PathLike) -> List[ControlFlowGraph]:
    return CorpusLoader(root).load()


def linearize_corpus(graphs: List[ControlFlowGraph], max_calls: Optional[int] = None) -> List[FunctionSequence]:
    """DFS sequences for a whole corpus (None = keep every reachable call)."""
    return [dfs_linearize(g, max_calls) for g in graphs]
