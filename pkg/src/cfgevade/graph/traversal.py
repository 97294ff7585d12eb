from typing import List, Optional

from .cfg import ControlFlowGraph, FunctionSequence

DEFAULT_MAX_CALLS = 16


class DFSLinearizer:
    """
    Converts a CFG into the sequence of function calls in depth-first visit order.

    Non-recursive, so arbitrarily deep call chains are fine. Successors are
    visited in ascending (name, id) order; each node is emitted once, on its
    first visit. Nodes unreachable from the entry are never emitted.
    """

    def __init__(self, max_calls: Optional[int] = DEFAULT_MAX_CALLS):
        if max_calls is not None and max_calls < 1:
            raise ValueError(f"max_calls must be >= 1, got {max_calls}")
        self.max_calls = max_calls

    def linearize(self, graph: ControlFlowGraph) -> FunctionSequence:
        g = graph.to_networkx()
        names = graph.function_names

        def tie_break(node_id: int):
            return (names[node_id], node_id)

        visited = set()
        calls: List[str] = []
        stack = [graph.entry]
        while stack:
            if self.max_calls is not None and len(calls) >= self.max_calls:
                break
            node = stack.pop()
            if node in visited:
                continue
            visited.add(node)
            calls.append(names[node])
            successors = sorted((s for s in g.successors(node) if s not in visited), key=tie_break)
            # reversed so the smallest successor pops first
            stack.extend(reversed(successors))
        return FunctionSequence(name=graph.name, label=graph.label, calls=tuple(calls))


def dfs_linearize(graph: ControlFlowGraph, max_calls: Optional[int] = DEFAULT_MAX_CALLS) -> FunctionSequence:
    """Deterministic DFS call sequence, truncated to `max_calls` names (None = all reachable)."""
    return DFSLinearizer(max_calls).linearize(graph)
