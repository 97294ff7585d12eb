"""
Synthetic CFG corpus generator.

Stands in for extracted executables: every graph starts at `entry0`, its
other functions are drawn from a shared pool or from a label-specific pool,
so labels are learnable and specific function names drive the malicious
class. A share of the shared-pool slots holds a freshly generated external
import instead; benign graphs carry more of them than malicious ones.
"""
import logging
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Tuple

import networkx as nx
import numpy as np

from ..common.exceptions import ConfigurationError
from ..utils.repro import make_rng
from .cfg import RESERVED_PREFIX, ControlFlowGraph, FunctionNode, Label

logger = logging.getLogger(__name__)

ENTRY_NAME = "entry0"

IMPORT_ALPHABET = string.ascii_uppercase + string.digits
IMPORT_NAME_LENGTH = 10
IMPORT_PREFIX = "sym.imp."
IMPORT_SUFFIX = ".dll"
# every character a synthetic import can contain
IMPORT_NAME_CHARS = "".join(sorted(set(IMPORT_ALPHABET + IMPORT_PREFIX + IMPORT_SUFFIX)))

COMMON_POOL: Tuple[str, ...] = (
    "sym.imp.KERNEL32.dll_GetStartupInfoA",
    "sym.imp.KERNEL32.dll_GetModuleHandleA",
    "sym.imp.MSVCRT.dll___set_app_type",
    "sym.imp.MSVCRT.dll____p__fmode",
    "sym.imp.MSVCRT.dll____p__commode",
    "sym.imp.MSVCRT.dll____setusermatherr",
    "sym.imp.MSVCRT.dll____getmainargs",
    "sym.imp.MSVCRT.dll_exit",
    "sym.imp.KERNEL32.dll_GetLastError",
    "sym.imp.KERNEL32.dll_CloseHandle",
    "sym.imp.KERNEL32.dll_GetProcAddress",
    "sym.imp.KERNEL32.dll_LoadLibraryA",
    "sym.imp.MSVCRT.dll_malloc",
    "sym.imp.MSVCRT.dll_free",
    "sym.imp.MSVCRT.dll_memcpy",
    "fcn.00401000",
    "fcn.00401150",
    "fcn.004012a0",
    "fcn.00401a30",
    "fcn.00402210",
)

BENIGN_POOL: Tuple[str, ...] = (
    "sym.imp.USER32.dll_CreateWindowExW",
    "sym.imp.USER32.dll_DispatchMessageW",
    "sym.imp.USER32.dll_LoadIconW",
    "sym.imp.GDI32.dll_SelectObject",
    "sym.imp.ADVAPI32.dll_RegCloseKey",
    "sym.imp.KERNEL32.dll_GetVersionExW",
    "sym.imp.COMCTL32.dll_InitCommonControlsEx",
    "sym.imp.SHELL32.dll_SHGetFolderPathW",
    "sym.imp.OLE32.dll_CoInitializeEx",
    "sym.imp.VERSION.dll_GetFileVersionInfoW",
)

MALICIOUS_POOL: Tuple[str, ...] = (
    "sym.imp.KERNEL32.dll_VirtualAllocEx",
    "sym.imp.KERNEL32.dll_WriteProcessMemory",
    "sym.imp.KERNEL32.dll_CreateRemoteThread",
    "sym.imp.ADVAPI32.dll_RegSetValueExA",
    "sym.imp.WININET.dll_InternetOpenUrlA",
    "sym.imp.URLMON.dll_URLDownloadToFileA",
    "sym.imp.KERNEL32.dll_IsDebuggerPresent",
    "sym.imp.ADVAPI32.dll_CryptEncrypt",
    "sym.imp.NTDLL.dll_NtUnmapViewOfSection",
    "sym.imp.WS2_32.dll_connect",
)


def random_import_name(rng: np.random.Generator) -> str:
    """sym.imp. + 10 uniform draws from [A-Z0-9] + .dll"""
    draws = rng.integers(0, len(IMPORT_ALPHABET), size=IMPORT_NAME_LENGTH)
    return IMPORT_PREFIX + "".join(IMPORT_ALPHABET[i] for i in draws) + IMPORT_SUFFIX


@dataclass
class CorpusConfig:
    """
    Configuration with validation.
    signal_strength is the expected fraction of non-entry functions drawn
    from the label-specific pool. Each remaining slot becomes a fresh
    random import with the label's import rate, else a shared-pool name.
    """
    n_benign: int = 100
    n_malicious: int = 100
    min_nodes: int = 8
    max_nodes: int = 24
    edge_density: float = 0.1
    benign_pool: Tuple[str, ...] = BENIGN_POOL
    malicious_pool: Tuple[str, ...] = MALICIOUS_POOL
    common_pool: Tuple[str, ...] = COMMON_POOL
    signal_strength: float = 0.6
    benign_import_rate: float = 0.5
    malicious_import_rate: float = 0.1
    seed: int = 42

    def __post_init__(self):
        self.benign_pool = tuple(self.benign_pool)
        self.malicious_pool = tuple(self.malicious_pool)
        self.common_pool = tuple(self.common_pool)

        if self.n_benign < 0 or self.n_malicious < 0:
            raise ConfigurationError(f"sample counts must be >= 0, got {self.n_benign}/{self.n_malicious}")
        if not 1 <= self.min_nodes <= self.max_nodes:
            raise ConfigurationError(f"node range [{self.min_nodes}, {self.max_nodes}] is empty or below 1")
        if not 0.0 <= self.edge_density <= 1.0:
            raise ConfigurationError(f"edge_density must be in [0, 1], got {self.edge_density}")
        if not 0.0 <= self.signal_strength <= 1.0:
            raise ConfigurationError(f"signal_strength must be in [0, 1], got {self.signal_strength}")
        for key in ("benign_import_rate", "malicious_import_rate"):
            if not 0.0 <= getattr(self, key) <= 1.0:
                raise ConfigurationError(f"{key} must be in [0, 1], got {getattr(self, key)}")
        if self.signal_strength > 0 and self.min_nodes < 2:
            raise ConfigurationError("min_nodes must be >= 2 when signal_strength > 0")
        if self.signal_strength > 0:
            if self.n_benign and not self.benign_pool:
                raise ConfigurationError("benign_pool is empty while signal_strength > 0")
            if self.n_malicious and not self.malicious_pool:
                raise ConfigurationError("malicious_pool is empty while signal_strength > 0")
        if self.signal_strength < 1 and not self.common_pool:
            raise ConfigurationError("common_pool is empty while signal_strength < 1")

        pools = [set(self.benign_pool), set(self.malicious_pool), set(self.common_pool)]
        if pools[0] & pools[1] or pools[0] & pools[2] or pools[1] & pools[2]:
            raise ConfigurationError("name pools must be disjoint")
        if any(ENTRY_NAME in p for p in pools):
            raise ConfigurationError(f"'{ENTRY_NAME}' is reserved for the entry node")
        for name in self.benign_pool + self.malicious_pool + self.common_pool:
            if not name or any(ch.isspace() for ch in name) or name.startswith(RESERVED_PREFIX):
                raise ConfigurationError(f"pool name {name!r} is empty, contains whitespace or starts with '{RESERVED_PREFIX}'")

    @property
    def size(self) -> int:
        return self.n_benign + self.n_malicious

    def label_of(self, index: int) -> Label:
        return Label.BENIGN if index < self.n_benign else Label.MALICIOUS


class SyntheticCorpusBuilder:
    """
    Heuristic CFG generator.
    Graph i uses its own random stream derived from (seed, i), so the corpus
    is identical whatever the number of worker threads.
    """

    def __init__(self, config: CorpusConfig):
        self.config = config

    def build_graph(self, index: int) -> ControlFlowGraph:
        cfg = self.config
        label = cfg.label_of(index)
        rng = make_rng(cfg.seed, "corpus", index)

        n_nodes = int(rng.integers(cfg.min_nodes, cfg.max_nodes + 1))
        label_pool = cfg.benign_pool if label is Label.BENIGN else cfg.malicious_pool
        import_rate = cfg.benign_import_rate if label is Label.BENIGN else cfg.malicious_import_rate

        names = [ENTRY_NAME]
        specific = rng.random(n_nodes - 1) < cfg.signal_strength
        for use_label_pool in specific:
            if use_label_pool:
                names.append(label_pool[int(rng.integers(len(label_pool)))])
            elif rng.random() < import_rate:
                names.append(random_import_name(rng))
            else:
                names.append(cfg.common_pool[int(rng.integers(len(cfg.common_pool)))])

        edges = self._random_dag(n_nodes, rng)
        nodes = tuple(FunctionNode(i, name) for i, name in enumerate(names))
        prefix = label.value
        local_index = index if label is Label.BENIGN else index - cfg.n_benign
        return ControlFlowGraph(
            name=f"{prefix}_{local_index:05d}",
            entry=0,
            nodes=nodes,
            edges=tuple(edges),
            label=label,
        )

    def _random_dag(self, n_nodes: int, rng: np.random.Generator) -> List[Tuple[int, int]]:
        """
        Edges only point from lower to higher index (acyclic); every node k >= 1
        gets one parent in [0, k), so everything is reachable from node 0.
        """
        edges = set()
        for k in range(1, n_nodes):
            edges.add((int(rng.integers(k)), k))
        extra = rng.random((n_nodes, n_nodes)) < self.config.edge_density
        for src, dst in zip(*np.nonzero(np.triu(extra, k=1))):
            edges.add((int(src), int(dst)))
        return sorted(edges)

    def build(self, threads: int = 1) -> List[ControlFlowGraph]:
        indices = range(self.config.size)
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                graphs = list(pool.map(self.build_graph, indices))
        else:
            graphs = [self.build_graph(i) for i in indices]

        logger.info(
            "Built synthetic corpus: %d benign, %d malicious (signal=%.2f, seed=%d)",
            self.config.n_benign, self.config.n_malicious,
            self.config.signal_strength, self.config.seed,
        )
        return graphs


def synth_corpus(config: CorpusConfig, threads: int = 1) -> List[ControlFlowGraph]:
    """Deterministic labelled corpus: benign graphs first, then malicious."""
    return SyntheticCorpusBuilder(config).build(threads=threads)


def is_connected_dag(graph: ControlFlowGraph) -> bool:
    """True when the graph is acyclic and every node is reachable from the entry."""
    g = graph.to_networkx()
    reachable = nx.descendants(g, graph.entry) | {graph.entry}
    return nx.is_directed_acyclic_graph(g) and len(reachable) == g.number_of_nodes()
