# Init for cfgevade.graph package
from .cfg import (
    ControlFlowGraph, FunctionNode, FunctionSequence, Label,
    parse_cfg_json, serialize_cfg,
)
from .traversal import DFSLinearizer, dfs_linearize
from .builder import CorpusConfig, SyntheticCorpusBuilder, synth_corpus
