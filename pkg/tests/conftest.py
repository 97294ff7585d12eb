import pytest
import torch

from cfgevade.attack.state import IMPORT_NAME_CHARS
from cfgevade.data.loaders import linearize_corpus
from cfgevade.graph.builder import CorpusConfig, synth_corpus
from cfgevade.graph.cfg import ControlFlowGraph, FunctionNode, FunctionSequence, Label
from cfgevade.model.encoder import ModelConfig, SequenceClassifier
from cfgevade.model.surrogate import MeanPoolClassifier
from cfgevade.tokenizer.wordpiece import build_vocab, encode_corpus


def make_graph(names, edges, name="t", label=None, entry=0):
    nodes = tuple(FunctionNode(i, n) for i, n in enumerate(names))
    return ControlFlowGraph(name=name, entry=entry, nodes=nodes, edges=tuple(edges), label=label)


def make_surrogate(vocab, max_positions, word_weights, bias=0.0):
    """
    d=1 linear surrogate: malicious logit = mean of per-token weights + bias,
    benign logit fixed at 0. Tokens not in word_weights weigh 0.
    """
    model = MeanPoolClassifier(len(vocab), max_positions, d_model=1)
    with torch.no_grad():
        model.token_embedding.weight.zero_()
        for token, weight in word_weights.items():
            model.token_embedding.weight[vocab.id_of(token), 0] = weight
        model.classifier.weight.copy_(torch.tensor([[0.0], [1.0]], dtype=torch.float64))
        model.classifier.bias.copy_(torch.tensor([0.0, bias], dtype=torch.float64))
    model.eval()
    return model


@pytest.fixture(scope="session")
def small_graphs():
    return synth_corpus(CorpusConfig(n_benign=20, n_malicious=20, min_nodes=6, max_nodes=14, seed=3))


@pytest.fixture(scope="session")
def small_sequences(small_graphs):
    return linearize_corpus(small_graphs, max_calls=None)


@pytest.fixture(scope="session")
def small_vocab(small_sequences):
    return build_vocab(small_sequences, size=512, extra_chars=IMPORT_NAME_CHARS)


@pytest.fixture(scope="session")
def small_samples(small_vocab, small_sequences):
    return encode_corpus(small_vocab, small_sequences, max_calls=16, max_tokens=64)


@pytest.fixture
def tiny_config(small_vocab):
    return ModelConfig(vocab_size=len(small_vocab), max_positions=64, d_model=8, n_layers=1, n_heads=2, d_ff=16)


@pytest.fixture
def tiny_model(tiny_config):
    model = SequenceClassifier.initialize(tiny_config, seed=11)
    model.eval()
    return model


@pytest.fixture
def evil_sequence():
    return FunctionSequence("malicious_evil", Label.MALICIOUS, ("entry0", "fcn.00401000", "evil.fn", "fcn.00401000"))


@pytest.fixture
def graph_factory():
    return make_graph


@pytest.fixture
def surrogate_factory():
    return make_surrogate
