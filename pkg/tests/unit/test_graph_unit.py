import json
import re

import numpy as np
import pytest

from cfgevade.common.exceptions import ConfigurationError, MalformedJsonError, SchemaViolationError
from cfgevade.data.dataset_stats import (
    format_frequency_table, function_frequency, function_frequency_by_label,
)
from cfgevade.data.loaders import load_cfg, load_corpus, save_corpus
from cfgevade.graph.builder import (
    BENIGN_POOL, COMMON_POOL, ENTRY_NAME, MALICIOUS_POOL, CorpusConfig, SyntheticCorpusBuilder,
    is_connected_dag, random_import_name, synth_corpus,
)
from cfgevade.graph.cfg import FunctionSequence, Label, parse_cfg_json, serialize_cfg
from cfgevade.graph.traversal import dfs_linearize

MINIMAL = '{"name":"t","entry":0,"nodes":[{"id":0,"name":"entry0"}],"edges":[]}'
IMPORT_PATTERN = re.compile(r"^sym\.imp\.[A-Z0-9]{10}\.dll$")


def test_parse_minimal_graph():
    g = parse_cfg_json(MINIMAL)
    assert g.name == "t"
    assert g.entry == 0
    assert [n.name for n in g.nodes] == ["entry0"]
    assert g.edges == ()
    assert g.label is None


def test_dangling_edge_is_schema_violation():
    with pytest.raises(SchemaViolationError):
        parse_cfg_json(MINIMAL.replace('"edges":[]', '"edges":[[0,9]]'))


@pytest.mark.parametrize("payload", [
    '{"name":"t","entry":0,"nodes":[{"id":0,"name":"a"},{"id":0,"name":"b"}],"edges":[]}',
    '{"name":"t","entry":3,"nodes":[{"id":0,"name":"a"}],"edges":[]}',
    '{"name":"t","entry":0,"nodes":[{"id":0,"name":"has space"}],"edges":[]}',
    '{"name":"t","entry":0,"nodes":[{"id":0,"name":""}],"edges":[]}',
    '{"name":"t","entry":0,"nodes":[{"id":0,"name":"##ab"}],"edges":[]}',
    '{"name":"t","nodes":[{"id":0,"name":"a"}],"edges":[]}',
    '{"name":"t","entry":0,"nodes":[{"id":-1,"name":"a"}],"edges":[]}',
    '{"name":"t","entry":0,"nodes":[{"id":0,"name":"a"}],"edges":[[0]]}',
    '{"name":"t","label":"goodware","entry":0,"nodes":[{"id":0,"name":"a"}],"edges":[]}',
    '[1, 2, 3]',
])
def test_schema_violations(payload):
    with pytest.raises(SchemaViolationError):
        parse_cfg_json(payload)


@pytest.mark.parametrize("payload", ['{"name": ', b"\xff\xfe{}", ""])
def test_malformed_json(payload):
    with pytest.raises(MalformedJsonError):
        parse_cfg_json(payload)


def test_unknown_keys_are_ignored():
    data = json.loads(MINIMAL)
    data["arch"] = "x86"
    assert parse_cfg_json(json.dumps(data)) == parse_cfg_json(MINIMAL)


def test_canonical_round_trip():
    g = parse_cfg_json(MINIMAL)
    text = serialize_cfg(g)
    assert serialize_cfg(parse_cfg_json(text)) == text
    assert parse_cfg_json(text) == g
    assert text.endswith("\n")


def test_serialization_ignores_listing_order(graph_factory):
    a = parse_cfg_json(
        '{"name":"g","entry":0,"nodes":[{"id":1,"name":"a"},{"id":0,"name":"entry0"}],'
        '"edges":[[1,1],[0,1],[0,1]]}'
    )
    b = graph_factory(["entry0", "a"], [(0, 1), (1, 1)], name="g")
    assert a == b
    assert serialize_cfg(a) == serialize_cfg(b)


def test_label_is_serialized(graph_factory):
    g = graph_factory(["entry0"], [], label=Label.MALICIOUS)
    assert '"label":"malicious"' in serialize_cfg(g)


def test_corpus_graphs_round_trip(small_graphs):
    for g in small_graphs:
        assert parse_cfg_json(serialize_cfg(g)) == g


def test_dfs_chain(graph_factory):
    g = graph_factory(["entry0", "a", "b"], [(0, 1), (1, 2)])
    assert dfs_linearize(g, 16).calls == ("entry0", "a", "b")


def test_dfs_diamond_tie_break(graph_factory):
    # entry0 -> {b, a}; a -> c; b -> c
    g = graph_factory(["entry0", "b", "a", "c"], [(0, 1), (0, 2), (2, 3), (1, 3)])
    assert dfs_linearize(g, 16).calls == ("entry0", "a", "c", "b")


def test_dfs_equal_names_break_on_id(graph_factory):
    g = graph_factory(["entry0", "x", "x", "y"], [(0, 2), (0, 1), (2, 3)])
    # id 1 pops before id 2; y is only reachable through id 2
    assert dfs_linearize(g, 16).calls == ("entry0", "x", "x", "y")


def test_dfs_truncates_long_chain(graph_factory):
    names = ["entry0"] + [f"f{i:02d}" for i in range(1, 20)]
    g = graph_factory(names, [(i, i + 1) for i in range(19)])
    assert dfs_linearize(g, 16).calls == tuple(names[:16])
    assert len(dfs_linearize(g, None)) == 20


def test_dfs_skips_unreachable_and_handles_cycles(graph_factory):
    g = graph_factory(["entry0", "a", "orphan"], [(0, 1), (1, 0), (2, 0)])
    assert dfs_linearize(g).calls == ("entry0", "a")


def test_dfs_length_is_min_of_window_and_reachable(small_graphs):
    for g in small_graphs:
        assert len(dfs_linearize(g, 16)) == min(16, len(g.nodes))


def test_dfs_rejects_nonpositive_window(graph_factory):
    with pytest.raises(ValueError):
        dfs_linearize(graph_factory(["entry0"], []), 0)


def test_synth_corpus_counts_and_labels():
    graphs = synth_corpus(CorpusConfig(n_benign=10, n_malicious=10, seed=1))
    assert len(graphs) == 20
    assert [g.label for g in graphs] == [Label.BENIGN] * 10 + [Label.MALICIOUS] * 10
    assert len({g.name for g in graphs}) == 20
    for g in graphs:
        assert g.function_names[g.entry] == ENTRY_NAME
        assert is_connected_dag(g)


def test_synth_corpus_is_deterministic():
    cfg = CorpusConfig(n_benign=15, n_malicious=15, seed=7)
    first = [serialize_cfg(g) for g in synth_corpus(cfg)]
    second = [serialize_cfg(g) for g in synth_corpus(cfg)]
    assert first == second


def test_synth_corpus_parallel_equals_serial():
    cfg = CorpusConfig(n_benign=12, n_malicious=12, seed=5)
    assert synth_corpus(cfg, threads=4) == synth_corpus(cfg, threads=1)


def test_full_signal_plants_malicious_names_in_window():
    graphs = synth_corpus(CorpusConfig(n_benign=0, n_malicious=50, signal_strength=1.0, seed=9))
    for g in graphs:
        calls = dfs_linearize(g, 16).calls
        assert any(name in MALICIOUS_POOL for name in calls)


def test_signal_fraction_converges():
    cfg = CorpusConfig(n_benign=500, n_malicious=500, signal_strength=0.6, seed=21)
    specific = total = 0
    for g in SyntheticCorpusBuilder(cfg).build():
        pool = BENIGN_POOL if g.label is Label.BENIGN else MALICIOUS_POOL
        names = [n.name for n in g.nodes if n.id != g.entry]
        specific += sum(name in pool for name in names)
        total += len(names)
    assert abs(specific / total - 0.6) <= 0.05


def test_import_slots_follow_label_rates():
    cfg = CorpusConfig(n_benign=300, n_malicious=300, signal_strength=0.6, seed=23)
    pools = set(BENIGN_POOL) | set(MALICIOUS_POOL) | set(COMMON_POOL) | {ENTRY_NAME}
    graphs = SyntheticCorpusBuilder(cfg).build()
    shares = {}
    for label in Label:
        imports = shared = 0
        for g in (g for g in graphs if g.label is label):
            for n in g.nodes:
                if n.name in pools:
                    shared += n.name in COMMON_POOL
                else:
                    assert IMPORT_PATTERN.match(n.name)
                    imports += 1
        shares[label] = imports / (imports + shared)
    assert abs(shares[Label.BENIGN] - 0.5) <= 0.05
    assert abs(shares[Label.MALICIOUS] - 0.1) <= 0.05


def test_import_rates_zero_keeps_shared_pool_only():
    cfg = CorpusConfig(n_benign=20, n_malicious=20, benign_import_rate=0.0, malicious_import_rate=0.0, seed=4)
    pools = set(BENIGN_POOL) | set(MALICIOUS_POOL) | set(COMMON_POOL) | {ENTRY_NAME}
    assert all(n.name in pools for g in synth_corpus(cfg) for n in g.nodes)


def test_random_import_name_format():
    rng = np.random.default_rng(0)
    assert all(IMPORT_PATTERN.match(random_import_name(rng)) for _ in range(500))

@pytest.mark.parametrize("kwargs", [
    {"n_benign": -1},
    {"min_nodes": 10, "max_nodes": 5},
    {"edge_density": 1.5},
    {"signal_strength": -0.1},
    {"benign_pool": ("fcn.00401000",)},
    {"common_pool": ("entry0",)},
    {"common_pool": ("##fcn",)},
    {"min_nodes": 1, "max_nodes": 1, "signal_strength": 1.0},
    {"benign_import_rate": 1.5},
    {"malicious_import_rate": -0.2},
])
def test_corpus_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        CorpusConfig(**kwargs)


def test_function_frequency_entry_ranks_first(small_sequences):
    ranking = function_frequency(small_sequences)
    assert ranking[0] == ("entry0", len(small_sequences))
    counts = [c for _, c in ranking]
    assert counts == sorted(counts, reverse=True)


def test_function_frequency_edge_cases():
    assert function_frequency([]) == []
    seqs = [FunctionSequence("s", None, ("b", "a", "a", "b"))]
    assert function_frequency(seqs) == [("a", 2), ("b", 2)]


def test_frequency_by_label():
    seqs = [
        FunctionSequence("b0", Label.BENIGN, ("entry0", "x")),
        FunctionSequence("m0", Label.MALICIOUS, ("entry0", "y", "y")),
    ]
    table = function_frequency_by_label(seqs)
    assert list(table["function"]) == ["entry0", "y", "x"]
    row = table.set_index("function").loc["y"]
    assert row["malicious"] == 2 and row["benign"] == 0
    assert np.isclose(table.set_index("function").loc["entry0", "malicious_share"], 0.5)
    text = format_frequency_table(table, top=2)
    assert "entry0" in text and "50.00%" in text and " x " not in text


def test_sequence_helpers():
    seq = FunctionSequence("s", Label.MALICIOUS, ("entry0", "a", "b", "a"))
    assert seq.text == "entry0 a b a"
    assert seq.window(2).calls == ("entry0", "a")
    assert seq.window(None) is seq and seq.window(10) is seq
    renamed = seq.replace_calls({"a": "sym.imp.AAAAAAAAAA.dll"})
    assert renamed.calls == ("entry0", "sym.imp.AAAAAAAAAA.dll", "b", "sym.imp.AAAAAAAAAA.dll")
    assert (renamed.name, renamed.label) == (seq.name, seq.label)


def test_corpus_directory_round_trip(tmp_path, small_graphs):
    written = save_corpus(small_graphs, tmp_path)
    assert all(p.read_text(encoding="utf-8") == serialize_cfg(g) for p, g in zip(written, small_graphs))
    loaded = load_corpus(tmp_path)
    assert sorted(serialize_cfg(g) for g in loaded) == sorted(serialize_cfg(g) for g in small_graphs)
    assert [g.label for g in loaded[:20]] == [Label.BENIGN] * 20


def test_label_comes_from_directory(tmp_path):
    folder = tmp_path / "malicious"
    folder.mkdir()
    path = folder / "m.cfg.json"
    path.write_text(MINIMAL, encoding="utf-8")
    assert load_cfg(path, expected=Label.MALICIOUS).label is Label.MALICIOUS
    assert load_corpus(tmp_path)[0].label is Label.MALICIOUS

    path.write_text(MINIMAL[:-1] + ',"label":"benign"}', encoding="utf-8")
    with pytest.raises(SchemaViolationError):
        load_corpus(tmp_path)


def test_missing_corpus_directory(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_corpus(tmp_path / "nowhere")
