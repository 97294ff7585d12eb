import dataclasses

import numpy as np
import pytest

from cfgevade.attack.campaign import run_campaign
from cfgevade.attack.explainability import ExplainabilityAttack, attack_sample
from cfgevade.attack.state import IMPORT_NAME_CHARS, AttackConfig, AttackStatus
from cfgevade.attribution.integrated_gradients import explain
from cfgevade.common.exceptions import NotMaliciousError
from cfgevade.data.loaders import linearize_corpus
from cfgevade.graph.builder import CorpusConfig, synth_corpus
from cfgevade.graph.cfg import FunctionSequence, Label
from cfgevade.model.encoder import ModelConfig
from cfgevade.model.trainer import TrainConfig, train
from cfgevade.tokenizer.wordpiece import build_vocab, encode_corpus


@pytest.fixture
def evil_vocab(evil_sequence):
    return build_vocab([evil_sequence], size=256, extra_chars=IMPORT_NAME_CHARS)


def surrogate(surrogate_factory, vocab, evil_weight, bias):
    return surrogate_factory(vocab, 64, {"evil.fn": evil_weight}, bias=bias)


def test_single_positive_word_flips_in_one_round(surrogate_factory, evil_vocab, evil_sequence):
    # 5 tokens, only evil.fn weighs 4: logit 4/5 - 0.4 > 0, after rename -0.4 < 0
    model = surrogate(surrogate_factory, evil_vocab, 4.0, -0.4)
    outcome = attack_sample(model, evil_vocab, evil_sequence, AttackConfig(rounds=3), np.random.default_rng(0))

    assert outcome.status is AttackStatus.SUCCESS
    assert outcome.rounds_used == 1
    assert [r.original for r in outcome.replacements] == ["evil.fn"]
    assert outcome.replacements[0].score == pytest.approx(0.8, abs=1e-10)
    new_name = outcome.replacements[0].replacement
    assert outcome.final_calls == ("entry0", "fcn.00401000", new_name, "fcn.00401000")
    assert outcome.initial_probability >= 0.5 > outcome.final_probability


def test_no_positive_word_is_unimprovable(surrogate_factory, evil_vocab, evil_sequence):
    model = surrogate(surrogate_factory, evil_vocab, -1.0, 1.0)
    outcome = attack_sample(model, evil_vocab, evil_sequence, AttackConfig(rounds=5), np.random.default_rng(0))
    assert outcome.status is AttackStatus.UNIMPROVABLE
    assert outcome.rounds_used == 0
    assert outcome.history == [evil_sequence.calls]
    assert not outcome.stalled


def test_exhausted_rounds_fail(surrogate_factory, evil_vocab, evil_sequence):
    model = surrogate(surrogate_factory, evil_vocab, 4.0, 2.0)
    outcome = attack_sample(model, evil_vocab, evil_sequence, AttackConfig(rounds=1), np.random.default_rng(0))
    assert outcome.status is AttackStatus.FAILURE
    assert outcome.rounds_used == 1
    assert not outcome.stalled


def test_later_stall_is_a_failure(surrogate_factory, evil_vocab, evil_sequence):
    model = surrogate(surrogate_factory, evil_vocab, 4.0, 2.0)
    outcome = attack_sample(model, evil_vocab, evil_sequence, AttackConfig(rounds=3), np.random.default_rng(0))
    assert outcome.status is AttackStatus.FAILURE
    assert outcome.stalled
    assert outcome.rounds_used == 1
    assert len(outcome.history) == 2


def test_benign_samples_are_refused(surrogate_factory, evil_vocab, evil_sequence):
    model = surrogate(surrogate_factory, evil_vocab, 4.0, -0.4)
    benign = FunctionSequence("b", Label.BENIGN, evil_sequence.calls)
    with pytest.raises(NotMaliciousError):
        attack_sample(model, evil_vocab, benign, AttackConfig(), np.random.default_rng(0))

    detected_benign = surrogate(surrogate_factory, evil_vocab, 0.0, -1.0)
    with pytest.raises(NotMaliciousError) as err:
        attack_sample(detected_benign, evil_vocab, evil_sequence, AttackConfig(), np.random.default_rng(0))
    assert err.value.probability < 0.5


def test_same_function_everywhere_gets_one_import(surrogate_factory, evil_vocab):
    seq = FunctionSequence("m", Label.MALICIOUS, ("entry0", "evil.fn", "fcn.00401000", "evil.fn"))
    model = surrogate(surrogate_factory, evil_vocab, 4.0, -0.4)
    outcome = attack_sample(model, evil_vocab, seq, AttackConfig(rounds=1), np.random.default_rng(1))
    assert len(outcome.replacements) == 1
    name = outcome.replacements[0].replacement
    assert outcome.final_calls == ("entry0", name, "fcn.00401000", name)


# trained toy model


@pytest.fixture(scope="module")
def toy_setup():
    graphs = synth_corpus(CorpusConfig(n_benign=60, n_malicious=60, min_nodes=6, max_nodes=16, seed=17))
    sequences = linearize_corpus(graphs, max_calls=None)
    vocab = build_vocab([s.window(16) for s in sequences], size=512, extra_chars=IMPORT_NAME_CHARS, min_frequency=2)
    samples = encode_corpus(vocab, sequences, max_calls=16, max_tokens=64)
    config = ModelConfig(vocab_size=len(vocab), max_positions=64, d_model=16, n_layers=1, n_heads=2, d_ff=32)
    model = train(samples, TrainConfig(batch_size=16, epochs=20, learning_rate=5e-3, seed=17), config).model
    return model, vocab, sequences, samples


def test_completeness_on_trained_model(toy_setup):
    model, _, _, samples = toy_setup
    for sample in samples[:100]:
        report = explain(model, sample, steps=50)
        assert report.completeness_gap <= 1e-3 * max(1.0, abs(report.delta))


def test_completeness_improves_with_steps(toy_setup):
    model, _, _, samples = toy_setup
    for sample in samples[::12]:
        coarse = explain(model, sample, steps=10).completeness_gap
        fine = explain(model, sample, steps=200).completeness_gap
        assert fine <= coarse + 1e-12


def test_attack_properties_on_trained_model(toy_setup):
    model, vocab, sequences, _ = toy_setup
    config = AttackConfig(rounds=3, ig_steps=20)
    attack = ExplainabilityAttack(model, vocab, config)
    attacked = 0
    for k, seq in enumerate(s for s in sequences if s.label is Label.MALICIOUS):
        try:
            outcome = attack.attack(seq, np.random.default_rng(k))
        except NotMaliciousError:
            continue
        attacked += 1
        final = FunctionSequence(seq.name, seq.label, outcome.final_calls)
        assert (outcome.status is AttackStatus.SUCCESS) == (attack.malicious_probability(final) < 0.5)
        assert outcome.rounds_used <= config.rounds
        assert len(outcome.history) == outcome.rounds_used + 1

        for round_n in range(outcome.rounds_used):
            before = FunctionSequence(seq.name, seq.label, outcome.history[round_n])
            mapping = {r.original: r.replacement for r in outcome.replacements if r.round == round_n}
            assert outcome.history[round_n + 1] == before.replace_calls(mapping).calls
            assert len(outcome.history[round_n + 1]) == len(seq.calls)
            scores = {}
            for w in explain(model, attack.encode(before), steps=config.ig_steps).word_scores:
                scores[w.word] = max(scores.get(w.word, float("-inf")), w.score)
            assert all(scores[name] > 0 for name in mapping)
    assert attacked > 0



def test_attack_flips_most_improvable_samples(toy_setup):
    model, vocab, sequences, _ = toy_setup
    stats = run_campaign(model, vocab, sequences, AttackConfig(rounds=3, sample_limit=60, trials=1, ig_steps=20, seed=3))
    trial = stats.trials[0]
    assert trial.attempted > 0
    assert trial.improvable > 0
    assert trial.successes / trial.improvable >= 0.5


def test_more_rounds_never_undo_earlier_success(toy_setup):
    model, vocab, sequences, _ = toy_setup
    malicious = [s for s in sequences if s.label is Label.MALICIOUS][:20]
    short = ExplainabilityAttack(model, vocab, AttackConfig(rounds=1, ig_steps=10))
    long = ExplainabilityAttack(model, vocab, AttackConfig(rounds=3, ig_steps=10))
    for k, seq in enumerate(malicious):
        try:
            first = short.attack(seq, np.random.default_rng(k))
        except NotMaliciousError:
            continue
        second = long.attack(seq, np.random.default_rng(k))
        if first.status is AttackStatus.SUCCESS:
            assert second.status is AttackStatus.SUCCESS
            assert second.rounds_used == first.rounds_used


def test_campaign_is_deterministic_and_thread_independent(toy_setup):
    model, vocab, sequences, _ = toy_setup
    config = AttackConfig(rounds=2, sample_limit=8, trials=2, ig_steps=10, seed=5)
    serial = run_campaign(model, vocab, sequences, config, threads=1)
    again = run_campaign(model, vocab, sequences, config, threads=1)
    parallel = run_campaign(model, vocab, sequences, config, threads=4)
    assert serial.to_dict() == again.to_dict() == parallel.to_dict()
    for trial in serial.trials:
        assert trial.successes <= trial.improvable <= trial.attempted
        assert trial.attempted + trial.skipped_benign == 8

    wider = run_campaign(model, vocab, sequences, dataclasses.replace(config, rounds=3))
    assert [t.attempted for t in wider.trials] == [t.attempted for t in serial.trials]
