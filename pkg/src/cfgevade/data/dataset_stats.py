"""
Function-call frequency statistics over a linearized corpus.
"""
from collections import Counter
from typing import Iterable, List, Tuple

import pandas as pd

from ..graph.cfg import FunctionSequence, Label


def function_frequency(corpus: Iterable[FunctionSequence]) -> List[Tuple[str, int]]:
    """Call counts across all sequences, by count descending then name ascending."""
    counts = Counter()
    for seq in corpus:
        counts.update(seq.calls)
    return sorted(counts.items(), key=lambda item: (-item[1], item[0]))


def function_frequency_by_label(corpus: Iterable[FunctionSequence]) -> pd.DataFrame:
    """
    Same ranking as function_frequency, split into benign and malicious counts.
    malicious_share is the fraction of a name's calls made by malicious samples.
    """
    corpus = list(corpus)
    per_label = {
        label: Counter(c for seq in corpus if seq.label is label for c in seq.calls)
        for label in Label
    }
    rows = []
    for name, total in function_frequency(corpus):
        benign = per_label[Label.BENIGN][name]
        malicious = per_label[Label.MALICIOUS][name]
        rows.append({
            "function": name,
            "count": total,
            "benign": benign,
            "malicious": malicious,
            "malicious_share": malicious / total if total else 0.0,
        })
    return pd.DataFrame(rows, columns=["function", "count", "benign", "malicious", "malicious_share"])


def format_frequency_table(table: pd.DataFrame, top: int = 10) -> str:
    """Top-N table as aligned text."""
    if table.empty:
        return "(empty corpus)\n"
    view = table.head(top).copy()
    view["malicious_share"] = view["malicious_share"].map(lambda v: f"{100 * v:.2f}%")
    return view.to_string(index=False) + "\n"
