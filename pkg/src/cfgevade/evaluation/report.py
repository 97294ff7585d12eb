"""
Campaign report rendering: one row per rounds limit with mean/median
s_g, a_i and s_n across trials. JSON carries the raw per-trial counters.
"""
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from ..attack.campaign import CampaignStats
from ..common.exceptions import ReportError

logger = logging.getLogger(__name__)

REPORT_JSON = "report.json"
REPORT_TEXT = "report.txt"
MISSING = "n/a"


def format_percent(value: Optional[float]) -> str:
    return MISSING if value is None else f"{100.0 * value:.2f}%"


def format_count(value: Optional[float]) -> str:
    return MISSING if value is None else f"{value:.2f}"


def report_table(campaigns: Sequence[CampaignStats]) -> pd.DataFrame:
    rows = []
    for c in sorted(campaigns, key=lambda c: c.rounds):
        rows.append({
            "rounds": c.rounds,
            "trials": len(c.trials),
            "mean s_g": format_percent(c.mean_s_g),
            "median s_g": format_percent(c.median_s_g),
            "mean a_i": format_count(c.mean_a_i),
            "median a_i": format_count(c.median_a_i),
            "mean s_n": format_percent(c.mean_s_n),
            "median s_n": format_percent(c.median_s_n),
        })
    return pd.DataFrame(rows)


def render_report(campaigns: Sequence[CampaignStats]) -> Tuple[str, Dict[str, Any]]:
    """
    Raises:
        ReportError if there is no campaign to report
    """
    if not campaigns:
        raise ReportError("No campaign statistics to report")
    text = report_table(campaigns).to_string(index=False) + "\n"
    data = {"campaigns": [c.to_dict() for c in sorted(campaigns, key=lambda c: c.rounds)]}
    return text, data


def write_report(out_dir: Union[str, os.PathLike], campaigns: Sequence[CampaignStats]) -> str:
    """Writes report.json and report.txt under out_dir; returns the text table."""
    text, data = render_report(campaigns)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / REPORT_JSON).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / REPORT_TEXT).write_text(text, encoding="utf-8")
    logger.info("Report saved to %s", out)
    return text


def load_campaigns(path: Union[str, os.PathLike]) -> List[CampaignStats]:
    """
    Reads a report.json ({"campaigns": [...]}) or a single campaign object.
    A directory is read as <dir>/report.json.
    """
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_JSON
    if not path.exists():
        raise FileNotFoundError(f"Report file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        items = data["campaigns"] if isinstance(data, dict) and "campaigns" in data else [data]
        return [CampaignStats.from_dict(item) for item in items]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise ReportError(f"Unreadable campaign file {path}: {e}")


def plot_success_rates(campaigns: Sequence[CampaignStats], output_path: Union[str, os.PathLike]):
    """Mean s_g and s_n against the rounds limit."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not campaigns:
        raise ReportError("No campaign statistics to plot")
    ordered = sorted(campaigns, key=lambda c: c.rounds)
    rounds = [c.rounds for c in ordered]

    fig, ax = plt.subplots(figsize=(8, 5))
    ax.plot(rounds, [100.0 * (c.mean_s_g or 0.0) for c in ordered], marker="o", label="s_g")
    s_n = [(c.rounds, 100.0 * c.mean_s_n) for c in ordered if c.mean_s_n is not None]
    if s_n:
        ax.plot([r for r, _ in s_n], [v for _, v in s_n], marker="s", label="s_n")
    ax.set_title("Attack success rate vs rounds")
    ax.set_xlabel("Rounds limit")
    ax.set_ylabel("Mean success rate (%)")
    ax.set_xticks(rounds)
    ax.set_ylim(0, 100)
    ax.grid(True, which="both", linestyle="--", linewidth=0.5)
    ax.legend()
    fig.savefig(output_path)
    plt.close(fig)
    logger.info("Success-rate plot saved to %s", output_path)
