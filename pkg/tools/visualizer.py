"""
Charts for PairTrust runs: trust vs. reputation trajectories and average
send proportion per game condition.
"""

import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib
matplotlib.use('Agg')  # Non-interactive backend
import matplotlib.pyplot as plt
import pandas as pd
import seaborn as sns

from tools.analysis import DependentMeasures
from tools.ledger import TrajectoryRow

logger = logging.getLogger(__name__)

sns.set_palette(["#60a5fa", "#a855f7", "#ec4899", "#10b981", "#f59e0b"])


def _save_figure(fig, path: Union[str, Path]) -> Path:
    """Write a matplotlib figure to PNG and release it."""
    path = Path(path)
    fig.savefig(path, format='png', dpi=150, bbox_inches='tight')
    plt.close(fig)
    logger.info(f"Saved chart to {path}")
    return path


def plot_trust_trajectory(
    rows: Sequence[TrajectoryRow],
    path: Union[str, Path],
    partner_id: Optional[str] = None,
    title: Optional[str] = None,
) -> Path:
    """
    Line chart of the trust others hold about one participant against that
    participant's reputation, by round.

    Args:
        rows: Trajectory rows from a simulation or a scored log.
        path: PNG destination.
        partner_id: Participant to plot; defaults to the first one in the rows.
        title: Chart title.
    """
    frame = pd.DataFrame([{
        "round": r.round,
        "observer": r.observer_id,
        "partner": r.partner_id,
        "game": f"{r.session_id}/{r.game_condition}",
        "trust": r.trust_value,
        "reputation": r.reputation_value,
    } for r in rows])
    if frame.empty:
        raise ValueError("No trajectory rows to plot")
    partner_id = partner_id or frame["partner"].iloc[0]
    frame = frame[frame["partner"] == partner_id]
    game = frame["game"].iloc[0]
    frame = frame[frame["game"] == game]

    fig, ax = plt.subplots(figsize=(12, 6))
    for observer, group in frame.groupby("observer"):
        ax.plot(group["round"], group["trust"], linewidth=2, marker='o', markersize=4, label=f"trust held by {observer}")
    reputation = frame.groupby("round")["reputation"].last()
    ax.plot(reputation.index, reputation.values, linewidth=2, linestyle='--', color='#64748b', label="reputation")

    ax.set_ylim(-0.05, 1.05)
    ax.set_xlabel("Round", fontsize=11)
    ax.set_ylabel("Score", fontsize=11)
    ax.set_title(title or f"Trust vs. reputation of {partner_id} ({game})", fontsize=14, fontweight='bold', pad=20)
    ax.grid(True, alpha=0.2, linestyle='--')
    ax.legend(loc='best', framealpha=0.9)
    return _save_figure(fig, path)


def plot_condition_means(measures: Sequence[DependentMeasures], path: Union[str, Path], title: str = "Average send proportion by game") -> Path:
    """Bar chart of mean sender and receiver send proportions per condition, with 95% CIs."""
    records = []
    for m in measures:
        if m.avg_send_proportion_as_sender is not None:
            records.append({"condition": m.game_condition, "role": "sender", "proportion": m.avg_send_proportion_as_sender})
        if m.avg_send_proportion_as_receiver is not None:
            records.append({"condition": m.game_condition, "role": "receiver", "proportion": m.avg_send_proportion_as_receiver})
    frame = pd.DataFrame(records)
    if frame.empty:
        raise ValueError("No dependent measures to plot")

    fig, ax = plt.subplots(figsize=(10, 6))
    sns.barplot(data=frame, x="condition", y="proportion", hue="role", errorbar=("ci", 95), ax=ax)
    ax.set_ylim(0, 1)
    ax.set_xlabel("Game", fontsize=11)
    ax.set_ylabel("Average send proportion", fontsize=11)
    ax.set_title(title, fontsize=14, fontweight='bold', pad=20)
    ax.grid(True, axis='y', alpha=0.2, linestyle='--')
    return _save_figure(fig, path)
