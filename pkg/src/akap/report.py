"""Transcript reporting: delimited summary plus a rendered sequence diagram.

The CSV is the machine-readable artifact; the figure is for eyeballing a
run (who talked to whom, in what order, over which channel). Rendering
uses the Agg backend so it works headless, and output is deterministic
for a given transcript.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .messages import decode_message, message_name  # noqa: E402
from .netsim import CH_SECURE, Transcript  # noqa: E402

CSV_COLUMNS = ("seq", "tick", "channel", "sender", "receiver", "type", "size_bytes")


def _frame_type(payload: bytes) -> str:
    try:
        return message_name(decode_message(payload))
    except Exception:
        return "raw"


def write_summary_csv(transcript: Transcript, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for e in transcript.entries:
            writer.writerow(
                [e.seq, e.tick, e.channel, e.sender, e.receiver, _frame_type(e.payload), len(e.payload)]
            )


def _participants(transcript: Transcript) -> list[str]:
    seen: list[str] = []
    for e in transcript.entries:
        for name in (e.sender, e.receiver):
            if name not in seen:
                seen.append(name)
    return seen


def render_sequence_diagram(transcript: Transcript, path: str | Path) -> None:
    parties = _participants(transcript)
    if not parties:
        parties = ["(empty)"]
    rows = len(transcript.entries)
    x_of = {name: i for i, name in enumerate(parties)}

    fig, ax = plt.subplots(figsize=(2.2 + 1.9 * len(parties), 1.6 + 0.5 * max(rows, 1)))
    bottom = -(rows + 1)
    for name, x in x_of.items():
        ax.plot([x, x], [0.5, bottom], color="0.75", lw=1, zorder=1)
        ax.text(x, 0.9, name, ha="center", va="bottom", fontsize=10, weight="bold")

    for row, e in enumerate(transcript.entries, start=1):
        y = -row
        x0, x1 = x_of[e.sender], x_of[e.receiver]
        style = "--" if e.channel == CH_SECURE else "-"
        ax.annotate(
            "",
            xy=(x1, y),
            xytext=(x0, y),
            arrowprops=dict(arrowstyle="-|>", linestyle=style, color="C0", lw=1.4),
            zorder=2,
        )
        label = f"{_frame_type(e.payload)}  t={e.tick}"
        ax.text((x0 + x1) / 2, y + 0.16, label, ha="center", va="bottom", fontsize=8)

    for i, event in enumerate(transcript.events):
        kind = event.get("kind", "?")
        tick = event.get("tick", "?")
        ax.text(
            len(parties) - 0.45,
            bottom + 0.35 - 0.35 * i,
            f"event: {kind} @ t={tick}",
            ha="right",
            fontsize=7,
            style="italic",
            color="0.35",
        )

    ax.set_xlim(-0.6, len(parties) - 0.4)
    ax.set_ylim(bottom - 0.5, 1.6)
    ax.axis("off")
    fig.savefig(path, dpi=120, metadata={"Software": "akap-report"})
    plt.close(fig)


def write_report(transcript: Transcript, out_dir: str | Path) -> dict[str, Path]:
    """Render both artifacts into out_dir; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "summary": out / "summary.csv",
        "diagram": out / "sequence.png",
    }
    write_summary_csv(transcript, paths["summary"])
    render_sequence_diagram(transcript, paths["diagram"])
    return paths
