"""Report rendering: CSV contents and the PNG artifact."""

import csv

from akap.netsim import Transcript, run_auth_session
from akap.report import CSV_COLUMNS, render_sequence_diagram, write_report, write_summary_csv

from conftest import make_world, seed_at


def _transcript():
    world = make_world(seed=seed_at("rep", 0))
    run_auth_session(world)
    return world.transcript


def test_csv_matches_transcript(tmp_path):
    transcript = _transcript()
    path = tmp_path / "summary.csv"
    write_summary_csv(transcript, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(CSV_COLUMNS)
    assert len(rows) == 1 + len(transcript.entries)
    for row, entry in zip(rows[1:], transcript.entries):
        assert row == [
            str(entry.seq),
            str(entry.tick),
            entry.channel,
            entry.sender,
            entry.receiver,
            row[5],
            str(len(entry.payload)),
        ]
    # the four login steps appear by name, in order, on the public channel
    public_types = [r[5] for r in rows[1:] if r[2] == "public"]
    assert public_types == ["m1", "m2", "m3", "m4"]
    secure_types = [r[5] for r in rows[1:] if r[2] == "secure"]
    assert secure_types == [
        "sensor-reg-request",
        "sensor-reg-response",
        "user-reg-request",
        "user-reg-response",
    ]


def test_undecodable_payload_reported_as_raw(tmp_path):
    t = Transcript()
    t.append(0, "public", "adversary", "gateway", b"\xff\xff\xff")
    path = tmp_path / "noise.csv"
    write_summary_csv(t, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[1][5] == "raw"


def test_diagram_renders_nonempty(tmp_path):
    path = tmp_path / "seq.png"
    render_sequence_diagram(_transcript(), path)
    data = path.read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    assert len(data) > 2000


def test_diagram_is_deterministic(tmp_path):
    transcript = _transcript()
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    render_sequence_diagram(transcript, a)
    render_sequence_diagram(transcript, b)
    assert a.read_bytes() == b.read_bytes()


def test_empty_transcript_still_renders(tmp_path):
    path = tmp_path / "empty.png"
    render_sequence_diagram(Transcript(), path)
    assert path.stat().st_size > 0


def test_write_report_creates_dir_and_returns_paths(tmp_path):
    out = tmp_path / "nested" / "report"
    paths = write_report(_transcript(), out)
    assert set(paths) == {"summary", "diagram"}
    assert paths["summary"].name == "summary.csv" and paths["summary"].exists()
    assert paths["diagram"].name == "sequence.png" and paths["diagram"].exists()


def test_report_includes_adversary_events(tmp_path):
    world = make_world(seed=seed_at("rep", 1))
    run_auth_session(world)
    world.transcript.mark_event(world.clock, "observe")
    path = tmp_path / "with-events.png"
    render_sequence_diagram(world.transcript, path)
    assert path.stat().st_size > 0
