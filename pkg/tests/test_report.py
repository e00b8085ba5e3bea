import math

import pytest

from odro.core import ConvergenceRecord, Phase
from odro.report import load_history, render_comparison, render_history


@pytest.fixture()
def sawtooth():
    records = []
    t = 0
    r = 1.0
    for cycle in (1, 2):
        for _ in range(5):
            t += 1
            r *= 2.0
            records.append(ConvergenceRecord(t, r, Phase.ITERATE, cycle))
        r *= 1e-3
        records.append(ConvergenceRecord(t, r, Phase.OPTIMIZE, cycle))
    return records


def test_render_history(tmp_path, sawtooth):
    out = render_history(sawtooth, tmp_path / "h.png", title="sawtooth")
    assert out.exists() and out.stat().st_size > 1000


def test_render_handles_nonpositive_values(tmp_path):
    records = [
        ConvergenceRecord(1, 1.0, Phase.ITERATE, 1),
        ConvergenceRecord(2, math.inf, Phase.ITERATE, 1),
        ConvergenceRecord(3, 0.0, Phase.OPTIMIZE, 1),
    ]
    out = render_history(records, tmp_path / "h.png")
    assert out.exists()


def test_render_comparison(tmp_path, sawtooth):
    flat = [ConvergenceRecord(i + 1, 10.0 * 1.5**i, Phase.ITERATE, 0) for i in range(8)]
    out = render_comparison({"odro": sawtooth, "baseline": flat}, tmp_path / "c.png")
    assert out.exists() and out.stat().st_size > 1000


def test_history_csv_round_trip(tmp_path, sawtooth):
    import csv

    path = tmp_path / "history.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "cycle", "phase", "r_total"])
        for rec in sawtooth:
            writer.writerow([rec.iteration, rec.cycle, rec.phase.value, repr(rec.r_total)])
    back = load_history(path)
    assert back == sawtooth
