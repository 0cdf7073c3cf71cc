import random
from fractions import Fraction
from pathlib import Path

import pytest

from mensura import build_score, parse_document
from mensura.cmn import MeterMap, MeterSig
from mensura.model import ScoreEvent, VoiceStream
from mensura.primitives import Pitch

HERE = Path(__file__).parent
FIXTURES = HERE / "fixtures"
BAD = HERE / "bad"
FIXTURE_FILES = sorted(FIXTURES.glob("*.cmme.xml"))
METERS = [MeterSig(3), MeterSig(4), MeterSig(6)]

# Filled in by test_acceptance; printed at the end of the run.
ACCEPTANCE = {}


def fixture_path(name: str) -> Path:
    return FIXTURES / f"{name}.cmme.xml"


def load_ir(name: str, sel=None):
    doc = parse_document(fixture_path(name).read_bytes())
    return build_score(doc, sel)


def random_voice(rng: random.Random, n_events=None, index=1) -> VoiceStream:
    """Random notes and rests; lengths in minimae, some under a proportion."""
    n_events = n_events or rng.randint(1, 25)
    t = Fraction(0)
    events = []
    for i in range(n_events):
        written = rng.choice([Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2),
                              Fraction(3), Fraction(4), Fraction(6), Fraction(8), Fraction(12)])
        factor = rng.choice([Fraction(1)] * 6 + [Fraction(2, 3), Fraction(1, 2), Fraction(4, 3), Fraction(1, 3)])
        sounding = written * factor
        if rng.random() < 0.1:
            t += rng.choice([Fraction(1), Fraction(2)])  # a silent stretch
        kind = "rest" if rng.random() < 0.2 else "note"
        pitch = Pitch("CDEFGAB"[rng.randrange(7)], rng.randint(2, 5)) if kind == "note" else None
        events.append(ScoreEvent(kind, index, t, f"e{i}", written=written, sounding=sounding, pitch=pitch))
        t += sounding
    return VoiceStream(index, events=events, end=t)


def random_meter_map(rng: random.Random, end: Fraction) -> MeterMap:
    """Meter changes only at barlines of the preceding meter."""
    meter = rng.choice(METERS)
    entries = [(Fraction(0), meter)]
    t = Fraction(0)
    while t < end:
        t += meter.capacity * rng.randint(1, 4)
        nxt = rng.choice(METERS)
        if nxt != meter and t < end and rng.random() < 0.5:
            entries.append((t, nxt))
            meter = nxt
    return MeterMap(tuple(entries))


def bar_starts(mm: MeterMap, end: Fraction):
    """Barline positions computed by walking capacities, independent of MeterMap.bars."""
    out = [Fraction(0)]
    changes = dict(mm.entries)
    meter = changes[Fraction(0)]
    t = Fraction(0)
    while True:
        t += meter.capacity
        if t >= end:
            return out
        meter = changes.get(t, meter)
        out.append(t)


def brute_force_parts(voice: VoiceStream, mm: MeterMap, end: Fraction):
    """(bar index, event index, part length) for every sounding event, cut at every barline."""
    starts = bar_starts(mm, end) + [end]
    out = []
    for i, e in enumerate(voice.events):
        if not e.has_duration or not e.sounding:
            continue
        a, b = e.onset, e.onset + e.sounding
        for k in range(len(starts) - 1):
            lo, hi = max(a, starts[k]), min(b, starts[k + 1])
            if lo < hi:
                out.append((k + 1, i, hi - lo))
    return out


@pytest.fixture
def rng():
    return random.Random(20240607)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
