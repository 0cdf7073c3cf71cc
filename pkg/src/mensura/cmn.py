"""Conversion of the score model to barred common music notation.

One minima becomes one half note, so lengths in minimae and in half-note
units are the same numbers.  Meters come from the mensuration signs
(3/2, 4/2 or 6/2), every voice is cut at the same barlines, notes crossing a
barline are split into tied parts, and proportioned passages become tuplets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from statistics import median_high
from typing import Dict, List, Optional, Sequence, Tuple

from .model import Mensuration, ScoreEvent, ScoreIR, VariantSelector, VoiceStream, build_score
from .primitives import Pitch
from .report import ConversionReport

__all__ = [
    "Unrepresentable", "MeterSig", "MeterMap", "CmnNote", "TupletSpec", "Measure", "SpanMarker",
    "Directive", "Ornament", "MeasuredScore", "CLEF_CHOICES", "DUR_VALUES", "SYMBOLS",
    "flatten_editorial", "mensur_to_meter", "infer_meter_map", "normalize_clef",
    "decompose_duration", "bar_voice", "proportions_to_tuplets", "mensur_directive",
    "attach_spans", "to_measured", "MAX_TUPLET_TERM",
]


class Unrepresentable(ValueError):
    code = "Unrepresentable"


DUR_VALUES = {
    "breve": Fraction(4), "whole": Fraction(2), "half": Fraction(1),
    "quarter": Fraction(1, 2), "eighth": Fraction(1, 4), "sixteenth": Fraction(1, 8),
}
_DOT_FACTOR = (Fraction(1), Fraction(3, 2), Fraction(7, 4))
LONGEST = DUR_VALUES["breve"]

# (value, dur, dots), longest first; nothing longer than a plain breve
SYMBOLS: Tuple[Tuple[Fraction, str, int], ...] = tuple(sorted(
    ((v * _DOT_FACTOR[d], name, d) for name, v in DUR_VALUES.items() for d in range(3)
     if v * _DOT_FACTOR[d] <= LONGEST),
    key=lambda s: -s[0],
))
_SYMBOL_BY_VALUE = {s[0]: s for s in SYMBOLS}

CLEF_CHOICES = ("G2", "G2_ottava_bassa", "F4")
MIDDLE_C = 60
LOW_F = 53  # F3, lower edge of the G2 ottava bassa band
MAX_TUPLET_TERM = 32
MAX_CHAIN = 8


# ------------------------------------------------------------------------ meters


@dataclass(frozen=True)
class MeterSig:
    count: int
    unit: int = 2

    def __post_init__(self):
        if (self.count, self.unit) not in ((3, 2), (4, 2), (6, 2)):
            raise ValueError(f"meter {self.count}/{self.unit} is not one of 3/2, 4/2, 6/2")

    @property
    def capacity(self) -> Fraction:
        """Bar length in half notes (= minimae)."""
        return Fraction(self.count * 2, self.unit)

    def __str__(self):
        return f"{self.count}/{self.unit}"


@dataclass(frozen=True)
class MeterMap:
    entries: Tuple[Tuple[Fraction, MeterSig], ...]

    def __post_init__(self):
        if not self.entries or self.entries[0][0] != 0:
            raise ValueError("meter map must start at onset 0")
        for (a, ma), (b, mb) in zip(self.entries, self.entries[1:]):
            if not a < b:
                raise ValueError("meter map onsets must increase strictly")
            if ma == mb:
                raise ValueError("consecutive meter map entries must differ")

    @classmethod
    def single(cls, meter: MeterSig) -> "MeterMap":
        return cls(((Fraction(0), meter),))

    def meter_at(self, t: Fraction) -> MeterSig:
        current = self.entries[0][1]
        for onset, m in self.entries:
            if onset <= t:
                current = m
        return current

    def bars(self, end: Fraction) -> List[Tuple[Fraction, MeterSig, Fraction]]:
        """``(onset, meter, length)`` for every bar covering ``[0, end)``; the last may be short."""
        out = []
        t = Fraction(0)
        changes = [e[0] for e in self.entries[1:]]
        while t < end:
            meter = self.meter_at(t)
            stop = t + meter.capacity
            nxt = next((c for c in changes if t < c < stop), None)
            if nxt is not None:
                stop = nxt
            out.append((t, meter, min(stop, end) - t))
            t = stop
        return out


def mensur_to_meter(m: Mensuration) -> MeterSig:
    if m.prolatio == "major":
        return MeterSig(3, 2)
    if m.tempus == "perfect":
        return MeterSig(6, 2)
    return MeterSig(4, 2)


def mensur_directive(m: Mensuration) -> str:
    return m.sign_text


def _signs(voice: VoiceStream) -> Dict[Fraction, Tuple[Mensuration, int]]:
    out = {}
    for e in voice.events:
        if e.kind == "mensur":
            out[e.onset] = (e.mensuration, e.section)
    return out


def _sections_with_music(voice: VoiceStream) -> set:
    return {e.section for e in voice.events if e.has_duration}


def infer_meter_map(ir: ScoreIR, report: Optional[ConversionReport] = None) -> MeterMap:
    """Meter map decided by the top voice.

    The opening meter comes from the top voice's first sign; later changes
    happen only where every voice with music in that section has a sign and
    the top voice's meter differs from the current one.  A change that does
    not fall on a barline is moved to the next barline.
    """
    report = report if report is not None else ConversionReport()
    signs = [_signs(v) for v in ir.voices]
    active = [_sections_with_music(v) for v in ir.voices]
    top = signs[0] if signs else {}
    if 0 in top:
        first = mensur_to_meter(top[0][0])
    else:
        report.warn("default_meter", "top voice has no mensuration sign at the start; 4/2 assumed")
        first = MeterSig(4, 2)
    entries = [(Fraction(0), first)]
    onsets = sorted({t for s in signs for t in s if t > 0})
    for t in onsets:
        section = next(s[t][1] for s in signs if t in s)
        voices = [i for i, a in enumerate(active) if section in a] or list(range(len(ir.voices)))
        if not all(t in signs[i] for i in voices):
            report.note("meter_change_skipped",
                        f"mensuration sign at {t} minimae not present in every voice; meter kept")
            continue
        lead = 0 if 0 in voices else voices[0]
        meter = mensur_to_meter(signs[lead][t][0])
        last_onset, current = entries[-1]
        if meter == current:
            continue
        cap = current.capacity
        bar = max(last_onset, last_onset + math.ceil((t - last_onset) / cap) * cap)
        if bar != t:
            report.note("meter_change_moved", f"meter change at {t} minimae moved to barline {bar}")
        if entries[-1][0] == bar:
            if len(entries) == 1:
                entries[0] = (entries[0][0], meter)
                continue
            entries.pop()
            if entries[-1][1] == meter:
                continue
        entries.append((Fraction(bar), meter))
    return MeterMap(tuple(entries))


# ------------------------------------------------------------------------- clefs


def normalize_clef(voice: VoiceStream, report: Optional[ConversionReport] = None) -> str:
    pitches = [e.pitch.midi for e in voice.events if e.kind == "note" and e.pitch is not None]
    if not pitches:
        if report is not None:
            report.warn("clef_fallback", f"voice {voice.index} has no pitched notes; G2 used")
        return "G2"
    med = median_high(pitches)
    if med >= MIDDLE_C:
        return "G2"
    if med >= LOW_F:
        return "G2_ottava_bassa"
    return "F4"


# ------------------------------------------------------------------ decomposition


@lru_cache(maxsize=None)
def _search(d: Fraction, depth: int, start: int):
    for i in range(start, len(SYMBOLS)):
        v = SYMBOLS[i][0]
        if v > d:
            continue
        if depth == 1:
            if v == d:
                return (i,)
            continue
        if v * depth < d:
            break
        rest = _search(d - v, depth - 1, i)
        if rest is not None:
            return (i,) + rest
    return None


def decompose_duration(d) -> List[Tuple[str, int]]:
    """Split a length in half notes into tied symbols, longest first.

    Uses the fewest symbols possible (a single dotted value when one exists)
    and, among equally short chains, the one with the longest leading values.
    Nothing longer than a breve is produced.
    """
    d = Fraction(d)
    if d <= 0:
        raise Unrepresentable(f"non-positive length {d}")
    head = []
    while d > 2 * LONGEST:
        head.append(("breve", 0))
        d -= LONGEST
    for depth in range(1, MAX_CHAIN + 1):
        found = _search(d, depth, 0)
        if found is not None:
            return head + [(SYMBOLS[i][1], SYMBOLS[i][2]) for i in found]
    raise Unrepresentable(f"{d} half notes cannot be written with the available values")


def symbol_value(dur: str, dots: int) -> Fraction:
    return DUR_VALUES[dur] * _DOT_FACTOR[dots]


def _nearest_symbol(n: Fraction) -> Tuple[Fraction, str, int]:
    def distance(s):
        r = s[0] / n
        return (max(r, 1 / r), -s[0])
    return min(SYMBOLS, key=distance)


def notate_part(span: Fraction, ratio: Fraction):
    """Pick notated symbols and a tuplet ratio for one bar-contained part.

    ``ratio`` is the preferred notated-per-sounding ratio (the proportion).
    Returns ``(symbols, ratio)`` with ``sum(values) / ratio == span``.
    """
    try:
        return decompose_duration(span * ratio), ratio
    except Unrepresentable:
        v, name, dots = _nearest_symbol(span * ratio)
        return [(name, dots)], v / span


# ----------------------------------------------------------------------- barring


@dataclass
class CmnNote:
    key: str
    kind: str  # note | rest | space
    dur: str
    dots: int = 0
    pitch: Optional[Pitch] = None
    chord: Tuple[Pitch, ...] = ()
    tie: str = "none"  # none | start | mid | end
    ratio: Fraction = Fraction(1)  # notated per sounding; tuplet num/numbase
    tuplet_ref: Optional[str] = None
    onset: Fraction = Fraction(0)  # measure-relative, half notes
    source: Optional[int] = None  # index of the ScoreEvent in its voice
    syllable: Optional[str] = None

    @property
    def value(self) -> Fraction:
        return symbol_value(self.dur, self.dots)

    @property
    def span(self) -> Fraction:
        return self.value / self.ratio


@dataclass
class TupletSpec:
    id: str
    num: int
    numbase: int
    members: List[str] = field(default_factory=list)


@dataclass
class Measure:
    index: int
    onset: Fraction
    meter: MeterSig
    length: Fraction
    notes: List[CmnNote] = field(default_factory=list)
    tuplets: List[TupletSpec] = field(default_factory=list)

    @property
    def filled(self) -> Fraction:
        return sum((n.span for n in self.notes), Fraction(0))


def _timeline(voice: VoiceStream, end: Fraction):
    """Duration items in order, with spaces filling silent stretches."""
    cursor = Fraction(0)
    for i, e in enumerate(voice.events):
        if not e.has_duration or e.sounding == 0:
            continue
        if e.onset > cursor:
            yield None, "space", cursor, e.onset - cursor
        yield i, e.kind, e.onset, e.sounding
        cursor = e.onset + e.sounding
    if end > cursor:
        yield None, "space", cursor, end - cursor


def bar_voice(voice: VoiceStream, mm: MeterMap, end: Optional[Fraction] = None,
              report: Optional[ConversionReport] = None) -> List[Measure]:
    """Cut one voice at the barlines of ``mm`` and notate every part.

    A note crossing a barline becomes tied notes; a rest becomes separate
    rests.  Each part is written through :func:`notate_part`, so its
    tuplet-adjusted span equals the time it occupies in its bar.
    """
    end = voice.end if end is None else end
    bars = mm.bars(end)
    measures = [Measure(k + 1, t, m, length) for k, (t, m, length) in enumerate(bars)]
    counters = [0] * len(measures)
    bar_starts = [t for t, _, _ in bars]
    b = 0
    for idx, kind, onset, span in _timeline(voice, end):
        ev = voice.events[idx] if idx is not None else None
        ratio = ev.ratio if ev is not None else Fraction(1)
        symbols: List[CmnNote] = []
        t = onset
        stop = onset + span
        while b + 1 < len(bars) and bar_starts[b + 1] <= t:
            b += 1
        k = b
        while t < stop:
            bar_end = bars[k][0] + bars[k][2]
            part = min(stop, bar_end) - t
            chain, r = notate_part(part, ratio)
            if ev is not None and r != ratio and report is not None:
                report.note("tuplet_adjusted", f"part of {part} minimae written with ratio {r}", ev.location)
            rel = t - bars[k][0]
            for dur, dots in chain:
                counters[k] += 1
                n = CmnNote(f"v{voice.index}-m{k + 1}-n{counters[k]}", kind, dur, dots, ratio=r,
                            onset=rel, source=idx)
                if ev is not None and kind == "note":
                    n.pitch, n.chord = ev.pitch, ev.chord
                measures[k].notes.append(n)
                symbols.append(n)
                rel += n.span
            t += part
            if t < stop:
                k += 1
        if kind == "note" and len(symbols) > 1:
            for j, n in enumerate(symbols):
                n.tie = "start" if j == 0 else ("end" if j == len(symbols) - 1 else "mid")
        if ev is not None and ev.syllable and symbols:
            symbols[0].syllable = ev.syllable
    return measures


def proportions_to_tuplets(measures: Sequence[Measure], report: Optional[ConversionReport] = None,
                           voice: int = 0) -> List[TupletSpec]:
    """Group runs of equal non-unit ratios inside each measure into tuplets."""
    out = []
    for m in measures:
        m.tuplets = []
        current = None
        for n in m.notes:
            if n.ratio == 1:
                current = None
                continue
            if current is None or Fraction(current.num, current.numbase) != n.ratio:
                current = TupletSpec(f"v{voice}-m{m.index}-t{len(m.tuplets) + 1}",
                                     n.ratio.numerator, n.ratio.denominator)
                m.tuplets.append(current)
                out.append(current)
                if report is not None and max(current.num, current.numbase) > MAX_TUPLET_TERM:
                    report.error("UnrepresentableTuplet",
                                 f"tuplet {current.num}:{current.numbase} is beyond common notation",
                                 f"voice {voice}, measure {m.index}")
            current.members.append(n.key)
            n.tuplet_ref = current.id
    return out


# ------------------------------------------------------------------ annotations


@dataclass(frozen=True)
class SpanMarker:
    kind: str  # ligature | coloration
    voice: int
    start: str
    end: str
    style: str  # solid | angled


@dataclass(frozen=True)
class Directive:
    voice: int
    onset: Fraction
    text: str
    measure: int
    anchor: Optional[str]
    tstamp: Fraction  # 1-based beat (half note) within the measure


@dataclass(frozen=True)
class Ornament:
    kind: str  # fermata
    voice: int
    note: str
    measure: int
    origin: str  # signum | corona


def _keys_by_event(measures: Sequence[Measure]) -> Dict[int, List[CmnNote]]:
    out: Dict[int, List[CmnNote]] = {}
    for m in measures:
        for n in m.notes:
            if n.source is not None:
                out.setdefault(n.source, []).append(n)
    return out


def attach_spans(voice: VoiceStream, measures: Sequence[Measure]) -> List[SpanMarker]:
    by_event = _keys_by_event(measures)
    groups: Dict[Tuple[str, int], List[CmnNote]] = {}
    order = []
    for i, e in enumerate(voice.events):
        for kind, span_id in (("ligature", e.ligature), ("coloration", e.coloration)):
            if span_id is None or i not in by_event:
                continue
            key = (kind, span_id)
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].extend(by_event[i])
    out = []
    for kind, span_id in order:
        notes = groups[(kind, span_id)]
        out.append(SpanMarker(kind, voice.index, notes[0].key, notes[-1].key,
                              "solid" if kind == "ligature" else "angled"))
    return out


def _measure_of(measures: Sequence[Measure], t: Fraction) -> int:
    k = 0
    for i, m in enumerate(measures):
        if m.onset <= t:
            k = i
    return k


def _directives(voice: VoiceStream, measures: Sequence[Measure]) -> List[Directive]:
    out = []
    flat = [(m, n) for m in measures for n in m.notes if n.kind != "space"]
    for e in voice.events:
        if e.kind != "mensur" or not measures:
            continue
        k = _measure_of(measures, e.onset)
        anchor = next((n.key for m, n in flat if m.onset + n.onset >= e.onset), None)
        out.append(Directive(voice.index, e.onset, mensur_directive(e.mensuration), k + 1, anchor,
                             e.onset - measures[k].onset + 1))
    return out


def _ornaments(voice: VoiceStream, measures: Sequence[Measure], report: ConversionReport) -> List[Ornament]:
    by_event = _keys_by_event(measures)
    out = []
    index = {n.key: m.index for m in measures for n in m.notes}
    for i, e in enumerate(voice.events):
        for marker in ("signum", "corona"):
            if marker in e.markers and i in by_event:
                key = by_event[i][0].key
                out.append(Ornament("fermata", voice.index, key, index[key], marker))
                if marker == "signum":
                    report.note("signum_as_fermata", "signum congruentiae written as a fermata", e.location)
    return out


# ---------------------------------------------------------------------- pipeline


@dataclass
class MeasuredScore:
    title: str
    composer: str
    editor: str
    meter_map: MeterMap
    voices: List[List[Measure]]
    clefs: List[str]
    names: List[str]
    spans: List[SpanMarker] = field(default_factory=list)
    directives: List[Directive] = field(default_factory=list)
    ornaments: List[Ornament] = field(default_factory=list)
    tuplets: List[TupletSpec] = field(default_factory=list)

    @property
    def measure_count(self) -> int:
        return len(self.voices[0]) if self.voices else 0


def flatten_editorial(ir: ScoreIR, sel: Optional[VariantSelector] = None,
                      report: Optional[ConversionReport] = None) -> ScoreIR:
    """Resolve the apparatus to one reading and strip editorial-only events."""
    report = report if report is not None else ConversionReport()
    sel = ir.selector if sel is None else sel
    if sel != ir.selector and ir.document is not None:
        ir, rebuilt = build_score(ir.document, sel)
        for w in rebuilt.warnings:
            if w.code in ("unknown_source", "unknown_reading"):
                report.warnings.append(w)
    voices = []
    dropped_gap = False
    for v in ir.voices:
        events = []
        for e in v.events:
            if e.kind == "site":
                continue
            if e.kind == "gap":
                dropped_gap = True
                continue
            events.append(e)
        voices.append(replace(v, events=events))
    if dropped_gap:
        report.drop("ellipsis gaps")
    if ir.apparatus:
        report.drop("variant apparatus")
    return replace(ir, voices=voices, apparatus=[])


def to_measured(ir: ScoreIR, sel: Optional[VariantSelector] = None,
                report: Optional[ConversionReport] = None) -> MeasuredScore:
    """Full CMN transform: flatten, infer meters, pick clefs, bar, tuplets, spans."""
    report = report if report is not None else ConversionReport()
    flat = flatten_editorial(ir, sel, report)
    mm = infer_meter_map(flat, report)
    end = max((v.end for v in flat.voices), default=Fraction(0))
    voices, spans, directives, ornaments, tuplets = [], [], [], [], []
    for v in flat.voices:
        measures = bar_voice(v, mm, end, report)
        tuplets += proportions_to_tuplets(measures, report, v.index)
        voices.append(measures)
        spans += attach_spans(v, measures)
        directives += _directives(v, measures)
        ornaments += _ornaments(v, measures, report)
    if any(e.kind == "note" and e.ligature is not None for v in flat.voices for e in v.events):
        report.note("ligature_bracket", "ligatures written as brackets")
    if any(e.coloration is not None for v in flat.voices for e in v.events):
        report.note("coloration_bracket", "coloration written as angled brackets")
    if directives:
        report.drop("mensuration signs (kept as directives)")
    clefs = [normalize_clef(v, report) for v in flat.voices]
    ms = MeasuredScore(flat.title, flat.composer, flat.editor, mm, voices, clefs,
                       [v.name for v in flat.voices], spans, directives, ornaments, tuplets)
    report.counts["measures"] += ms.measure_count
    report.counts["tuplets"] += len(tuplets)
    report.counts["ties"] += sum(1 for ms_ in voices for m in ms_ for n in m.notes if n.tie in ("start", "mid"))
    return ms
