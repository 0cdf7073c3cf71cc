"""Normalized score model built from a parsed CMME document.

Every note and rest gets an exact written and sounding length in minimae and
a voice-relative onset.  Mensuration and proportion state is threaded left to
right through each voice; variant sites are kept as an apparatus next to the
main stream, which carries the selected reading.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import FrozenSet, List, Optional, Sequence, Tuple

from . import cmme
from .primitives import NoteShape, Pitch
from .report import ConversionReport

__all__ = [
    "EmptyScore", "NegativeState", "Mensuration", "ProportionState", "ScoreEvent",
    "VoiceStream", "VariantSite", "SiteReading", "ScoreIR", "VariantSelector",
    "build_score", "nominal_minima", "written_minima", "sounding_minima", "select_reading",
    "mensuration_from_cmme",
]


class EmptyScore(Exception):
    code = "EmptyScore"


class NegativeState(Exception):
    code = "NegativeState"


@dataclass(frozen=True)
class Mensuration:
    tempus: str = "imperfect"  # perfect | imperfect
    prolatio: str = "minor"  # major | minor
    sign_text: str = "C"
    cut: bool = False
    number: Optional[int] = None
    sign: Optional[str] = None
    dot: bool = False
    reversed: bool = False
    number_den: Optional[int] = None


DEFAULT_MENSURATION = Mensuration(sign="C")


def _sign_text(m: cmme.Mensuration) -> str:
    if m.sign == "O":
        base = "⦶" if m.strokes else "O"  # circled vertical bar
    elif m.sign == "C":
        base = "Ɔ" if m.reversed else "C"
        if m.strokes:
            base = "ↄ̸" if m.reversed else "¢"
    else:
        base = ""
    if m.dot:
        base += "·"
    if m.number is not None:
        base += str(m.number)
        if m.number_den is not None:
            base += f"/{m.number_den}"
    return base


def mensuration_from_cmme(m: cmme.Mensuration) -> Mensuration:
    """Resolve tempus and prolatio from the explicit values or the sign."""
    if m.tempus is not None:
        tempus = "perfect" if m.tempus == 3 else "imperfect"
    else:
        tempus = "perfect" if m.sign == "O" else "imperfect"
    if m.prolatio is not None:
        prolatio = "major" if m.prolatio == 3 else "minor"
    else:
        prolatio = "major" if m.dot else "minor"
    return Mensuration(
        tempus, prolatio, _sign_text(m), bool(m.strokes), m.number,
        m.sign, m.dot, m.reversed, m.number_den,
    )


@dataclass(frozen=True)
class ProportionState:
    stack: Tuple[cmme.Proportion, ...] = ()

    @property
    def factor(self) -> Fraction:
        """Sounding length per written length."""
        f = Fraction(1)
        for p in self.stack:
            if not p.tempo_change:
                f *= Fraction(p.den, p.num)
        return f

    def apply(self, p: cmme.Proportion) -> "ProportionState":
        if p.num <= 0 or p.den <= 0:
            raise NegativeState(f"proportion {p.num}/{p.den}")
        if p.num == p.den == 1:
            return ProportionState()
        return ProportionState(self.stack + (p,))


def nominal_minima(shape: NoteShape, m: Mensuration) -> Fraction:
    if shape <= NoteShape.MINIMA:
        return Fraction(1, 2 ** (NoteShape.MINIMA - shape))
    semibrevis = Fraction(3 if m.prolatio == "major" else 2)
    if shape == NoteShape.SEMIBREVIS:
        return semibrevis
    brevis = semibrevis * (3 if m.tempus == "perfect" else 2)
    return brevis * 2 ** (shape - NoteShape.BREVIS)


def written_minima(event, m: Mensuration) -> Fraction:
    if event.explicit_length is not None:
        return Fraction(event.explicit_length)
    return nominal_minima(event.shape, m)


def sounding_minima(written: Fraction, p: ProportionState) -> Fraction:
    return written * p.factor


@dataclass(frozen=True)
class ScoreEvent:
    kind: str  # note rest clef mensur proport dot custos text colorchange lineend gap site
    voice: int
    onset: Fraction
    location: str
    section: int = 1
    written: Fraction = Fraction(0)
    sounding: Fraction = Fraction(0)
    pitch: Optional[Pitch] = None
    chord: Tuple[Pitch, ...] = ()
    shape: Optional[NoteShape] = None
    mensuration: Optional[Mensuration] = None
    ligature: Optional[int] = None
    ligature_form: Optional[str] = None
    coloration: Optional[int] = None
    markers: FrozenSet[str] = frozenset()
    syllable: Optional[str] = None
    payload: object = None

    @property
    def has_duration(self) -> bool:
        return self.kind in ("note", "rest")

    @property
    def ratio(self) -> Fraction:
        """Written length per sounding length (the tuplet ratio to aim for)."""
        if not self.sounding:
            return Fraction(1)
        return self.written / self.sounding

    @property
    def end(self) -> Fraction:
        return self.onset + self.sounding


@dataclass
class VoiceStream:
    index: int
    name: str = ""
    editorial: bool = False
    events: List[ScoreEvent] = field(default_factory=list)
    end: Fraction = Fraction(0)

    @property
    def notes(self) -> List[ScoreEvent]:
        return [e for e in self.events if e.kind == "note"]


@dataclass(frozen=True)
class SiteReading:
    sources: Tuple[str, ...]
    events: Tuple[ScoreEvent, ...]
    lacuna: bool = False
    error: bool = False
    duration: Fraction = Fraction(0)


@dataclass(frozen=True)
class VariantSite:
    voice: int
    onset: Fraction
    position: int  # index of the site's anchor event in its containing list
    length: int  # number of events after the anchor taken from the selected reading
    default: Tuple[ScoreEvent, ...]
    default_duration: Fraction
    readings: Tuple[SiteReading, ...]
    selected: Optional[int] = None  # index into readings, None for the default
    location: str = ""
    default_sources: Tuple[str, ...] = ()


@dataclass(frozen=True)
class VariantSelector:
    source: Optional[str] = None

    @classmethod
    def default(cls) -> "VariantSelector":
        return cls(None)

    @classmethod
    def by_source(cls, source_id: str) -> "VariantSelector":
        return cls(source_id)

    @classmethod
    def parse(cls, text: Optional[str]) -> "VariantSelector":
        if text is None or text == "default":
            return cls(None)
        return cls(text)

    @property
    def is_default(self) -> bool:
        return self.source is None


@dataclass
class ScoreIR:
    title: str
    composer: str
    editor: str
    sources: Tuple[Tuple[str, str], ...]
    voices: List[VoiceStream]
    apparatus: List[VariantSite] = field(default_factory=list)
    section_starts: List[Fraction] = field(default_factory=list)
    selector: VariantSelector = field(default_factory=VariantSelector)
    document: Optional[cmme.CmmeDocument] = None

    def voice(self, index: int) -> VoiceStream:
        return self.voices[index - 1]


def select_reading(site: VariantSite, sel: VariantSelector, report: Optional[ConversionReport] = None):
    """Return the events of the reading chosen by ``sel``, or the default."""
    idx = _reading_index(site, sel)
    if idx is None:
        if not sel.is_default and sel.source not in site.default_sources and report is not None:
            report.warn("unknown_reading", f"no reading from source {sel.source!r}; default kept",
                        site.location)
        return list(site.default)
    return list(site.readings[idx].events)


def _reading_index(site: VariantSite, sel: VariantSelector) -> Optional[int]:
    if sel.is_default:
        return None
    for i, r in enumerate(site.readings):
        if sel.source in r.sources:
            return i
    return None


# --------------------------------------------------------------------------- builder


@dataclass
class _State:
    mens: Optional[Mensuration] = None
    props: ProportionState = field(default_factory=ProportionState)
    cursor: Fraction = Fraction(0)
    lig: Optional[int] = None
    color: Optional[int] = None


class _Builder:
    def __init__(self, doc: cmme.CmmeDocument, sel: VariantSelector, report: ConversionReport):
        self.doc = doc
        self.sel = sel
        self.report = report
        self.lig_ids = itertools.count(1)
        self.color_ids = itertools.count(1)
        self.apparatus: List[VariantSite] = []
        self.section = 1
        self.defaulted = set()

    def mens(self, st: _State, voice: int, loc: str) -> Mensuration:
        if st.mens is None:
            if voice not in self.defaulted:
                self.defaulted.add(voice)
                self.report.warn("default_mensuration",
                                 "no mensuration sign before the first note; C assumed", loc)
            st.mens = DEFAULT_MENSURATION
        return st.mens

    def run_list(self, events: Sequence, st: _State, voice: int, loc: str, out: List[ScoreEvent]) -> None:
        for i, ev in enumerate(events):
            here = f"{loc}.{i}" if loc else str(i)
            nxt = events[i + 1] if i + 1 < len(events) else None
            self.run_event(ev, nxt, st, voice, here, out)

    def run_event(self, ev, nxt, st: _State, voice: int, loc: str, out: List[ScoreEvent]) -> None:
        where = f"s{self.section}/v{voice}/e{loc}"
        base = dict(voice=voice, onset=st.cursor, location=where, section=self.section)
        if isinstance(ev, (cmme.Note, cmme.Rest)):
            m = self.mens(st, voice, where)
            written = written_minima(ev, m)
            if ev.explicit_length is None and isinstance(nxt, cmme.Dot) and nxt.kind == "addition":
                written *= Fraction(3, 2)
            sounding = sounding_minima(written, st.props)
            markers = set()
            if ev.signum:
                markers.add("signum")
            if ev.corona:
                markers.add("corona")
            if ev.colored:
                if st.color is None:
                    st.color = next(self.color_ids)
            else:
                st.color = None
            kw = {}
            if isinstance(ev, cmme.Note):
                if ev.ligature == "start":
                    st.lig = next(self.lig_ids)
                lig = st.lig if ev.ligature != "none" else None
                if ev.ligature == "end":
                    st.lig = None
                kw = dict(pitch=ev.pitch, ligature=lig, ligature_form=ev.ligature_form if lig else None,
                          syllable=ev.syllable or None)
            out.append(ScoreEvent(
                "note" if isinstance(ev, cmme.Note) else "rest", written=written, sounding=sounding,
                shape=ev.shape, mensuration=m, coloration=st.color, markers=frozenset(markers),
                payload=ev, **kw, **base,
            ))
            st.cursor += sounding
        elif isinstance(ev, cmme.Mensuration):
            st.mens = mensuration_from_cmme(ev)
            out.append(ScoreEvent("mensur", mensuration=st.mens, payload=ev, **base))
        elif isinstance(ev, cmme.Proportion):
            try:
                st.props = st.props.apply(ev)
            except NegativeState as e:
                raise NegativeState(f"{e} at {where}") from None
            out.append(ScoreEvent("proport", mensuration=st.mens, payload=ev, **base))
        elif isinstance(ev, cmme.Dot):
            out.append(ScoreEvent("dot", mensuration=st.mens, payload=ev, **base))
        elif isinstance(ev, cmme.Clef):
            out.append(ScoreEvent("clef", payload=ev, pitch=ev.pitch, **base))
        elif isinstance(ev, cmme.Custos):
            out.append(ScoreEvent("custos", pitch=ev.pitch, payload=ev, **base))
        elif isinstance(ev, cmme.OriginalText):
            out.append(ScoreEvent("text", payload=ev, **base))
        elif isinstance(ev, cmme.ColorChange):
            out.append(ScoreEvent("colorchange", payload=ev, **base))
        elif isinstance(ev, cmme.LineEnd):
            out.append(ScoreEvent("lineend", payload=ev, **base))
        elif isinstance(ev, cmme.EllipsisGap):
            out.append(ScoreEvent("gap", markers=frozenset({"ellipsis"}), payload=ev, **base))
        elif isinstance(ev, cmme.MultiEvent):
            self.run_multi(ev, st, voice, loc, out)
        elif isinstance(ev, cmme.VariantGroup):
            self.run_variants(ev, st, voice, loc, where, out)
        elif isinstance(ev, cmme.Unsupported):
            pass  # already reported through collect_warnings
        else:  # pragma: no cover - the union above is exhaustive
            raise TypeError(f"unexpected event {ev!r}")

    def run_multi(self, ev: cmme.MultiEvent, st: _State, voice: int, loc: str, out: List[ScoreEvent]) -> None:
        start = st.cursor
        longest = Fraction(0)
        batch: List[ScoreEvent] = []
        for i, sub in enumerate(ev.events):
            st.cursor = start
            nxt = ev.events[i + 1] if i + 1 < len(ev.events) else None
            self.run_event(sub, nxt, st, voice, f"{loc}.{i}", batch)
            longest = max(longest, st.cursor - start)
        st.cursor = start + longest
        notes = [e for e in batch if e.kind == "note"]
        if len(notes) > 1:
            lead = max(notes, key=lambda e: e.sounding)
            if len({e.sounding for e in notes}) > 1:
                self.report.warn("chord_durations", "simultaneous notes with different lengths merged",
                                 lead.location)
            merged = replace(lead, chord=tuple(e.pitch for e in notes if e is not lead))
            batch = [merged if e is lead else e for e in batch if e.kind != "note" or e is lead]
        out.extend(batch)

    def run_variants(self, ev: cmme.VariantGroup, st: _State, voice: int, loc: str, where: str,
                     out: List[ScoreEvent]) -> None:
        entry = replace(st)
        slot = len(self.apparatus)
        self.apparatus.append(None)  # reserved so nested sites get later indices

        def run(events, tag):
            s = replace(entry)
            buf: List[ScoreEvent] = []
            self.run_list(events, s, voice, f"{loc}.{tag}", buf)
            return s, buf

        d_state, d_events = run(ev.default, "d")
        readings = []
        states = []
        for j, r in enumerate(ev.readings):
            r_state, r_events = run(r.events, f"r{j}")
            states.append(r_state)
            readings.append(SiteReading(tuple(r.source_refs), tuple(r_events), r.lacuna, r.error,
                                        r_state.cursor - entry.cursor))
        site = VariantSite(voice, entry.cursor, len(out), 0, tuple(d_events),
                           d_state.cursor - entry.cursor, tuple(readings), location=where,
                           default_sources=tuple(ev.default_sources))
        idx = _reading_index(site, self.sel)
        chosen, end_state = (d_events, d_state) if idx is None else (list(readings[idx].events), states[idx])
        self.apparatus[slot] = replace(site, length=len(chosen), selected=idx)
        out.append(ScoreEvent("site", voice, entry.cursor, where, self.section, payload=slot))
        out.extend(chosen)
        st.mens, st.props, st.cursor = end_state.mens, end_state.props, end_state.cursor
        st.lig, st.color = end_state.lig, end_state.color


def build_score(doc: cmme.CmmeDocument, sel: Optional[VariantSelector] = None):
    """Turn a parsed document into a :class:`ScoreIR` and a report.

    Raises
    ------
    EmptyScore
        The document has no mensural section.
    NegativeState
        A proportion has a zero term.
    """
    sel = sel or VariantSelector()
    report = ConversionReport()
    for w in cmme.collect_warnings(doc):
        report.warn(w.code, w.message, w.location)
    if not sel.is_default and sel.source not in dict(doc.source_ids):
        if not any(sel.source in r.source_refs for _, ev in _all_groups(doc) for r in ev.readings):
            report.warn("unknown_source", f"source {sel.source!r} is not declared; default reading used")
            sel = VariantSelector()

    mensural = [(i, s) for i, s in enumerate(doc.sections, 1) if s.kind == "mensural"]
    if not mensural:
        raise EmptyScore("no mensural section to convert")

    b = _Builder(doc, sel, report)
    voices = [VoiceStream(v.index, v.name, v.editorial) for v in doc.voices]
    states = {v.index: _State() for v in doc.voices}
    starts = []
    start = Fraction(0)
    for sec_no, sec in mensural:
        b.section = sec_no
        starts.append(start)
        for v in voices:
            st = states[v.index]
            st.cursor = start
            st.lig = st.color = None
            b.run_list(sec.voice_event_lists.get(v.index, ()), st, v.index, "", v.events)
            v.end = st.cursor if sec.voice_event_lists.get(v.index) else v.end
        start = max([states[v.index].cursor for v in voices] + [start])

    for site in b.apparatus:
        if any(r.duration != site.default_duration for r in site.readings):
            report.note("variant_length", "readings of this site differ in length", site.location)
    report.counts["events"] += sum(1 for v in voices for e in v.events if e.kind != "site")
    report.counts["notes"] += sum(len(v.notes) for v in voices)
    ir = ScoreIR(doc.title, doc.composer, doc.editor, doc.source_ids, voices, b.apparatus, starts, sel, doc)
    return ir, report


def _all_groups(doc: cmme.CmmeDocument):
    for sec in doc.sections:
        for events in sec.voice_event_lists.values():
            for path, ev in cmme.iter_events(events):
                if isinstance(ev, cmme.VariantGroup):
                    yield path, ev
