"""Reader for CMME-XML documents.

The reader accepts the part of the CMME schema that the conversion needs and
keeps everything else as :class:`Unsupported` events, so that nothing in the
input is lost silently.  Namespaces are ignored; the root element must be
``Piece``.

Recognised event elements (children of ``EventList``, ``MultiEvent`` or a
reading's ``Music``)::

    Note, Rest, Dot, Clef, Mensuration, Proportion, ColorChange, Custos,
    OriginalText, LineEnd, MultiEvent, VariantReadings, Ellipsis,
    MiscItem/Ellipsis

A few CMME conventions the reader relies on:

* ``<Length><Num/><Den/></Length>`` is an exact length in minimae.
* ``<Lig>`` on a note ties it to the *next* note of the same list.
* ``<Proportion>`` carries a ``<TempoChange/>`` child when the proportion
  only re-tunes the tempo.
* a ``<Reading>`` flagged ``<Default/>`` (or without any ``VariantVersionID``)
  holds the default text of a variant site; ``<Lacuna/>`` marks a source gap.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

from .primitives import NoteShape, Pitch

__all__ = [
    "CmmeError", "MalformedXml", "NotCmme", "SchemaViolation",
    "CmmeDocument", "CmmeVoiceMeta", "CmmeSection", "ParseWarning",
    "Note", "Rest", "Dot", "Clef", "Mensuration", "Proportion", "ColorChange",
    "Custos", "OriginalText", "LineEnd", "MultiEvent", "VariantGroup",
    "VariantReading", "EllipsisGap", "Unsupported", "CmmeEvent",
    "parse_document", "parse_event", "collect_warnings", "iter_events",
]


class CmmeError(Exception):
    """Base class for input errors; ``code`` names the failure kind."""

    code = "CmmeError"


class MalformedXml(CmmeError):
    code = "MalformedXml"


class NotCmme(CmmeError):
    code = "NotCmme"


class SchemaViolation(CmmeError):
    code = "SchemaViolation"


# --------------------------------------------------------------------------- events


@dataclass(frozen=True)
class Note:
    shape: NoteShape
    pitch: Pitch
    explicit_length: Optional[Fraction] = None
    ligature: str = "none"  # none | start | mid | end
    ligature_form: Optional[str] = None
    colored: bool = False
    corona: bool = False
    signum: bool = False
    details: str = ""
    syllable: Optional[str] = None
    word_end: bool = False


@dataclass(frozen=True)
class Rest:
    shape: NoteShape
    explicit_length: Optional[Fraction] = None
    colored: bool = False
    corona: bool = False
    signum: bool = False
    details: str = ""


@dataclass(frozen=True)
class Dot:
    kind: str = "addition"  # addition | division


ACCIDENTAL_CLEFS = {"Bmol": "flat", "BmolDouble": "flat", "Bqua": "natural", "Diesis": "sharp"}


@dataclass(frozen=True)
class Clef:
    letter: str
    staff_loc: Optional[int] = None
    pitch: Optional[Pitch] = None
    is_signature_accidental: bool = False

    @property
    def staff_line(self) -> Optional[int]:
        """MEI staff line (1 = bottom) for line positions; ``None`` for spaces."""
        if self.staff_loc is None or self.staff_loc % 2 == 0:
            return None
        return (self.staff_loc + 1) // 2

    @property
    def accidental(self) -> Optional[str]:
        return ACCIDENTAL_CLEFS.get(self.letter)


@dataclass(frozen=True)
class Mensuration:
    sign: Optional[str] = None  # O | C
    dot: bool = False
    strokes: int = 0
    reversed: bool = False
    number: Optional[int] = None
    number_den: Optional[int] = None
    tempus: Optional[int] = None  # 2 | 3 as stored in MensInfo
    prolatio: Optional[int] = None
    modus_minor: Optional[int] = None
    modus_maior: Optional[int] = None
    tempo_change: bool = False


@dataclass(frozen=True)
class Proportion:
    num: int
    den: int
    tempo_change: bool = False


@dataclass(frozen=True)
class ColorChange:
    text: str


@dataclass(frozen=True)
class Custos:
    pitch: Pitch


@dataclass(frozen=True)
class OriginalText:
    text: str


@dataclass(frozen=True)
class LineEnd:
    page_end: bool = False


@dataclass(frozen=True)
class MultiEvent:
    events: Tuple["CmmeEvent", ...]


@dataclass(frozen=True)
class VariantReading:
    source_refs: Tuple[str, ...]
    events: Tuple["CmmeEvent", ...]
    lacuna: bool = False
    error: bool = False


@dataclass(frozen=True)
class VariantGroup:
    default: Tuple["CmmeEvent", ...]
    readings: Tuple[VariantReading, ...]
    default_sources: Tuple[str, ...] = ()


@dataclass(frozen=True)
class EllipsisGap:
    extent: Optional[Fraction] = None


@dataclass(frozen=True)
class Unsupported:
    tag: str
    raw: str


CmmeEvent = Union[
    Note, Rest, Dot, Clef, Mensuration, Proportion, ColorChange, Custos, OriginalText,
    LineEnd, MultiEvent, VariantGroup, EllipsisGap, Unsupported,
]


# ------------------------------------------------------------------------ document


@dataclass(frozen=True)
class CmmeVoiceMeta:
    index: int
    name: str = ""
    editorial: bool = False


@dataclass(frozen=True)
class CmmeSection:
    kind: str  # mensural | plainchant | text-only
    voice_event_lists: Dict[int, Tuple[CmmeEvent, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class ParseWarning:
    code: str
    message: str
    section: int = 0
    voice: int = 0
    ordinal: str = ""

    @property
    def location(self) -> str:
        parts = []
        if self.section:
            parts.append(f"section {self.section}")
        if self.voice:
            parts.append(f"voice {self.voice}")
        if self.ordinal:
            parts.append(f"event {self.ordinal}")
        return ", ".join(parts)


@dataclass(frozen=True)
class CmmeDocument:
    title: str = ""
    composer: str = ""
    editor: str = ""
    source_ids: Tuple[Tuple[str, str], ...] = ()
    voices: Tuple[CmmeVoiceMeta, ...] = ()
    sections: Tuple[CmmeSection, ...] = ()
    ignored: Tuple[ParseWarning, ...] = ()  # unknown children of known elements

    def source_names(self) -> Dict[str, str]:
        return dict(self.source_ids)


# -------------------------------------------------------------------------- helpers


def _local(tag) -> str:
    if not isinstance(tag, str):
        return ""
    return tag.rsplit("}", 1)[-1]


def _children(el) -> List[ET.Element]:
    return [c for c in el if isinstance(c.tag, str)]


def _child(el, name):
    for c in _children(el):
        if _local(c.tag) == name:
            return c
    return None


def _text(el, name, default=None):
    c = _child(el, name)
    if c is None:
        return default
    return (c.text or "").strip()


def _int(el, name, default=None, where=""):
    t = _text(el, name)
    if t is None or t == "":
        return default
    try:
        return int(t)
    except ValueError:
        raise SchemaViolation(f"{where}{name} is not an integer: {t!r}") from None


def _opaque(el) -> str:
    """Compact, deterministic text rendering of an element subtree."""
    name = _local(el.tag)
    attrs = "".join(f" {_local(k)}={v}" for k, v in sorted(el.attrib.items()))
    kids = _children(el)
    if kids:
        inner = ",".join(_opaque(k) for k in kids)
        return f"{name}{attrs}({inner})"
    text = (el.text or "").strip()
    if text:
        return f"{name}{attrs}={text}"
    return f"{name}{attrs}"


class _Context:
    """Location tracking and collection of ignored-content warnings."""

    def __init__(self):
        self.ignored: List[ParseWarning] = []
        self.section = 0
        self.voice = 0
        self.path: List[int] = []

    @property
    def ordinal(self) -> str:
        return ".".join(str(p) for p in self.path)

    def ignore(self, el, owner: str) -> None:
        self.ignored.append(
            ParseWarning(
                "ignored_content",
                f"unknown child <{_local(el.tag)}> of <{owner}> ignored",
                self.section, self.voice, self.ordinal,
            )
        )


def _pitch(el, where: str) -> Pitch:
    letter = _text(el, "LetterName")
    octave = _int(el, "OctaveNum", where=where)
    if not letter or octave is None:
        raise SchemaViolation(f"{where} without a pitch")
    letter = letter.upper()
    if letter not in "ABCDEFG" or len(letter) != 1:
        raise SchemaViolation(f"{where} has invalid LetterName {letter!r}")
    return Pitch(letter, octave)


def _length(el, where: str) -> Optional[Fraction]:
    c = _child(el, "Length")
    if c is None:
        return None
    num = _int(c, "Num", where=where)
    den = _int(c, "Den", 1, where=where)
    if num is None or den is None or num <= 0 or den <= 0:
        raise SchemaViolation(f"{where} has a non-positive Length {num}/{den}")
    return Fraction(num, den)


def _shape(el, where: str) -> NoteShape:
    t = _text(el, "Type")
    if not t:
        raise SchemaViolation(f"{where} without Type")
    try:
        return NoteShape.from_name(t)
    except KeyError:
        raise SchemaViolation(f"{where} has unknown Type {t!r}") from None


_ACCID_OFFSET = {-1: "flat", 0: "natural", 1: "sharp"}

# Children that are part of the accepted subset but carry nothing the
# conversion uses; they are consumed without a warning.
_PRESENTATIONAL = {"StaffLoc", "Small", "Vertical", "Orientation", "NoScoreSig", "Editorial"}


def _parse_note(el, ctx: _Context):
    where = "Note"
    shape = _shape(el, where)
    pitch = _pitch(el, where)
    length = _length(el, where)
    kw = {}
    details = []
    lig = None
    for c in _children(el):
        name = _local(c.tag)
        if name in ("Type", "LetterName", "OctaveNum", "Length"):
            continue
        if name == "Lig":
            lig = (c.text or "").strip() or "Recta"
        elif name == "Colored":
            kw["colored"] = True
        elif name == "Corona":
            kw["corona"] = True
        elif name == "Signum":
            kw["signum"] = True
        elif name == "ModernText":
            kw["syllable"] = _text(c, "Syllable", "")
            kw["word_end"] = _child(c, "WordEnd") is not None
        elif name == "ModernAccidental":
            off = _int(c, "PitchOffset", 0, where="ModernAccidental ")
            if off not in _ACCID_OFFSET:
                raise SchemaViolation(f"unsupported accidental offset {off}")
            pitch = replace(pitch, accidental=_ACCID_OFFSET[off])
        else:
            details.append(_opaque(c))
    note = Note(shape, pitch, length, details=";".join(details), **kw)
    # "connect" is resolved into start/mid/end by _parse_list
    return note, lig


def _parse_rest(el, ctx: _Context) -> Rest:
    shape = _shape(el, "Rest")
    length = _length(el, "Rest")
    kw = {}
    details = []
    for c in _children(el):
        name = _local(c.tag)
        if name in ("Type", "Length"):
            continue
        if name == "Colored":
            kw["colored"] = True
        elif name == "Corona":
            kw["corona"] = True
        elif name == "Signum":
            kw["signum"] = True
        else:
            details.append(_opaque(c))
    return Rest(shape, length, details=";".join(details), **kw)


def _parse_mensuration(el, ctx: _Context) -> Mensuration:
    kw = {}
    for c in _children(el):
        name = _local(c.tag)
        if name == "Sign":
            sym = _text(c, "MainSymbol")
            if sym:
                sym = sym.upper()
                if sym not in ("O", "C"):
                    raise SchemaViolation(f"unknown mensuration sign {sym!r}")
                kw["sign"] = sym
            kw["dot"] = _child(c, "Dot") is not None
            kw["strokes"] = _int(c, "Strokes", 0, where="Sign ")
            orient = _text(c, "Orientation")
            kw["reversed"] = bool(orient) and orient.lower() == "reversed"
            for sc in _children(c):
                if _local(sc.tag) not in ("MainSymbol", "Dot", "Strokes", "Orientation"):
                    ctx.ignore(sc, "Sign")
        elif name == "Number":
            kw["number"] = _int(c, "Num", where="Number ")
            kw["number_den"] = _int(c, "Den", where="Number ")
        elif name == "MensInfo":
            for key, tag in (("tempus", "Tempus"), ("prolatio", "Prolatio"),
                             ("modus_minor", "ModusMinor"), ("modus_maior", "ModusMaior")):
                v = _int(c, tag, where="MensInfo ")
                if v is not None:
                    if v not in (2, 3):
                        raise SchemaViolation(f"MensInfo {tag} must be 2 or 3, got {v}")
                    kw[key] = v
            if _child(c, "TempoChange") is not None:
                kw["tempo_change"] = True
        elif name == "TempoChange":
            kw["tempo_change"] = True
        elif name not in _PRESENTATIONAL:
            ctx.ignore(c, "Mensuration")
    return Mensuration(**kw)


def _parse_clef(el, ctx: _Context) -> Clef:
    letter = _text(el, "Appearance")
    if not letter:
        raise SchemaViolation("Clef without Appearance")
    pitch = None
    pe = _child(el, "Pitch")
    if pe is not None:
        pitch = _pitch(pe, "Clef pitch")
    sig = _child(el, "Signature") is not None
    for c in _children(el):
        if _local(c.tag) not in {"Appearance", "StaffLoc", "Pitch", "Signature"} | _PRESENTATIONAL:
            ctx.ignore(c, "Clef")
    return Clef(
        letter,
        _int(el, "StaffLoc", where="Clef "),
        pitch,
        is_signature_accidental=sig and letter in ACCIDENTAL_CLEFS,
    )


def _parse_proportion(el, ctx: _Context) -> Proportion:
    num = _int(el, "Num", where="Proportion ")
    den = _int(el, "Den", where="Proportion ")
    if num is None or den is None:
        raise SchemaViolation("Proportion without Num/Den")
    if num < 0 or den < 0:
        raise SchemaViolation(f"negative Proportion {num}/{den}")
    for c in _children(el):
        if _local(c.tag) not in ("Num", "Den", "TempoChange"):
            ctx.ignore(c, "Proportion")
    return Proportion(num, den, _child(el, "TempoChange") is not None)


def _parse_reading(el, ctx: _Context, i: int):
    refs = tuple((c.text or "").strip() for c in _children(el) if _local(c.tag) == "VariantVersionID")
    music = _child(el, "Music")
    if music is None:
        music = _child(el, "EventList")
    ctx.path.append(i)
    events = _parse_list(music, ctx) if music is not None else ()
    ctx.path.pop()
    for c in _children(el):
        if _local(c.tag) not in ("VariantVersionID", "Music", "EventList", "Lacuna", "Error", "Default"):
            ctx.ignore(c, "Reading")
    is_default = _child(el, "Default") is not None or not refs
    return is_default, VariantReading(
        refs, events, lacuna=_child(el, "Lacuna") is not None, error=_child(el, "Error") is not None
    )


def _parse_variants(el, ctx: _Context) -> VariantGroup:
    default = None
    default_sources: Tuple[str, ...] = ()
    readings = []
    for i, c in enumerate(_children(el)):
        if _local(c.tag) != "Reading":
            ctx.ignore(c, "VariantReadings")
            continue
        is_default, reading = _parse_reading(c, ctx, i)
        if is_default and default is None:
            default = reading.events
            default_sources = reading.source_refs
        else:
            readings.append(reading)
    if default is None and not readings:
        raise SchemaViolation("VariantReadings without any reading")
    return VariantGroup(default or (), tuple(readings), default_sources)


def parse_event(element, ctx: Optional[_Context] = None) -> CmmeEvent:
    """Map one event-list child element to its event type.

    Unknown tags become :class:`Unsupported`.  ``MultiEvent`` and
    ``VariantReadings`` recurse.  Ligature flags on a lone note are left at
    ``none``; they are resolved per list by the document parser.
    """
    ctx = ctx or _Context()
    name = _local(element.tag)
    if name == "Note":
        return _parse_note(element, ctx)[0]
    if name == "Rest":
        return _parse_rest(element, ctx)
    if name == "Dot":
        if _child(element, "Division") is not None or element.get("kind") == "division":
            return Dot("division")
        return Dot("addition")
    if name == "Clef":
        return _parse_clef(element, ctx)
    if name == "Mensuration":
        return _parse_mensuration(element, ctx)
    if name == "Proportion":
        return _parse_proportion(element, ctx)
    if name == "ColorChange":
        return ColorChange(",".join(_opaque(c) for c in _children(element)))
    if name == "Custos":
        return Custos(_pitch(element, "Custos"))
    if name == "OriginalText":
        phrase = _text(element, "Phrase")
        return OriginalText(phrase if phrase is not None else "".join(element.itertext()).strip())
    if name == "LineEnd":
        return LineEnd(_child(element, "PageEnd") is not None)
    if name == "MultiEvent":
        return MultiEvent(_parse_list(element, ctx))
    if name == "VariantReadings":
        return _parse_variants(element, ctx)
    if name == "Ellipsis":
        return EllipsisGap(_length(element, "Ellipsis"))
    if name == "MiscItem":
        e = _child(element, "Ellipsis")
        if e is not None:
            return EllipsisGap(_length(e, "Ellipsis"))
    return Unsupported(name, _opaque(element))


def _parse_list(parent, ctx: _Context) -> Tuple[CmmeEvent, ...]:
    events: List[CmmeEvent] = []
    connect: List[Optional[str]] = []  # per event: Lig text for notes, else None
    for i, el in enumerate(_children(parent)):
        ctx.path.append(i)
        if _local(el.tag) == "Note":
            ev, lig = _parse_note(el, ctx)
        else:
            ev, lig = parse_event(el, ctx), None
        ctx.path.pop()
        events.append(ev)
        connect.append(lig)
    return _resolve_ligatures(events, connect, ctx)


def _resolve_ligatures(events, connect, ctx: _Context) -> Tuple[CmmeEvent, ...]:
    out = list(events)
    open_idx: List[int] = []  # indices of notes in the running ligature
    form = None

    def close(dangling: bool):
        nonlocal open_idx
        if not open_idx:
            return
        if dangling:
            ctx.ignored.append(ParseWarning(
                "ligature_dangling", "ligature connection without a following note",
                ctx.section, ctx.voice, ".".join(map(str, ctx.path + [open_idx[-1]])),
            ))
        if len(open_idx) == 1:
            out[open_idx[0]] = replace(out[open_idx[0]], ligature="none", ligature_form=None)
        else:
            for k, j in enumerate(open_idx):
                flag = "start" if k == 0 else ("end" if k == len(open_idx) - 1 else "mid")
                out[j] = replace(out[j], ligature=flag, ligature_form=form)
        open_idx = []

    for i, ev in enumerate(events):
        if isinstance(ev, Note):
            if open_idx or connect[i]:
                if not open_idx:
                    form = connect[i]
                open_idx.append(i)
            if not connect[i]:
                close(False)
        elif isinstance(ev, Rest) and open_idx:
            close(True)
    if open_idx:
        close(True)
    return tuple(out)


# ------------------------------------------------------------------------- document

_XML_DECL = re.compile(rb"^\s*<\?xml[^>]*encoding\s*=\s*[\"']([A-Za-z0-9._-]+)[\"']")
_SECTION_KINDS = {"MensuralMusic": "mensural", "Plainchant": "plainchant", "Text": "text-only"}


def _check_encoding(data: bytes) -> None:
    m = _XML_DECL.match(data)
    if m and m.group(1).decode("ascii").lower().replace("_", "-") not in ("utf-8", "utf8"):
        raise MalformedXml(f"unsupported encoding {m.group(1).decode('ascii')!r}; UTF-8 required")
    try:
        data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise MalformedXml(f"input is not valid UTF-8: {e}") from None


def parse_document(data) -> CmmeDocument:
    """Parse CMME-XML bytes into a :class:`CmmeDocument`.

    Raises
    ------
    MalformedXml
        The bytes are not well-formed UTF-8 XML.
    NotCmme
        The root element is not a CMME ``Piece``.
    SchemaViolation
        A known element lacks required structure (e.g. a Note without pitch).
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    _check_encoding(data)
    try:
        root = ET.fromstring(data)
    except ET.ParseError as e:
        raise MalformedXml(str(e)) from None
    if _local(root.tag) != "Piece":
        raise NotCmme(f"root element is <{_local(root.tag)}>, expected <Piece>")

    ctx = _Context()
    meta = {"title": "", "composer": "", "editor": ""}
    sources = []
    gd = _child(root, "GeneralData")
    if gd is not None:
        for c in _children(gd):
            name = _local(c.tag)
            if name in ("Title", "Composer", "Editor"):
                meta[name.lower()] = (c.text or "").strip()
            elif name == "VariantVersion":
                sources.append(_version(c))
            elif name == "VariantVersions":
                sources.extend(_version(v) for v in _children(c) if _local(v.tag) == "VariantVersion")
            elif name in ("Section", "PublicNotes", "Notes", "BaseColoration", "Incipit"):
                continue
            else:
                ctx.ignore(c, "GeneralData")

    voices = []
    vd = _child(root, "VoiceData")
    declared = None
    if vd is not None:
        declared = _int(vd, "NumVoices", where="VoiceData ")
        for c in _children(vd):
            if _local(c.tag) == "Voice":
                voices.append(CmmeVoiceMeta(len(voices) + 1, _text(c, "Name", "") or "",
                                            _child(c, "Editorial") is not None))
    if declared is not None and declared != len(voices):
        ctx.ignored.append(ParseWarning(
            "voice_count", f"NumVoices says {declared} but {len(voices)} voices are declared"))

    sections = []
    for sec_el in (c for c in _children(root) if _local(c.tag) == "MusicSection"):
        ctx.section = len(sections) + 1
        body = next((c for c in _children(sec_el) if _local(c.tag) in _SECTION_KINDS), None)
        if body is None:
            sections.append(CmmeSection("text-only"))
            continue
        kind = _SECTION_KINDS[_local(body.tag)]
        lists: Dict[int, Tuple[CmmeEvent, ...]] = {}
        if kind == "mensural":
            for v in (c for c in _children(body) if _local(c.tag) == "Voice"):
                num = _int(v, "VoiceNum", where="Voice ")
                if num is None:
                    raise SchemaViolation("section voice without VoiceNum")
                if not 1 <= num <= len(voices):
                    raise SchemaViolation(f"section references undeclared voice {num}")
                ctx.voice = num
                el = _child(v, "EventList")
                lists[num] = _parse_list(el, ctx) if el is not None else ()
            ctx.voice = 0
        sections.append(CmmeSection(kind, lists))

    if not voices and any(s.voice_event_lists for s in sections):
        raise SchemaViolation("music present but no voices declared")
    return CmmeDocument(
        meta["title"], meta["composer"], meta["editor"], tuple(sources), tuple(voices),
        tuple(sections), tuple(ctx.ignored),
    )


def _version(el) -> Tuple[str, str]:
    vid = _text(el, "ID") or _text(el, "VariantVersionID") or ""
    if not vid:
        raise SchemaViolation("VariantVersion without ID")
    return vid, _text(el, "SourceName", "") or ""


def iter_events(events, path=()):
    """Yield ``(path, event)`` depth-first, including nested groups and readings."""
    for i, ev in enumerate(events):
        p = path + (i,)
        yield p, ev
        if isinstance(ev, MultiEvent):
            yield from iter_events(ev.events, p)
        elif isinstance(ev, VariantGroup):
            yield from iter_events(ev.default, p + ("d",))
            for j, r in enumerate(ev.readings):
                yield from iter_events(r.events, p + (f"r{j}",))


def collect_warnings(doc: CmmeDocument) -> List[ParseWarning]:
    """One warning per Unsupported event, non-mensural section and ignored child."""
    out = []
    for s, sec in enumerate(doc.sections, 1):
        if sec.kind != "mensural":
            out.append(ParseWarning("section_skipped", f"{sec.kind} section not converted", s))
            continue
        for v in sorted(sec.voice_event_lists):
            for path, ev in iter_events(sec.voice_event_lists[v]):
                if isinstance(ev, Unsupported):
                    out.append(ParseWarning(
                        "unsupported", f"unsupported element <{ev.tag}>", s, v,
                        ".".join(str(p) for p in path),
                    ))
    out.extend(doc.ignored)
    return out
