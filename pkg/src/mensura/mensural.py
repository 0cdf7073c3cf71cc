"""MEI mensural writer.

Durations are written with the minima as the unit of equivalence: a note
keeps its shape as ``@dur`` and, when its length differs from the nominal
length of that shape, gets a ``@num``/``@numbase`` pair with
``nominal * numbase / num == written``.  CMME notions without a native MEI
home are kept through ``@type``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

from . import cmme
from .model import Mensuration, ScoreEvent, ScoreIR, nominal_minima
from .primitives import MEI_ACCID
from .report import ConversionReport
from .xmlnode import MEI_NS, XmlNode

TYPE_SIGNUM = "signum_congruentiae"
TYPE_ELLIPSIS = "ellipsis"
TYPE_LACUNA = "lacuna"
TYPE_TEMPO_CHANGE = "cmme_tempo_change"
TYPE_LIG_ACCID = "cmme_lig_accid"
MEI_VERSION = "5.0"

_CLEF_SHAPES = {"C": "C", "F": "F", "Frnd": "F", "Fsqr": "F", "G": "G", "Gamma": "G"}
_LIG_FORMS = {"recta": "recta", "obliqua": "obliqua"}


@dataclass(frozen=True)
class MensuralWriteOptions:
    include_apparatus: bool = True
    id_prefix: str = "m"
    equivalence: str = "minima"


def _ncname(text: str) -> str:
    out = re.sub(r"[^A-Za-z0-9_.-]", "_", text)
    return out if out and (out[0].isalpha() or out[0] == "_") else f"_{out}"


def source_ref(prefix: str, source_id: str) -> str:
    return f"{prefix}-src-{_ncname(source_id)}"


def duration_attributes(ev: ScoreEvent, m: Mensuration) -> list:
    """``@dur`` plus, for non-nominal lengths, the ``@num``/``@numbase`` pair."""
    attrs = [("dur", ev.shape.mei_name)]
    nominal = nominal_minima(ev.shape, m)
    if ev.written != nominal:
        ratio = Fraction(nominal) / ev.written
        attrs += [("num", str(ratio.numerator)), ("numbase", str(ratio.denominator))]
    return attrs


def encode_proportion(p: cmme.Proportion) -> XmlNode:
    node = XmlNode("proport", [("num", str(p.num)), ("numbase", str(p.den))])
    if p.tempo_change:
        node.set("type", TYPE_TEMPO_CHANGE)
    return node


def encode_ligature_accidental(note: XmlNode, accidental: str, report: ConversionReport,
                               location: str = "") -> XmlNode:
    """Attach an accidental to a ligated note as a typed workaround and warn."""
    note.sub("accid", ("accid", MEI_ACCID[accidental]), ("type", TYPE_LIG_ACCID))
    report.warn("lig_accid", "accidental inside a ligature has no native MEI encoding; "
                f"kept as accid typed {TYPE_LIG_ACCID}", location)
    return note


def _mensur(m: Mensuration, src: Optional[cmme.Mensuration]) -> XmlNode:
    node = XmlNode("mensur")
    if m.sign:
        node.set("sign", m.sign)
    if m.dot:
        node.set("dot", True)
    if src is not None and src.strokes:
        node.set("slash", src.strokes)
    if m.reversed:
        node.set("orient", "reversed")
    if m.number is not None:
        node.set("num", m.number)
        if m.number_den is not None:
            node.set("numbase", m.number_den)
    node.set("tempus", 3 if m.tempus == "perfect" else 2)
    node.set("prolatio", 3 if m.prolatio == "major" else 2)
    if src is not None:
        if src.modus_minor:
            node.set("modusminor", src.modus_minor)
        if src.modus_maior:
            node.set("modusmaior", src.modus_maior)
        if src.tempo_change:
            node.set("type", TYPE_TEMPO_CHANGE)
    return node


class _Writer:
    def __init__(self, ir: ScoreIR, opt: MensuralWriteOptions, report: ConversionReport):
        self.ir = ir
        self.opt = opt
        self.report = report
        self.ordinal = {}
        self.apps = 0

    def next_id(self, voice: int) -> str:
        n = self.ordinal.get(voice, 0) + 1
        self.ordinal[voice] = n
        return f"{self.opt.id_prefix}-v{voice}-e{n}"

    def typed(self, type_value: str, location: str) -> None:
        self.report.note("typed", f"kept as @type={type_value}", location)

    # -- events

    def event(self, ev: ScoreEvent, parent: XmlNode) -> None:
        k = ev.kind
        if k in ("note", "rest"):
            self.duration_event(ev, parent)
        elif k == "mensur":
            node = _mensur(ev.mensuration, ev.payload)
            if ev.payload.tempo_change:
                self.typed(TYPE_TEMPO_CHANGE, ev.location)
            parent.add(self.identify(node, ev))
        elif k == "proport":
            node = encode_proportion(ev.payload)
            if ev.payload.tempo_change:
                self.typed(TYPE_TEMPO_CHANGE, ev.location)
            parent.add(self.identify(node, ev))
        elif k == "dot":
            parent.add(self.identify(XmlNode("dot", [("form", "aug" if ev.payload.kind == "addition" else "div")]), ev))
        elif k == "clef":
            self.clef(ev, parent)
        elif k == "custos":
            parent.add(self.identify(XmlNode("custos", [("pname", ev.pitch.pname), ("oct", str(ev.pitch.octave))]), ev))
        elif k == "text":
            node = XmlNode("annot", [("type", "cmme_original_text")], [ev.payload.text])
            parent.add(self.identify(node, ev))
        elif k == "colorchange":
            node = XmlNode("annot", [("type", "cmme_color_change")], [ev.payload.text] if ev.payload.text else [])
            parent.add(self.identify(node, ev))
        elif k == "lineend":
            parent.add(self.identify(XmlNode("pb" if ev.payload.page_end else "sb"), ev))
        elif k == "gap":
            node = XmlNode("gap", [("reason", "ellipsis"), ("type", TYPE_ELLIPSIS)])
            if ev.payload.extent is not None:
                node.set("extent", str(ev.payload.extent))
                node.set("unit", "minima")
            self.typed(TYPE_ELLIPSIS, ev.location)
            parent.add(self.identify(node, ev))
        else:  # pragma: no cover
            raise ValueError(f"cannot write event kind {k!r}")

    def identify(self, node: XmlNode, ev: ScoreEvent) -> XmlNode:
        node.attributes.insert(0, ("xml:id", self.next_id(ev.voice)))
        return node

    def duration_event(self, ev: ScoreEvent, parent: XmlNode) -> None:
        m = ev.mensuration
        if ev.kind == "rest":
            node = XmlNode("rest", duration_attributes(ev, m))
        elif ev.chord:
            node = XmlNode("chord", duration_attributes(ev, m))
        else:
            node = XmlNode("note", [("pname", ev.pitch.pname), ("oct", str(ev.pitch.octave))]
                           + duration_attributes(ev, m))
        self.identify(node, ev)
        if ev.coloration is not None:
            node.set("colored", True)
        if "signum" in ev.markers:
            node.set("type", TYPE_SIGNUM)
            self.typed(TYPE_SIGNUM, ev.location)
        if "corona" in ev.markers:
            node.set("fermata", "above")
        if ev.kind == "note":
            if ev.chord:
                ident = node.get("xml:id")
                for i, p in enumerate((ev.pitch,) + ev.chord, 1):
                    inner = node.sub("note", ("xml:id", f"{ident}-c{i}"), ("pname", p.pname), ("oct", p.octave))
                    if p.accidental:
                        inner.sub("accid", ("accid", MEI_ACCID[p.accidental]))
            elif ev.pitch.accidental:
                if ev.ligature is not None:
                    encode_ligature_accidental(node, ev.pitch.accidental, self.report, ev.location)
                else:
                    node.sub("accid", ("accid", MEI_ACCID[ev.pitch.accidental]))
            if ev.syllable:
                verse = node.sub("verse", ("n", 1))
                syl = verse.sub("syl", text=ev.syllable)
                if not ev.payload.word_end:
                    syl.set("con", "d")
        parent.add(node)

    def clef(self, ev: ScoreEvent, parent: XmlNode) -> None:
        c: cmme.Clef = ev.payload
        if c.accidental:
            accid = MEI_ACCID[c.accidental]
            if c.is_signature_accidental:
                ks = XmlNode("keySig")
                ka = ks.sub("keyAccid", ("accid", accid))
                if c.pitch is not None:
                    ka.set("pname", c.pitch.pname)
                    ka.set("oct", c.pitch.octave)
                parent.add(self.identify(ks, ev))
            else:
                node = XmlNode("accid", [("accid", accid)])
                if c.pitch is not None:
                    node.set("ploc", c.pitch.pname)
                    node.set("oloc", c.pitch.octave)
                parent.add(self.identify(node, ev))
            return
        node = XmlNode("clef")
        node.set("shape", _CLEF_SHAPES.get(c.letter, c.letter[:1].upper()))
        if c.staff_line is not None:
            node.set("line", c.staff_line)
        if c.letter not in _CLEF_SHAPES:
            self.report.note("clef_shape", f"clef appearance {c.letter!r} written as a plain shape", ev.location)
        parent.add(self.identify(node, ev))

    # -- lists, ligatures and apparatus

    def events(self, events: Sequence[ScoreEvent], parent: XmlNode) -> None:
        lig_node = None
        lig_id = None
        i = 0
        while i < len(events):
            ev = events[i]
            if ev.kind == "site":
                if lig_node is not None:
                    lig_node = lig_id = None
                site = self.ir.apparatus[ev.payload]
                if self.opt.include_apparatus:
                    self.app(site, ev.voice, parent)
                    i += 1 + site.length
                else:
                    i += 1
                continue
            if ev.kind == "note" and ev.ligature is not None and ev.ligature != lig_id:
                lig_id = ev.ligature
                lig_node = parent.sub("ligature", ("xml:id", f"{self.opt.id_prefix}-v{ev.voice}-lig{lig_id}"))
                form = _LIG_FORMS.get((ev.ligature_form or "").lower())
                if form:
                    lig_node.set("form", form)
            target = lig_node if lig_node is not None else parent
            if ev.kind == "rest" and lig_node is not None:
                lig_node = lig_id = None
                target = parent
            self.event(ev, target)
            if ev.kind == "note" and lig_node is not None and getattr(ev.payload, "ligature", "") == "end":
                lig_node = lig_id = None
            i += 1

    def app(self, site, voice: int, parent: XmlNode) -> None:
        self.apps += 1
        app = parent.sub("app", ("xml:id", f"{self.opt.id_prefix}-v{voice}-app{self.apps}"))
        lem = app.sub("lem")
        if site.default_sources:
            lem.set("source", " ".join("#" + source_ref(self.opt.id_prefix, s) for s in site.default_sources))
        self.events(site.default, lem)
        for r in site.readings:
            rdg = app.sub("rdg")
            if r.sources:
                rdg.set("source", " ".join("#" + source_ref(self.opt.id_prefix, s) for s in r.sources))
            if r.lacuna:
                rdg.set("type", TYPE_LACUNA)
                self.typed(TYPE_LACUNA, site.location)
            self.events(r.events, rdg)


def _header(ir: ScoreIR, prefix: str, with_sources: bool = True) -> XmlNode:
    head = XmlNode("meiHead")
    fd = head.sub("fileDesc")
    ts = fd.sub("titleStmt")
    ts.sub("title", text=ir.title or "Untitled")
    if ir.composer or ir.editor:
        rs = ts.sub("respStmt")
        if ir.composer:
            rs.sub("persName", ("role", "composer"), text=ir.composer)
        if ir.editor:
            rs.sub("persName", ("role", "editor"), text=ir.editor)
    fd.sub("pubStmt")
    if with_sources and ir.sources:
        sd = fd.sub("sourceDesc")
        for sid, name in ir.sources:
            src = sd.sub("source", ("xml:id", source_ref(prefix, sid)), ("label", sid))
            if name:
                src.sub("bibl").sub("title", text=name)
    return head


def write_mensural(ir: ScoreIR, opt: Optional[MensuralWriteOptions] = None):
    """Serialize a score model as an MEI mensural document tree.

    Returns the root ``<mei>`` node and a report listing typed workarounds.
    """
    opt = opt or MensuralWriteOptions()
    report = ConversionReport()
    w = _Writer(ir, opt, report)
    mei = XmlNode("mei", [("xmlns", MEI_NS), ("meiversion", MEI_VERSION)])
    mei.add(_header(ir, opt.id_prefix))
    score = mei.sub("music").sub("body").sub("mdiv").sub("score")
    sd = score.sub("scoreDef", ("notationtype", "mensural.white"))
    grp = sd.sub("staffGrp")
    for v in ir.voices:
        sdef = grp.sub("staffDef", ("n", v.index), ("lines", 5), ("notationtype", "mensural.white"))
        if v.name:
            sdef.set("label", v.name)
        if v.editorial:
            sdef.set("type", "editorial")
    sections = sorted({e.section for v in ir.voices for e in v.events})
    for s in sections:
        sec = score.sub("section", ("n", s))
        for v in ir.voices:
            events = [e for e in v.events if e.section == s]
            if not events:
                continue
            layer = sec.sub("staff", ("n", v.index)).sub("layer", ("n", 1))
            w.events(events, layer)
    return mei, report


def count_notes(node: XmlNode) -> int:
    """Notes outside readings, counting a chord once."""
    def walk(n: XmlNode, in_chord: bool) -> int:
        if n.name == "rdg":
            return 0
        total = 0
        if n.name == "chord" or (n.name == "note" and not in_chord):
            total += 1
        for c in n.elements():
            total += walk(c, in_chord or n.name == "chord")
        return total
    return walk(node, False)
