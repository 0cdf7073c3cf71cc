"""MEI writer for barred CMN output, with an optional MEI-Basic restriction."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Dict, List, Optional

from .cmn import CmnNote, MeasuredScore
from .primitives import MEI_ACCID
from .report import ConversionReport
from .xmlnode import MEI_NS, XmlNode

MEI_VERSION = "5.0"
MEI_BASIC_VERSION = "5.0+basic"

_DUR = {"breve": "breve", "whole": "1", "half": "2", "quarter": "4", "eighth": "8", "sixteenth": "16"}
_CLEF_ATTRS = {
    "G2": [("clef.shape", "G"), ("clef.line", "2")],
    "G2_ottava_bassa": [("clef.shape", "G"), ("clef.line", "2"), ("clef.dis", "8"), ("clef.dis.place", "below")],
    "F4": [("clef.shape", "F"), ("clef.line", "4")],
}


@dataclass(frozen=True)
class CmnWriteOptions:
    mei_basic: bool = False
    id_prefix: str = "c"


@dataclass(frozen=True)
class Violation:
    path: str
    element: str
    attribute: Optional[str] = None

    def __str__(self):
        what = f"attribute @{self.attribute}" if self.attribute else f"element <{self.element}>"
        return f"{self.path}: {what} not in MEI-Basic"


@lru_cache(maxsize=1)
def basic_whitelist() -> Dict[str, frozenset]:
    raw = json.loads(resources.files("mensura").joinpath("data/mei_basic.json").read_text("utf-8"))
    glob = set(raw["global"])
    return {name: frozenset(glob | set(attrs)) for name, attrs in raw["elements"].items()}


def validate_basic_subset(doc: XmlNode) -> List[Violation]:
    """Every element or attribute of ``doc`` outside the MEI-Basic whitelist, with its path."""
    allowed = basic_whitelist()
    out: List[Violation] = []

    def walk(node: XmlNode, path: str):
        if node.name not in allowed:
            out.append(Violation(path, node.name))
        else:
            for k, _ in node.attributes:
                if k not in allowed[node.name]:
                    out.append(Violation(f"{path}/@{k}", node.name, k))
        seen: Dict[str, int] = {}
        for c in node.elements():
            seen[c.name] = seen.get(c.name, 0) + 1
            walk(c, f"{path}/{c.name}[{seen[c.name]}]")

    walk(doc, f"/{doc.name}")
    return out


def _tstamp(t: Fraction) -> str:
    t = Fraction(t)
    if t.denominator == 1:
        return str(t.numerator)
    return f"{float(t):.4f}".rstrip("0").rstrip(".")


class _CmnWriter:
    def __init__(self, ms: MeasuredScore, opt: CmnWriteOptions, report: ConversionReport):
        self.ms = ms
        self.opt = opt
        self.report = report
        self.next_note: Dict[str, str] = {}
        for measures in ms.voices:
            flat = [n for m in measures for n in m.notes]
            for a, b in zip(flat, flat[1:]):
                self.next_note[a.key] = b.key

    def ref(self, key: str) -> str:
        return f"{self.opt.id_prefix}-{key}"

    def note(self, n: CmnNote, first_of_event: bool) -> XmlNode:
        attrs = [("xml:id", self.ref(n.key))]
        if n.kind == "note" and n.chord:
            node = XmlNode("chord", attrs + [("dur", _DUR[n.dur])])
            for i, p in enumerate((n.pitch,) + n.chord, 1):
                inner = node.sub("note", ("xml:id", f"{self.ref(n.key)}-c{i}"), ("pname", p.pname), ("oct", p.octave))
                self.accid(inner, p, first_of_event)
        elif n.kind == "note":
            node = XmlNode("note", attrs + [("dur", _DUR[n.dur]), ("pname", n.pitch.pname), ("oct", str(n.pitch.octave))])
            self.accid(node, n.pitch, first_of_event)
        else:
            node = XmlNode(n.kind, attrs + [("dur", _DUR[n.dur])])
        if n.dots:
            node.attributes.insert(2, ("dots", str(n.dots)))
        if n.syllable:
            node.sub("verse", ("n", 1)).sub("syl", text=n.syllable)
        return node

    @staticmethod
    def accid(node: XmlNode, p, first: bool) -> None:
        if p.accidental:
            node.set("accid" if first else "accid.ges", MEI_ACCID[p.accidental])

    def layer(self, notes: List[CmnNote], layer: XmlNode) -> None:
        tuplet_node = None
        current = None
        for n in notes:
            first = n.tie in ("none", "start")
            if n.tuplet_ref != current:
                current = n.tuplet_ref
                tuplet_node = None
                if current is not None:
                    tuplet_node = layer.sub("tuplet", ("xml:id", self.ref(current)),
                                            ("num", n.ratio.numerator), ("numbase", n.ratio.denominator))
            (tuplet_node if tuplet_node is not None else layer).add(self.note(n, first))

    def write(self) -> XmlNode:
        ms, opt = self.ms, self.opt
        mei = XmlNode("mei", [("xmlns", MEI_NS), ("meiversion", MEI_BASIC_VERSION if opt.mei_basic else MEI_VERSION)])
        head = mei.sub("meiHead")
        fd = head.sub("fileDesc")
        ts = fd.sub("titleStmt")
        ts.sub("title", text=ms.title or "Untitled")
        if ms.composer or ms.editor:
            rs = ts.sub("respStmt")
            if ms.composer:
                rs.sub("persName", ("role", "composer"), text=ms.composer)
            if ms.editor:
                rs.sub("persName", ("role", "editor"), text=ms.editor)
        fd.sub("pubStmt")

        score = mei.sub("music").sub("body").sub("mdiv").sub("score")
        first_meter = ms.meter_map.entries[0][1]
        sd = score.sub("scoreDef", ("meter.count", first_meter.count), ("meter.unit", first_meter.unit))
        grp = sd.sub("staffGrp")
        for i, clef in enumerate(ms.clefs, 1):
            sdef = grp.sub("staffDef", ("n", i), ("lines", 5))
            if ms.names[i - 1]:
                sdef.set("label", ms.names[i - 1])
            for k, v in _CLEF_ATTRS[clef]:
                sdef.set(k, v)
        section = score.sub("section")

        changes = {onset: m for onset, m in ms.meter_map.entries[1:]}
        by_measure: Dict[int, list] = {}
        for d in ms.directives:
            by_measure.setdefault(d.measure, []).append(d)
        for o in ms.ornaments:
            by_measure.setdefault(o.measure, []).append(o)
        start_measure = {n.key: m.index for measures in ms.voices for m in measures for n in m.notes}
        for s in ms.spans:
            by_measure.setdefault(start_measure[s.start], []).append(s)

        dropped_spans = 0
        for k in range(ms.measure_count):
            row = [measures[k] for measures in ms.voices]
            m0 = row[0]
            if k > 0 and m0.onset in changes:
                meter = changes[m0.onset]
                section.sub("scoreDef", ("meter.count", meter.count), ("meter.unit", meter.unit))
            measure = section.sub("measure", ("xml:id", f"{opt.id_prefix}-m{m0.index}"), ("n", m0.index))
            for v, m in enumerate(row, 1):
                self.layer(m.notes, measure.sub("staff", ("n", v)).sub("layer", ("n", 1)))
            for v, m in enumerate(row, 1):
                for n in m.notes:
                    if n.tie in ("start", "mid"):
                        measure.sub("tie", ("xml:id", f"{self.ref(n.key)}-tie"), ("staff", v),
                                    ("startid", "#" + self.ref(n.key)),
                                    ("endid", "#" + self.ref(self.next_note[n.key])))
            for item in by_measure.get(m0.index, []):
                kind = type(item).__name__
                if kind == "Directive":
                    d = measure.sub("dir", ("staff", item.voice), ("tstamp", _tstamp(item.tstamp)), text=item.text)
                    if item.anchor is not None:
                        d.set("startid", "#" + self.ref(item.anchor))
                elif kind == "Ornament":
                    measure.sub("fermata", ("staff", item.voice), ("startid", "#" + self.ref(item.note)),
                                ("place", "above"))
                elif opt.mei_basic:
                    dropped_spans += 1
                else:
                    b = measure.sub("bracketSpan", ("staff", item.voice), ("startid", "#" + self.ref(item.start)),
                                    ("endid", "#" + self.ref(item.end)), ("func", item.kind), ("lform", "solid"))
                    if item.style == "angled":
                        b.set("type", "angled")
        if dropped_spans:
            self.report.drop("ligature/coloration brackets (not in MEI-Basic)")
            self.report.note("brackets_dropped", f"{dropped_spans} bracket spans left out of MEI-Basic output")
        return mei


def write_cmn(ms: MeasuredScore, opt: Optional[CmnWriteOptions] = None):
    """Serialize a measured score as MEI; returns ``(root, report)``."""
    opt = opt or CmnWriteOptions()
    report = ConversionReport()
    root = _CmnWriter(ms, opt, report).write()
    if opt.mei_basic:
        for v in validate_basic_subset(root):
            report.error("SerializationFailure", str(v))
    return root, report


def count_voice_notes(root: XmlNode) -> Dict[int, int]:
    """Top-level note events per staff number (a chord counts once)."""
    out: Dict[int, int] = {}
    for staff in root.iter("staff"):
        n = int(staff.get("n"))
        notes = sum(1 for _ in staff.iter("note"))
        chords = list(staff.iter("chord"))
        inner = sum(len([c for c in ch.elements() if c.name == "note"]) for ch in chords)
        out[n] = out.get(n, 0) + notes - inner + len(chords)
    return out
