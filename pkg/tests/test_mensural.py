from fractions import Fraction

from conftest import fixture_path, load_ir
from mensura import cmme
from mensura.mensural import (
    MensuralWriteOptions, count_notes, duration_attributes, encode_ligature_accidental, encode_proportion,
    write_mensural,
)
from mensura.model import ScoreEvent, build_score, mensuration_from_cmme
from mensura.primitives import NoteShape, Pitch
from mensura.report import ConversionReport
from mensura.xmlnode import XmlNode, from_bytes, serialize

O = mensuration_from_cmme(cmme.Mensuration(sign="O"))
C_DOT = mensuration_from_cmme(cmme.Mensuration(sign="C", dot=True))


def write(name, **opt):
    ir, _ = load_ir(name)
    return write_mensural(ir, MensuralWriteOptions(**opt))


def one_voice(*events):
    voices = (cmme.CmmeVoiceMeta(1, "V"),)
    doc = cmme.CmmeDocument("t", "", "", (), voices, (cmme.CmmeSection("mensural", {1: tuple(events)}),))
    ir, _ = build_score(doc)
    return write_mensural(ir)


def ev(shape, written, m):
    return ScoreEvent("note", 1, Fraction(0), "", written=Fraction(written), sounding=Fraction(written),
                      pitch=Pitch("G", 4), shape=NoteShape[shape.upper()], mensuration=m)


def test_structural_echo():
    root, report = one_voice(cmme.Mensuration(sign="O"), cmme.Note(NoteShape.BREVIS, Pitch("G", 4)))
    mensurs = list(root.iter("mensur"))
    notes = list(root.iter("note"))
    assert len(mensurs) == 1 and mensurs[0].get("sign") == "O" and mensurs[0].get("tempus") == "3"
    assert len(notes) == 1
    assert (notes[0].get("dur"), notes[0].get("pname"), notes[0].get("oct")) == ("brevis", "g", "4")
    assert root.find("staffDef").get("notationtype") == "mensural.white"
    assert report.errors == []


def test_duration_attributes():
    assert duration_attributes(ev("brevis", 6, O), O) == [("dur", "brevis")]
    assert duration_attributes(ev("brevis", 4, O), O) == [("dur", "brevis"), ("num", "3"), ("numbase", "2")]
    assert duration_attributes(ev("semibrevis", 2, C_DOT), C_DOT) == [
        ("dur", "semibrevis"), ("num", "3"), ("numbase", "2")]


def test_num_numbase_solves_written():
    for nominal_shape, m, written in (("brevis", O, Fraction(9, 2)), ("semibrevis", C_DOT, Fraction(5, 4))):
        attrs = dict(duration_attributes(ev(nominal_shape, written, m), m))
        nominal = 6 if nominal_shape == "brevis" else 3
        assert nominal * Fraction(int(attrs["numbase"]), int(attrs["num"])) == written


def test_encode_proportion():
    assert encode_proportion(cmme.Proportion(3, 2)).attributes == [("num", "3"), ("numbase", "2")]
    tempo = encode_proportion(cmme.Proportion(2, 1, True))
    assert tempo.get("type") == "cmme_tempo_change"
    reset = encode_proportion(cmme.Proportion(1, 1))
    assert (reset.get("num"), reset.get("numbase"), reset.get("type")) == ("1", "1", None)


def test_encode_ligature_accidental():
    report = ConversionReport()
    node = encode_ligature_accidental(XmlNode("note"), "flat", report, "s1/v1/e3")
    accid = node.find("accid")
    assert accid.get("accid") == "f" and accid.get("type") == "cmme_lig_accid"
    assert report.codes() == ["lig_accid"]


def test_ligature_fixture():
    root, report = write("ligatures")
    ligs = list(root.iter("ligature"))
    assert [len(l.elements()) for l in ligs] == [2, 3]
    assert [l.get("form") for l in ligs] == ["recta", "obliqua"]
    typed = [n for n in root.iter() if n.get("type") == "cmme_lig_accid"]
    assert len(typed) == 1 and report.codes() == ["lig_accid"]


def test_plain_ligature_and_free_accidental():
    root, report = one_voice(
        cmme.Note(NoteShape.BREVIS, Pitch("A", 4), ligature="start"),
        cmme.Note(NoteShape.BREVIS, Pitch("B", 4), ligature="end"),
        cmme.Note(NoteShape.BREVIS, Pitch("B", 4, "flat")),
    )
    assert report.warnings == []
    accids = list(root.iter("accid"))
    assert len(accids) == 1 and accids[0].get("type") is None


def test_typed_markers():
    for name, value in (("signum", "signum_congruentiae"), ("ellipsis", "ellipsis"), ("variants", "lacuna")):
        root, report = write(name)
        hits = [n for n in root.iter() if n.get("type") == value]
        assert len(hits) == 1, name
        assert report.codes("notes").count("typed") >= 1
    root, _ = write("signum")
    assert [n for n in root.iter("note") if n.get("type")][0].get("pname") == "d"
    gap = write("ellipsis")[0].find("gap")
    assert gap.get("reason") == "ellipsis"


def test_tempo_change_typing():
    root, report = write("tempo_change")
    assert [n.name for n in root.iter() if n.get("type") == "cmme_tempo_change"] == ["proport", "mensur"]
    assert report.codes("notes") == ["typed", "typed"]


def test_apparatus():
    root, _ = write("variants")
    app = root.find("app")
    lem, *rdgs = app.elements()
    assert lem.name == "lem" and lem.get("source") == "#m-src-A"
    assert [r.get("source") for r in rdgs] == ["#m-src-B", "#m-src-C"]
    assert len(list(lem.iter("note"))) == 2 and len(list(rdgs[0].iter("note"))) == 3
    assert rdgs[1].get("type") == "lacuna" and rdgs[1].elements() == []
    sources = [s.get("xml:id") for s in root.iter("source")]
    assert sources == ["m-src-A", "m-src-B", "m-src-C"]


def test_apparatus_can_be_flattened():
    root, _ = write("variants", include_apparatus=False)
    assert root.find("app") is None
    assert count_notes(root) == 4 + 3


def test_every_event_written_once():
    for name in ("tempus_imperfectum", "explicit_lengths", "coloration", "multi_section"):
        ir, _ = load_ir(name)
        root, _ = write_mensural(ir)
        ids = [n.get("xml:id") for n in root.iter() if n.get("xml:id") and n.name not in ("source",)]
        written = [i for i in ids if "-e" in i and "-c" not in i]
        expected = sum(1 for v in ir.voices for e in v.events if e.kind != "site")
        assert len(written) == expected, name
        assert len(set(ids)) == len(ids)


def test_ids_follow_voice_and_ordinal():
    root, _ = write("tempus_perfectum")
    staff2 = [s for s in root.iter("staff") if s.get("n") == "2"][0]
    assert [e.get("xml:id") for e in staff2.find("layer").elements()][:3] == ["m-v2-e1", "m-v2-e2", "m-v2-e3"]
    custom = write("tempus_perfectum", id_prefix="x")[0]
    assert custom.find("note").get("xml:id").startswith("x-v1-")


def test_header_metadata():
    root, _ = write("tempus_perfectum")
    assert root.find("title").text == "Kyrie in tempus perfectum"
    assert [(p.get("role"), p.text) for p in root.iter("persName")] == [
        ("composer", "Anonymous"), ("editor", "Test Editor")]


def test_other_event_mappings():
    root, _ = write("tempus_imperfectum")
    names = [n.name for n in root.iter()]
    for expected in ("keySig", "custos", "sb", "pb", "annot", "chord", "syl"):
        assert expected in names
    assert root.find("keySig").find("keyAccid").get("accid") == "f"
    assert any(n.get("fermata") == "above" for n in root.iter("note"))
    syls = [(s.text, s.get("con")) for s in root.iter("syl")]
    assert syls == [("Tant", None), ("vi", "d"), ("vray", None)]
    assert count_notes(root) == 15


def test_coloration_flag():
    root, _ = write("coloration")
    assert [n.get("colored") for n in root.iter("note")] == [None, "true", "true", "true", None]


def test_sections_written_separately():
    root, _ = write("multi_section")
    assert [s.get("n") for s in root.iter("section")] == ["1", "4"]


def test_serialization_shape():
    root, _ = write("signum")
    data = serialize(root)
    assert data.startswith(b'<?xml version="1.0" encoding="UTF-8"?>\n<mei xmlns=')
    assert b"\n   <meiHead>" in data
    assert serialize(from_bytes(data)) == data
    assert fixture_path("signum").exists()
