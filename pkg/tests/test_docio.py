"""The document format: canonical emission, round-trips, strictness."""

import json

import pytest

from torocomb.complexes import resolve, single_cone_complex
from torocomb.corpus import (
    base_change_instances,
    complex_corpus,
    morphism_corpus,
    plfunction_instances,
)
from torocomb.docio import (
    FORMAT_VERSION,
    KINDS,
    Document,
    DocumentError,
    emit_document,
    kind_of,
    parse_document,
)
from torocomb.morphism import classify_morphism
from torocomb.plfun import check_certificate


def orthant_text():
    return emit_document(single_cone_complex(2, [(1, 0), (0, 1)]))


def test_emit_is_canonical_json_with_version_and_kind():
    text = orthant_text()
    data = json.loads(text)
    assert data["format_version"] == FORMAT_VERSION
    assert data["kind"] == "complex"
    assert text.endswith("\n")
    assert text == emit_document(parse_document(text).value)


def test_round_trip_law_on_corpus_complexes():
    for c in complex_corpus(count=8, count_high_rank=1):
        once = emit_document(c)
        twice = emit_document(parse_document(once).value)
        assert once == twice
        assert parse_document(once).value.key() == c.key()


def test_round_trip_law_on_corpus_morphisms():
    for f in morphism_corpus(count=6):
        once = emit_document(f)
        assert parse_document(once).value.key() == f.key()
        assert emit_document(parse_document(once).value) == once


def test_round_trip_subdivision_with_certificate():
    base = complex_corpus(count=3, count_high_rank=0)[1]
    s = resolve(base, certify=True)
    once = emit_document(s)
    parsed = parse_document(once)
    assert parsed.kind == "subdivision"
    assert parsed.value.key() == s.key()
    assert emit_document(parsed.value) == once
    if s.certificate is not None:
        assert parsed.value.certificate is not None


def test_certificate_reverifies_from_text_alone():
    base = complex_corpus(count=4, count_high_rank=0)[3]
    s = resolve(base, certify=True)
    assert s.certificate is not None
    text = emit_document(s.certificate)
    reborn = parse_document(text).value
    assert check_certificate(reborn) == []
    assert emit_document(reborn) == text


def test_round_trip_alterations_and_lattice_parts():
    f, a1, a2 = base_change_instances(count=1)[0]
    for value, kind in ((a1, "alteration"), (a1.lattice_part, "lattice-alteration")):
        once = emit_document(value)
        parsed = parse_document(once)
        assert parsed.kind == kind
        assert emit_document(parsed.value) == once


def test_round_trip_plfunction():
    _s, _coeffs, p = plfunction_instances(count=1)[0]
    once = emit_document(p)
    parsed = parse_document(once)
    assert parsed.kind == "pl-function"
    assert emit_document(parsed.value) == once


def test_round_trip_morphism_report():
    report = classify_morphism(morphism_corpus(count=3)[2])
    once = emit_document(report)
    parsed = parse_document(once)
    assert parsed.kind == "report"
    assert parsed.value.equidimensional == report.equidimensional
    assert parsed.value.ray_multiplicities == report.ray_multiplicities
    assert emit_document(parsed.value) == once


def test_syntax_error_reports_line_and_column():
    with pytest.raises(DocumentError, match=r"line 3, column"):
        parse_document('{\n  "format_version": "1",\n  !\n}')


def test_version_mismatch_is_rejected():
    data = json.loads(orthant_text())
    data["format_version"] = "2"
    with pytest.raises(DocumentError, match="unsupported format version"):
        parse_document(json.dumps(data))


def test_unknown_kind_is_rejected():
    data = json.loads(orthant_text())
    data["kind"] = "gadget"
    with pytest.raises(DocumentError, match="unknown document kind"):
        parse_document(json.dumps(data))


def test_unknown_field_rejected_strict_warned_lenient():
    data = json.loads(orthant_text())
    data["payload"]["flavor"] = "mint"
    text = json.dumps(data)
    with pytest.raises(DocumentError, match="unknown field 'flavor'"):
        parse_document(text)
    doc = parse_document(text, strict=False)
    assert isinstance(doc, Document)
    assert any("flavor" in w for w in doc.warnings)
    assert doc.value.key() == parse_document(orthant_text()).value.key()


def test_missing_field_is_an_error_even_lenient():
    data = json.loads(orthant_text())
    del data["payload"]["cones"]
    with pytest.raises(DocumentError, match="missing field 'cones'"):
        parse_document(json.dumps(data), strict=False)


def test_domain_validation_carries_the_report():
    # a face map whose image is not a face: identity into the orthant
    # from a one-dimensional cone times a wrong matrix
    text = emit_document(single_cone_complex(2, [(1, 0), (0, 1)]))
    data = json.loads(text)
    for fm in data["payload"]["face_maps"]:
        if fm["matrix"]["rows"] == 2 and fm["matrix"]["cols"] == 1:
            fm["matrix"]["entries"] = [[1], [1]]
            break
    with pytest.raises(DocumentError) as err:
        parse_document(json.dumps(data))
    assert err.value.problems
    assert "invariant" in str(err.value)


def test_validation_can_be_switched_off():
    text = emit_document(single_cone_complex(2, [(1, 0), (0, 1)]))
    data = json.loads(text)
    for fm in data["payload"]["face_maps"]:
        if fm["matrix"]["rows"] == 2 and fm["matrix"]["cols"] == 1:
            fm["matrix"]["entries"] = [[1], [1]]
            break
    doc = parse_document(json.dumps(data), validate=False)
    assert doc.kind == "complex"


def test_booleans_are_not_integers():
    data = json.loads(orthant_text())
    data["payload"]["cones"][0]["ambient_dim"] = True
    with pytest.raises(DocumentError, match="expected an integer"):
        parse_document(json.dumps(data))


def test_bad_rational_string_is_rejected():
    _s, _coeffs, p = plfunction_instances(count=1)[0]
    data = json.loads(emit_document(p))
    entry = next(e for e in data["payload"]["functionals"] if e["row"])
    entry["row"][0] = "three"
    with pytest.raises(DocumentError, match="expected a rational"):
        parse_document(json.dumps(data))


def test_duplicate_assignment_entry_is_rejected():
    f = morphism_corpus(count=1)[0]
    data = json.loads(emit_document(f))
    data["payload"]["assignment"].append(data["payload"]["assignment"][0])
    with pytest.raises(DocumentError, match="listed twice"):
        parse_document(json.dumps(data))


def test_kind_inference_covers_every_kind():
    assert kind_of(single_cone_complex(1, [(1,)])) == "complex"
    assert set(KINDS) == {
        "complex",
        "morphism",
        "subdivision",
        "lattice-alteration",
        "alteration",
        "pl-function",
        "certificate",
        "report",
    }
    with pytest.raises(DocumentError, match="no document kind"):
        kind_of(42)
