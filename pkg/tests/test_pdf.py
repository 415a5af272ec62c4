import zlib

import pytest

from ragforge.errors import MalformedPdf, UnsupportedPdfFeature
from ragforge.pdf import Lexer, Name, ObjectParser, Ref, extract_content_text, parse_pdf
from ragforge.pdfwriter import build_pdf


def parse_obj(data: bytes):
    return ObjectParser(Lexer(data)).parse()


@pytest.mark.parametrize(
    "raw, expected",
    [
        (b"42", 42),
        (b"-3.5", -3.5),
        (b".5", 0.5),
        (b"true", True),
        (b"null", None),
        (b"/Type", Name("Type")),
        (b"/A#20B", Name("A B")),
        (b"(a\\(b\\)c)", b"a(b)c"),
        (b"(nested (parens) ok)", b"nested (parens) ok"),
        (b"(oct\\101\\7)", b"octA\x07"),
        (b"(line\\\ncontinued)", b"linecontinued"),
        (b"<48 65 6C6C 6F>", b"Hello"),
        (b"<414>", b"A@"),
        (b"12 0 R", Ref(12, 0)),
        (b"[1 2 0 R /X]", [1, Ref(2, 0), Name("X")]),
        (b"[1 2 3]", [1, 2, 3]),
        (b"<< /Length 5 /Kids [3 0 R] >>", {"Length": 5, "Kids": [Ref(3, 0)]}),
    ],
)
def test_object_parser(raw, expected):
    assert parse_obj(raw) == expected


def test_content_text_tj_and_tj_arrays():
    content = b"BT /F1 12 Tf 72 700 Td (Hello) Tj ( world) Tj T* [(ker) 30 (ned) -300 (gap)] TJ ET"
    text, shown = extract_content_text(content)
    assert shown
    assert text == "Hello world\nkerned gap"


def test_content_text_quote_operators_and_inline_image():
    content = b"BT (a) Tj (b) ' 1 2 (c) \" ET BI /W 1 /H 1 ID \x00\xffEI junk\nEI BT (d) Tj ET"
    text, _ = extract_content_text(content)
    assert text == "a\nb\nc\nd"


def test_content_without_text_operators():
    text, shown = extract_content_text(b"q 10 0 0 10 0 0 cm /Im1 Do Q")
    assert (text, shown) == ("", False)


def test_two_page_roundtrip():
    doc = parse_pdf(build_pdf(["alpha", "beta"]))
    assert doc.page_count == 2
    assert doc.extract_pages() == ["alpha", "beta"]


def test_flate_and_tj_arrays_roundtrip():
    pages = ["one two three\nfour (five)", "café “quoted”"]
    doc = parse_pdf(build_pdf(pages, compress=True, use_tj_arrays=True))
    assert doc.extract_pages() == pages


def test_info_dictionary_including_utf16():
    doc = parse_pdf(build_pdf(["x"], title="Manual", author="Σigma", created_at="D:20240101120000Z"))
    assert doc.info == {"Title": "Manual", "Author": "Σigma", "CreationDate": "D:20240101120000Z"}


def test_no_info_dictionary():
    assert parse_pdf(build_pdf(["x"])).info == {}


def test_indirect_length_and_wrong_length_fall_back_to_endstream():
    data = build_pdf(["alpha"]).replace(b"/Length 63", b"/Length 9 0 R")
    assert parse_pdf(data).extract_pages() == ["alpha"]


def test_page_tree_inherits_resources_and_nested_kids():
    content = b"BT /F1 12 Tf (nested) Tj ET"
    objs = [
        b"<< /Type /Catalog /Pages 2 0 R >>",
        b"<< /Type /Pages /Kids [3 0 R] /Count 1 /Resources << /Font << /F1 5 0 R >> >> >>",
        b"<< /Type /Pages /Kids [4 0 R] /Count 1 /Parent 2 0 R >>",
        b"<< /Type /Page /Parent 3 0 R /Contents 6 0 R >>",
        b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>",
        b"<< /Length %d /Filter [/FlateDecode] >>\nstream\n" % len(zlib.compress(content))
        + zlib.compress(content)
        + b"\nendstream",
    ]
    data = b"%PDF-1.4\n" + b"".join(b"%d 0 obj\n%s\nendobj\n" % (i, o) for i, o in enumerate(objs, 1))
    data += b"trailer\n<< /Root 1 0 R >>\n%%EOF\n"
    assert parse_pdf(data).extract_pages() == ["nested"]


def test_incremental_update_later_object_wins():
    base = build_pdf(["old"])
    update = b"4 0 obj\n<< /Length 24 >>\nstream\nBT /F1 12 Tf (new) Tj ET\nendstream\nendobj\n"
    assert parse_pdf(base + update).extract_pages() == ["new"]


@pytest.mark.parametrize(
    "kwargs, fragment",
    [
        ({"image_only": True}, "image-only"),
        ({"filter_name": "DCTDecode"}, "DCTDecode"),
        ({"encrypted": True}, "encrypted"),
        ({"type0_font": True}, "Type0"),
    ],
)
def test_unsupported_features(kwargs, fragment):
    with pytest.raises(UnsupportedPdfFeature, match=fragment):
        parse_pdf(build_pdf(["text"], **kwargs)).extract_pages()


def test_object_streams_rejected():
    data = build_pdf(["x"]) + b"9 0 obj\n<< /Type /ObjStm /N 1 /First 4 /Length 4 >>\nstream\n1 0 \nendstream\nendobj\n"
    with pytest.raises(UnsupportedPdfFeature, match="object streams"):
        parse_pdf(data)


@pytest.mark.parametrize(
    "data",
    [
        b"not a pdf at all",
        b"%PDF-1.4\n",
        b"%PDF-1.4\n1 0 obj\n<< /Type /Catalog >>\nendobj\ntrailer\n<< /Root 1 0 R >>\n",
        b"%PDF-1.4\n1 0 obj\n<< /Type /Catalog /Pages 2 0 R >>\nendobj\n2 0 obj\n<< /Type /Pages /Kids [] >>\nendobj\ntrailer << /Root 1 0 R >>",
    ],
)
def test_malformed(data):
    with pytest.raises(MalformedPdf):
        parse_pdf(data).extract_pages()


def test_corrupt_flate_stream_is_malformed():
    data = build_pdf(["alpha"], compress=True)
    start = data.index(b"stream\n") + len(b"stream\n")
    damaged = data[:start] + b"\x00\x01garbage" + data[start + 9 :]
    with pytest.raises(MalformedPdf):
        parse_pdf(damaged).extract_pages()


def test_truncated_files_never_crash():
    data = build_pdf(["alpha beta", "gamma"], compress=True, title="T")
    for cut in range(0, len(data), 7):
        try:
            parse_pdf(data[:cut]).extract_pages()
        except (MalformedPdf, UnsupportedPdfFeature):
            pass
