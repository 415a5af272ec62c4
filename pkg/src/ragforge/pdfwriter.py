"""Tiny PDF writer that emits files inside the subset :mod:`ragforge.pdf` reads.

Used to generate extraction fixtures (tests, demos) instead of shipping binary
blobs. Each page is a string; each line of it is drawn with its own text
operator so page text round-trips line for line.
"""

from __future__ import annotations

import zlib
from pathlib import Path
from typing import Sequence


def _pdf_string(text: str) -> bytes:
    raw = text.encode("cp1252", errors="replace")
    raw = raw.replace(b"\\", b"\\\\").replace(b"(", b"\\(").replace(b")", b"\\)")
    return b"(" + raw + b")"


def _info_string(text: str) -> bytes:
    try:
        text.encode("cp1252")
        return _pdf_string(text)
    except UnicodeEncodeError:
        return b"<" + (b"\xfe\xff" + text.encode("utf-16-be")).hex().upper().encode() + b">"


def _text_content(page: str, use_tj_arrays: bool) -> bytes:
    ops = [b"BT", b"/F1 12 Tf", b"14 TL", b"72 760 Td"]
    for i, line in enumerate(page.split("\n")):
        if i:
            ops.append(b"T*")
        if use_tj_arrays and " " in line:
            # words as separate array elements with a word-gap displacement
            parts = b" -250 ".join(_pdf_string(w) for w in line.split(" "))
            ops.append(b"[" + parts + b"] TJ")
        else:
            ops.append(_pdf_string(line) + b" Tj")
    ops.append(b"ET")
    return b"\n".join(ops) + b"\n"


def build_pdf(
    pages: Sequence[str],
    *,
    title: str | None = None,
    author: str | None = None,
    created_at: str | None = None,
    compress: bool = False,
    use_tj_arrays: bool = False,
    image_only: bool = False,
    filter_name: str | None = None,
    encrypted: bool = False,
    type0_font: bool = False,
) -> bytes:
    """Return the bytes of a PDF with one page per entry of ``pages``.

    ``image_only`` draws a small image on every page and no text at all.
    ``filter_name``, ``encrypted`` and ``type0_font`` produce files outside
    the supported subset, for negative tests.
    """
    objects: list[bytes] = []

    def add(body: bytes) -> int:
        objects.append(body)
        return len(objects)

    def stream(attrs: bytes, data: bytes) -> bytes:
        return b"<< " + attrs + b" /Length %d >>\nstream\n" % len(data) + data + b"\nendstream"

    catalog = add(b"")  # placeholders patched below
    pages_obj = add(b"")
    if type0_font:
        font = add(b"<< /Type /Font /Subtype /Type0 /BaseFont /Arial /Encoding /Identity-H >>")
    else:
        font = add(b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica /Encoding /WinAnsiEncoding >>")
    image = None
    if image_only:
        image = add(stream(b"/Type /XObject /Subtype /Image /Width 1 /Height 1 /ColorSpace /DeviceGray /BitsPerComponent 8", b"\x80"))

    kids = []
    for text in pages:
        if image_only:
            content = b"q 100 0 0 100 72 600 cm /Im1 Do Q\n"
            resources = b"<< /XObject << /Im1 %d 0 R >> >>" % image
        else:
            content = _text_content(text, use_tj_arrays)
            resources = b"<< /Font << /F1 %d 0 R >> >>" % font
        attrs = b""
        if filter_name:
            attrs = b"/Filter /" + filter_name.encode()
        elif compress:
            content = zlib.compress(content)
            attrs = b"/Filter /FlateDecode"
        contents = add(stream(attrs, content))
        kids.append(
            add(
                b"<< /Type /Page /Parent %d 0 R /MediaBox [0 0 612 792] /Resources %s /Contents %d 0 R >>"
                % (pages_obj, resources, contents)
            )
        )
    objects[catalog - 1] = b"<< /Type /Catalog /Pages %d 0 R >>" % pages_obj
    objects[pages_obj - 1] = b"<< /Type /Pages /Kids [%s] /Count %d >>" % (
        b" ".join(b"%d 0 R" % k for k in kids),
        len(kids),
    )

    info = None
    entries = []
    if title is not None:
        entries.append(b"/Title " + _info_string(title))
    if author is not None:
        entries.append(b"/Author " + _info_string(author))
    if created_at is not None:
        entries.append(b"/CreationDate " + _info_string(created_at))
    if entries:
        info = add(b"<< " + b" ".join(entries) + b" >>")
    encrypt = None
    if encrypted:
        encrypt = add(b"<< /Filter /Standard /V 1 /R 2 /O <00> /U <00> /P -4 >>")

    out = bytearray(b"%PDF-1.4\n%\xe2\xe3\xcf\xd3\n")
    offsets = []
    for num, body in enumerate(objects, start=1):
        offsets.append(len(out))
        out += b"%d 0 obj\n" % num + body + b"\nendobj\n"
    xref_at = len(out)
    out += b"xref\n0 %d\n" % (len(objects) + 1)
    out += b"0000000000 65535 f \n"
    for off in offsets:
        out += b"%010d 00000 n \n" % off
    trailer = b"/Size %d /Root %d 0 R" % (len(objects) + 1, catalog)
    if info:
        trailer += b" /Info %d 0 R" % info
    if encrypt:
        trailer += b" /Encrypt %d 0 R /ID [<00> <00>]" % encrypt
    out += b"trailer\n<< " + trailer + b" >>\nstartxref\n%d\n%%%%EOF\n" % xref_at
    return bytes(out)


def write_pdf(path: str | Path, pages: Sequence[str], **kwargs) -> Path:
    path = Path(path)
    path.write_bytes(build_pdf(pages, **kwargs))
    return path
