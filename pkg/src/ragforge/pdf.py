"""Minimal PDF reader for the text-bearing subset ragforge accepts.

Supported: classic cross-reference PDFs whose page content streams are
unfiltered or Flate-compressed and draw text with ``Tj``, ``TJ``, ``'`` and
``"`` using simple (single-byte, WinAnsi/Latin-1) fonts. Anything else raises
:class:`UnsupportedPdfFeature` instead of returning garbled text. Structural
damage raises :class:`MalformedPdf`.
"""

from __future__ import annotations

import functools
import re
import zlib
from dataclasses import dataclass, field
from typing import Any, Iterator

from .errors import MalformedPdf, UnsupportedPdfFeature

WHITESPACE = b"\x00\t\n\x0c\r "
DELIMITERS = b"()<>[]{}/%"

# TJ displacement (thousandths of text space) at or below which a word gap is assumed
TJ_SPACE_THRESHOLD = -200


def _typed_errors(fn):
    """Map parser crashes on hostile input to MalformedPdf."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (MalformedPdf, UnsupportedPdfFeature):
            raise
        except (IndexError, KeyError, ValueError, TypeError, AttributeError, RecursionError) as exc:
            raise MalformedPdf(f"unparseable PDF structure ({type(exc).__name__}: {exc})") from None

    return wrapper


class Name(str):
    """A PDF name object, stored without the leading slash."""

    __slots__ = ()


@dataclass(frozen=True)
class Ref:
    num: int
    gen: int


@dataclass
class Stream:
    attrs: dict
    raw: bytes


class Keyword(str):
    """A bare token: ``obj``, ``R``, content-stream operators, ..."""

    __slots__ = ()


_ESCAPES = {
    ord("n"): b"\n",
    ord("r"): b"\r",
    ord("t"): b"\t",
    ord("b"): b"\b",
    ord("f"): b"\f",
    ord("("): b"(",
    ord(")"): b")",
    ord("\\"): b"\\",
}


def _build_winansi_table() -> list[str]:
    table = []
    for b in range(256):
        try:
            table.append(bytes([b]).decode("cp1252"))
        except UnicodeDecodeError:
            table.append(chr(b))
    return table


_WINANSI = _build_winansi_table()


def decode_winansi(data: bytes) -> str:
    return "".join(_WINANSI[b] for b in data)


def decode_text_string(data: bytes) -> str:
    """Decode a PDF text string (info dictionary values)."""
    if data.startswith(b"\xfe\xff"):
        return data[2:].decode("utf-16-be", errors="replace")
    if data.startswith(b"\xef\xbb\xbf"):
        return data[3:].decode("utf-8", errors="replace")
    return decode_winansi(data)


class Lexer:
    """Tokenizer shared by the object parser and the content-stream interpreter."""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def _skip_ws(self) -> None:
        data, n = self.data, len(self.data)
        while self.pos < n:
            c = data[self.pos]
            if c in WHITESPACE:
                self.pos += 1
            elif c == 0x25:  # '%' comment
                while self.pos < n and data[self.pos] not in b"\r\n":
                    self.pos += 1
            else:
                break

    def next(self) -> Any:
        """Return the next token, or ``None`` at end of input.

        Strings come back as ``bytes``, names as :class:`Name`, numbers as
        int/float, structural markers and operators as :class:`Keyword`.
        """
        self._skip_ws()
        data, n = self.data, len(self.data)
        if self.pos >= n:
            return None
        c = data[self.pos]
        if c == 0x28:  # (
            return self._literal_string()
        if c == 0x3C:  # <
            if data[self.pos + 1 : self.pos + 2] == b"<":
                self.pos += 2
                return Keyword("<<")
            return self._hex_string()
        if c == 0x3E:  # >
            if data[self.pos + 1 : self.pos + 2] == b">":
                self.pos += 2
                return Keyword(">>")
            raise MalformedPdf(f"stray '>' at offset {self.pos}")
        if c in b"[]{}":
            self.pos += 1
            return Keyword(chr(c))
        if c == 0x2F:  # /
            return self._name()
        if c == 0x29:
            raise MalformedPdf(f"unbalanced ')' at offset {self.pos}")
        start = self.pos
        while self.pos < n and data[self.pos] not in WHITESPACE and data[self.pos] not in DELIMITERS:
            self.pos += 1
        word = data[start : self.pos]
        if not word:
            raise MalformedPdf(f"unexpected byte {c!r} at offset {start}")
        return _number_or_keyword(word)

    def _name(self) -> Name:
        data, n = self.data, len(self.data)
        self.pos += 1
        start = self.pos
        while self.pos < n and data[self.pos] not in WHITESPACE and data[self.pos] not in DELIMITERS:
            self.pos += 1
        raw = data[start : self.pos]
        if b"#" in raw:
            raw = re.sub(rb"#([0-9A-Fa-f]{2})", lambda m: bytes([int(m.group(1), 16)]), raw)
        return Name(raw.decode("latin-1"))

    def _literal_string(self) -> bytes:
        data, n = self.data, len(self.data)
        self.pos += 1
        depth = 1
        out = bytearray()
        while self.pos < n:
            c = data[self.pos]
            if c == 0x5C:  # backslash
                self.pos += 1
                if self.pos >= n:
                    break
                e = data[self.pos]
                if e in _ESCAPES:
                    out += _ESCAPES[e]
                    self.pos += 1
                elif 0x30 <= e <= 0x37:
                    digits = data[self.pos : self.pos + 3]
                    m = re.match(rb"[0-7]{1,3}", digits)
                    out.append(int(m.group(0), 8) & 0xFF)
                    self.pos += len(m.group(0))
                elif e == 0x0D:
                    self.pos += 1
                    if data[self.pos : self.pos + 1] == b"\n":
                        self.pos += 1
                elif e == 0x0A:
                    self.pos += 1
                else:
                    out.append(e)
                    self.pos += 1
                continue
            if c == 0x28:
                depth += 1
            elif c == 0x29:
                depth -= 1
                if depth == 0:
                    self.pos += 1
                    return bytes(out)
            out.append(c)
            self.pos += 1
        raise MalformedPdf("unterminated literal string")

    def _hex_string(self) -> bytes:
        end = self.data.find(b">", self.pos)
        if end < 0:
            raise MalformedPdf("unterminated hex string")
        digits = re.sub(rb"\s", b"", self.data[self.pos + 1 : end])
        self.pos = end + 1
        if not re.fullmatch(rb"[0-9A-Fa-f]*", digits):
            raise MalformedPdf("invalid hex string")
        if len(digits) % 2:
            digits += b"0"
        return bytes.fromhex(digits.decode("ascii"))


def _number_or_keyword(word: bytes):
    if re.fullmatch(rb"[+-]?\d+", word):
        return int(word)
    if re.fullmatch(rb"[+-]?(\d+\.\d*|\.\d+|\d+\.)", word):
        return float(word)
    return Keyword(word.decode("latin-1"))


class ObjectParser:
    """Recursive-descent parser for PDF objects on top of :class:`Lexer`."""

    def __init__(self, lexer: Lexer):
        self.lexer = lexer
        self._pending: list[tuple[Any, int]] = []
        # offset just past the last token handed to the parser (pushback-aware)
        self.last_end = lexer.pos

    def _next(self):
        if self._pending:
            tok, self.last_end = self._pending.pop()
            return tok
        tok = self.lexer.next()
        self.last_end = self.lexer.pos
        return tok

    def _push(self, tok, end: int) -> None:
        self._pending.append((tok, end))

    def parse(self):
        tok = self._next()
        if tok is None:
            raise MalformedPdf("unexpected end of data")
        if isinstance(tok, Keyword):
            if tok == "<<":
                return self._dict()
            if tok == "[":
                return self._array()
            if tok == "true":
                return True
            if tok == "false":
                return False
            if tok == "null":
                return None
            raise MalformedPdf(f"unexpected token {tok!r}")
        if isinstance(tok, int):
            # possible indirect reference "num gen R"
            tok_end = self.last_end
            t2 = self._next()
            t2_end = self.last_end
            if isinstance(t2, int):
                t3 = self._next()
                if t3 == "R":
                    return Ref(tok, t2)
                self._push(t3, self.last_end)
            self._push(t2, t2_end)
            self.last_end = tok_end
        return tok

    def _dict(self) -> dict:
        out = {}
        while True:
            tok = self._next()
            if tok == ">>":
                return out
            if tok is None:
                raise MalformedPdf("unterminated dictionary")
            if not isinstance(tok, Name):
                raise MalformedPdf(f"dictionary key must be a name, got {tok!r}")
            out[str(tok)] = self.parse()

    def _array(self) -> list:
        out = []
        while True:
            tok = self._next()
            if tok == "]":
                return out
            if tok is None:
                raise MalformedPdf("unterminated array")
            self._push(tok, self.last_end)
            out.append(self.parse())


_OBJ_HEADER = re.compile(rb"(\d+)\s+(\d+)\s+obj\b")


@dataclass
class PdfDocument:
    objects: dict[int, Any]
    trailer: dict
    _page_cache: list[dict] | None = field(default=None, repr=False)

    def resolve(self, value):
        seen = set()
        while isinstance(value, Ref):
            if value.num in seen:
                raise MalformedPdf(f"reference cycle at object {value.num}")
            seen.add(value.num)
            value = self.objects.get(value.num)
        return value

    @property
    def info(self) -> dict[str, str]:
        raw = self.resolve(self.trailer.get("Info"))
        if not isinstance(raw, dict):
            return {}
        out = {}
        for key in ("Title", "Author", "CreationDate"):
            val = self.resolve(raw.get(key))
            if isinstance(val, bytes):
                out[key] = decode_text_string(val)
        return out

    def pages(self) -> list[dict]:
        """Leaf page dictionaries in page-tree order, with inherited Resources."""
        if self._page_cache is not None:
            return self._page_cache
        root = self.resolve(self.trailer.get("Root"))
        if not isinstance(root, dict):
            raise MalformedPdf("document catalog (/Root) missing")
        tree = root.get("Pages")
        pages: list[dict] = []
        visited: set[int] = set()

        def walk(node_ref, inherited_resources, depth):
            if depth > 64:
                raise MalformedPdf("page tree too deep")
            if isinstance(node_ref, Ref):
                if node_ref.num in visited:
                    raise MalformedPdf("cycle in page tree")
                visited.add(node_ref.num)
            node = self.resolve(node_ref)
            if not isinstance(node, dict):
                raise MalformedPdf("page tree node is not a dictionary")
            resources = node.get("Resources", inherited_resources)
            kind = node.get("Type")
            if kind == "Pages" or (kind is None and "Kids" in node):
                kids = self.resolve(node.get("Kids"))
                if not isinstance(kids, list):
                    raise MalformedPdf("page tree node without /Kids array")
                for kid in kids:
                    walk(kid, resources, depth + 1)
            elif kind == "Page" or kind is None:
                page = dict(node)
                page["Resources"] = resources
                pages.append(page)
            else:
                raise MalformedPdf(f"unexpected node type /{kind} in page tree")

        walk(tree, None, 0)
        self._page_cache = pages
        return pages

    @property
    def page_count(self) -> int:
        return len(self.pages())

    def decode_stream(self, stream: Stream) -> bytes:
        filters = self.resolve(stream.attrs.get("Filter"))
        if filters is None:
            filters = []
        elif not isinstance(filters, list):
            filters = [filters]
        params = self.resolve(stream.attrs.get("DecodeParms"))
        data = stream.raw
        for f in filters:
            f = self.resolve(f)
            if f not in ("FlateDecode", "Fl"):
                raise UnsupportedPdfFeature(f"unsupported stream filter /{f}")
            if isinstance(params, dict) and (self.resolve(params.get("Predictor")) or 1) > 1:
                raise UnsupportedPdfFeature("Flate predictors are not supported")
            try:
                data = zlib.decompress(data)
            except zlib.error as exc:
                raise MalformedPdf(f"corrupt Flate stream: {exc}") from None
        return data

    def page_content(self, page: dict) -> bytes:
        contents = self.resolve(page.get("Contents"))
        if contents is None:
            return b""
        parts = contents if isinstance(contents, list) else [contents]
        chunks = []
        for part in parts:
            stream = self.resolve(part)
            if not isinstance(stream, Stream):
                raise MalformedPdf("page /Contents is not a stream")
            chunks.append(self.decode_stream(stream))
        return b"\n".join(chunks)

    def check_fonts(self, page: dict) -> None:
        resources = self.resolve(page.get("Resources"))
        if not isinstance(resources, dict):
            return
        fonts = self.resolve(resources.get("Font"))
        if not isinstance(fonts, dict):
            return
        for font_name, font_ref in fonts.items():
            font = self.resolve(font_ref)
            if isinstance(font, dict) and font.get("Subtype") == "Type0":
                raise UnsupportedPdfFeature(
                    f"composite (Type0) font /{font_name}: multi-byte text encodings are not supported"
                )

    @_typed_errors
    def extract_pages(self) -> list[str]:
        """Text of every page in order. Raises if no page carries any text."""
        texts = []
        any_text = False
        for page in self.pages():
            self.check_fonts(page)
            text, shown = extract_content_text(self.page_content(page))
            any_text = any_text or shown
            texts.append(text)
        if not any_text:
            raise UnsupportedPdfFeature(
                "no text-showing operators found (image-only or scanned PDF; OCR is not supported)"
            )
        return texts


def _iter_objects(data: bytes) -> Iterator[tuple[int, Any]]:
    pos = 0
    while True:
        m = _OBJ_HEADER.search(data, pos)
        if m is None:
            return
        num = int(m.group(1))
        lexer = Lexer(data, m.end())
        parser = ObjectParser(lexer)
        try:
            value = parser.parse()
        except MalformedPdf:
            pos = m.end()
            continue
        value_end = parser.last_end
        tok = parser._next()
        if tok == "stream" and isinstance(value, dict):
            value, value_end = _read_stream(data, parser.last_end, value, num)
        yield num, value
        end_idx = data.find(b"endobj", value_end)
        pos = value_end if end_idx < 0 else end_idx + len(b"endobj")


def _read_stream(data: bytes, pos: int, attrs: dict, num: int) -> tuple[Stream, int]:
    # stream keyword is followed by CRLF or LF
    if data[pos : pos + 2] == b"\r\n":
        pos += 2
    elif data[pos : pos + 1] in (b"\n", b"\r"):
        pos += 1
    length = attrs.get("Length")
    if isinstance(length, int) and length >= 0:
        end = pos + length
        tail = data[end : end + 12].lstrip(b"\r\n ")
        if tail.startswith(b"endstream"):
            return Stream(attrs, data[pos:end]), data.find(b"endstream", end) + len(b"endstream")
    # Length missing, indirect or wrong: fall back to the endstream marker
    end = data.find(b"endstream", pos)
    if end < 0:
        raise MalformedPdf(f"object {num}: unterminated stream")
    raw = data[pos:end]
    if raw.endswith(b"\r\n"):
        raw = raw[:-2]
    elif raw.endswith((b"\n", b"\r")):
        raw = raw[:-1]
    return Stream(attrs, raw), end + len(b"endstream")


def _find_trailer(data: bytes, objects: dict[int, Any]) -> dict:
    idx = data.rfind(b"trailer")
    while idx >= 0:
        try:
            value = ObjectParser(Lexer(data, idx + len(b"trailer"))).parse()
        except MalformedPdf:
            value = None
        if isinstance(value, dict) and "Root" in value:
            return value
        idx = data.rfind(b"trailer", 0, idx)
    for obj in objects.values():
        if isinstance(obj, Stream) and obj.attrs.get("Type") == "XRef" and "Root" in obj.attrs:
            return obj.attrs
    for num, obj in objects.items():
        if isinstance(obj, dict) and obj.get("Type") == "Catalog":
            return {"Root": Ref(num, 0)}
    raise MalformedPdf("no trailer or document catalog found")


@_typed_errors
def parse_pdf(data: bytes) -> PdfDocument:
    """Parse raw PDF bytes into a :class:`PdfDocument`.

    Rejects encrypted files and compressed object streams up front.
    """
    head = data[:1024]
    if b"%PDF-" not in head:
        raise MalformedPdf("missing %PDF- header")
    objects: dict[int, Any] = {}
    for num, value in _iter_objects(data):
        objects[num] = value  # later revisions (incremental updates) win
    if not objects:
        raise MalformedPdf("no indirect objects found")
    for obj in objects.values():
        if isinstance(obj, Stream) and obj.attrs.get("Type") == "ObjStm":
            raise UnsupportedPdfFeature("compressed object streams (PDF 1.5+) are not supported")
    trailer = _find_trailer(data, objects)
    if trailer.get("Encrypt") is not None:
        raise UnsupportedPdfFeature("encrypted PDF")
    doc = PdfDocument(objects, trailer)
    if doc.page_count == 0:
        raise MalformedPdf("page tree contains no pages")
    return doc


_LINE_BREAK_OPS = {"Td", "TD", "T*", "Tm", "ET"}


def extract_content_text(content: bytes) -> tuple[str, bool]:
    """Interpret a content stream; return (page text, whether any text was shown).

    Text runs drawn without intervening positioning are concatenated; each
    text-positioning operator or end of text object starts a new line.
    """
    lexer = Lexer(content)
    operands: list[Any] = []
    lines: list[str] = []
    current: list[str] = []
    shown = False

    def newline():
        if current:
            lines.append("".join(current))
            current.clear()

    def show(data: bytes):
        current.append(decode_winansi(data))

    array_stack: list[list] = []
    while True:
        tok = lexer.next()
        if tok is None:
            break
        if isinstance(tok, Keyword):
            if tok == "[":
                array_stack.append([])
                continue
            if tok == "]":
                if not array_stack:
                    raise MalformedPdf("unbalanced ']' in content stream")
                arr = array_stack.pop()
                (array_stack[-1] if array_stack else operands).append(arr)
                continue
            if tok == "<<":
                # inline dictionaries (marked content properties); skip to >>
                depth = 1
                while depth:
                    t = lexer.next()
                    if t is None:
                        raise MalformedPdf("unterminated dictionary in content stream")
                    depth += {"<<": 1, ">>": -1}.get(t, 0) if isinstance(t, Keyword) else 0
                operands.append({})
                continue
            if array_stack:
                array_stack[-1].append(tok)
                continue
            op = str(tok)
            if op == "ID":
                _skip_inline_image(lexer)
            elif op == "Tj" and operands and isinstance(operands[-1], bytes):
                show(operands[-1])
                shown = True
            elif op == "TJ" and operands and isinstance(operands[-1], list):
                for item in operands[-1]:
                    if isinstance(item, bytes):
                        show(item)
                        shown = True
                    elif isinstance(item, (int, float)) and item <= TJ_SPACE_THRESHOLD:
                        if current and not current[-1].endswith(" "):
                            current.append(" ")
            elif op in ("'", '"') and operands and isinstance(operands[-1], bytes):
                newline()
                show(operands[-1])
                shown = True
            elif op in _LINE_BREAK_OPS:
                newline()
            operands.clear()
        elif array_stack:
            array_stack[-1].append(tok)
        else:
            operands.append(tok)
    newline()
    return "\n".join(lines), shown


def _skip_inline_image(lexer: Lexer) -> None:
    m = re.compile(rb"\sEI(?=[\s]|$)").search(lexer.data, lexer.pos)
    if m is None:
        raise MalformedPdf("unterminated inline image")
    lexer.pos = m.end()
