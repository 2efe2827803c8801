"""Best-effort plain-text recovery from PDF files.

Deliberately small: enough to pull the text layer out of machine-generated
PDFs (raw, Flate-compressed, or ASCII85+Flate content streams, Tj / TJ / '
show operators, literal and hex strings). It is not a layout engine. Reading
order follows stream order, images and vector art are ignored, and exotic
font encodings come out as garbage that the printability filter then drops.
Image-only documents therefore yield an empty string, which ingest treats as
having no extractable text.
"""

from __future__ import annotations

import base64
import re
import zlib
from pathlib import Path

_STREAM_RE = re.compile(rb"stream\r?\n(.*?)endstream", re.DOTALL)
_LITERAL_SHOW_RE = re.compile(rb"\(((?:\\.|[^\\()])*)\)\s*(?:Tj|')")
_HEX_SHOW_RE = re.compile(rb"<([0-9A-Fa-f\s]+)>\s*(?:Tj|')")
_ARRAY_SHOW_RE = re.compile(rb"\[((?:\\.|[^\]\\])*)\]\s*TJ", re.DOTALL)
_ARRAY_ITEM_RE = re.compile(rb"\(((?:\\.|[^\\()])*)\)|(-?\d+(?:\.\d+)?)")

_ESCAPES = {
    b"n": b"\n",
    b"r": b"\r",
    b"t": b"\t",
    b"b": b"\b",
    b"f": b"\f",
    b"(": b"(",
    b")": b")",
    b"\\": b"\\",
}


def extract_text(path: Path | str) -> str:
    """Extract the text layer of a PDF; empty string when there is none."""
    data = Path(path).read_bytes()
    if not data.startswith(b"%PDF"):
        raise ValueError(f"not a PDF file: {path}")
    pieces: list[str] = []
    for match in _STREAM_RE.finditer(data):
        stream = _unfilter(match.group(1))
        if b"Tj" not in stream and b"TJ" not in stream and b"'" not in stream:
            continue
        pieces.extend(_texts_from_stream(stream))
    kept = [p for p in pieces if _mostly_printable(p)]
    return "\n".join(kept).strip()


def _unfilter(stream: bytes) -> bytes:
    """Undo the common stream filters without reading the stream dictionary.

    Tries Flate first, then ASCII85 (recognised by its ~> terminator) with an
    optional Flate stage after it. Anything that fails passes through raw; an
    image stream decoded wrongly is harmless because the show-operator scan
    will not match and the printability filter drops noise.
    """
    try:
        return zlib.decompress(stream)
    except zlib.error:
        pass
    trimmed = stream.strip()
    if trimmed.endswith(b"~>"):
        try:
            decoded = base64.a85decode(trimmed, adobe=True, ignorechars=b" \t\n\r\v")
        except ValueError:
            return stream
        try:
            return zlib.decompress(decoded)
        except zlib.error:
            return decoded
    return stream


def _texts_from_stream(stream: bytes) -> list[str]:
    found: list[tuple[int, str]] = []
    for m in _LITERAL_SHOW_RE.finditer(stream):
        found.append((m.start(), _decode_literal(m.group(1))))
    for m in _HEX_SHOW_RE.finditer(stream):
        found.append((m.start(), _decode_hex(m.group(1))))
    for m in _ARRAY_SHOW_RE.finditer(stream):
        found.append((m.start(), _decode_array(m.group(1))))
    found.sort(key=lambda pair: pair[0])
    return [text for _, text in found if text]


def _decode_literal(raw: bytes) -> str:
    out = bytearray()
    i = 0
    while i < len(raw):
        byte = raw[i : i + 1]
        if byte == b"\\" and i + 1 < len(raw):
            nxt = raw[i + 1 : i + 2]
            if nxt.isdigit():  # octal escape, up to three digits
                digits = raw[i + 1 : i + 4]
                span = 1
                while span < 3 and span < len(digits) and digits[:span + 1].isdigit():
                    span += 1
                out.append(int(digits[:span], 8) & 0xFF)
                i += 1 + span
                continue
            out += _ESCAPES.get(nxt, nxt)
            i += 2
            continue
        out += byte
        i += 1
    return out.decode("latin-1")


def _decode_hex(raw: bytes) -> str:
    digits = re.sub(rb"\s", b"", raw)
    if len(digits) % 2:
        digits += b"0"
    try:
        decoded = bytes.fromhex(digits.decode("ascii"))
    except ValueError:
        return ""
    if decoded.startswith(b"\xfe\xff"):
        return decoded[2:].decode("utf-16-be", errors="ignore")
    return decoded.decode("latin-1")


def _decode_array(raw: bytes) -> str:
    # TJ arrays interleave strings with kerning offsets; a large negative
    # offset is how generators encode an inter-word gap.
    parts: list[str] = []
    for m in _ARRAY_ITEM_RE.finditer(raw):
        if m.group(1) is not None:
            parts.append(_decode_literal(m.group(1)))
        elif float(m.group(2)) <= -120:
            parts.append(" ")
    return "".join(parts)


def _mostly_printable(text: str) -> bool:
    if not text.strip():
        return False
    printable = sum(1 for ch in text if ch.isprintable() or ch in "\n\t ")
    return printable / len(text) >= 0.6
