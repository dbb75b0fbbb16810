"""Inter-worker message vocabulary and its binary wire format.

Wire record::

    u32 payload length (LE) | u8 tag | body

    tag 1 BoxBatch    u16 sender | u32 count | u16 dim | count * (u32 depth | dim * (f64 lo, f64 hi))
    tag 2 LoadReport  u16 sender | u32 load
    tag 3 Token       u8 color (0 white, 1 black) | i64 count
    tag 4 Terminate   (empty)

All integers and floats are little-endian.  Box depth travels with each box
because the branching dimension is derived from it.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import IO, Iterator, Union

from ..interval import Box, Interval

__all__ = [
    "WHITE",
    "BLACK",
    "BoxBatch",
    "LoadReport",
    "Token",
    "Terminate",
    "Message",
    "encode",
    "decode",
    "iter_records",
    "to_dict",
    "from_dict",
    "WireError",
]

WHITE = 0
BLACK = 1

TAG_BOXES, TAG_LOAD, TAG_TOKEN, TAG_TERMINATE = 1, 2, 3, 4

_LEN = struct.Struct("<I")
_BOX_HEAD = struct.Struct("<BHIH")
_LOAD = struct.Struct("<BHI")
_TOKEN = struct.Struct("<BBq")
_DEPTH = struct.Struct("<I")


class WireError(ValueError):
    pass


@dataclass(frozen=True)
class BoxBatch:
    sender: int
    boxes: tuple[Box, ...]


@dataclass(frozen=True)
class LoadReport:
    sender: int
    load: int


@dataclass(frozen=True)
class Token:
    color: int
    count: int


@dataclass(frozen=True)
class Terminate:
    pass


Message = Union[BoxBatch, LoadReport, Token, Terminate]


def encode(m: Message) -> bytes:
    if isinstance(m, BoxBatch):
        dim = m.boxes[0].n if m.boxes else 0
        parts = [_BOX_HEAD.pack(TAG_BOXES, m.sender, len(m.boxes), dim)]
        fmt = struct.Struct("<I" + "d" * (2 * dim))
        for b in m.boxes:
            if b.n != dim:
                raise WireError("boxes in one batch must share a dimension")
            flat = [x for c in b.components for x in c]
            parts.append(fmt.pack(b.depth, *flat))
        payload = b"".join(parts)
    elif isinstance(m, LoadReport):
        payload = _LOAD.pack(TAG_LOAD, m.sender, m.load)
    elif isinstance(m, Token):
        payload = _TOKEN.pack(TAG_TOKEN, m.color, m.count)
    elif isinstance(m, Terminate):
        payload = bytes([TAG_TERMINATE])
    else:
        raise TypeError(f"not a message: {m!r}")
    return _LEN.pack(len(payload)) + payload


def decode(data: bytes) -> Message:
    """Decode exactly one record."""
    if len(data) < 5:
        raise WireError("truncated record")
    (n,) = _LEN.unpack_from(data, 0)
    if len(data) != 4 + n:
        raise WireError(f"record length {n} does not match buffer size {len(data) - 4}")
    return _decode_payload(memoryview(data)[4:])


def _decode_payload(buf: memoryview) -> Message:
    tag = buf[0]
    if tag == TAG_BOXES:
        _, sender, count, dim = _BOX_HEAD.unpack_from(buf, 0)
        fmt = struct.Struct("<I" + "d" * (2 * dim))
        off = _BOX_HEAD.size
        if len(buf) != off + count * fmt.size:
            raise WireError("BoxBatch body size mismatch")
        boxes = []
        for _ in range(count):
            vals = fmt.unpack_from(buf, off)
            off += fmt.size
            comps = tuple(Interval(vals[1 + 2 * k], vals[2 + 2 * k]) for k in range(dim))
            boxes.append(Box(comps, vals[0]))
        return BoxBatch(sender, tuple(boxes))
    if tag == TAG_LOAD:
        if len(buf) != _LOAD.size:
            raise WireError("LoadReport body size mismatch")
        _, sender, load = _LOAD.unpack_from(buf, 0)
        return LoadReport(sender, load)
    if tag == TAG_TOKEN:
        if len(buf) != _TOKEN.size:
            raise WireError("Token body size mismatch")
        _, color, count = _TOKEN.unpack_from(buf, 0)
        if color not in (WHITE, BLACK):
            raise WireError(f"bad token color {color}")
        return Token(color, count)
    if tag == TAG_TERMINATE:
        if len(buf) != 1:
            raise WireError("Terminate carries no body")
        return Terminate()
    raise WireError(f"unknown message tag {tag}")


def iter_records(stream: bytes) -> Iterator[Message]:
    """Decode a concatenation of records."""
    off = 0
    view = memoryview(stream)
    while off < len(stream):
        if off + 4 > len(stream):
            raise WireError("truncated length prefix")
        (n,) = _LEN.unpack_from(view, off)
        end = off + 4 + n
        if end > len(stream):
            raise WireError("truncated record")
        yield _decode_payload(view[off + 4 : end])
        off = end


# -- JSON (trace logs) ------------------------------------------------------


def _f(x: float):
    if x == float("inf"):
        return "inf"
    if x == float("-inf"):
        return "-inf"
    return x


def to_dict(m: Message) -> dict:
    if isinstance(m, BoxBatch):
        return {
            "type": "BoxBatch",
            "sender": m.sender,
            "boxes": [
                {"depth": b.depth, "box": [[_f(c.lo), _f(c.hi)] for c in b.components]}
                for b in m.boxes
            ],
        }
    if isinstance(m, LoadReport):
        return {"type": "LoadReport", "sender": m.sender, "load": m.load}
    if isinstance(m, Token):
        return {"type": "Token", "color": "black" if m.color == BLACK else "white", "count": m.count}
    return {"type": "Terminate"}


def from_dict(d: dict) -> Message:
    t = d["type"]
    if t == "BoxBatch":
        boxes = tuple(
            Box(tuple(Interval(float(lo), float(hi)) for lo, hi in b["box"]), b["depth"])
            for b in d["boxes"]
        )
        return BoxBatch(d["sender"], boxes)
    if t == "LoadReport":
        return LoadReport(d["sender"], d["load"])
    if t == "Token":
        return Token(BLACK if d["color"] == "black" else WHITE, d["count"])
    if t == "Terminate":
        return Terminate()
    raise ValueError(f"unknown message type {t!r}")


def write_trace_line(fh: IO[str], seq: int, src: int, dst: int, m: Message) -> None:
    fh.write(json.dumps({"seq": seq, "src": src, "dst": dst, "msg": to_dict(m)}, separators=(",", ":")))
    fh.write("\n")


def read_trace(fh: IO[str]) -> list[tuple[int, int, int, Message]]:
    out = []
    for line in fh:
        if line.strip():
            d = json.loads(line)
            out.append((d["seq"], d["src"], d["dst"], from_dict(d["msg"])))
    return out
