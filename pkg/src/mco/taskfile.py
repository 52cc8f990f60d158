"""MCO1 task-file container.

Wire layout, all integers little-endian:

    offset  size  field
    0       4     magic "MCO1"
    4       4     version (must be 1)
    8       4     load_addr
    12      4     entry
    16      4     text_size
    20      4     data_size
    24      4     reloc_count
    28      4     sym_count
    32      4     reserved (must be 0)
    36      -     text bytes, then data bytes
    ...           reloc entries:  u8 segment (0 text / 1 data), u32 offset
    ...           symbol entries: u32 value, u8 segment, u8 name_len, name

Each relocation entry marks one 32-bit address word inside its segment.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .errors import TaskFileError

__all__ = [
    "MAGIC",
    "HEADER_SIZE",
    "SEG_TEXT",
    "SEG_DATA",
    "RelocEntry",
    "Symbol",
    "TaskFile",
    "read_task",
    "write_task",
]

MAGIC = b"MCO1"
HEADER_SIZE = 36
SEG_TEXT = 0
SEG_DATA = 1

_HEADER = struct.Struct("<4s8I")
_RELOC = struct.Struct("<BI")
_SYM_FIXED = struct.Struct("<IBB")


@dataclass(slots=True)
class RelocEntry:
    """One marked 32-bit address word: (segment, byte offset in segment)."""

    segment: int
    offset: int


@dataclass(slots=True)
class Symbol:
    value: int
    segment: int
    name: str


@dataclass(slots=True)
class TaskFile:
    load_addr: int
    entry: int
    text: bytes = b""
    data: bytes = b""
    relocs: list[RelocEntry] = field(default_factory=list)
    symbols: list[Symbol] = field(default_factory=list)

    def validate(self) -> None:
        """Raise TaskFileError on any structural inconsistency."""
        if self.text:
            if not self.load_addr <= self.entry < self.load_addr + len(self.text):
                raise TaskFileError(
                    f"entry 0x{self.entry:X} outside text segment "
                    f"[0x{self.load_addr:X}, 0x{self.load_addr + len(self.text):X})"
                )
        elif self.entry != self.load_addr:
            raise TaskFileError(
                f"entry 0x{self.entry:X} of an empty text segment must equal "
                f"load address 0x{self.load_addr:X}"
            )
        seg_len = {SEG_TEXT: len(self.text), SEG_DATA: len(self.data)}
        for r in self.relocs:
            if r.segment not in seg_len:
                raise TaskFileError(f"relocation names unknown segment {r.segment}")
            if not 0 <= r.offset or r.offset + 4 > seg_len[r.segment]:
                raise TaskFileError(
                    f"relocation offset 0x{r.offset:X} does not fit a 32-bit "
                    f"word in segment {r.segment} (length {seg_len[r.segment]})"
                )
        for s in self.symbols:
            if s.segment not in seg_len:
                raise TaskFileError(f"symbol {s.name!r} names unknown segment {s.segment}")
            if len(s.name.encode()) > 255:
                raise TaskFileError(f"symbol name longer than 255 bytes: {s.name[:16]!r}...")


def write_task(tf: TaskFile) -> bytes:
    """Serialize ``tf``; inverse of read_task for every valid file."""
    tf.validate()
    out = bytearray()
    out += _HEADER.pack(
        MAGIC, 1, tf.load_addr, tf.entry,
        len(tf.text), len(tf.data), len(tf.relocs), len(tf.symbols), 0,
    )
    out += tf.text
    out += tf.data
    for r in tf.relocs:
        out += _RELOC.pack(r.segment, r.offset)
    for s in tf.symbols:
        name = s.name.encode()
        out += _SYM_FIXED.pack(s.value, s.segment, len(name))
        out += name
    return bytes(out)


def read_task(blob: bytes) -> TaskFile:
    """Parse an MCO1 image, validating structure as it goes."""
    if len(blob) < HEADER_SIZE:
        raise TaskFileError(f"image truncated: {len(blob)} bytes, header needs {HEADER_SIZE}")
    magic, version, load_addr, entry, text_size, data_size, nreloc, nsym, reserved = \
        _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise TaskFileError(f"bad magic {magic!r}")
    if version != 1:
        raise TaskFileError(f"unsupported version {version}")
    if reserved != 0:
        raise TaskFileError(f"reserved header word is {reserved}, expected 0")

    pos = HEADER_SIZE
    if len(blob) < pos + text_size + data_size:
        raise TaskFileError("image truncated inside text/data")
    text = blob[pos:pos + text_size]
    pos += text_size
    data = blob[pos:pos + data_size]
    pos += data_size

    relocs: list[RelocEntry] = []
    for i in range(nreloc):
        if len(blob) < pos + _RELOC.size:
            raise TaskFileError(f"image truncated in relocation entry {i}")
        seg, off = _RELOC.unpack_from(blob, pos)
        pos += _RELOC.size
        relocs.append(RelocEntry(seg, off))

    symbols: list[Symbol] = []
    for i in range(nsym):
        if len(blob) < pos + _SYM_FIXED.size:
            raise TaskFileError(f"image truncated in symbol entry {i}")
        value, seg, name_len = _SYM_FIXED.unpack_from(blob, pos)
        pos += _SYM_FIXED.size
        if len(blob) < pos + name_len:
            raise TaskFileError(f"image truncated in symbol name {i}")
        name = blob[pos:pos + name_len].decode()
        pos += name_len
        symbols.append(Symbol(value, seg, name))

    if pos != len(blob):
        raise TaskFileError(f"{len(blob) - pos} trailing bytes after symbol table")

    tf = TaskFile(load_addr, entry, text, data, relocs, symbols)
    tf.validate()
    return tf
