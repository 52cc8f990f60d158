"""Wire format checks against hand-packed byte strings."""

import random
import struct

import pytest

from mco.errors import TaskFileError
from mco.taskfile import (HEADER_SIZE, SEG_DATA, SEG_TEXT, RelocEntry, Symbol,
                          TaskFile, read_task, write_task)


def u32(v: int) -> bytes:
    return struct.pack("<I", v)


def sample() -> TaskFile:
    return TaskFile(
        load_addr=0x1000,
        entry=0x1002,
        text=b"\x01\x01\x00",          # nop; nop; halt
        data=b"\xAA\xBB\xCC\xDD",
        relocs=[RelocEntry(SEG_DATA, 0)],
        symbols=[Symbol(0x1000, SEG_TEXT, "start")],
    )


GOLDEN = (
    b"MCO1"
    + u32(1)            # version
    + u32(0x1000)       # load address
    + u32(0x1002)       # entry
    + u32(3)            # text size
    + u32(4)            # data size
    + u32(1)            # relocation count
    + u32(1)            # symbol count
    + u32(0)            # reserved
    + b"\x01\x01\x00"
    + b"\xAA\xBB\xCC\xDD"
    + b"\x01" + u32(0)                      # reloc: segment, offset
    + u32(0x1000) + b"\x00\x05" + b"start"  # symbol: value, segment, len, name
)


def test_header_is_36_bytes():
    assert HEADER_SIZE == 36
    assert len(write_task(TaskFile(0, 0, b"", b"", [], []))) == 36


def test_write_matches_hand_packed_bytes():
    assert write_task(sample()) == GOLDEN


def test_read_matches_hand_packed_bytes():
    tf = read_task(GOLDEN)
    want = sample()
    assert tf.load_addr == want.load_addr
    assert tf.entry == want.entry
    assert tf.text == want.text
    assert tf.data == want.data
    assert tf.relocs == want.relocs
    assert tf.symbols == want.symbols


def test_roundtrip_random_files():
    rng = random.Random(7)
    for _ in range(50):
        text = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 40)))
        data = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 40)))
        relocs = []
        if len(text) >= 4:
            relocs.append(RelocEntry(SEG_TEXT, rng.randrange(len(text) - 3)))
        if len(data) >= 4:
            relocs.append(RelocEntry(SEG_DATA, rng.randrange(len(data) - 3)))
        symbols = [Symbol(rng.randrange(1 << 32), rng.randrange(2), f"s{i}")
                   for i in range(rng.randrange(3))]
        entry = 0x2000 + rng.randrange(len(text)) if text else 0x2000
        tf = TaskFile(0x2000, entry, text, data, relocs, symbols)
        blob = write_task(tf)
        back = read_task(blob)
        assert write_task(back) == blob


@pytest.mark.parametrize("mangle,needle", [
    (lambda b: b[:10], "header"),
    (lambda b: b"XXXX" + b[4:], "magic"),
    (lambda b: b[:4] + u32(2) + b[8:], "version"),
    (lambda b: b[:32] + u32(9) + b[36:], "reserved"),
    (lambda b: b[:40], "text"),
    (lambda b: b + b"\x00", "trailing"),
])
def test_read_diagnostics(mangle, needle):
    blob = mangle(GOLDEN)
    with pytest.raises(TaskFileError) as err:
        read_task(blob)
    assert needle in str(err.value).lower()


def test_truncated_data_reloc_symbol_regions():
    blob = GOLDEN
    text_end = HEADER_SIZE + 3
    data_end = text_end + 4
    reloc_end = data_end + 5
    with pytest.raises(TaskFileError, match="data"):
        read_task(blob[:text_end + 2])
    with pytest.raises(TaskFileError, match="reloc"):
        read_task(blob[:data_end + 3])
    with pytest.raises(TaskFileError, match="symbol"):
        read_task(blob[:reloc_end + 3])


def test_validate_rejects_bad_shapes():
    with pytest.raises(TaskFileError, match="entry"):
        write_task(TaskFile(0x1000, 0x2000, b"\x00", b"", [], []))
    with pytest.raises(TaskFileError, match="reloc"):
        write_task(TaskFile(0x1000, 0x1000, b"\x00" * 4, b"",
                            [RelocEntry(SEG_TEXT, 2)], []))
    with pytest.raises(TaskFileError, match="reloc"):
        write_task(TaskFile(0x1000, 0x1000, b"\x00" * 4, b"",
                            [RelocEntry(2, 0)], []))
    with pytest.raises(TaskFileError, match="name"):
        write_task(TaskFile(0x1000, 0x1000, b"\x00", b"", [],
                            [Symbol(0, 0, "x" * 256)]))


def test_empty_text_entry_equals_load_addr():
    tf = TaskFile(0x1000, 0x1000, b"", b"\x01\x02\x03\x04", [], [])
    assert read_task(write_task(tf)).entry == 0x1000
    with pytest.raises(TaskFileError, match="entry"):
        write_task(TaskFile(0x1000, 0x1004, b"", b"", [], []))
