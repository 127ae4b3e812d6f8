#!/usr/bin/env python3
"""Produce the committed reference note dump for corpus/001.mid.

Uses its own stream-style SMF decoder, written independently of the package
parser, so the committed JSON acts as a second opinion.
"""

import io
import json
from pathlib import Path


def read_varlen(stream: io.BytesIO) -> int:
    value = 0
    while True:
        byte = stream.read(1)[0]
        value = (value << 7) | (byte & 0x7F)
        if byte < 0x80:
            return value


def decode(path: Path):
    stream = io.BytesIO(path.read_bytes())
    assert stream.read(4) == b"MThd"
    assert int.from_bytes(stream.read(4), "big") == 6
    fmt = int.from_bytes(stream.read(2), "big")
    ntrks = int.from_bytes(stream.read(2), "big")
    ppq = int.from_bytes(stream.read(2), "big")
    assert fmt in (0, 1)

    notes = []
    for _ in range(ntrks):
        assert stream.read(4) == b"MTrk"
        length = int.from_bytes(stream.read(4), "big")
        track = io.BytesIO(stream.read(length))
        time = 0
        status = 0
        active = {}
        while track.tell() < length:
            time += read_varlen(track)
            first = track.read(1)[0]
            if first >= 0x80:
                status = first
                data0 = None
            else:
                data0 = first
            if status == 0xFF:
                track.read(1)
                track.read(read_varlen(track))
                continue
            if status in (0xF0, 0xF7):
                track.read(read_varlen(track))
                continue
            if data0 is None:
                data0 = track.read(1)[0]
            hi = status & 0xF0
            if hi in (0xC0, 0xD0):
                continue
            data1 = track.read(1)[0]
            if hi == 0x90 and data1 > 0:
                active[data0] = time
            elif hi == 0x80 or (hi == 0x90 and data1 == 0):
                if data0 in active:
                    onset = active.pop(data0)
                    notes.append([onset, time - onset, data0])
    notes.sort(key=lambda n: (n[0], -n[2]))
    return notes, ppq


def main():
    root = Path(__file__).resolve().parents[1]
    notes, ppq = decode(root / "corpus" / "001.mid")
    out = root / "tests" / "data"
    out.mkdir(parents=True, exist_ok=True)
    (out / "001_ref.json").write_text(
        json.dumps({"ppq": ppq, "notes": notes}, indent=1)
    )
    print(f"{len(notes)} notes, ppq {ppq}")


if __name__ == "__main__":
    main()
