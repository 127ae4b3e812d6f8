"""Standard MIDI File reading/writing and sixteenth-note quantization.

Melodies are monophonic sequences of (pitch, duration) notes where the
duration is counted in 16th-note units (a whole note is 16). Parsing keeps
raw tick-level notes; `quantize` snaps them to the 16th grid and enforces
monophony.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

WRITE_PPQ = 480
WRITE_TEMPO_US = 500_000  # 120 BPM
MAX_DURATION = 16


class MidiParseError(ValueError):
    """Malformed MIDI data; message includes the offending byte offset."""


class UnsupportedFormatError(MidiParseError):
    """SMF format 2 (independent patterns) is not supported."""


@dataclass(frozen=True)
class RawNote:
    """A note in MIDI ticks, before quantization."""

    onset_ticks: int
    duration_ticks: int
    pitch: int
    track_index: int = 0

    def __post_init__(self):
        if self.duration_ticks < 1:
            raise ValueError(f"duration_ticks must be >= 1, got {self.duration_ticks}")
        if not 0 <= self.pitch <= 127:
            raise ValueError(f"pitch out of range: {self.pitch}")


@dataclass(frozen=True)
class NoteEvent:
    """One melodic note: MIDI pitch and duration in 16th-note units."""

    pitch: int
    duration: int

    def __post_init__(self):
        if not 0 <= self.pitch <= 127:
            raise ValueError(f"pitch out of range: {self.pitch}")
        if not 1 <= self.duration <= MAX_DURATION:
            raise ValueError(f"duration out of range 1..16: {self.duration}")


@dataclass(frozen=True)
class Melody:
    """An ordered, strictly sequential (monophonic) note list."""

    notes: tuple[NoteEvent, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "notes", tuple(self.notes))

    def __len__(self):
        return len(self.notes)

    def __iter__(self):
        return iter(self.notes)

    @property
    def total_duration(self) -> int:
        return sum(n.duration for n in self.notes)

    def transpose(self, semitones: int) -> "Melody":
        return Melody(tuple(NoteEvent(n.pitch + semitones, n.duration) for n in self.notes))

    @classmethod
    def from_pairs(cls, pairs) -> "Melody":
        return cls(tuple(NoteEvent(p, d) for p, d in pairs))

    def to_pairs(self) -> list[list[int]]:
        return [[n.pitch, n.duration] for n in self.notes]


def _read_vlq(data: bytes, pos: int) -> tuple[int, int]:
    """Variable-length quantity; returns (value, new position)."""
    value = 0
    for _ in range(4):
        if pos >= len(data):
            raise MidiParseError(f"truncated variable-length quantity at byte {pos}")
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
    raise MidiParseError(f"variable-length quantity longer than 4 bytes at byte {pos}")


def _parse_track(data: bytes, start: int, end: int, track_index: int) -> list[RawNote]:
    """Decode one MTrk body into matched notes with absolute onsets."""
    notes: list[RawNote] = []
    open_notes: dict[tuple[int, int], int] = {}  # (channel, pitch) -> onset tick
    pos = start
    tick = 0
    running_status = None
    while pos < end:
        delta, pos = _read_vlq(data, pos)
        tick += delta
        if pos >= end:
            raise MidiParseError(f"truncated event at byte {pos}")
        status = data[pos]
        if status & 0x80:
            pos += 1
            if status < 0xF0:
                running_status = status
        else:
            if running_status is None:
                raise MidiParseError(f"data byte with no running status at byte {pos}")
            status = running_status

        if status == 0xFF:  # meta
            if pos >= end:
                raise MidiParseError(f"truncated meta event at byte {pos}")
            meta_type = data[pos]
            pos += 1
            length, pos = _read_vlq(data, pos)
            if pos + length > end:
                raise MidiParseError(f"meta event overruns track at byte {pos}")
            pos += length
            if meta_type == 0x2F:  # end of track
                break
            continue
        if status in (0xF0, 0xF7):  # sysex
            length, pos = _read_vlq(data, pos)
            if pos + length > end:
                raise MidiParseError(f"sysex overruns track at byte {pos}")
            pos += length
            continue

        kind = status & 0xF0
        channel = status & 0x0F
        if kind in (0x80, 0x90, 0xA0, 0xB0, 0xE0):
            nargs = 2
        elif kind in (0xC0, 0xD0):
            nargs = 1
        else:
            raise MidiParseError(f"unknown status byte 0x{status:02x} at byte {pos - 1}")
        if pos + nargs > end:
            raise MidiParseError(f"truncated channel event at byte {pos}")
        args = data[pos : pos + nargs]
        pos += nargs

        if kind == 0x90 and args[1] > 0:
            key = (channel, args[0])
            if key in open_notes:
                # retrigger: close the previous note at this tick
                _close_note(notes, open_notes, key, tick, track_index)
            open_notes[key] = tick
        elif kind == 0x80 or (kind == 0x90 and args[1] == 0):
            key = (channel, args[0])
            if key in open_notes:
                _close_note(notes, open_notes, key, tick, track_index)
    # dangling note-ons are dropped with a warning
    if open_notes:
        log.warning("track %d: %d unterminated note(s) dropped", track_index, len(open_notes))
    return notes


def _close_note(notes, open_notes, key, tick, track_index):
    onset = open_notes.pop(key)
    if tick > onset:
        notes.append(RawNote(onset, tick - onset, key[1], track_index))


def parse_midi(data: bytes) -> tuple[list[RawNote], int]:
    """Parse an SMF format 0/1 byte string into (notes, ticks_per_quarter).

    Notes are sorted by onset, ties broken by descending pitch. Tracks that
    fail to parse are skipped with a warning; a bad header is fatal.
    """
    if len(data) < 14 or data[0:4] != b"MThd":
        raise MidiParseError("missing MThd header at byte 0")
    header_len = int.from_bytes(data[4:8], "big")
    if header_len != 6:
        raise MidiParseError(f"bad MThd length {header_len} at byte 4")
    fmt = int.from_bytes(data[8:10], "big")
    if fmt == 2:
        raise UnsupportedFormatError("SMF format 2 is not supported")
    if fmt not in (0, 1):
        raise MidiParseError(f"unknown SMF format {fmt} at byte 8")
    ntrks = int.from_bytes(data[10:12], "big")
    division = int.from_bytes(data[12:14], "big")
    if division & 0x8000:
        raise MidiParseError("SMPTE time division is not supported (byte 12)")
    if division == 0:
        raise MidiParseError("zero ticks-per-quarter at byte 12")

    notes: list[RawNote] = []
    pos = 14
    for track_index in range(ntrks):
        if pos + 8 > len(data):
            raise MidiParseError(f"truncated track header at byte {pos}")
        if data[pos : pos + 4] != b"MTrk":
            raise MidiParseError(f"expected MTrk chunk at byte {pos}")
        length = int.from_bytes(data[pos + 4 : pos + 8], "big")
        body_start = pos + 8
        body_end = body_start + length
        if body_end > len(data):
            raise MidiParseError(f"track chunk overruns file at byte {pos + 4}")
        try:
            notes.extend(_parse_track(data, body_start, body_end, track_index))
        except MidiParseError as exc:
            log.warning("skipping unparseable track %d: %s", track_index, exc)
        pos = body_end

    notes.sort(key=lambda n: (n.onset_ticks, -n.pitch))
    return notes, division


def quantize(raw: list[RawNote], ppq: int) -> Melody:
    """Snap raw notes to the 16th-note grid and enforce monophony.

    Onsets and durations round to the nearest ppq/4; simultaneous onsets keep
    the highest pitch; overlaps truncate the earlier note; gaps are absorbed
    into the preceding note up to duration 16, beyond which the melody splits
    and only the longest contiguous segment survives.
    """
    if ppq < 24:
        raise ValueError(f"ppq must be >= 24, got {ppq}")
    if not raw:
        return Melody()
    unit = ppq / 4.0
    grid = []
    for n in raw:
        onset = round(n.onset_ticks / unit)
        dur = max(1, round(n.duration_ticks / unit))
        grid.append((onset, dur, n.pitch))
    grid.sort(key=lambda t: (t[0], -t[2]))

    # simultaneous onsets: keep the highest pitch (first after sort)
    dedup = []
    for onset, dur, pitch in grid:
        if dedup and dedup[-1][0] == onset:
            continue
        dedup.append([onset, dur, pitch])

    # truncate overlaps, cap durations at 16
    for i in range(len(dedup)):
        if i + 1 < len(dedup):
            dedup[i][1] = min(dedup[i][1], dedup[i + 1][0] - dedup[i][0])
        dedup[i][1] = min(dedup[i][1], MAX_DURATION)

    # absorb gaps up to duration 16, split where a gap cannot be absorbed
    segments: list[list[NoteEvent]] = [[]]
    for i, (onset, dur, pitch) in enumerate(dedup):
        if i + 1 < len(dedup):
            gap = dedup[i + 1][0] - (onset + dur)
            if gap > 0:
                if dur + gap <= MAX_DURATION:
                    dur += gap
                else:
                    segments[-1].append(NoteEvent(pitch, dur))
                    segments.append([])
                    continue
        segments[-1].append(NoteEvent(pitch, dur))

    if len(segments) > 1:
        log.warning("melody split into %d segments at unabsorbable gaps", len(segments))
    best = max(segments, key=len)
    return Melody(tuple(best))


def melody_from_midi(data: bytes) -> Melody:
    """Parse and quantize the first track that contains note events."""
    notes, ppq = parse_midi(data)
    if not notes:
        return Melody()
    first_track = min(n.track_index for n in notes)
    if any(n.track_index != first_track for n in notes):
        log.info("multi-track file: using first note-bearing track %d", first_track)
    return quantize([n for n in notes if n.track_index == first_track], ppq)


def _vlq(value: int) -> bytes:
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(out))


def write_midi(melody: Melody) -> bytes:
    """Serialize a melody as a format-0 SMF at PPQ 480, 120 BPM."""
    if not melody.notes:
        raise ValueError("cannot write an empty melody")
    unit = WRITE_PPQ // 4
    events = bytearray()
    # tempo meta at tick 0
    events += b"\x00\xff\x51\x03" + WRITE_TEMPO_US.to_bytes(3, "big")
    for note in melody.notes:
        events += _vlq(0) + bytes([0x90, note.pitch, 64])
        events += _vlq(note.duration * unit) + bytes([0x80, note.pitch, 0])
    events += b"\x00\xff\x2f\x00"

    header = b"MThd" + (6).to_bytes(4, "big")
    header += (0).to_bytes(2, "big") + (1).to_bytes(2, "big") + WRITE_PPQ.to_bytes(2, "big")
    track = b"MTrk" + len(events).to_bytes(4, "big") + bytes(events)
    return header + track
