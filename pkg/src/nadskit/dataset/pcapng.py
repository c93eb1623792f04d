"""Minimal PCAPNG writer and tolerant reader.

Written files are little-endian and contain one Section Header Block, one
Interface Description Block (nanosecond ``if_tsresol``) and one Enhanced
Packet Block per packet, each carrying the label string as ``opt_comment``.
"""
from __future__ import annotations

import logging
import mmap
import os
import struct
from pathlib import Path

from .capture import CapturePointData, CaptureSet, LabeledPacket
from .labels import LabelPair, encode_label, parse_label

log = logging.getLogger(__name__)

SHB = 0x0A0D0D0A
IDB = 0x00000001
EPB = 0x00000006
BYTE_ORDER_MAGIC = 0x1A2B3C4D
LINKTYPE_ETHERNET = 1
SNAPLEN = 65535

OPT_ENDOFOPT = 0
OPT_COMMENT = 1
SHB_USERAPPL = 4
IF_NAME = 2
IF_SPEED = 8
IF_TSRESOL = 9

_USERAPPL = b"nadskit"


class PcapngError(ValueError):
    pass


def _pad(n: int) -> int:
    return (4 - n % 4) % 4


def _option(code: int, value: bytes) -> bytes:
    return struct.pack("<HH", code, len(value)) + value + b"\x00" * _pad(len(value))


_END = struct.pack("<HH", OPT_ENDOFOPT, 0)


def _block(btype: int, body: bytes) -> bytes:
    total = 12 + len(body)
    return struct.pack("<II", btype, total) + body + struct.pack("<I", total)


def section_header() -> bytes:
    body = struct.pack("<IHHq", BYTE_ORDER_MAGIC, 1, 0, -1) + _option(SHB_USERAPPL, _USERAPPL) + _END
    return _block(SHB, body)


def interface_block(name: str, speed: int = 0) -> bytes:
    opts = _option(IF_NAME, name.encode())
    if speed:
        opts += _option(IF_SPEED, struct.pack("<Q", speed))
    opts += _option(IF_TSRESOL, bytes([9])) + _END
    return _block(IDB, struct.pack("<HHI", LINKTYPE_ETHERNET, 0, SNAPLEN) + opts)


def iter_encoded(point: CapturePointData, chunk: int = 4096):
    """Yield the file contents in chunks of about ``chunk`` packets."""
    out = [section_header(), interface_block(point.name, point.link_speed)]
    comments = {}
    pack_hdr = struct.Struct("<IIIIIII").pack
    pack_tail = struct.Struct("<I").pack
    for pkt in point.packets:
        frame = pkt.frame
        n = len(frame)
        if n > SNAPLEN:
            raise PcapngError(f"frame of {n} bytes exceeds snap length")
        opt = comments.get(pkt.labels)
        if opt is None:
            opt = comments[pkt.labels] = _option(OPT_COMMENT, encode_label(pkt.labels).encode()) + _END
        total = 32 + n + _pad(n) + len(opt)
        ts = pkt.ts
        out.append(pack_hdr(EPB, total, 0, (ts >> 32) & 0xFFFFFFFF, ts & 0xFFFFFFFF, n, n))
        out.append(frame)
        out.append(b"\x00" * _pad(n))
        out.append(opt)
        out.append(pack_tail(total))
        if len(out) >= 5 * chunk:
            yield b"".join(out)
            out = []
    yield b"".join(out)


def encode_point(point: CapturePointData) -> bytes:
    return b"".join(iter_encoded(point))


def write_point(point: CapturePointData, path) -> Path:
    path = Path(path)
    tmp = path.with_name(path.name + ".part")
    try:
        with open(tmp, "wb") as fh:
            for part in iter_encoded(point):
                fh.write(part)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()
    return path


def point_filename(scenario: str, iface_name: str) -> str:
    return f"{scenario}_{iface_name.replace('-', '_')}.pcapng"


def write_capture(capture: CaptureSet, directory, scenario: str) -> list[Path]:
    """Write one PCAPNG file per capture point into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return [write_point(p, directory / point_filename(scenario, name))
            for name, p in sorted(capture.points.items())]


# --------------------------------------------------------------------------
# reading

def _options(buf: bytes, bo: str):
    pos = 0
    while pos + 4 <= len(buf):
        code, length = struct.unpack_from(bo + "HH", buf, pos)
        pos += 4
        if code == OPT_ENDOFOPT:
            return
        if pos + length > len(buf):
            raise PcapngError("option runs past end of block")
        yield code, bytes(buf[pos:pos + length])
        pos += length + _pad(length)


def _ts_to_ns(ts: int, resol: int) -> int:
    if resol & 0x80:
        return (ts * 10**9) >> (resol & 0x7F)
    if resol <= 9:
        return ts * 10 ** (9 - resol)
    return ts // 10 ** (resol - 9)


class ReadStats:
    def __init__(self):
        self.skipped_blocks = 0
        self.missing_comments = 0


def iter_blocks(data: bytes):
    """Yield ``(byte_order, block_type, body)`` for every block, checking lengths."""
    pos = 0
    bo = "<"
    while pos < len(data):
        if len(data) - pos < 12:
            raise PcapngError(f"truncated block header at offset {pos}")
        raw_type = data[pos:pos + 4]
        if raw_type == b"\x0a\x0d\x0d\x0a":
            magic = data[pos + 8:pos + 12]
            if magic == struct.pack("<I", BYTE_ORDER_MAGIC):
                bo = "<"
            elif magic == struct.pack(">I", BYTE_ORDER_MAGIC):
                bo = ">"
            else:
                raise PcapngError(f"bad byte-order magic at offset {pos}")
        btype, total = struct.unpack_from(bo + "II", data, pos)
        if total < 12 or total % 4 or pos + total > len(data):
            raise PcapngError(f"bad block total length {total} at offset {pos}")
        (trailer,) = struct.unpack_from(bo + "I", data, pos + total - 4)
        if trailer != total:
            raise PcapngError(f"block length mismatch at offset {pos}")
        yield bo, btype, data[pos + 8:pos + total - 4]
        pos += total


def decode(data: bytes, stats: ReadStats | None = None) -> CaptureSet:
    stats = stats if stats is not None else ReadStats()
    cap = CaptureSet()
    ifaces = []
    for bo, btype, body in iter_blocks(data):
        if btype == SHB:
            ifaces = []  # interface ids are per section
        elif btype == IDB:
            if len(body) < 8:
                raise PcapngError("short interface description block")
            name, speed, resol = None, 0, 6
            for code, val in _options(body[8:], bo):
                if code == IF_NAME:
                    name = val.decode("utf-8", "replace")
                elif code == IF_SPEED and len(val) == 8:
                    (speed,) = struct.unpack(bo + "Q", val)
                elif code == IF_TSRESOL and val:
                    resol = val[0]
            if name is None or name in cap.points:
                name = f"if{len(cap.points)}"
            ifaces.append((cap.add_point(name, speed), resol))
        elif btype == EPB:
            if len(body) < 20:
                raise PcapngError("short enhanced packet block")
            iface, hi, lo, caplen, _orig = struct.unpack_from(bo + "IIIII", body, 0)
            if iface >= len(ifaces):
                raise PcapngError(f"packet references undeclared interface {iface}")
            if 20 + caplen > len(body):
                raise PcapngError("packet data runs past end of block")
            frame = bytes(body[20:20 + caplen])
            labels = None
            for code, val in _options(body[20 + caplen + _pad(caplen):], bo):
                if code == OPT_COMMENT and labels is None:
                    try:
                        labels = parse_label(val.decode("utf-8"))
                    except ValueError:
                        labels = None
            if labels is None:
                stats.missing_comments += 1
                labels = LabelPair()
            point, resol = ifaces[iface]
            point.packets.append(LabeledPacket(_ts_to_ns((hi << 32) | lo, resol), frame, labels))
        else:
            stats.skipped_blocks += 1
    if stats.skipped_blocks:
        log.warning("skipped %d unsupported blocks", stats.skipped_blocks)
    return cap


def read_capture(path, stats: ReadStats | None = None) -> CaptureSet:
    path = Path(path)
    if path.stat().st_size == 0:
        raise PcapngError(f"{path}: empty file")
    with open(path, "rb") as fh, mmap.mmap(fh.fileno(), 0, access=mmap.ACCESS_READ) as mm:
        return decode(memoryview(mm), stats)


def validate_bytes(data: bytes, require_comments: bool = True) -> list[str]:
    """Structural checks; returns a list of problems (empty when valid)."""
    problems = []
    try:
        blocks = list(iter_blocks(data))
    except PcapngError as exc:
        return [str(exc)]
    if not blocks or blocks[0][1] != SHB:
        problems.append("file does not start with a section header block")
    n_if = 0
    for i, (bo, btype, body) in enumerate(blocks):
        try:
            if btype == SHB:
                list(_options(body[16:], bo))
            elif btype == IDB:
                n_if += 1
                list(_options(body[8:], bo))
            elif btype == EPB:
                iface, _, _, caplen, orig = struct.unpack_from(bo + "IIIII", body, 0)
                if iface >= n_if:
                    problems.append(f"block {i}: undeclared interface {iface}")
                if caplen > orig or caplen > SNAPLEN:
                    problems.append(f"block {i}: bad captured length {caplen}")
                opts = list(_options(body[20 + caplen + _pad(caplen):], bo))
                comments = [v for c, v in opts if c == OPT_COMMENT]
                if require_comments and len(comments) != 1:
                    problems.append(f"block {i}: expected exactly one comment, found {len(comments)}")
        except (PcapngError, struct.error) as exc:
            problems.append(f"block {i}: {exc}")
    return problems
