"""Byte-level frame construction.

Layout: destination MAC, source MAC, 802.1Q tag, ethertype, optional
IPv4/UDP header, payload, FCS.  The first eight payload bytes carry the
sequence number (big endian); the rest is zero padding.
"""
from __future__ import annotations

import struct
import zlib

from ..config import IP_UDP_HEADER, L2_HEADER, FCS, StreamSpec, payload_capacity

ETH_IPV4 = 0x0800
ETH_RAW = 0x88B5
ETH_GPTP = 0x88F7
TPID = 0x8100


def mac_bytes(text: str) -> bytes:
    parts = text.split(":")
    if len(parts) != 6:
        raise ValueError(f"bad MAC address {text!r}")
    return bytes(int(p, 16) for p in parts)


def mac_text(raw: bytes) -> str:
    return ":".join(f"{b:02x}" for b in raw)


def node_mac(index: int) -> bytes:
    return bytes([0x02, 0, 0, 0, (index >> 8) & 0xFF, index & 0xFF])


def stream_mac(index: int) -> bytes:
    return bytes([0x01, 0x00, 0x5E, 0x7F, (index >> 8) & 0xFF, index & 0xFF])


def _ip_checksum(header: bytes) -> int:
    total = sum(struct.unpack("!10H", header))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


class FrameTemplate:
    """Pre-built header of one stream; ``build(seq)`` returns the full frame."""

    def __init__(self, spec: StreamSpec, stream_index: int, src_index: int, ethertype: int | None = None):
        self.size = spec.frame_size
        dmac = mac_bytes(spec.dmac) if spec.dmac else stream_mac(stream_index)
        tci = (spec.pcp << 13) | (spec.vlan & 0x0FFF)
        if spec.transport == "udp":
            etype = ETH_IPV4
        else:
            etype = ethertype or ETH_RAW
        head = dmac + node_mac(src_index) + struct.pack("!HHH", TPID, tci, etype)
        cap = payload_capacity(spec)
        if spec.transport == "udp":
            udp_len = 8 + (spec.payload_bytes if spec.payload_bytes is not None else cap)
            ip_len = 20 + udp_len
            src_ip = bytes([10, 0, (src_index >> 8) & 0xFF, src_index & 0xFF])
            dst_ip = bytes([239, 1, (stream_index >> 8) & 0xFF, stream_index & 0xFF])
            ip = struct.pack("!BBHHHBBH4s4s", 0x45, spec.pcp << 5, ip_len, 0, 0x4000, 64, 17, 0,
                             src_ip, dst_ip)
            ip = ip[:10] + struct.pack("!H", _ip_checksum(ip)) + ip[12:]
            head += ip + struct.pack("!HHHH", spec.udp_dst, spec.udp_dst, udp_len, 0)
        self.header = head
        self.payload_len = spec.frame_size - FCS - len(head)
        assert len(head) == L2_HEADER + (IP_UDP_HEADER if spec.transport == "udp" else 0)
        self._pad = bytes(self.payload_len - 8)

    def build(self, seq: int, payload: bytes | None = None, patch=None) -> bytes:
        if payload is None:
            body = self.header + seq.to_bytes(8, "big") + self._pad
        else:
            body = self.header + payload[:self.payload_len].ljust(self.payload_len, b"\x00")
        if patch is not None:
            off, data = patch
            off = min(off, len(body))
            end = min(off + len(data), len(body))
            body = body[:off] + data[:end - off] + body[end:]
        return body + struct.pack("<I", zlib.crc32(body))


def check_fcs(frame: bytes) -> bool:
    return struct.unpack("<I", frame[-4:])[0] == zlib.crc32(frame[:-4])


def frame_sequence(frame: bytes) -> int:
    """Sequence number of an unmodified frame built by ``FrameTemplate``."""
    off = L2_HEADER
    if struct.unpack_from("!H", frame, 16)[0] == ETH_IPV4:
        off += IP_UDP_HEADER
    return int.from_bytes(frame[off:off + 8], "big")
