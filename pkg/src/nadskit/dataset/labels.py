"""Dual packet/phase labels and their comment-string encoding.

Grammar: ``<PACKET_LABEL> " - " <PHASE_LABEL>`` where the phase label may be
empty, e.g. ``"BENIGN - "`` or ``"DELAYED - delay_attack"``.
"""
from __future__ import annotations

from typing import NamedTuple

BENIGN = "BENIGN"
BENIGN_RECOVERED = "BENIGN RECOVERED"
DELAYED = "DELAYED"
INJECTED = "INJECTED"
MANIPULATED = "MANIPULATED"
REORDERED = "REORDERED"

PACKET_LABELS = (BENIGN, BENIGN_RECOVERED, DELAYED, INJECTED, MANIPULATED, REORDERED)
SEPARATOR = " - "


class LabelError(ValueError):
    pass


class LabelPair(NamedTuple):
    packet: str = BENIGN
    phase: str = ""


def encode_label(labels: LabelPair) -> str:
    if labels.packet not in PACKET_LABELS:
        raise LabelError(f"unknown packet label {labels.packet!r}")
    if SEPARATOR in labels.phase:
        raise LabelError("phase label must not contain the separator")
    return f"{labels.packet}{SEPARATOR}{labels.phase}"


def parse_label(text: str) -> LabelPair:
    packet, sep, phase = text.partition(SEPARATOR)
    if not sep:
        raise LabelError(f"missing ' - ' separator in {text!r}")
    if packet not in PACKET_LABELS:
        raise LabelError(f"unknown packet label {packet!r}")
    return LabelPair(packet, phase)
