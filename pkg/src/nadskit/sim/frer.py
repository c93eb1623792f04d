from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field


@dataclass
class RecoveryState:
    """Sequence history of one (stream, recovery point) pair."""
    history_length: int = 64
    order: deque = field(default_factory=deque)
    seen: set = field(default_factory=set)


def frer_accept(state: RecoveryState, seq: int) -> tuple[bool, RecoveryState]:
    """Accept ``seq`` unless it is in the recent history; accepted numbers enter it."""
    if seq in state.seen:
        return False, state
    state.seen.add(seq)
    state.order.append(seq)
    if len(state.order) > state.history_length:
        state.seen.discard(state.order.popleft())
    return True, state
