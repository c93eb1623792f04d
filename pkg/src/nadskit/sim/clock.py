"""Bounded-offset node clocks standing in for gPTP synchronisation.

Between two sync instants a node clock drifts linearly at ``drift_ppm``; at
every multiple of ``sync_interval_ns`` its offset to true time is reset to a
value drawn uniformly from ``[-offset_bound_ns, offset_bound_ns]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import rng

_BLOCK = 256


@dataclass
class ClockModel:
    drift_ppm: float = 0.0
    sync_interval_ns: int = 125_000_000
    offset_bound_ns: int = 0
    seed: int = 0
    site: str = ""
    _blocks: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def for_node(cls, seed: int, node: str, max_drift_ppm: float, sync_interval_ns: int,
                 offset_bound_ns: int) -> "ClockModel":
        u = rng.generator(seed, "clock-drift", node).random()
        return cls((2 * u - 1) * max_drift_ppm, sync_interval_ns, offset_bound_ns, seed, node)

    def sync_offset(self, k: int) -> int:
        """Offset (ns) right after the k-th sync."""
        if self.offset_bound_ns == 0:
            return 0
        blk = self._blocks.get(k // _BLOCK)
        if blk is None:
            u = rng.generator(self.seed, "clock-offset", self.site, k // _BLOCK).random(_BLOCK)
            blk = np.rint((2 * u - 1) * self.offset_bound_ns).astype(np.int64)
            self._blocks[k // _BLOCK] = blk
        return int(blk[k % _BLOCK])

    def bound(self) -> float:
        """Largest possible |local - true| under this model."""
        return self.offset_bound_ns + abs(self.drift_ppm) * 1e-6 * self.sync_interval_ns


def local_time(clock: ClockModel, true_time: int) -> int:
    k, since = divmod(true_time, clock.sync_interval_ns)
    return true_time + clock.sync_offset(k) + round(clock.drift_ppm * since * 1e-6)


def local_times(clock: ClockModel, true_times: np.ndarray) -> np.ndarray:
    """Vectorised ``local_time``."""
    t = np.asarray(true_times, dtype=np.int64)
    if len(t) == 0:
        return t.copy()
    k, since = np.divmod(t, clock.sync_interval_ns)
    offsets = np.array([clock.sync_offset(int(i)) for i in range(int(k.max()) + 1)], dtype=np.int64)
    # same float operations and half-even rounding as local_time
    drift = np.rint(clock.drift_ppm * since.astype(np.float64) * 1e-6).astype(np.int64)
    return t + offsets[k] + drift
