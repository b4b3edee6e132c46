"""Grid storage with a ghost layer, periodic copies and slot-map wrapping."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..kernel.ir import Field, Layout

__all__ = ["Grid", "allocate", "fill_periodic", "wrap_slots"]


def allocate(f: Field, padded: Sequence[int]) -> np.ndarray:
    """Array of logical shape ``(*padded, index)`` with axis 0 fastest in memory."""
    dtype = np.uint32 if f.dtype == "uint" else np.float64
    padded = tuple(int(n) for n in padded)
    if f.layout is Layout.SOA:
        return np.zeros(padded + (f.index_size,), dtype=dtype, order="F")
    base = np.zeros((f.index_size,) + padded, dtype=dtype, order="F")
    return np.moveaxis(base, 0, -1)


class Grid:
    """Named field arrays sharing one interior shape plus a ghost layer of 1."""

    def __init__(self, shape: Sequence[int], fields: Sequence[Field]):
        self.shape = tuple(int(n) for n in shape)
        if any(n < 1 for n in self.shape):
            raise ValueError("grid extents must be positive")
        self.padded = tuple(n + 2 for n in self.shape)
        self.fields = {f.name: f for f in fields}
        self.arrays = {f.name: allocate(f, self.padded) for f in fields}

    @property
    def d(self) -> int:
        return len(self.shape)

    def interior(self, name: str) -> np.ndarray:
        return self.arrays[name][tuple(slice(1, -1) for _ in self.shape)]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]


def _slab(d: int, axis: int, i, rest=None):
    idx = [slice(None)] * (d + 1)
    idx[axis] = i
    if rest is not None:
        idx[d] = rest
    return tuple(idx)


def fill_periodic(arr: np.ndarray, periodic: Sequence[bool]):
    """Copy interior boundary slabs into the opposite ghost slabs, all slots."""
    d = arr.ndim - 1
    for a in range(d):
        if not periodic[a]:
            continue
        n = arr.shape[a]
        arr[_slab(d, a, 0)] = arr[_slab(d, a, n - 2)]
        arr[_slab(d, a, n - 1)] = arr[_slab(d, a, 1)]


def wrap_slots(arr: np.ndarray, slot_map: Sequence, periodic: Sequence[bool]):
    """Move values written into ghost cells to their periodic images.

    ``slot_map`` lists ``(offset, slot)`` per direction as produced by the
    slot maps; only slots that can land in a given ghost slab are copied.
    """
    d = arr.ndim - 1
    for a in range(d):
        if not periodic[a]:
            continue
        n = arr.shape[a]
        for off, slot in slot_map:
            if off[a] == -1:
                arr[_slab(d, a, n - 2, slot)] = arr[_slab(d, a, 0, slot)]
            elif off[a] == 1:
                arr[_slab(d, a, 1, slot)] = arr[_slab(d, a, n - 1, slot)]
