"""Page-aligned allocation helpers.

All benchmark buffers are aligned to 16,384-byte pages and padded to a whole
number of pages so a unified-memory GPU backend can wrap them without copies.
"""

import numpy as np

PAGE_SIZE = 16384


def round_up_pages(nbytes: int) -> int:
    """Smallest multiple of PAGE_SIZE that holds `nbytes` (min one page)."""
    if nbytes < 0:
        raise ValueError(f"nbytes must be >= 0, got {nbytes}")
    pages = max(1, -(-nbytes // PAGE_SIZE))
    return pages * PAGE_SIZE


def page_aligned_bytes(nbytes: int) -> np.ndarray:
    """Zeroed uint8 buffer of exactly `nbytes` whose base address is a
    multiple of PAGE_SIZE.  The returned view keeps its backing allocation
    alive through `.base`."""
    raw = np.zeros(nbytes + PAGE_SIZE, dtype=np.uint8)
    offset = (-raw.ctypes.data) % PAGE_SIZE
    return raw[offset : offset + nbytes]


def page_aligned_empty(n: int, dtype) -> np.ndarray:
    """Page-aligned 1-D array of `n` elements (contents zeroed)."""
    dt = np.dtype(dtype)
    return page_aligned_bytes(n * dt.itemsize).view(dt)
