"""Flat binary storage for dense float64 matrices.

Layout: a 16-byte header (the 8-byte magic ``LIFTARR1`` followed by
little-endian uint32 row and column counts), then the row-major float64
payload, also little-endian.
"""

import numpy as np

MAGIC = b"LIFTARR1"
HEADER_SIZE = 16


def save_array(path, array):
    """Write a 2-D float array to ``path`` in the LIFTARR1 format."""
    a = np.ascontiguousarray(array, dtype="<f8")
    if a.ndim != 2:
        raise ValueError("expected a 2-D array, got shape %r" % (a.shape,))
    rows, cols = a.shape
    header = MAGIC + np.asarray([rows, cols], dtype="<u4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(a.tobytes())


def load_array(path):
    """Read a LIFTARR1 file back into a float64 matrix."""
    with open(path, "rb") as fh:
        header = fh.read(HEADER_SIZE)
        if len(header) < HEADER_SIZE or header[:8] != MAGIC:
            raise ValueError("%s: not a LIFTARR1 array file" % path)
        rows, cols = np.frombuffer(header[8:], dtype="<u4")
        payload = fh.read()
    expected = int(rows) * int(cols) * 8
    if len(payload) != expected:
        raise ValueError(
            "%s: truncated payload (%d bytes, expected %d)"
            % (path, len(payload), expected)
        )
    data = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return data.reshape(int(rows), int(cols))
