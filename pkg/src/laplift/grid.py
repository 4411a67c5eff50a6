"""Rectangular image domains and the finite difference Laplacian stencil.

The stencil at a grid point sums the differences to its existing axis
neighbors (two per axis in the interior). At the boundary, mirrored
neighbors coincide with the center and drop out, so the stencil matrix is
symmetric with zero row and column sums. That symmetry is what makes the
discrete duality between the original and lifted energies exact.
"""

import numpy as np
import scipy.sparse as sp


class Grid:
    """A 1-D or 2-D grid of points with unit spacing.

    Attributes
    ----------
    shape : tuple of ints
    dims : 1 or 2
    n : total number of points (C-order flattening)
    lap : (n, n) CSR stencil matrix
    neighbor_pairs : (E, 2) int array, each undirected neighbor pair once
    """

    def __init__(self, shape):
        if isinstance(shape, int):
            shape = (shape,)
        shape = tuple(int(s) for s in shape)
        if len(shape) not in (1, 2) or any(s < 1 for s in shape):
            raise ValueError("shape must be 1 or 2 positive extents, got %r" % (shape,))
        self.shape = shape
        self.dims = len(shape)
        self.n = int(np.prod(shape))

        idx = np.arange(self.n).reshape(shape)
        pairs = []
        for axis in range(self.dims):
            lo = np.take(idx, np.arange(shape[axis] - 1), axis=axis).ravel()
            hi = np.take(idx, np.arange(1, shape[axis]), axis=axis).ravel()
            pairs.append(np.column_stack([lo, hi]))
        self.neighbor_pairs = (
            np.vstack(pairs) if pairs and sum(p.size for p in pairs) else
            np.zeros((0, 2), dtype=np.int64)
        )

        e = self.neighbor_pairs
        if len(e):
            i = np.concatenate([e[:, 0], e[:, 1], e[:, 0], e[:, 1]])
            j = np.concatenate([e[:, 1], e[:, 0], e[:, 0], e[:, 1]])
            v = np.concatenate(
                [np.ones(2 * len(e)), -np.ones(2 * len(e))]
            )
            self.lap = sp.csr_matrix((v, (i, j)), shape=(self.n, self.n))
        else:
            self.lap = sp.csr_matrix((self.n, self.n))

    def neighbors(self, i):
        """Indices of the stencil neighbors of point ``i``."""
        e = self.neighbor_pairs
        return np.sort(np.concatenate([e[e[:, 0] == i, 1], e[e[:, 1] == i, 0]]))


def laplacian_apply(grid, field):
    """Apply the stencil channel-wise to an (n,) or (n, c) field."""
    field = np.asarray(field, dtype=np.float64)
    if field.shape[0] != grid.n:
        raise ValueError(
            "field has %d rows, grid has %d points" % (field.shape[0], grid.n)
        )
    return grid.lap @ field


def laplacian_opnorm_bound(grid):
    """Cheap upper bound on the operator 2-norm of the stencil matrix."""
    if len(grid.neighbor_pairs) == 0:
        return 0.0
    return 4.0 * grid.dims
