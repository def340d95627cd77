"""Global sparse operators assembled from per-node weight rows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .approx import WeightTable
from .nodegen import NodeSet


@dataclass
class FieldState:
    """Velocity, pressure and temperature over all nodes (dimensionless)."""

    velocity: np.ndarray  # (N, d)
    pressure: np.ndarray  # (N,)
    temperature: np.ndarray  # (N,)

    @staticmethod
    def zeros(n: int, dim: int) -> "FieldState":
        return FieldState(np.zeros((n, dim)), np.zeros(n), np.zeros(n))

    def copy(self) -> "FieldState":
        return FieldState(self.velocity.copy(), self.pressure.copy(), self.temperature.copy())

    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.velocity)) and np.all(np.isfinite(self.pressure))
                    and np.all(np.isfinite(self.temperature)))


class SparseOperator:
    """Row-compressed operator; row i holds node i's stencil weights.

    Boundary (and otherwise weightless) rows are empty; the solver fills
    boundary behaviour separately.  Stencil zeros are kept so each interior
    row carries exactly its stencil size.
    """

    def __init__(self, matrix: sparse.csr_matrix, kind, row_sizes: np.ndarray):
        self.matrix = matrix
        self.kind = kind
        self.row_sizes = row_sizes

    @property
    def shape(self):
        return self.matrix.shape

    def apply(self, field: np.ndarray) -> np.ndarray:
        if field.shape[0] != self.matrix.shape[1]:
            raise ValueError(f"field length {field.shape[0]} != N {self.matrix.shape[1]}")
        return self.matrix @ field

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        sl = slice(self.matrix.indptr[i], self.matrix.indptr[i + 1])
        return self.matrix.indices[sl], self.matrix.data[sl]


def assemble(nodeset: NodeSet, table: WeightTable, kind) -> SparseOperator:
    """Assemble one operator kind from a weight table, row order = node order."""
    if kind not in table.weights:
        raise KeyError(f"weight table has no operator {kind!r}")
    n = len(nodeset)
    sizes = table.sizes
    missing = np.nonzero(nodeset.interior_mask & (sizes == 0))[0]
    if len(missing):
        raise ValueError(f"missing weight row for interior node {int(missing[0])}")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(sizes, out=indptr[1:])
    n_max = table.indices.shape[1]
    cols = np.arange(n_max)[None, :] < sizes[:, None]
    indices = table.indices[cols]
    data = table.weights[kind][cols]
    matrix = sparse.csr_matrix((data, indices, indptr), shape=(n, n))
    return SparseOperator(matrix, kind, sizes.copy())


def apply(op: SparseOperator, field: np.ndarray) -> np.ndarray:
    """out_i = sum_j w_ij field_j."""
    return op.apply(field)


def divergence(partials, velocity: np.ndarray) -> np.ndarray:
    """Sum of axis-derivative applications over velocity components."""
    out = partials[0].apply(velocity[:, 0])
    for a in range(1, len(partials)):
        out += partials[a].apply(velocity[:, a])
    return out
