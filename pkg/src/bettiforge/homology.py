"""Exact boundary operators, Laplacians, Dirac operators, Betti numbers, spectra.

Index convention (used across the whole package): operations take the Hamming
weight k of the basis states, i.e. the CLIQUE SIZE, and quantities like
``betti_exact(g, k)`` return the Betti number of simplex dimension k-1.  So
``betti_exact(g, 2)`` is beta_1, computed on the vertex/edge/triangle bases.

Betti numbers come from exact integer ranks (fraction-free elimination), not
from floating point; spectra come from a dense symmetric eigensolver and are
cross-checked against the exact ranks in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DeskScaleError
from .exactrank import integer_rank
from .graphs import CliqueComplex, Graph, bit_indices, build_clique_complex

# eigenvalue |lambda| < ZERO_TOL * max(1, gamma_max) counts as zero; the
# complexes here have integer spectra, so the separation is enormous
ZERO_TOL = 1e-8

# dense eigensolves and exact ranks are capped at this many basis elements
MAX_DENSE_DIM = 4096


def _check_desk_scale(dim: int, what: str) -> None:
    if dim > MAX_DENSE_DIM:
        raise DeskScaleError(f"{what} needs dimension {dim}; desk-scale cap is {MAX_DENSE_DIM}")


@dataclass(frozen=True)
class BoundaryMatrix:
    """Signed boundary operator from size-(k+1) cliques to size-k cliques."""

    k: int
    row_basis: tuple[int, ...]
    col_basis: tuple[int, ...]
    matrix: np.ndarray  # int64, shape (len(row_basis), len(col_basis))


@dataclass(frozen=True)
class DiracOperator:
    """Symmetric block tridiagonal operator over three consecutive clique bases."""

    k: int
    block_sizes: tuple[int, int, int]  # |Cl_{k-1}|, |Cl_k|, |Cl_{k+1}|
    matrix: np.ndarray  # int64, square of size sum(block_sizes)

    @property
    def dimension(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def offsets(self) -> tuple[int, int, int]:
        a, b, _ = self.block_sizes
        return (0, a, a + b)

    def middle_slice(self) -> slice:
        a, b, _ = self.block_sizes
        return slice(a, a + b)


@dataclass(frozen=True)
class SpectralSummary:
    """Sorted Laplacian spectrum with nullity, gap, top eigenvalue and kappa."""

    eigenvalues: np.ndarray
    nullity: int
    gap: float
    top: float
    kappa: float


def boundary_matrix(cx: CliqueComplex, k: int) -> BoundaryMatrix:
    """Matrix of the boundary map from size-(k+1) cliques onto size-k cliques.

    Column x (a size-(k+1) clique) carries entry (-1)^i in the row of the
    subset obtained by clearing the i-th one of x (bit positions in ascending
    order, i counted from 0).
    """
    if k < 1:
        raise ValueError("boundary_matrix needs k >= 1")
    if k + 1 > cx.k_max + 1:
        raise ValueError(f"complex built to size {cx.k_max + 1}; level {k + 1} missing")
    rows = cx.basis(k)
    cols = cx.basis(k + 1)
    row_index = {mask: i for i, mask in enumerate(rows)}
    mat = np.zeros((len(rows), len(cols)), dtype=np.int64)
    for j, mask in enumerate(cols):
        for i, v in enumerate(bit_indices(mask)):
            face = mask & ~(1 << v)
            mat[row_index[face], j] = -1 if i & 1 else 1
    return BoundaryMatrix(k, rows, cols, mat)


def laplacian(cx: CliqueComplex, k: int) -> np.ndarray:
    """Combinatorial Laplacian of dimension k-1, as an integer matrix over Cl_k.

    Equals d_{k-1}^T d_{k-1} + d_k d_k^T where d_k is boundary_matrix(cx, k);
    the down-term vanishes for k = 1 (regular homology, no empty simplex).
    """
    dim = cx.count(k)
    lap = np.zeros((dim, dim), dtype=np.int64)
    if k >= 2:
        down = boundary_matrix(cx, k - 1).matrix
        lap += down.T @ down
    up = boundary_matrix(cx, k).matrix
    lap += up @ up.T
    return lap


def dirac(cx: CliqueComplex, k: int) -> DiracOperator:
    """Block Dirac operator over Cl_{k-1} + Cl_k + Cl_{k+1}.

    Off-diagonal blocks are the boundary maps; squaring block-diagonalizes
    into Laplacian-type blocks, with the k-1 dimensional Laplacian in the
    middle.
    """
    sizes = (cx.count(k - 1) if k >= 2 else 0, cx.count(k), cx.count(k + 1))
    total = sum(sizes)
    mat = np.zeros((total, total), dtype=np.int64)
    a, b, c = sizes
    if k >= 2 and a and b:
        down = boundary_matrix(cx, k - 1).matrix  # Cl_k -> Cl_{k-1}
        mat[0:a, a : a + b] = down
        mat[a : a + b, 0:a] = down.T
    if b and c:
        up = boundary_matrix(cx, k).matrix  # Cl_{k+1} -> Cl_k
        mat[a : a + b, a + b :] = up
        mat[a + b :, a : a + b] = up.T
    return DiracOperator(k, sizes, mat)


def betti_exact(g: Graph, k: int) -> int:
    """Betti number of dimension k-1 of the clique complex, via exact ranks.

    beta = |Cl_k| - rank(d_{k-1}) - rank(d_k), all ranks computed with
    fraction-free integer elimination.
    """
    if k < 1:
        raise ValueError("k must be >= 1 (Hamming weight of the basis states)")
    cx = build_clique_complex(g, k)
    dim = cx.count(k)
    _check_desk_scale(max(dim, cx.count(k + 1), cx.count(k - 1)), f"betti_exact(k={k})")
    rank_down = 0
    if k >= 2 and cx.count(k - 1):
        rank_down = integer_rank(boundary_matrix(cx, k - 1).matrix)
    rank_up = 0
    if cx.count(k + 1):
        rank_up = integer_rank(boundary_matrix(cx, k).matrix)
    return dim - rank_down - rank_up


def _zero_tol(eigenvalues: np.ndarray) -> float:
    top = float(eigenvalues[-1]) if eigenvalues.size else 0.0
    return ZERO_TOL * max(1.0, top)


def spectrum(g: Graph, k: int) -> SpectralSummary:
    """Dense symmetric eigensolve of the (k-1)-Laplacian over Cl_k.

    ``gap`` is the smallest eigenvalue above the zero tolerance (0.0 when the
    whole spectrum is zero), ``kappa`` = top/gap (NaN when gap is 0).
    """
    cx = build_clique_complex(g, k)
    dim = cx.count(k)
    if dim == 0:
        raise ValueError(f"graph has no {k}-cliques; spectrum undefined")
    _check_desk_scale(dim, f"spectrum(k={k})")
    lap = laplacian(cx, k)
    evals = np.linalg.eigvalsh(lap.astype(np.float64))
    evals.sort()
    tol = _zero_tol(evals)
    nullity = int(np.count_nonzero(evals < tol))
    nonzero = evals[evals >= tol]
    gap = float(nonzero[0]) if nonzero.size else 0.0
    top = float(evals[-1])
    kappa = top / gap if gap > 0 else math.nan
    return SpectralSummary(evals, nullity, gap, top, kappa)


def betti_delta_approx(g: Graph, k: int, delta: float) -> int:
    """Count of Laplacian eigenvalues <= delta (Rayleigh-quotient relaxation).

    Monotone nondecreasing in delta; at delta = 0 it reproduces the exact
    Betti number (zero modes are counted with the spectral zero tolerance).
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    summary = spectrum(g, k)
    tol = _zero_tol(summary.eigenvalues)
    return int(np.count_nonzero(summary.eigenvalues <= delta + tol))


def reduced_from_regular(betti: list[int]) -> list[int]:
    """Convert a regular Betti sequence (beta_0, beta_1, ...) to reduced form.

    The only change is degree 0: reduced beta_0 = beta_0 - 1.  This is the
    single place the conversion lives.
    """
    if not betti:
        return []
    out = list(betti)
    out[0] = out[0] - 1
    return out


def kunneth_convolve(reduced_x: list[int], reduced_y: list[int]) -> list[int]:
    """Reduced Betti numbers of a join from those of the factors.

    out[k] = sum over i+j = k-1 of x[i]*y[j]; inputs and output are reduced
    Betti sequences indexed by simplex dimension starting at 0.
    """
    if not reduced_x or not reduced_y:
        return []
    out = [0] * (len(reduced_x) + len(reduced_y))
    for i, xi in enumerate(reduced_x):
        if xi == 0:
            continue
        for j, yj in enumerate(reduced_y):
            out[i + j + 1] += xi * yj
    return out


def betti_sequence(g: Graph, k_max: int) -> list[int]:
    """Regular Betti numbers beta_0..beta_{k_max} (helper for join tests)."""
    return [betti_exact(g, k + 1) for k in range(k_max + 1)]
