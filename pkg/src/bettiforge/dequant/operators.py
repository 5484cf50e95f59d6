"""Penalized squared Dirac operator and its one-sparse unitary decomposition.

The ambient space is spanned by ALL bit strings of Hamming weight k-1, k, k+1
(cliques or not).  On it we build the hopping Dirac operator B, restrict it
to the clique/weight projector P as B_G = P B P, and penalize the complement:

    H = B_G^2 + gamma_pen (1 - P).

H is positive semidefinite; its kernel restricted to the weight-k clique
states has dimension beta_{k-1}, and every nonzero eigenvalue is at least
min(gamma_min, gamma_pen) where gamma_min is the smallest nonzero eigenvalue
of B_G^2.

The decomposition H = sum_p c_p H_p uses terms of two shapes, both one-sparse
Hermitian with eigenvalues +-c_p on their support:

  * diagonal reflections, one per distinct diagonal value (plus one identity
    term), obtained from indicator = (I - reflection)/2;
  * off-diagonal matchings: the nonzero off-diagonal graph is split by entry
    magnitude and greedily edge-colored, so each term is a partial matching
    with entries of a single magnitude.

Matching terms act as zero outside their support ("involution on support");
their eigenvector catalogs below list those fixed basis states with
eigenvalue 0.  Diagonal terms are listed first so a computational basis
state is an exact eigenstate of the first scheduled term, which makes the
trace closure of the path integral exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DeskScaleError
from ..graphs import Graph, is_clique
from ..homology import ZERO_TOL

MAX_DEQUANT_QUBITS = 8


@dataclass(frozen=True)
class AmbientBasis:
    """Sorted bit strings of weight k-1, k, k+1 with clique annotations."""

    n: int
    k: int
    states: tuple[int, ...]
    clique_flags: np.ndarray  # bool per state
    weight_k_clique_indices: np.ndarray  # indices into states

    @property
    def dim(self) -> int:
        return len(self.states)


def ambient_basis(g: Graph, k: int) -> AmbientBasis:
    if g.n > MAX_DEQUANT_QUBITS:
        raise DeskScaleError(f"dequantizer supports n <= {MAX_DEQUANT_QUBITS}, got {g.n}")
    if not 1 <= k <= g.n:
        raise ValueError(f"weight k={k} outside 1..{g.n}")
    # the weight-0 state is excluded at k = 1: keeping it would add the
    # empty-simplex boundary and turn degree-0 homology into reduced homology
    states = [x for x in range(1 << g.n) if max(k - 1, 1) <= x.bit_count() <= k + 1]
    states.sort()
    flags = np.array([is_clique(g, x) for x in states])
    wk = np.array(
        [i for i, x in enumerate(states) if x.bit_count() == k and flags[i]], dtype=np.int64
    )
    return AmbientBasis(g.n, k, tuple(states), flags, wk)


def _ambient_dirac(basis: AmbientBasis) -> np.ndarray:
    """Hopping sum restricted to the ambient weight window."""
    index = {x: i for i, x in enumerate(basis.states)}
    dim = basis.dim
    mat = np.zeros((dim, dim))
    for i, x in enumerate(basis.states):
        for j in range(basis.n):
            y = x ^ (1 << j)
            other = index.get(y)
            if other is None:
                continue
            sign = -1.0 if (x & ((1 << j) - 1)).bit_count() & 1 else 1.0
            mat[other, i] += sign
    return mat


@dataclass(frozen=True)
class PenalizedOperator:
    basis: AmbientBasis
    matrix: np.ndarray
    gamma_pen: float
    gamma_min: float  # smallest nonzero eigenvalue of B_G^2
    gamma_max: float  # largest eigenvalue of the penalized operator
    d_k: int  # C(n, k), the normalization of the estimator

    def kernel_dim_weight_k(self) -> int:
        """Nullity of the operator restricted to the weight-k clique block."""
        idx = self.basis.weight_k_clique_indices
        sub = self.matrix[np.ix_(idx, idx)]
        evals = np.linalg.eigvalsh(sub)
        tol = ZERO_TOL * max(1.0, float(evals.max(initial=0.0)))
        return int(np.count_nonzero(np.abs(evals) < tol))


def penalized_operator(g: Graph, k: int, gamma_pen: float | str = "gap") -> PenalizedOperator:
    """Build B_G^2 + gamma_pen (1-P) on the ambient weight window.

    ``gamma_pen`` may be an explicit positive number, "gap" (the oracle value
    gamma_min), or "max" (the safe, looser choice gamma_max of B_G^2).
    """
    basis = ambient_basis(g, k)
    if basis.weight_k_clique_indices.size == 0:
        raise ValueError(f"graph has no {k}-cliques")
    b_full = _ambient_dirac(basis)
    proj = basis.clique_flags.astype(float)
    b_rest = proj[:, None] * b_full * proj[None, :]
    h = b_rest @ b_rest
    evals = np.linalg.eigvalsh(h)
    tol = ZERO_TOL * max(1.0, float(evals.max(initial=0.0)))
    nonzero = evals[evals > tol]
    gamma_min = float(nonzero.min()) if nonzero.size else 0.0
    gamma_max_b2 = float(evals.max(initial=0.0))
    if gamma_pen == "gap":
        pen = gamma_min
    elif gamma_pen == "max":
        pen = gamma_max_b2
    else:
        pen = float(gamma_pen)
    if pen <= 0:
        raise ValueError("penalty weight must be positive (operator has no nonzero mode?)")
    h = h + pen * np.diag(1.0 - proj)
    gamma_max = float(np.linalg.eigvalsh(h).max(initial=0.0))
    return PenalizedOperator(basis, h, pen, gamma_min, gamma_max, math.comb(g.n, k))


# ---------------------------------------------------------------------------
# one-sparse decomposition


@dataclass(frozen=True)
class OneSparseTerm:
    """One term c * H with H a one-sparse Hermitian involution on its support.

    The eigenvector catalog is flattened into parallel arrays: eigenvector e
    has eigenvalue lam[e] and support states sup1[e] (and sup2[e] unless -1)
    with amplitudes amp1[e], amp2[e].  ``partner[e]`` is the opposite-sign
    eigenvector of the same two-dimensional block (-1 for singletons), and
    ``state_eigs[x]`` lists the eigenvectors whose support contains x.
    """

    coeff: float
    kind: str  # "identity", "reflection", or "matching"
    lam: np.ndarray
    sup1: np.ndarray
    sup2: np.ndarray
    amp1: np.ndarray
    amp2: np.ndarray
    partner: np.ndarray
    state_eigs: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def n_eigs(self) -> int:
        return int(self.lam.size)

    def dense(self, dim: int) -> np.ndarray:
        """Reassemble c * H as a dense matrix (test/oracle path)."""
        mat = np.zeros((dim, dim))
        seen_pairs = set()
        for e in range(self.n_eigs):
            u, v = int(self.sup1[e]), int(self.sup2[e])
            if v < 0:
                mat[u, u] += self.lam[e]
            else:
                key = (min(u, v), max(u, v))
                if key in seen_pairs:
                    continue
                seen_pairs.add(key)
                # eigenvalue of the (+) combination carries the entry sign
                entry = self.lam[e] if self.amp2[e] > 0 else -self.lam[e]
                mat[u, v] += entry
                mat[v, u] += entry
        return mat


def _diag_term(coeff: float, values: np.ndarray, kind: str) -> OneSparseTerm:
    dim = values.size
    lam = values.astype(float)
    sup1 = np.arange(dim, dtype=np.int64)
    sup2 = np.full(dim, -1, dtype=np.int64)
    amp1 = np.ones(dim)
    amp2 = np.zeros(dim)
    partner = np.full(dim, -1, dtype=np.int64)
    state_eigs = tuple((i,) for i in range(dim))
    return OneSparseTerm(coeff, kind, lam, sup1, sup2, amp1, amp2, partner, state_eigs)


def _matching_term(coeff: float, pairs: list[tuple[int, int, float]], dim: int) -> OneSparseTerm:
    """Pairs (u, v, sign) all of magnitude ``coeff``; other states are fixed."""
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    lam, sup1, sup2, amp1, amp2, partner = [], [], [], [], [], []
    state_eigs: list[list[int]] = [[] for _ in range(dim)]
    covered = np.zeros(dim, dtype=bool)
    for u, v, sgn in pairs:
        base = len(lam)
        for s in (+1.0, -1.0):
            lam.append(s * sgn * coeff)
            sup1.append(u)
            sup2.append(v)
            amp1.append(inv_sqrt2)
            amp2.append(s * inv_sqrt2)
        partner.extend([base + 1, base])
        state_eigs[u].extend((base, base + 1))
        state_eigs[v].extend((base, base + 1))
        covered[u] = covered[v] = True
    for x in np.nonzero(~covered)[0]:
        e = len(lam)
        lam.append(0.0)
        sup1.append(int(x))
        sup2.append(-1)
        amp1.append(1.0)
        amp2.append(0.0)
        partner.append(-1)
        state_eigs[int(x)].append(e)
    return OneSparseTerm(
        coeff,
        "matching",
        np.array(lam),
        np.array(sup1, dtype=np.int64),
        np.array(sup2, dtype=np.int64),
        np.array(amp1),
        np.array(amp2),
        np.array(partner, dtype=np.int64),
        tuple(tuple(se) for se in state_eigs),
    )


@dataclass(frozen=True)
class OneSparseDecomposition:
    dim: int
    terms: tuple[OneSparseTerm, ...]
    bound_audit: dict = field(repr=False)

    @property
    def D(self) -> int:
        return len(self.terms)

    @property
    def coeff_sum(self) -> float:
        return float(sum(t.coeff for t in self.terms))

    def dense(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        for t in self.terms:
            out += t.dense(self.dim)
        return out


def one_sparse_decompose(mat: np.ndarray, tol: float = 1e-12) -> OneSparseDecomposition:
    """Exact decomposition of a real symmetric matrix into weighted involutions."""
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("expected a square matrix")
    if np.abs(mat - mat.T).max(initial=0.0) > tol:
        raise ValueError("matrix is not symmetric")
    dim = mat.shape[0]
    terms: list[OneSparseTerm] = []

    # diagonal part: one reflection per distinct value plus one identity term;
    # indicator(S) = (1 + reflection(S))/2 makes the split exact.  Values are
    # grouped by exact float equality, which is safe because the operator
    # entries are integer sums plus a single repeated penalty float.
    diag = mat.diagonal().copy()
    distinct = sorted({float(v) for v in diag if v != 0.0})
    ident = sum(distinct) / 2.0
    for v in distinct:
        values = np.where(diag == v, v / 2.0, -v / 2.0)
        terms.append(_diag_term(abs(v) / 2.0, values, "reflection"))
    if abs(ident) > tol:
        terms.append(_diag_term(abs(ident), np.full(dim, ident), "identity"))

    # off-diagonal part: split by magnitude, then greedy edge coloring
    iu, ju = np.nonzero(np.triu(np.abs(mat), k=1) > tol)
    edges = sorted(zip(iu.tolist(), ju.tolist()))
    by_mag: dict[float, list[tuple[int, int]]] = {}
    for u, v in edges:
        by_mag.setdefault(float(abs(mat[u, v])), []).append((u, v))
    max_degree = 0
    n_colors_total = 0
    for mag in sorted(by_mag):
        colors: list[list[tuple[int, int, float]]] = []
        color_used: list[np.ndarray] = []
        degree = np.zeros(dim, dtype=int)
        for u, v in by_mag[mag]:
            degree[u] += 1
            degree[v] += 1
            for ci in range(len(colors)):
                if not color_used[ci][u] and not color_used[ci][v]:
                    break
            else:
                colors.append([])
                color_used.append(np.zeros(dim, dtype=bool))
                ci = len(colors) - 1
            colors[ci].append((u, v, math.copysign(1.0, mat[u, v])))
            color_used[ci][u] = color_used[ci][v] = True
        max_degree = max(max_degree, int(degree.max(initial=0)))
        n_colors_total += len(colors)
        for matching in colors:
            terms.append(_matching_term(mag, matching, dim))

    audit = {
        "n_terms": len(terms),
        "n_diag_terms": sum(1 for t in terms if t.kind != "matching"),
        "n_matchings": n_colors_total,
        "max_offdiag_degree": max_degree,
        "distinct_diag_values": len(distinct),
        "distinct_offdiag_magnitudes": len(by_mag),
        # greedy coloring uses at most 2*Delta - 1 colors per magnitude class
        "coloring_bound": len(by_mag) * max(2 * max_degree - 1, 0)
        + len(distinct)
        + 1,
    }
    # diagonal terms first so the path anchor is a computational basis state
    terms.sort(key=lambda t: {"reflection": 0, "identity": 1, "matching": 2}[t.kind])
    return OneSparseDecomposition(dim, tuple(terms), audit)
