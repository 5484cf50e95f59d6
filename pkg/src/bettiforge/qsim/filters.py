"""Chebyshev eigenvalue filter and its spectral application.

The filter acting on a walk eigenphase phi is

    w(phi) = eps * T_ell(beta cos phi),   beta = cosh(acosh(1/eps)/ell),

peaked at phi = 0 and pi (where the zero Hamiltonian eigenvalue lands) with
value exactly 1, and bounded by eps once |beta cos phi| <= 1.  Applying it to
the uniform mixture over the weight-k cliques and measuring the squared
amplitude yields beta_{k-1}/|Cl_k| up to an additive error of at most eps^2.

Filtering is applied spectrally: we diagonalize the restricted Dirac operator
and multiply each eigencomponent by w(arcsin(E/lambda)).  The walk operator
itself is validated separately in walkenc; this module checks the filter
math, not gate-level ancilla bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..graphs import Graph, build_clique_complex
from ..homology import dirac


def chebyshev_t(ell: int, x) -> np.ndarray:
    """T_ell(x) for any real x, stable outside [-1, 1] via the cosh form."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    inside = np.abs(x) <= 1.0
    out[inside] = np.cos(ell * np.arccos(x[inside]))
    hi = x > 1.0
    out[hi] = np.cosh(ell * np.arccosh(x[hi]))
    lo = x < -1.0
    out[lo] = (-1.0) ** ell * np.cosh(ell * np.arccosh(-x[lo]))
    return out


def chebyshev_filter_response(ell: int, epsilon: float, phi) -> np.ndarray:
    """w(phi) = eps T_ell(beta cos phi); w(0) = 1 and |w| <= eps past the gap."""
    if ell <= 0:
        raise ValueError("filter degree must be positive")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("suppression factor must lie in (0, 1)")
    beta = math.cosh(math.acosh(1.0 / epsilon) / ell)
    return epsilon * chebyshev_t(ell, beta * np.cos(np.asarray(phi, dtype=float)))


def filter_halfwidth(ell: int, epsilon: float) -> float:
    """Peak half-width: the phi solving beta cos(phi) = 1."""
    beta = math.cosh(math.acosh(1.0 / epsilon) / ell)
    return math.acos(1.0 / beta)


@dataclass(frozen=True)
class FilterApplication:
    ell: int
    epsilon: float
    lam: float
    eigenvalues: np.ndarray  # restricted Dirac spectrum
    responses: np.ndarray  # w(arcsin(E/lambda)) per eigenvalue
    middle_weights: np.ndarray  # squared weight of each eigenvector on Cl_k
    clique_count: int
    amplitude_sq: float


def apply_filter_to_state(g: Graph, k: int, ell: int, epsilon: float) -> FilterApplication:
    """Squared amplitude after filtering the uniform clique mixture.

    Returns sum_mu w(phi_mu)^2 * |Pi_k mu|^2 / |Cl_k| over the eigenvectors mu
    of the restricted Dirac operator, with phi_mu = arcsin(E_mu / n).  The
    zero modes pass with response exactly 1; everything past the gap is
    suppressed to eps, so the result is beta/|Cl_k| within eps^2.
    """
    cx = build_clique_complex(g, k)
    cl_k = cx.count(k)
    if cl_k == 0:
        raise ValueError(f"graph has no {k}-cliques")
    dop = dirac(cx, k)
    evals, evecs = np.linalg.eigh(dop.matrix.astype(np.float64))
    lam = float(g.n)
    phi = np.arcsin(np.clip(evals / lam, -1.0, 1.0))
    responses = chebyshev_filter_response(ell, epsilon, phi)
    mid = dop.middle_slice()
    middle_weights = (evecs[mid, :] ** 2).sum(axis=0)
    amplitude_sq = float((responses**2) @ middle_weights / cl_k)
    return FilterApplication(ell, epsilon, lam, evals, responses, middle_weights, cl_k, amplitude_sq)


def dirac_gap(g: Graph, k: int) -> float:
    """Smallest nonzero |eigenvalue| of the restricted Dirac operator.

    This is the square root of the Laplacian gap and is the quantity the
    filter width must actually resolve on the walk phases.
    """
    cx = build_clique_complex(g, k)
    dop = dirac(cx, k)
    evals = np.abs(np.linalg.eigvalsh(dop.matrix.astype(np.float64)))
    tol = 1e-8 * max(1.0, float(evals.max(initial=0.0)))
    nonzero = evals[evals > tol]
    if nonzero.size == 0:
        raise ValueError("operator has no nonzero modes")
    return float(nonzero.min())
