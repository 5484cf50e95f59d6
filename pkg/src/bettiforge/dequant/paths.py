"""Closed eigenvector paths for the imaginary-time path integral.

A path visits one eigenvector of each scheduled one-sparse term.  With L =
2 * r_T * D_sched steps per closed loop, positions 0..L-2 are free and the
closing position reuses position 0 (the symmetric ordering makes the first
and last scheduled terms identical).  Position 0 ("the anchor") is pinned to
a computational basis state of the first term, drawn from the weight-k clique
set, which makes the restricted-trace closure exact.

A path is valid when every consecutive overlap (including the closing one)
is nonzero.  Its thermal weight is exp(-(t/r) E) with path energy
E = 2 lambda_0 + sum of the middle eigenvalues, and the estimator weight is

    E_q = (Z / d_k) * W * exp((t/(2r)) E),

where W is the product of the 2 r D - 1 consecutive overlaps and Z the
partition function over valid anchored closed paths, computed exactly by
transfer matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import OneSparseDecomposition, OneSparseTerm


def build_schedule(decomp: OneSparseDecomposition, r_t: int) -> tuple[tuple[int, ...], float]:
    """Scheduled term indices (symmetric order, r_t slices) and the scalar shift.

    Identity terms commute with everything, so they are pulled out of the
    path integral as the exact scalar factor exp(-shift * t); ``shift`` is
    the signed identity weight per unit time.  If the decomposition has no
    other diagonal term, the identity stays scheduled so paths can anchor on
    basis states.
    """
    if r_t < 1:
        raise ValueError("need at least one slice")
    diag_kinds = {"reflection", "identity"}
    has_reflection = any(t.kind == "reflection" for t in decomp.terms)
    scheduled: list[int] = []
    shift = 0.0
    for idx, term in enumerate(decomp.terms):
        if term.kind == "identity" and has_reflection:
            shift += float(term.lam[0])
            continue
        scheduled.append(idx)
    if not scheduled:
        raise ValueError("decomposition has no schedulable terms")
    first = decomp.terms[scheduled[0]]
    if first.kind not in diag_kinds:
        raise ValueError("no diagonal term available to anchor the path closure")
    slice_order = scheduled + scheduled[::-1]
    return tuple(slice_order * r_t), shift


def overlap(tp: OneSparseTerm, e: int, tq: OneSparseTerm, f: int) -> float:
    """Inner product of eigenvector e of term tp with eigenvector f of tq."""
    total = 0.0
    u1, u2 = int(tp.sup1[e]), int(tp.sup2[e])
    v1, v2 = int(tq.sup1[f]), int(tq.sup2[f])
    a1, a2 = float(tp.amp1[e]), float(tp.amp2[e])
    b1, b2 = float(tq.amp1[f]), float(tq.amp2[f])
    if u1 == v1:
        total += a1 * b1
    if u1 == v2:
        total += a1 * b2
    if u2 >= 0:
        if u2 == v1:
            total += a2 * b1
        if u2 == v2:
            total += a2 * b2
    return total


def adjacency(tp: OneSparseTerm, tq: OneSparseTerm) -> np.ndarray:
    """Boolean matrix adj[f, e] = (eigenvector e of tp overlaps f of tq)."""
    n_p, n_q = tp.n_eigs, tq.n_eigs
    adj = np.zeros((n_q, n_p), dtype=bool)
    for e in range(n_p):
        states = [int(tp.sup1[e])]
        if tp.sup2[e] >= 0:
            states.append(int(tp.sup2[e]))
        cands = set()
        for x in states:
            cands.update(tq.state_eigs[x])
        for f in cands:
            if overlap(tp, e, tq, f) != 0.0:
                adj[f, e] = True
    return adj


@dataclass(frozen=True)
class PathSample:
    """Immutable snapshot of one closed anchored path."""

    eig_indices: tuple[int, ...]  # positions 0..L-2; position L-1 reuses 0
    anchor_state: int  # basis index of position 0
    energy: float  # 2 lambda_0 + sum of middle eigenvalues
    w_sign: float
    w_log2: float
    valid: bool

    @property
    def weight(self) -> float:
        return self.w_sign * 2.0**self.w_log2 if self.valid else 0.0


def stationary_log_prob(path: PathSample, t: float, r_t: int) -> float:
    """Log of the unnormalized thermal path weight; -inf for invalid paths."""
    if not path.valid:
        return -math.inf
    return -(t / r_t) * path.energy


class PathSpace:
    """Schedules, overlaps and thermal bookkeeping for one decomposition."""

    def __init__(
        self,
        decomp: OneSparseDecomposition,
        t: float,
        r_t: int,
        anchor_states,
    ):
        if t < 0:
            raise ValueError("imaginary time must be nonnegative")
        self.decomp = decomp
        self.t = float(t)
        self.r_t = int(r_t)
        self.schedule, self.scalar_shift = build_schedule(decomp, r_t)
        self.length = len(self.schedule)  # 2 r D_sched
        self.anchor_states = tuple(int(a) for a in anchor_states)
        if not self.anchor_states:
            raise ValueError("empty anchor set")
        self.terms = decomp.terms
        self._adj: dict[tuple[int, int], np.ndarray] = {}
        first = self.terms[self.schedule[0]]
        for a in self.anchor_states:
            eigs = first.state_eigs[a]
            if len(eigs) != 1 or first.sup2[eigs[0]] >= 0:
                raise ValueError("anchor term must be diagonal on the anchor states")

    # -- adjacency / overlaps -------------------------------------------------

    def adj(self, p: int, q: int) -> np.ndarray:
        key = (p, q)
        if key not in self._adj:
            self._adj[key] = adjacency(self.terms[p], self.terms[q])
        return self._adj[key]

    def anchor_eig(self, state: int) -> int:
        return self.terms[self.schedule[0]].state_eigs[state][0]

    def path_overlaps(self, eig: list[int]) -> tuple[float, float, bool]:
        """(sign, log2 magnitude, valid) of the product of consecutive overlaps."""
        sign = 1.0
        log2 = 0.0
        sched = self.schedule
        last = self.length - 2
        for i in range(last + 1):
            p = sched[i]
            if i < last:
                q, f = sched[i + 1], eig[i + 1]
            else:
                q, f = sched[0], eig[0]
            val = overlap(self.terms[p], eig[i], self.terms[q], f)
            if val == 0.0:
                return 0.0, -math.inf, False
            if val < 0.0:
                sign = -sign
                val = -val
            log2 += math.log2(val)
        return sign, log2, True

    def path_energy(self, eig: list[int]) -> float:
        sched = self.schedule
        total = 2.0 * float(self.terms[sched[0]].lam[eig[0]])
        for i in range(1, self.length - 1):
            total += float(self.terms[sched[i]].lam[eig[i]])
        return total

    def snapshot(self, eig: list[int]) -> PathSample:
        sign, log2, valid = self.path_overlaps(eig)
        anchor = int(self.terms[self.schedule[0]].sup1[eig[0]])
        return PathSample(tuple(eig), anchor, self.path_energy(eig), sign, log2, valid)

    # -- partition function ---------------------------------------------------

    def log_partition(self) -> float:
        """Log of Z = sum of thermal weights over valid anchored closed paths."""
        beta = self.t / self.r_t
        sched = self.schedule
        first = self.terms[sched[0]]
        n_anchor = len(self.anchor_states)
        n0 = first.n_eigs
        vec = np.zeros((n0, n_anchor))
        for col, a in enumerate(self.anchor_states):
            e = self.anchor_eig(a)
            vec[e, col] = 1.0
        anchor_eigs = np.array([self.anchor_eig(a) for a in self.anchor_states])
        w1 = np.exp(-2.0 * beta * first.lam[anchor_eigs])
        log_scale = 0.0
        for i in range(1, self.length - 1):
            p, q = sched[i - 1], sched[i]
            damp = np.exp(-beta * self.terms[q].lam)
            vec = damp[:, None] * (self.adj(p, q) @ vec)
            peak = vec.max(initial=0.0)
            if peak <= 0.0:
                return -math.inf
            vec /= peak
            log_scale += math.log(peak)
        close = self.adj(sched[self.length - 2], sched[0])
        total = 0.0
        for col, a in enumerate(self.anchor_states):
            e = self.anchor_eig(a)
            total += w1[col] * float(close[e, :] @ vec[:, col])
        if total <= 0.0:
            return -math.inf
        return math.log(total) + log_scale

    # -- exhaustive enumeration (toy oracle) ----------------------------------

    def enumerate_paths(self, max_paths: int = 1 << 14) -> list[PathSample]:
        """All valid anchored closed paths (raises if more than max_paths)."""
        sched = self.schedule
        out: list[PathSample] = []
        eig: list[int] = [0] * (self.length - 1)

        def rec(pos: int) -> None:
            if len(out) > max_paths:
                raise RuntimeError(f"more than {max_paths} paths; not a toy instance")
            if pos == self.length - 1:
                closing = overlap(
                    self.terms[sched[pos - 1]],
                    eig[pos - 1],
                    self.terms[sched[0]],
                    eig[0],
                )
                if closing != 0.0:
                    out.append(self.snapshot(eig))
                return
            prev_term = self.terms[sched[pos - 1]]
            term = self.terms[sched[pos]]
            states = [int(prev_term.sup1[eig[pos - 1]])]
            if prev_term.sup2[eig[pos - 1]] >= 0:
                states.append(int(prev_term.sup2[eig[pos - 1]]))
            cands = sorted({f for x in states for f in term.state_eigs[x]})
            for f in cands:
                if overlap(prev_term, eig[pos - 1], term, f) != 0.0:
                    eig[pos] = f
                    rec(pos + 1)

        for a in self.anchor_states:
            eig[0] = self.anchor_eig(a)
            rec(1)
        return out


class MetropolisPathSampler:
    """Metropolis-Hastings over valid anchored closed paths.

    Local moves (symmetric proposals, acceptance min(1, p_b/p_a)):
      * sign flip: swap one middle eigenvector for its opposite-sign partner;
      * block flip: redraw one middle eigenvector uniformly over its term,
        allowing the chain to change which two-dimensional block it traverses;
      * anchor move: redraw the anchor uniformly over the anchor set, via
        rejection sampling from the weight-k strings (frequency recorded).

    Local moves alone are not irreducible: the anchor is wedged between
    diagonal-term positions that must hold the same basis state, so anchor
    sectors cannot exchange.  A fourth move fixes this: an independence
    redraw proposing a whole path from the exact conditional sampler, with
    acceptance min(1, Z_b / Z_a) in the per-anchor partition functions
    (detailed balance holds exactly for the asymmetric proposal).
    """

    def __init__(
        self,
        space: PathSpace,
        rng: np.random.Generator,
        clique_sampler=None,
        sign_prob: float = 0.45,
        block_prob: float = 0.3,
        redraw_prob: float = 0.15,
    ):
        self.space = space
        self.rng = rng
        self.clique_sampler = clique_sampler
        self.sign_prob = sign_prob
        self.block_prob = block_prob
        self.redraw_prob = redraw_prob
        self.accepted = 0
        self.proposed = 0
        self.eig: list[int] = []
        self._beta = space.t / space.r_t
        self._exact = ExactPathSampler(space, rng) if redraw_prob > 0 else None
        self._init_path()

    # -- initialization -------------------------------------------------------

    def _draw_anchor(self) -> int:
        if self.clique_sampler is not None:
            return self.clique_sampler(self.rng)
        idx = self.rng.integers(len(self.space.anchor_states))
        return self.space.anchor_states[idx]

    def _init_path(self, max_tries: int = 200) -> None:
        space = self.space
        sched = space.schedule
        for _ in range(max_tries):
            eig = [0] * (space.length - 1)
            eig[0] = space.anchor_eig(self._draw_anchor())
            ok = True
            for pos in range(1, space.length - 1):
                prev_term = space.terms[sched[pos - 1]]
                term = space.terms[sched[pos]]
                states = [int(prev_term.sup1[eig[pos - 1]])]
                if prev_term.sup2[eig[pos - 1]] >= 0:
                    states.append(int(prev_term.sup2[eig[pos - 1]]))
                cands = [
                    f
                    for x in states
                    for f in term.state_eigs[x]
                    if overlap(prev_term, eig[pos - 1], term, f) != 0.0
                ]
                if not cands:
                    ok = False
                    break
                eig[pos] = cands[self.rng.integers(len(cands))]
            if not ok:
                continue
            closing = overlap(
                space.terms[sched[space.length - 2]],
                eig[space.length - 2],
                space.terms[sched[0]],
                eig[0],
            )
            if closing != 0.0:
                self.eig = eig
                return
        raise RuntimeError(f"no valid closed path found in {max_tries} attempts")

    # -- moves ----------------------------------------------------------------

    def _neighbors_ok(self, pos: int, new_eig: int) -> bool:
        space = self.space
        sched = space.schedule
        eig = self.eig
        last = space.length - 2
        term = space.terms[sched[pos]]
        if pos > 0:
            before = space.terms[sched[pos - 1]]
            if overlap(before, eig[pos - 1], term, new_eig) == 0.0:
                return False
            nxt_pos, nxt_term = (pos + 1, sched[pos + 1]) if pos < last else (0, sched[0])
            if overlap(term, new_eig, space.terms[nxt_term], eig[nxt_pos]) == 0.0:
                return False
        else:
            if overlap(term, new_eig, space.terms[sched[1]], eig[1]) == 0.0:
                return False
            if overlap(space.terms[sched[last]], eig[last], term, new_eig) == 0.0:
                return False
        return True

    def step(self) -> bool:
        space = self.space
        sched = space.schedule
        self.proposed += 1
        u = self.rng.random()
        if u < self.redraw_prob:
            return self._redraw_step()
        u = (u - self.redraw_prob) / max(1.0 - self.redraw_prob, 1e-300)
        if u < self.sign_prob:
            pos = int(self.rng.integers(1, space.length - 1))
            term = space.terms[sched[pos]]
            partner = int(term.partner[self.eig[pos]])
            if partner < 0:
                return False
            new_eig = partner
            weight = 1.0
        elif u < self.sign_prob + self.block_prob:
            pos = int(self.rng.integers(1, space.length - 1))
            term = space.terms[sched[pos]]
            new_eig = int(self.rng.integers(term.n_eigs))
            weight = 1.0
        else:
            pos = 0
            new_eig = space.anchor_eig(self._draw_anchor())
            weight = 2.0
        if new_eig == self.eig[pos]:
            return False
        if not self._neighbors_ok(pos, new_eig):
            return False
        term = space.terms[sched[pos]]
        d_energy = weight * (float(term.lam[new_eig]) - float(term.lam[self.eig[pos]]))
        log_ratio = -self._beta * d_energy
        if log_ratio >= 0.0 or self.rng.random() < math.exp(log_ratio):
            self.eig[pos] = new_eig
            self.accepted += 1
            return True
        return False

    def _redraw_step(self) -> bool:
        """Independence proposal from the exact conditional path sampler."""
        snap, anchor = self._exact.draw()
        cur_anchor = int(self.space.terms[self.space.schedule[0]].sup1[self.eig[0]])
        log_ratio = self._exact.log_z_anchor(anchor) - self._exact.log_z_anchor(cur_anchor)
        if log_ratio >= 0.0 or self.rng.random() < math.exp(log_ratio):
            self.eig = list(snap.eig_indices)
            self.accepted += 1
            return True
        return False

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0

    def sample(self) -> PathSample:
        return self.space.snapshot(self.eig)


def mh_chain(
    decomp: OneSparseDecomposition,
    t: float,
    r_t: int,
    steps: int,
    seed: int,
    anchor_states=None,
) -> list[PathSample]:
    """Run a chain and return one PathSample snapshot per step."""
    if anchor_states is None:
        anchor_states = range(decomp.dim)
    space = PathSpace(decomp, t, r_t, anchor_states)
    sampler = MetropolisPathSampler(space, np.random.default_rng(seed))
    out = []
    for _ in range(steps):
        sampler.step()
        out.append(sampler.sample())
    return out


class ExactPathSampler:
    """Exact draws from the conditional thermal path distribution.

    Conditioned on the anchor, the thermal weight factorizes over the loop
    into nearest-neighbor terms, so backward filtering / forward sampling
    draws Pr(path | anchor) exactly: no burn-in, no mixing error.  The
    per-anchor log partition functions Z_a are a byproduct and give the
    importance weight of the Algorithm-style scheme "anchor uniform over the
    weight-k cliques, then path from the thermal conditional".
    """

    def __init__(self, space: PathSpace, rng: np.random.Generator, clique_sampler=None):
        self.space = space
        self.rng = rng
        self.clique_sampler = clique_sampler
        self._prepare_messages()

    def _prepare_messages(self) -> None:
        space = self.space
        beta = space.t / space.r_t
        sched = space.schedule
        last = space.length - 2  # index of the final free position
        self._damps = [np.exp(-beta * space.terms[sched[i]].lam) for i in range(last + 1)]
        close = space.adj(sched[last], sched[0]).astype(float)
        # messages[i][f, col] = total thermal weight of completions from
        # position i (eigenvector f of sched[i]) back to anchor column col
        anchors = space.anchor_states
        anchor_eigs = [space.anchor_eig(a) for a in anchors]
        n_anchor = len(anchors)
        msgs: list[np.ndarray] = [None] * (last + 1)  # type: ignore[list-item]
        logs = np.zeros(n_anchor)
        m = close[:, anchor_eigs].copy()
        msgs[last] = m
        for i in range(last, 0, -1):
            adj = space.adj(sched[i - 1], sched[i]).astype(float)
            m = adj.T @ (self._damps[i][:, None] * m)
            peak = m.max(axis=0)
            alive = peak > 0
            scale = np.where(alive, peak, 1.0)
            m = m / scale
            logs += np.where(alive, np.log(scale), -np.inf)
            msgs[i - 1] = m
        self._messages = msgs
        w1 = np.array(
            [math.exp(-2.0 * beta * float(space.terms[sched[0]].lam[e])) for e in anchor_eigs]
        )
        starts = np.array([msgs[0][e, col] for col, e in enumerate(anchor_eigs)])
        with np.errstate(divide="ignore"):
            self.log_z_per_anchor = np.log(w1 * starts) + logs
        self._anchor_pos = {a: col for col, a in enumerate(anchors)}

    def log_z_anchor(self, state: int) -> float:
        return float(self.log_z_per_anchor[self._anchor_pos[state]])

    def draw(self) -> tuple[PathSample, int]:
        """One exact sample: (path, anchor state)."""
        space = self.space
        sched = space.schedule
        last = space.length - 2
        if self.clique_sampler is not None:
            anchor = self.clique_sampler(self.rng)
        else:
            anchor = space.anchor_states[self.rng.integers(len(space.anchor_states))]
        col = self._anchor_pos[anchor]
        eig = [0] * (space.length - 1)
        eig[0] = space.anchor_eig(anchor)
        for i in range(1, last + 1):
            prev_term = space.terms[sched[i - 1]]
            term = space.terms[sched[i]]
            states = [int(prev_term.sup1[eig[i - 1]])]
            if prev_term.sup2[eig[i - 1]] >= 0:
                states.append(int(prev_term.sup2[eig[i - 1]]))
            cands = sorted({f for x in states for f in term.state_eigs[x]})
            if i < last:
                forward = self._messages[i][:, col]
            else:
                forward = space.adj(sched[last], sched[0]).astype(float)[:, eig[0]]
            weights = []
            for f in cands:
                if overlap(prev_term, eig[i - 1], term, f) == 0.0:
                    weights.append(0.0)
                else:
                    weights.append(self._damps[i][f] * forward[f])
            total = float(sum(weights))
            if total <= 0.0:
                raise RuntimeError("dead end during exact sampling (inconsistent messages)")
            probs = np.array(weights) / total
            eig[i] = cands[int(self.rng.choice(len(cands), p=probs))]
        return space.snapshot(eig), anchor
