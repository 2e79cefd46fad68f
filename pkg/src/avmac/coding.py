"""Finite-blocklength coding experiments: codebooks, jammers, decoders, error estimates.

Sequences are integer arrays of length n. Message indices start at 0.
Per-trial random streams are derived from one root seed as
``np.random.default_rng([seed, trial])``, so results do not depend on trial order.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .channel import ChannelSpec, ConstraintSpec, CostModel, InputEnsemble, averaged_channel
from .symmetrizability import Symmetrizer, SymmetryKind

REDRAW_CAP = 1000
STATE_SEARCH_CAP_LOG2 = 20
OUTPUT_ENUM_CAP_LOG2 = 24


class CapacityError(ValueError):
    """A requested enumeration or construction exceeds its configured cap."""


# -- codebooks ---------------------------------------------------------------------

@dataclass(frozen=True)
class Codebook:
    n: int
    u: np.ndarray  # time-sharing sequence
    X1: np.ndarray  # (M1, n)
    X2: np.ndarray  # (M2, n)
    cost1: np.ndarray  # per-codeword average input cost
    cost2: np.ndarray

    @property
    def M1(self) -> int:
        return self.X1.shape[0]

    @property
    def M2(self) -> int:
        return self.X2.shape[0]


def _round_counts(p: np.ndarray, total: int) -> np.ndarray:
    """Largest-remainder rounding of total * p to integers summing to total."""
    raw = np.asarray(p, dtype=float) * total
    counts = np.floor(raw + 1e-9).astype(int)
    short = total - counts.sum()
    order = np.lexsort((np.arange(p.size), -(raw - counts)))
    counts[order[:short]] += 1
    return counts


def build_codebook(spec: ChannelSpec, costs: CostModel, constraints: ConstraintSpec, n: int,
                   M1: int, M2: int, ens: InputEnsemble, seed: int = 0,
                   distinct: bool = True, redraw_cap: int = REDRAW_CAP,
                   max_pair_info: float | None = None) -> Codebook:
    """Constant-composition codebooks on a fixed time-sharing sequence.

    u^n lists the letters of U in order with counts nearest n P_U. Within each
    u-block, every codeword of user k has the counts nearest n_u P_{X_k|U=u}
    (pulled toward the cheapest letter if rounding broke the input constraint), in
    a uniformly random order. With ``distinct`` a repeated codeword is redrawn.
    With ``max_pair_info`` (nats) a user-2 codeword is also redrawn while its empirical
    I(X1; X2 | U) with some user-1 codeword exceeds the bound, so that every codeword
    pair has a joint type close to the product of the two compositions.
    """
    if n < 1 or M1 < 1 or M2 < 1:
        raise ValueError("n, M1 and M2 must be positive")
    rng = np.random.default_rng(seed)
    nu_counts = _round_counts(ens.pu, n)
    u = np.repeat(np.arange(ens.nu), nu_counts)
    books = []
    g1size = costs.g1.size
    for rows, g, gamma, M, label in ((ens.px1_given_u, costs.g1, constraints.gamma1, M1, 1),
                                     (ens.px2_given_u, costs.g2, constraints.gamma2, M2, 2)):
        block_counts = [_round_counts(rows[j], int(c)) for j, c in enumerate(nu_counts)]
        # rounding can overshoot the budget: shift single uses to the cheapest letter
        cheap = int(np.argmin(g))
        while sum(bc @ g for bc in block_counts) / n > gamma + 1e-12:
            j, k = max(((j, k) for j, bc in enumerate(block_counts) for k in np.flatnonzero(bc)
                        if g[k] > g[cheap]), key=lambda jk: g[jk[1]], default=(None, None))
            if j is None:
                break
            block_counts[j][k] -= 1
            block_counts[j][cheap] += 1
        total = sum(block_counts)
        cost = (total @ g) / n
        if cost > gamma + 1e-12:
            raise ValueError(f"user {label}: type cost {cost:.6g} exceeds the input constraint {gamma}")
        base = [np.repeat(np.arange(g.size), bc) for bc in block_counts]
        code = np.zeros((M, n), dtype=int)
        seen: set = set()
        for m in range(M):
            for _ in range(redraw_cap):
                word = np.concatenate([rng.permutation(b) for b in base])
                key = word.tobytes()
                if (not distinct or key not in seen) and g[word].mean() <= gamma + 1e-12:
                    if label == 1 or max_pair_info is None or all(
                            _cmi(x1, word, u, g1size, g.size, ens.nu) <= max_pair_info + 1e-12
                            for x1 in books[0]):
                        break
            else:
                raise ValueError(f"user {label}: no admissible distinct codeword after {redraw_cap} draws")
            seen.add(key)
            code[m] = word
        books.append(code)
    X1, X2 = books
    return Codebook(n, u, X1, X2, costs.g1[X1].mean(axis=1), costs.g2[X2].mean(axis=1))


# -- jammers -------------------------------------------------------------------------

@dataclass(frozen=True)
class IIDState:
    q: np.ndarray


@dataclass(frozen=True)
class FixedSequence:
    s: np.ndarray


@dataclass(frozen=True)
class SymJoint:
    """Impersonate a uniformly chosen codeword pair through J(s|x1, x2)."""
    J: np.ndarray  # (n1, n2, ns)
    fallback: int = 0


@dataclass(frozen=True)
class SymCond1:
    """Impersonate a uniformly chosen user-1 codeword through J1(s|x1)."""
    J: np.ndarray  # (n1, ns)
    fallback: int = 0


@dataclass(frozen=True)
class SymCond2:
    J: np.ndarray  # (n2, ns)
    fallback: int = 0


def strategy_from_witness(w: Symmetrizer, spec: ChannelSpec, fallback: int = 0):
    """Jammer strategy built on a symmetrizability witness."""
    if w.kind is SymmetryKind.JOINT:
        return SymJoint(np.asarray(w.J).reshape(spec.n1, spec.n2, spec.ns), fallback)
    cls = SymCond1 if w.kind is SymmetryKind.COND1 else SymCond2
    return cls(np.asarray(w.J), fallback)


def _check_fallback(strategy, costs: CostModel) -> None:
    fb = getattr(strategy, "fallback", None)
    if fb is None:
        return
    if not 0 <= fb < costs.l.size or costs.l[fb] != 0:
        raise ValueError("symmetrizing jammers need a fallback state letter of zero cost")


def _attack_rows(strategy, code: Codebook, m1: int, m2: int) -> np.ndarray:
    """Per-position state pmfs (n, ns) of the attack impersonating (m1, m2)."""
    if isinstance(strategy, SymJoint):
        return strategy.J[code.X1[m1], code.X2[m2]]
    if isinstance(strategy, SymCond1):
        return strategy.J[code.X1[m1]]
    return strategy.J[code.X2[m2]]


def run_jammer(strategy, code: Codebook, costs: CostModel, constraints: ConstraintSpec,
               rng) -> tuple[np.ndarray, bool]:
    """One state sequence from the strategy; returns (s^n, fallback_used)."""
    rng = np.random.default_rng(rng)
    n = code.n
    if isinstance(strategy, IIDState):
        q = np.asarray(strategy.q, dtype=float)
        return rng.choice(q.size, size=n, p=q), False
    if isinstance(strategy, FixedSequence):
        s = np.asarray(strategy.s, dtype=int)
        if s.size != n:
            raise ValueError("fixed state sequence has the wrong length")
        return s, False
    _check_fallback(strategy, costs)
    m1 = int(rng.integers(code.M1)) if not isinstance(strategy, SymCond2) else 0
    m2 = int(rng.integers(code.M2)) if not isinstance(strategy, SymCond1) else 0
    rows = _attack_rows(strategy, code, m1, m2)
    cdf = np.cumsum(rows, axis=1)
    s = np.minimum((cdf < rng.random((n, 1))).sum(axis=1), rows.shape[1] - 1)
    if costs.l[s].mean() > constraints.lam + 1e-12:
        return np.full(n, strategy.fallback, dtype=int), True
    return s, False


# -- decoders --------------------------------------------------------------------

@dataclass(frozen=True)
class TypeDecoder:
    """Joint-type decoder with divergence threshold eta and disambiguation thresholds (nats)."""

    eta: float = 0.05
    eta1: float = 0.05
    eta2: float = 0.05
    cap_log2: float = STATE_SEARCH_CAP_LOG2

    def __post_init__(self):
        if min(self.eta, self.eta1, self.eta2) <= 0:
            raise ValueError("decoder thresholds must be positive")


@dataclass(frozen=True)
class MaxLikelihoodWorstQ:
    """Maximum likelihood under the averaged channel of a fixed state law (not the type decoder)."""

    q: np.ndarray


def _codes(*cols, sizes):
    """Mixed-radix encoding of aligned integer arrays (last axis = time)."""
    out = np.zeros(np.broadcast(*cols).shape, dtype=np.int64)
    for c, k in zip(cols, sizes):
        out = out * k + c
    return out


def _entropy_of_codes(codes: np.ndarray) -> np.ndarray:
    """Empirical entropy (nats) along the last axis for each leading index."""
    n = codes.shape[-1]
    srt = np.sort(codes, axis=-1)
    flat = srt.reshape(-1, n)
    res = np.empty(flat.shape[0])
    for i, row in enumerate(flat):
        _, cnt = np.unique(row, return_counts=True)
        p = cnt / n
        res[i] = -(p * np.log(p)).sum()
    return res.reshape(codes.shape[:-1])


def _cmi(a, b, c, sa, sb, sc) -> float:
    """Empirical I(A;B|C) in nats from aligned integer sequences."""
    return float(_entropy_of_codes(_codes(a, c, sizes=(sa, sc)))
                 + _entropy_of_codes(_codes(b, c, sizes=(sb, sc)))
                 - _entropy_of_codes(_codes(a, b, c, sizes=(sa, sb, sc)))
                 - _entropy_of_codes(c[None, :])[0])


class _TypeDecoderState:
    """Precomputation for one (channel, codebook, decoder, lambda)."""

    def __init__(self, spec: ChannelSpec, code: Codebook, dec: TypeDecoder, costs: CostModel,
                 constraints: ConstraintSpec):
        n, ns = code.n, spec.ns
        if n * np.log2(max(ns, 1)) > dec.cap_log2 + 1e-12:
            raise CapacityError(f"|S|^n = {ns}^{n} exceeds the state-search cap 2^{dec.cap_log2}")
        self.spec, self.code, self.dec = spec, code, dec
        allS = np.array(list(itertools.product(range(ns), repeat=n)), dtype=int).reshape(-1, n)
        self.S = allS[costs.l[allS].mean(axis=1) <= constraints.lam + 1e-12]
        self.nu = int(code.u.max()) + 1
        self.logW = np.log(np.where(spec.W > 0, spec.W, 1.0))
        self.Wpos = spec.W > 0
        self.cache: dict = {}

    def divergences(self, x1: np.ndarray, x2: np.ndarray, y: np.ndarray) -> np.ndarray:
        """D(joint type || P_U P_{X1|U} P_{X2|U} P_{S|U} W) for every allowed s^n."""
        spec, S, u = self.spec, self.S, self.code.u
        n = u.size
        n1, n2, ns, ny = spec.sizes
        nu = self.nu
        # per-position log W and support, for every s^n: (K, n)
        lw = self.logW[x1[None, :], x2[None, :], S, y[None, :]]
        ok = self.Wpos[x1[None, :], x2[None, :], S, y[None, :]].all(axis=1)
        # D = sum_i [log P(u,x1,x2,s,y) - log P(u) - log P(x1|u) - log P(x2|u) - log P(s|u) - log W] / n
        # with all P the empirical joint type; evaluate via counts.
        full = _codes(np.broadcast_to(u, S.shape), np.broadcast_to(x1, S.shape),
                      np.broadcast_to(x2, S.shape), S, np.broadcast_to(y, S.shape),
                      sizes=(nu, n1, n2, ns, ny))
        us = _codes(np.broadcast_to(u, S.shape), S, sizes=(nu, ns))

        def mean_log_count(codes):
            srt = np.sort(codes, axis=1)
            out = np.empty(codes.shape[0])
            for i, row in enumerate(srt):
                _, cnt = np.unique(row, return_counts=True)
                out[i] = (cnt * np.log(cnt)).sum() / n
            return out

        def const_mean_log_count(codes):
            _, cnt = np.unique(codes, return_counts=True)
            return (cnt * np.log(cnt)).sum() / n

        # log P(a) averaged over positions = mean_log_count - log n
        t_full = mean_log_count(full)
        t_us = mean_log_count(us)
        t_u = const_mean_log_count(u)
        t_ux1 = const_mean_log_count(_codes(u, x1, sizes=(nu, n1)))
        t_ux2 = const_mean_log_count(_codes(u, x2, sizes=(nu, n2)))
        # log P(x1|u) = log N(u,x1) - log N(u), etc.; the log n terms cancel except once
        D = (t_full - np.log(n)) - (t_u - np.log(n)) - (t_ux1 - t_u) - (t_ux2 - t_u) - (t_us - t_u) \
            - lw.mean(axis=1)
        return np.where(ok, D, np.inf)

    def decode(self, y: np.ndarray):
        key = y.tobytes()
        if key in self.cache:
            return self.cache[key]
        code, dec, spec = self.code, self.dec, self.spec
        n1, n2, ns, ny = spec.sizes
        nu = self.nu
        u = code.u
        # condition 1 for every pair and state sequence
        passing: dict = {}
        for m1 in range(code.M1):
            for m2 in range(code.M2):
                D = self.divergences(code.X1[m1], code.X2[m2], y)
                idx = np.flatnonzero(D <= dec.eta + 1e-12)
                if idx.size:
                    passing[(m1, m2)] = idx
        winners = []
        for (m1, m2), idx in passing.items():
            x1, x2 = code.X1[m1], code.X2[m2]
            comp_a = [(a, b) for (a, b) in passing if a != m1 and b != m2]
            comp_b = [a for (a, b) in passing if a != m1 and b == m2]
            comp_c = [b for (a, b) in passing if a == m1 and b != m2]
            A = _codes(x1, x2, y, sizes=(n1, n2, ny))
            for k in idx:
                s = self.S[k]
                C = _codes(u, s, sizes=(nu, ns))
                good = all(_cmi(A, _codes(code.X1[a], code.X2[b], sizes=(n1, n2)), C,
                                n1 * n2 * ny, n1 * n2, nu * ns) <= dec.eta + 1e-12
                           for a, b in comp_a)
                good = good and all(_cmi(A, code.X1[a], C, n1 * n2 * ny, n1, nu * ns)
                                    <= dec.eta1 + 1e-12 for a in comp_b)
                good = good and all(_cmi(A, code.X2[b], C, n1 * n2 * ny, n2, nu * ns)
                                    <= dec.eta2 + 1e-12 for b in comp_c)
                if good:
                    winners.append((m1, m2))
                    break
        out = winners[0] if len(winners) == 1 else None
        self.cache[key] = out
        return out


class _MLState:
    def __init__(self, spec: ChannelSpec, code: Codebook, dec: MaxLikelihoodWorstQ):
        Wq = averaged_channel(spec, np.asarray(dec.q, dtype=float))
        with np.errstate(divide="ignore"):
            self.logWq = np.log(Wq)
        self.code = code
        self.cache: dict = {}

    def decode(self, y: np.ndarray):
        key = y.tobytes()
        if key not in self.cache:
            c = self.code
            ll = self.logWq[c.X1[:, None, :], c.X2[None, :, :], y[None, None, :]].sum(axis=2)
            k = int(np.argmax(ll.ravel()))  # first maximum = smallest (m1, m2)
            self.cache[key] = (k // c.M2, k % c.M2)
        return self.cache[key]


def make_decoder(spec: ChannelSpec, code: Codebook, decoder, costs: CostModel,
                 constraints: ConstraintSpec):
    """Decoder object with a ``decode(y)`` method returning (m1, m2) or None (error)."""
    if isinstance(decoder, TypeDecoder):
        return _TypeDecoderState(spec, code, decoder, costs, constraints)
    if isinstance(decoder, MaxLikelihoodWorstQ):
        return _MLState(spec, code, decoder)
    raise TypeError("unknown decoder type")


def decode(decoder, code: Codebook, y, spec: ChannelSpec, costs: CostModel,
           constraints: ConstraintSpec):
    """Decode one output sequence; None means an error verdict (no or several candidates)."""
    return make_decoder(spec, code, decoder, costs, constraints).decode(np.asarray(y, dtype=int))


# -- permutation codes ----------------------------------------------------------------

def permute(seq: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """(pi seq)_i = seq_{pi(i)}, applied along the last axis."""
    return np.asarray(seq)[..., pi]


@dataclass(frozen=True)
class PermutationCode:
    """Codewords sent as pi^{-1} f(m); the decoder sees pi y."""

    base: Codebook
    pi: np.ndarray

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=int)
        if sorted(pi.tolist()) != list(range(self.base.n)):
            raise ValueError("pi must be a permutation of 0..n-1")
        object.__setattr__(self, "pi", pi)

    @property
    def inverse(self) -> np.ndarray:
        return np.argsort(self.pi)

    def as_codebook(self) -> Codebook:
        inv = self.inverse
        b = self.base
        return Codebook(b.n, permute(b.u, inv), permute(b.X1, inv), permute(b.X2, inv),
                        b.cost1, b.cost2)

    def base_equivalent_state(self, s: np.ndarray) -> np.ndarray:
        """State under which the base code sees the same channel as this code under s."""
        return permute(s, self.pi)


# -- exact errors -----------------------------------------------------------------------

def _output_support(spec: ChannelSpec, x1, x2, s):
    rows = spec.W[x1, x2, s]  # (n, ny)
    supp = [np.flatnonzero(r > 0) for r in rows]
    return rows, supp


def conditional_error_exact(spec: ChannelSpec, code: Codebook | PermutationCode, decoder,
                            s, costs: CostModel, constraints: ConstraintSpec,
                            cap_log2: float = OUTPUT_ENUM_CAP_LOG2, _dec=None) -> float:
    """Average error probability over messages for a fixed state sequence, by enumerating
    every output sequence in the support of the channel."""
    s = np.asarray(s, dtype=int)
    if isinstance(code, PermutationCode):
        perm = code
        cb = code.base
    else:
        perm = None
        cb = code
    dec = _dec or make_decoder(spec, cb, decoder, costs, constraints)
    tx = perm.as_codebook() if perm is not None else cb
    total = 0.0
    for m1 in range(cb.M1):
        for m2 in range(cb.M2):
            rows, supp = _output_support(spec, tx.X1[m1], tx.X2[m2], s)
            size = float(np.prod([len(a) for a in supp]))
            if np.log2(size) > cap_log2 + 1e-12:
                raise CapacityError(f"output support 2^{np.log2(size):.1f} exceeds the cap 2^{cap_log2}")
            err = 0.0
            for ys in itertools.product(*supp):
                y = np.array(ys, dtype=int)
                p = float(np.prod(rows[np.arange(cb.n), y]))
                yd = permute(y, perm.pi) if perm is not None else y
                if dec.decode(yd) != (m1, m2):
                    err += p
            total += err
    return total / (cb.M1 * cb.M2)


def attack_state_law(strategy, code: Codebook, costs: CostModel,
                     constraints: ConstraintSpec) -> tuple[dict, float]:
    """Exact law of the symmetrizing jammer's state sequence as {s^n bytes: prob}, together
    with the probability that the fallback sequence replaced an over-budget draw."""
    _check_fallback(strategy, costs)
    n = code.n
    law: dict = {}
    fallback_mass = 0.0
    pairs = [(m1, m2) for m1 in range(code.M1 if not isinstance(strategy, SymCond2) else 1)
             for m2 in range(code.M2 if not isinstance(strategy, SymCond1) else 1)]
    for m1, m2 in pairs:
        rows = _attack_rows(strategy, code, m1, m2)
        supp = [np.flatnonzero(r > 0) for r in rows]
        for ss in itertools.product(*supp):
            s = np.array(ss, dtype=int)
            p = float(np.prod(rows[np.arange(n), s])) / len(pairs)
            if costs.l[s].mean() > constraints.lam + 1e-12:
                s = np.full(n, strategy.fallback, dtype=int)
                fallback_mass += p
            k = s.tobytes()
            law[k] = law.get(k, 0.0) + p
    return law, fallback_mass


def exact_error_under_attack(spec: ChannelSpec, code: Codebook, decoder, strategy,
                             costs: CostModel, constraints: ConstraintSpec) -> tuple[float, float]:
    """(exact average error under the attack law, fallback probability)."""
    law, fallback_mass = attack_state_law(strategy, code, costs, constraints)
    dec = make_decoder(spec, code, decoder, costs, constraints)
    err = 0.0
    for k, p in law.items():
        s = np.frombuffer(k, dtype=int)
        err += p * conditional_error_exact(spec, code, decoder, s, costs, constraints, _dec=dec)
    return err, fallback_mass


# -- Monte Carlo ----------------------------------------------------------------------------

@dataclass
class SimReport:
    trials: int
    errors: int
    estimate: float
    interval: tuple[float, float]
    max_state_cost: float
    fallback_count: int = 0
    input_audit_ok: bool = True
    state_audit_ok: bool = True
    scenario: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"trials": self.trials, "errors": self.errors, "estimate": self.estimate,
                "wilson95": list(self.interval), "max_state_cost": self.max_state_cost,
                "fallback_count": self.fallback_count, "input_audit_ok": self.input_audit_ok,
                "state_audit_ok": self.state_audit_ok, "scenario": self.scenario}


def wilson_interval(errors: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    ci = binomtest(errors, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return (float(ci.low), float(ci.high))


def simulate(spec: ChannelSpec, code: Codebook | PermutationCode, decoder, strategy,
             costs: CostModel, constraints: ConstraintSpec, trials: int = 1000, seed: int = 0,
             random_permutation: bool | None = None) -> SimReport:
    """Monte-Carlo average error. Trial t uses the stream default_rng([seed, t]).

    Passing a PermutationCode (or ``random_permutation=True``) draws a fresh uniform
    permutation per trial: inputs are sent as pi^{-1} f(m) and the decoder sees pi y.
    The jammer only knows the base codebook.
    """
    base = code.base if isinstance(code, PermutationCode) else code
    permuting = isinstance(code, PermutationCode) if random_permutation is None else random_permutation
    dec = make_decoder(spec, base, decoder, costs, constraints)
    input_ok = bool(np.all(base.cost1 <= constraints.gamma1 + 1e-12)
                    and np.all(base.cost2 <= constraints.gamma2 + 1e-12))
    constrained = not isinstance(strategy, IIDState)
    errors = fallbacks = 0
    max_cost = 0.0
    state_ok = True
    n = base.n
    cdfW = np.cumsum(spec.W, axis=-1)
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        m1 = int(rng.integers(base.M1))
        m2 = int(rng.integers(base.M2))
        s, fb = run_jammer(strategy, base, costs, constraints, rng)
        fallbacks += fb
        c = float(costs.l[s].mean())
        max_cost = max(max_cost, c)
        if constrained and c > constraints.lam + 1e-12:
            state_ok = False
        if permuting:
            pi = rng.permutation(n)
            inv = np.argsort(pi)
            x1, x2 = permute(base.X1[m1], inv), permute(base.X2[m2], inv)
        else:
            x1, x2 = base.X1[m1], base.X2[m2]
        cdf = cdfW[x1, x2, s]
        y = np.minimum((cdf < rng.random((n, 1))).sum(axis=1), spec.ny - 1)
        if permuting:
            y = permute(y, pi)
        if dec.decode(y) != (m1, m2):
            errors += 1
    return SimReport(trials, errors, errors / trials if trials else 0.0,
                     wilson_interval(errors, trials), max_cost, fallbacks, input_ok, state_ok,
                     {"n": n, "M1": base.M1, "M2": base.M2, "trials": trials, "seed": seed,
                      "permutation": bool(permuting), "decoder": type(decoder).__name__,
                      "strategy": type(strategy).__name__})
