"""Rate regions of the state-constrained two-user arbitrarily varying MAC.

Three regions are computed, all as unions of pentagons
``{R1 <= I1, R2 <= I2, R1 + R2 <= Isum}`` over input ensembles, where each of
the three mutual informations is minimized over the jammer's state laws:

* random code: one state law q(s), independent of the time-sharing variable U,
  with E_q l(S) <= lambda. The union is convex;
* divided randomness: a state law q(s|u) per time-sharing letter. By default the
  budget is on the average cost sum_u P(u) E[l(S)|U=u] <= lambda; pass
  ``budget="per_u"`` to require E[l(S)|U=u] <= lambda for every u instead;
* deterministic code: the divided-randomness pentagons restricted to ensembles
  that make symmetrizing too expensive, or a single-user segment, or the origin,
  depending on where the jamming thresholds sit relative to lambda.
"""
from __future__ import annotations

import enum
import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from . import lp
from .channel import ChannelSpec, ConstraintSpec, CostModel, InputEnsemble, StateLaw
from .symmetrizability import SymmetryKind, Thresholds, thresholds, tilde_lambda

FW_TOL = 1e-6  # Frank-Wolfe duality gap (bits) at which a minimization stops
FW_MAX_ITER = 2000
BOUNDARY_TOL = 1e-6  # |L - lambda| below this leaves the deterministic region undetermined
RESTRICT_MARGIN = 1e-9  # slack when testing min(tilde lambdas) >= lambda
RESTRICT_FLAG = 1e-6  # ensembles this close to the restriction boundary are flagged
BOUNDARY_SAMPLES = 256
_LOG_FLOOR = 1e-300
_SMOOTH = 1e-12

TERMS = ("I1", "I2", "Isum")


class Mode(enum.Enum):
    RANDOM = "random"
    DIVIDED = "divided"
    DETERMINISTIC = "deterministic"


# -- state feasible sets ---------------------------------------------------------

@dataclass(frozen=True)
class CostConstrained:
    """{q : E_q l(S) <= lam}."""

    lam: float
    l: np.ndarray

    def __post_init__(self):
        l = np.asarray(self.l, dtype=float).ravel()
        if l.size == 0 or np.any(l < 0) or not np.any(l <= self.lam + 1e-12):
            raise ValueError("state costs must be nonnegative with at least one letter within budget")
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "lam", float(self.lam))

    def vertices(self) -> np.ndarray:
        """Extreme points: affordable point masses and two-letter mixes on the budget line."""
        ns = self.l.size
        out = []
        for s in range(ns):
            if self.l[s] <= self.lam + 1e-12:
                v = np.zeros(ns)
                v[s] = 1.0
                out.append(v)
        for a in range(ns):
            if self.l[a] >= self.lam - 1e-12:
                continue
            for b in range(ns):
                if self.l[b] <= self.lam + 1e-12:
                    continue
                t = (self.lam - self.l[a]) / (self.l[b] - self.l[a])
                v = np.zeros(ns)
                v[a], v[b] = 1.0 - t, t
                out.append(v)
        return np.array(out)


@dataclass(frozen=True)
class ExplicitList:
    """A finite list of state pmfs."""

    laws: tuple

    def __post_init__(self):
        laws = tuple(np.asarray(q, dtype=float).ravel() for q in self.laws)
        if not laws:
            raise ValueError("ExplicitList needs at least one state law")
        for q in laws:
            if np.any(q < -1e-9) or abs(q.sum() - 1.0) > 1e-9 or q.size != laws[0].size:
                raise ValueError("ExplicitList entries must be pmfs of equal length")
        object.__setattr__(self, "laws", laws)


def cost_constrained(costs: CostModel, lam: float) -> CostConstrained:
    return CostConstrained(lam, costs.l)


# -- minimizing one information term over state laws -----------------------------

@dataclass
class InfoMin:
    value: float
    law: StateLaw
    gap: float  # Frank-Wolfe duality gap: value - true minimum <= gap
    converged: bool
    iterations: int = 0


class _Objective:
    """One of I1, I2, Isum (bits) as a function of the state-law matrix Q (rows x ns)."""

    def __init__(self, spec: ChannelSpec, ens: InputEnsemble, which: str, shared: bool):
        if which not in TERMS:
            raise ValueError(f"which must be one of {TERMS}")
        self.spec, self.ens, self.which, self.shared = spec, ens, which, shared
        self.w = ens.joint()  # P(u, x1, x2)
        self.p1, self.p2 = ens.px1_given_u, ens.px2_given_u
        self.rows = 1 if shared else ens.nu

    def full(self, Q):
        return np.repeat(Q, self.ens.nu, axis=0) if self.shared else Q

    def _parts(self, Q):
        P = np.einsum("abst,us->uabt", self.spec.W, self.full(Q))
        if self.which == "I1":
            ref = np.einsum("ua,uabt->ubt", self.p1, P)[:, None, :, :]
        elif self.which == "I2":
            ref = np.einsum("ub,uabt->uat", self.p2, P)[:, :, None, :]
        else:
            ref = np.einsum("ua,ub,uabt->ut", self.p1, self.p2, P)[:, None, None, :]
        return P, ref

    def value(self, Q) -> float:
        P, ref = self._parts(Q)
        ref = np.broadcast_to(ref, P.shape)
        mask = (P > 0) & (self.w[..., None] > 0)
        t = np.zeros_like(P)
        t[mask] = P[mask] * (np.log2(P[mask]) - np.log2(ref[mask]))
        return max(float((self.w[..., None] * t).sum()), 0.0)

    def grad(self, Q) -> np.ndarray:
        # evaluated at a point nudged into the interior so zero-probability outputs
        # contribute their one-sided derivative instead of log 0
        Qs = (1 - _SMOOTH) * Q + _SMOOTH / Q.shape[1]
        P, ref = self._parts(Qs)
        L = np.log2(np.maximum(P, _LOG_FLOOR)) - np.log2(np.maximum(ref, _LOG_FLOOR))
        G = np.einsum("uab,abst,uabt->us", self.w, self.spec.W, L)
        return G.sum(axis=0, keepdims=True) if self.shared else G


class _Polytope:
    """Feasible state-law matrices with a linear minimization oracle."""

    def __init__(self, feasible: CostConstrained, rows: int, pu: np.ndarray, coupled: bool):
        self.rows = rows
        self.pu = pu
        self.coupled = coupled and rows > 1
        self.feasible = feasible
        self.V = feasible.vertices()

    def start(self) -> np.ndarray:
        v = self.V[np.argmin(self.V @ self.feasible.l)]
        return np.repeat(v[None, :], self.rows, axis=0)

    def lmo(self, G: np.ndarray) -> np.ndarray:
        if not self.coupled:
            idx = np.argmin(G @ self.V.T, axis=1)
            return self.V[idx]
        # rows share one average budget: a small LP whose basic solutions are vertices
        rows, ns = G.shape
        l = self.feasible.l
        A_eq = np.kron(np.eye(rows), np.ones((1, ns)))
        A_ub = np.kron(self.pu[None, :], l[None, :])
        res = lp.linprog(G.ravel(), A_eq, np.ones(rows), A_ub, np.array([self.feasible.lam]))
        if not res.success:
            raise lp.LPFailure("state-law oracle LP failed")
        X = res.x.reshape(rows, ns)
        return np.round(X / X.sum(axis=1, keepdims=True), 14)


def _corrective(obj: _Objective, verts: list, alpha: np.ndarray, fx: float):
    """Re-optimize the weights over the active vertices (fully corrective step)."""
    V = np.array(verts)

    def f(a):
        return obj.value(np.tensordot(a, V, axes=1))

    def jac(a):
        G = obj.grad(np.tensordot(np.clip(a, 0, None), V, axes=1))
        return np.tensordot(V, G, axes=([1, 2], [0, 1]))

    r = minimize(f, alpha, jac=jac, method="SLSQP", bounds=[(0.0, 1.0)] * len(verts),
                 constraints=[{"type": "eq", "fun": lambda a: a.sum() - 1.0,
                               "jac": lambda a: np.ones_like(a)}],
                 options={"ftol": 1e-15, "maxiter": 100})
    a = np.clip(r.x, 0.0, None)
    a /= a.sum()
    fa = f(a)
    return (a, fa) if fa < fx else (alpha, fx)


def _frank_wolfe(obj: _Objective, poly: _Polytope, tol: float, max_iter: int) -> InfoMin:
    """Fully corrective Frank-Wolfe: add the linear-minimization vertex, then
    re-optimize the convex weights of all active vertices."""
    verts = [poly.start()]
    alpha = np.ones(1)
    x = verts[0]
    fx = obj.value(x)
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        G = obj.grad(x)
        s = poly.lmo(G)
        gap = float(np.sum(G * (x - s)))
        if gap <= tol:
            break
        if any(np.array_equal(s, v) for v in verts):
            # the oracle vertex is already active; the corrective step did not finish
            a_new, f_new = _corrective(obj, verts, alpha, fx)
        else:
            verts.append(s)
            a0 = np.append(alpha, 0.0)
            # plain FW line search first so progress never depends on SLSQP alone
            d = s - x
            r = minimize_scalar(lambda g: obj.value(x + g * d), bounds=(0.0, 1.0),
                                method="bounded", options={"xatol": 1e-12})
            g = float(r.x) if r.fun < fx else 0.0
            a0 = (1 - g) * a0
            a0[-1] += g
            f0 = min(float(r.fun), fx) if g > 0 else fx
            a_new, f_new = _corrective(obj, verts, a0, f0)
        if f_new >= fx - 1e-16 and it > 1 and gap < 10 * tol:
            break
        keep = a_new > 1e-13
        verts = [v for v, k in zip(verts, keep) if k]
        alpha = a_new[keep] / a_new[keep].sum()
        x = np.tensordot(alpha, np.array(verts), axes=1)
        fx = obj.value(x)
    x = np.clip(x, 0.0, None)
    x /= x.sum(axis=1, keepdims=True)
    return InfoMin(fx, StateLaw(x, not obj.shared), max(gap, 0.0), gap <= max(tol, 1e-6), it)


def min_info_over_states(spec: ChannelSpec, ens: InputEnsemble, feasible, which: str = "I1",
                         per_u: bool = False, budget: str = "average", tol: float = FW_TOL,
                         max_iter: int = FW_MAX_ITER) -> InfoMin:
    """Minimize one conditional mutual information over the jammer's state laws.

    ``which`` selects I(X1;Y|X2,U), I(X2;Y|X1,U) or I(X1,X2;Y|U). With ``per_u``
    the state law may depend on U; ``budget`` then says whether the cost limit
    binds on average over U ("average") or for every u separately ("per_u").
    Cost-constrained sets are handled by fully corrective Frank-Wolfe; explicit lists
    are enumerated.
    """
    if which not in TERMS:
        raise ValueError(f"which must be one of {TERMS}")
    if budget not in ("average", "per_u"):
        raise ValueError("budget must be 'average' or 'per_u'")
    shared = not per_u
    obj = _Objective(spec, ens, which, shared)
    if isinstance(feasible, ExplicitList):
        if feasible.laws[0].size != spec.ns:
            raise ValueError("ExplicitList laws do not match |S|")
        if shared:
            vals = [obj.value(q[None, :]) for q in feasible.laws]
            k = int(np.argmin(vals))
            return InfoMin(vals[k], StateLaw.unconditional(feasible.laws[k]), 0.0, True, len(vals))
        # the objective separates over u, so pick the best list entry for each u
        rows = []
        for u in range(ens.nu):
            sub = InputEnsemble([1.0], ens.px1_given_u[u:u + 1], ens.px2_given_u[u:u + 1])
            o = _Objective(spec, sub, which, True)
            rows.append(feasible.laws[int(np.argmin([o.value(q[None, :]) for q in feasible.laws]))])
        Q = np.array(rows)
        return InfoMin(obj.value(Q), StateLaw.given_u(Q), 0.0, True, len(feasible.laws))
    if not isinstance(feasible, CostConstrained):
        raise TypeError("feasible must be CostConstrained or ExplicitList")
    if feasible.l.size != spec.ns:
        raise ValueError("state cost vector does not match |S|")
    if spec.ns == 1:
        Q = np.ones((obj.rows, 1))
        return InfoMin(obj.value(Q), StateLaw(Q, per_u), 0.0, True, 0)
    poly = _Polytope(feasible, obj.rows, ens.pu, coupled=(per_u and budget == "average"))
    res = _frank_wolfe(obj, poly, tol, max_iter)
    if not res.converged:
        warnings.warn(f"state minimization stopped with gap {res.gap:.3g}", RuntimeWarning,
                      stacklevel=2)
    return res


def info_gradient(spec: ChannelSpec, ens: InputEnsemble, which: str, q) -> np.ndarray:
    """Gradient in q(s) of the chosen term for a shared state law."""
    obj = _Objective(spec, ens, which, True)
    return obj.grad(np.asarray(q, dtype=float)[None, :])[0]


def info_value(spec: ChannelSpec, ens: InputEnsemble, which: str, q) -> float:
    """The chosen term (bits) under a shared state law q."""
    return _Objective(spec, ens, which, True).value(np.asarray(q, dtype=float)[None, :])


# -- pentagons and regions ---------------------------------------------------------

@dataclass
class Pentagon:
    """{R1 <= r1_max, R2 <= r2_max, R1 + R2 <= sum_max, R1, R2 >= 0}."""

    r1_max: float
    r2_max: float
    sum_max: float
    ensemble: InputEnsemble | None = None

    def __post_init__(self):
        for name in ("r1_max", "r2_max", "sum_max"):
            v = float(getattr(self, name))
            if not v >= -1e-9:
                raise ValueError(f"pentagon bound {name}={v} is negative")
            setattr(self, name, max(v, 0.0))

    @property
    def a(self) -> float:
        return min(self.r1_max, self.sum_max)

    @property
    def b(self) -> float:
        return min(self.r2_max, self.sum_max)

    def vertices(self) -> list[tuple[float, float]]:
        A, B, C = self.a, self.b, self.sum_max
        pts = [(0.0, 0.0), (A, 0.0), (A, min(B, C - A)), (min(A, C - B), B), (0.0, B)]
        out: list[tuple[float, float]] = []
        for p in pts:
            if not out or max(abs(p[0] - out[-1][0]), abs(p[1] - out[-1][1])) > 1e-15:
                out.append(p)
        return out

    def support(self, w1: float, w2: float) -> float:
        return max(w1 * x + w2 * y for x, y in self.vertices())

    def r2_at(self, r1: float) -> float:
        """Largest R2 with (r1, R2) inside, or -inf."""
        if r1 > self.a + 1e-15:
            return -np.inf
        return max(0.0, min(self.b, self.sum_max - r1))

    def contains(self, r1: float, r2: float, slack: float = 1e-9) -> bool:
        return (r1 >= -slack and r2 >= -slack and r1 <= self.r1_max + slack
                and r2 <= self.r2_max + slack and r1 + r2 <= self.sum_max + slack)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.r1_max, self.r2_max, self.sum_max)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points, tol: float = 1e-12) -> list[tuple[float, float]]:
    """Counter-clockwise hull (monotone chain), collinear points removed."""
    # snap to a 1e-12 grid so last-digit noise cannot create spurious near-vertical edges
    pts = sorted(set((round(float(x), 12), round(float(y), 12)) for x, y in points))
    if len(pts) <= 2:
        return pts
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= tol:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= tol:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _start_at_r1_axis(poly: list) -> list:
    """Rotate a CCW polygon to start at the vertex with largest R1 (then smallest R2)."""
    if not poly:
        return poly
    k = max(range(len(poly)), key=lambda i: (poly[i][0], -poly[i][1]))
    return poly[k:] + poly[:k]


def is_convex_polygon(poly, tol: float = 1e-9) -> bool:
    """Cross-product test on consecutive edges of a CCW polygon."""
    n = len(poly)
    if n < 3:
        return True
    return all(_cross(poly[i], poly[(i + 1) % n], poly[(i + 2) % n]) >= -tol for i in range(n))


@dataclass
class RateRegion:
    mode: Mode
    boundary: list
    pentagons: list
    case_label: str | None = None
    undetermined: bool = False
    thresholds: Thresholds | None = None
    flags: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def convex(self) -> bool:
        return self.mode is Mode.RANDOM

    @property
    def max_r1(self) -> float:
        return max((p.a for p in self.pentagons), default=0.0)

    @property
    def max_r2(self) -> float:
        return max((p.b for p in self.pentagons), default=0.0)

    @property
    def max_sum(self) -> float:
        return self.support(1.0, 1.0)

    def support(self, w1: float, w2: float) -> float:
        """max of w1 R1 + w2 R2 over the region (over its pentagons)."""
        if self.pentagons:
            return max(p.support(w1, w2) for p in self.pentagons)
        return max((w1 * x + w2 * y for x, y in self.boundary), default=0.0)

    def contains(self, r1: float, r2: float, slack: float = 1e-6) -> bool:
        if r1 < -slack or r2 < -slack:
            return False
        if self.convex:
            poly = self.boundary
            if len(poly) >= 3:
                return all(_cross(poly[i], poly[(i + 1) % len(poly)], (r1, r2))
                           >= -slack * max(1.0, math.dist(poly[i], poly[(i + 1) % len(poly)]))
                           for i in range(len(poly)))
        return any(p.contains(r1, r2, slack) for p in self.pentagons) or (
            not self.pentagons and abs(r1) <= slack and abs(r2) <= slack)

    def is_convex(self, tol: float = 1e-9) -> bool:
        return is_convex_polygon(self.boundary, tol)

    def to_dict(self) -> dict:
        th = self.thresholds
        return {
            "mode": self.mode.value,
            "case": self.case_label,
            "boundary_undetermined": self.undetermined,
            "thresholds": None if th is None else {"L": th.L, "L1": th.L1, "L2": th.L2},
            "flags": list(self.flags),
            "boundary": [list(p) for p in self.boundary],
            "pentagons": [list(p.as_tuple()) for p in self.pentagons],
            **{k: v for k, v in self.meta.items() if isinstance(v, (int, float, str, bool))},
        }


def upper_boundary(pentagons, samples: int = BOUNDARY_SAMPLES) -> list[tuple[float, float]]:
    """Upper boundary of a union of pentagons sampled at ``samples`` R1 values,
    listed counter-clockwise from (max R1, 0) and closed at the origin."""
    if not pentagons:
        return [(0.0, 0.0)]
    r1max = max(p.a for p in pentagons)
    if r1max <= 0.0:
        r2 = max(p.b for p in pentagons)
        return [(0.0, 0.0), (0.0, r2)] if r2 > 0 else [(0.0, 0.0)]
    out = [(r1max, 0.0)]
    for r1 in np.linspace(r1max, 0.0, samples):
        r2 = max(p.r2_at(float(r1)) for p in pentagons)
        out.append((float(r1), float(r2)))
    out.append((0.0, 0.0))
    dedup = [out[0]]
    for p in out[1:]:
        if p != dedup[-1]:
            dedup.append(p)
    return dedup


def hull_boundary(pentagons) -> list[tuple[float, float]]:
    pts = [(0.0, 0.0)] + [v for p in pentagons for v in p.vertices()]
    hull = convex_hull(pts)
    return _start_at_r1_axis(hull) if len(hull) > 1 else [(0.0, 0.0)]


# -- single pentagons ----------------------------------------------------------------

def _check_ensemble(ens: InputEnsemble, costs: CostModel, cons: ConstraintSpec, tol: float = 1e-9):
    c1 = float(ens.px1 @ costs.g1)
    c2 = float(ens.px2 @ costs.g2)
    if c1 > cons.gamma1 + tol or c2 > cons.gamma2 + tol:
        raise ValueError(f"ensemble violates the input constraints: E g1 = {c1:.6g} "
                         f"(limit {cons.gamma1}), E g2 = {c2:.6g} (limit {cons.gamma2})")


def pentagon(spec: ChannelSpec, costs: CostModel, ens: InputEnsemble, constraints: ConstraintSpec,
             mode: Mode | str = Mode.RANDOM, budget: str = "average") -> Pentagon:
    """The three minimized rate bounds for one input ensemble.

    RANDOM uses one state law for all u; DIVIDED and DETERMINISTIC let it depend on u.
    """
    mode = Mode(mode)
    _check_ensemble(ens, costs, constraints)
    F = cost_constrained(costs, constraints.lam)
    per_u = mode is not Mode.RANDOM
    vals = [min_info_over_states(spec, ens, F, w, per_u=per_u, budget=budget).value for w in TERMS]
    return Pentagon(*vals, ensemble=ens)


# -- ensemble search -------------------------------------------------------------------

def _project_to_budget(p: np.ndarray, g: np.ndarray, gamma: float) -> np.ndarray | None:
    """p itself if affordable, else its mix with the cheapest letter that meets the budget."""
    c = float(p @ g)
    if c <= gamma + 1e-12:
        return p
    k = int(np.argmin(g))
    if g[k] > gamma:
        return None
    t = (gamma - g[k]) / (c - g[k])
    q = t * p
    q[k] += 1 - t
    return q


def _compositions(n: int, denom: int):
    for c in itertools.combinations(range(denom + n - 1), n - 1):
        parts = np.diff((-1,) + c + (denom + n - 1,)) - 1
        yield parts / denom


def _gibbs(g: np.ndarray, target: float) -> np.ndarray:
    """Maximum-entropy pmf with E g = target (target strictly inside the cost range)."""
    g = np.asarray(g, dtype=float)

    def law(beta):
        z = -beta * (g - g.min())
        w = np.exp(z - z.max())
        return w / w.sum()

    mean_uniform = g.mean()
    if target >= mean_uniform - 1e-12:
        return np.full(g.size, 1.0 / g.size)
    hi = 1.0
    while law(hi) @ g > target:
        hi *= 2.0
        if hi > 1e8:
            break
    beta = brentq(lambda b: law(b) @ g - target, 0.0, hi, xtol=1e-14)
    return law(beta)


def marginal_candidates(g, gamma: float, resolution: int = 1) -> list[np.ndarray]:
    """Cost-feasible candidate input laws for one user.

    Binary alphabets use a grid of step 1/(16 resolution), ternary 1/(8 resolution);
    infeasible grid points are pulled onto the cost boundary. Larger alphabets use
    maximum-entropy laws at several cost levels, the cheapest point mass, and
    boundary mixes of the cheapest letter with each other letter.
    """
    g = np.asarray(g, dtype=float)
    n = g.size
    out: list[np.ndarray] = []
    if n == 1:
        return [np.ones(1)]
    if n <= 3:
        denom = (16 if n == 2 else 8) * resolution
        for p in _compositions(n, denom):
            q = _project_to_budget(p.astype(float), g, gamma)
            if q is not None:
                out.append(q)
    else:
        k = int(np.argmin(g))
        out.append(np.eye(n)[k])
        levels = np.arange(1, 3 * resolution + 1) / (3 * resolution)
        for t in levels:
            target = g.min() + t * (gamma - g.min())
            if target > g.min() + 1e-12:
                out.append(_gibbs(g, target))
        for a in range(n):
            q = _project_to_budget(np.eye(n)[a], g, gamma)
            if q is not None and resolution > 1:
                out.append(q)
        for a in (int(np.argmax(g)),):
            q = _project_to_budget(np.eye(n)[a], g, gamma)
            if q is not None:
                out.append(q)
    seen, uniq = set(), []
    for q in out:
        key = tuple(np.round(q, 10))
        if key not in seen:
            seen.add(key)
            uniq.append(np.clip(q, 0.0, None) / np.clip(q, 0.0, None).sum())
    return uniq


def _mixture(ensembles, weights) -> InputEnsemble:
    pu, r1, r2 = [], [], []
    for e, w in zip(ensembles, weights):
        pu.extend(w * e.pu)
        r1.extend(e.px1_given_u)
        r2.extend(e.px2_given_u)
    return InputEnsemble(pu, r1, r2)


DIRECTIONS = ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, 1.0), (1.0, 2.0))


class EnsembleSearch:
    """Candidate input ensembles with cached pentagons, shared between modes.

    Pentagons are cached per ensemble and mode. A divided-randomness pentagon is
    tightened by the random-code one for the same ensemble (the shared state law is
    one of the jammer's options), so the nesting of the regions holds exactly.
    """

    def __init__(self, spec: ChannelSpec, costs: CostModel, constraints: ConstraintSpec,
                 resolution: int = 1, budget: str = "average", seeds=(), refine: bool = True,
                 max_mixtures: int = 3):
        self.spec, self.costs, self.cons = spec, costs, constraints
        self.resolution = max(1, int(resolution))
        self.budget = budget
        self.refine = refine
        self.max_mixtures = max_mixtures
        self.F = cost_constrained(costs, constraints.lam)
        c1 = marginal_candidates(costs.g1, constraints.gamma1, self.resolution)
        c2 = marginal_candidates(costs.g2, constraints.gamma2, self.resolution)
        self.pool: list[InputEnsemble] = [InputEnsemble.product(a, b) for a in c1 for b in c2]
        for e in seeds:
            try:
                _check_ensemble(e, costs, constraints)
            except ValueError:
                continue
            self.pool.append(e)
        self._keys = {e.key() for e in self.pool}
        self.cache: dict = {}
        self.extended: dict = {}  # mode -> True once refinement / mixtures were added

    def add(self, e: InputEnsemble) -> bool:
        k = e.key()
        if k in self._keys:
            return False
        self._keys.add(k)
        self.pool.append(e)
        return True

    def pentagon(self, e: InputEnsemble, mode: Mode) -> Pentagon:
        if mode is Mode.DETERMINISTIC:
            mode = Mode.DIVIDED
        if mode is Mode.DIVIDED and e.nu == 1:
            mode = Mode.RANDOM  # a single u makes the two problems identical
        key = (e.key(), mode)
        if key not in self.cache:
            per_u = mode is Mode.DIVIDED
            vals = [min_info_over_states(self.spec, e, self.F, w, per_u=per_u,
                                         budget=self.budget).value for w in TERMS]
            if per_u:
                rnd = self.pentagon(e, Mode.RANDOM)
                vals = [min(a, b) for a, b in zip(vals, rnd.as_tuple())]
            self.cache[key] = Pentagon(*vals, ensemble=e)
        return self.cache[key]

    def pentagons(self, mode: Mode, subset=None) -> list[Pentagon]:
        return [self.pentagon(e, mode) for e in (self.pool if subset is None else subset)]

    # -- refinement ---------------------------------------------------------------
    def _moves(self, e: InputEnsemble, step: float):
        """Ensembles one mass transfer away from a product ensemble."""
        p1, p2 = e.px1_given_u[0], e.px2_given_u[0]
        for user, p, g, gam in ((1, p1, self.costs.g1, self.cons.gamma1),
                                (2, p2, self.costs.g2, self.cons.gamma2)):
            n = p.size
            if n > 4:
                continue
            for a in range(n):
                for b in range(n):
                    if a == b or p[a] <= 0:
                        continue
                    q = p.copy()
                    d = min(step, q[a])
                    q[a] -= d
                    q[b] += d
                    q = _project_to_budget(q, g, gam)
                    if q is None:
                        continue
                    yield (InputEnsemble.product(q, p2) if user == 1
                           else InputEnsemble.product(p1, q))

    def _refine(self, mode: Mode, subset_filter=None, max_rounds: int = 30) -> None:
        base = 16 * self.resolution
        for w in DIRECTIONS:
            cands = [e for e in self.pool if e.nu == 1 and (subset_filter is None or subset_filter(e))]
            if not cands:
                return
            best = max(cands, key=lambda e: self.pentagon(e, mode).support(*w))
            val = self.pentagon(best, mode).support(*w)
            step = 1.0 / base
            rounds = 0
            while step >= 1.0 / (16 * base) and rounds < max_rounds:
                rounds += 1
                improved = False
                for e2 in self._moves(best, step):
                    if subset_filter is not None and not subset_filter(e2):
                        continue
                    v2 = self.pentagon(e2, mode).support(*w)
                    if v2 > val + 1e-9:
                        best, val, improved = e2, v2, True
                        break
                if improved:
                    self.add(best)
                else:
                    step /= 2.0

    def _mix(self, mode: Mode, subset_filter=None) -> None:
        cands = [e for e in self.pool if e.nu == 1 and (subset_filter is None or subset_filter(e))]
        top: list = []
        for w in DIRECTIONS:
            for e in sorted(cands, key=lambda e: -self.pentagon(e, mode).support(*w)):
                if all(e.key() != t.key() for t in top):
                    top.append(e)
                    break
        top = top[:self.max_mixtures]
        mixes = []
        for a, b in itertools.combinations(top, 2):
            for t in (1 / 3, 1 / 2, 2 / 3):
                mixes.append(_mixture([a, b], [t, 1 - t]))
        if len(top) >= 3:
            mixes.append(_mixture(top[:3], [1 / 3] * 3))
        for m in mixes:
            if subset_filter is None or subset_filter(m):
                self.add(m)

    def extend(self, mode: Mode, subset_filter=None) -> None:
        """Coordinate-ascent refinement on directional supports, then |U| <= 3 mixtures."""
        tag = (mode, subset_filter is None)
        if self.extended.get(tag):
            return
        if self.refine:
            self._refine(mode, subset_filter)
        if self.max_mixtures > 1:
            self._mix(mode, subset_filter)
        self.extended[tag] = True


# -- the three regions -------------------------------------------------------------

def _search(spec, costs, constraints, resolution, search, budget, seeds) -> tuple:
    cons = constraints.clamped(costs)
    if search is None:
        search = EnsembleSearch(spec, costs, cons, resolution, budget=budget, seeds=seeds)
    return cons, search


def random_code_region(spec: ChannelSpec, costs: CostModel, constraints: ConstraintSpec,
                       resolution: int = 1, search: EnsembleSearch | None = None,
                       seeds=()) -> RateRegion:
    """Convex hull of pentagons with a state law shared by all time-sharing letters."""
    cons, search = _search(spec, costs, constraints, resolution, search, "average", seeds)
    search.extend(Mode.RANDOM)
    pents = search.pentagons(Mode.RANDOM)
    return RateRegion(Mode.RANDOM, hull_boundary(pents), pents,
                      meta={"gamma1": cons.gamma1, "gamma2": cons.gamma2, "lambda": cons.lam,
                            "ensembles": len(pents)})


def divided_randomness_region(spec: ChannelSpec, costs: CostModel, constraints: ConstraintSpec,
                              resolution: int = 1, budget: str = "average",
                              search: EnsembleSearch | None = None, seeds=()) -> RateRegion:
    """Union of pentagons with state laws that may depend on the time-sharing letter."""
    cons, search = _search(spec, costs, constraints, resolution, search, budget, seeds)
    search.extend(Mode.RANDOM)
    search.extend(Mode.DIVIDED)
    pents = search.pentagons(Mode.DIVIDED)
    return RateRegion(Mode.DIVIDED, upper_boundary(pents), pents,
                      meta={"gamma1": cons.gamma1, "gamma2": cons.gamma2, "lambda": cons.lam,
                            "budget": budget, "ensembles": len(pents)})


@dataclass
class _Restriction:
    """Caches tilde-lambda values and tests min(...) >= lambda."""

    spec: ChannelSpec
    costs: CostModel
    lam: float
    kinds: tuple
    cache: dict = field(default_factory=dict)
    near: int = 0

    def value(self, e: InputEnsemble) -> float:
        key = (e.key(), self.kinds)
        if key not in self.cache:
            self.cache[key] = min(tilde_lambda(self.spec, self.costs, e, k) for k in self.kinds)
        return self.cache[key]

    def __call__(self, e: InputEnsemble) -> bool:
        v = self.value(e)
        return v >= self.lam - RESTRICT_MARGIN

    def is_near(self, e: InputEnsemble) -> bool:
        v = self.value(e)
        return np.isfinite(v) and abs(v - self.lam) < RESTRICT_FLAG


def dispatch_case(th: Thresholds, lam: float) -> tuple[str, bool]:
    """Case label A-D from the thresholds, and whether any threshold sits on lambda."""
    L, L1, L2 = th.as_tuple()
    undetermined = any(np.isfinite(v) and abs(v - lam) < BOUNDARY_TOL for v in (L, L1, L2))
    if L > lam and L1 > lam and L2 > lam:
        return "A", undetermined
    if L > lam and L2 > lam and L1 <= lam:
        return "B", undetermined
    if L > lam and L1 > lam and L2 <= lam:
        return "C", undetermined
    return "D", undetermined


def single_user_minmax(spec: ChannelSpec, costs: CostModel, constraints: ConstraintSpec,
                       user: int, ensembles, tol: float = 1e-7, max_iter: int = 300) -> tuple:
    """min over q of max over the given product ensembles of I_q(X_user; Y | X_other).

    The inner maximum is convex in q (a maximum of convex functions), so the outer
    minimization runs Kelley's cutting-plane method over the cost-constrained state
    simplex. Returns (value, minimizing q, lower bound, converged).
    """
    which = "I1" if user == 1 else "I2"
    ensembles = list(ensembles)
    if not ensembles:
        return 0.0, None, 0.0, True
    F = cost_constrained(costs, constraints.lam)
    ns = spec.ns
    objs = [_Objective(spec, e, which, True) for e in ensembles]
    # start from the state law that hurts the first ensemble most
    q = min_info_over_states(spec, ensembles[0], F, which).law.rows[0]
    cuts_g, cuts_b = [], []
    best_val, best_q, lower = np.inf, q, -np.inf
    for _ in range(max_iter):
        vals = np.array([o.value(q[None, :]) for o in objs])
        f = float(vals.max())
        if f < best_val:
            best_val, best_q = f, q
        for k in np.argsort(-vals)[:5]:
            g = objs[k].grad(q[None, :])[0]
            cuts_g.append(g)
            cuts_b.append(vals[k] - g @ q)
        # master LP over (q, t+, t-): min t  s.t.  g.q + b <= t, q in simplex, l.q <= lam
        m = len(cuts_g)
        A_ub = np.zeros((m + 1, ns + 2))
        A_ub[:m, :ns] = np.array(cuts_g)
        A_ub[:m, ns] = -1.0
        A_ub[:m, ns + 1] = 1.0
        A_ub[m, :ns] = F.l
        b_ub = np.concatenate([-np.array(cuts_b), [F.lam]])
        A_eq = np.zeros((1, ns + 2))
        A_eq[0, :ns] = 1.0
        c = np.zeros(ns + 2)
        c[ns], c[ns + 1] = 1.0, -1.0
        res = lp.linprog(c, A_eq, np.ones(1), A_ub, b_ub, method="highs")
        if not res.success:
            raise lp.LPFailure(f"cutting-plane master LP ended with status {res.status}")
        lower = max(lower, float(res.fun))
        if best_val - lower <= tol:
            return best_val, best_q, lower, True
        q = np.clip(res.x[:ns], 0.0, None)
        q /= q.sum()
    return best_val, best_q, lower, False


def single_user_minmax_grid(spec: ChannelSpec, costs: CostModel, constraints: ConstraintSpec,
                            user: int, ensembles, step: float = 0.01) -> float:
    """Cross-check of ``single_user_minmax`` by a q-grid on the cost-constrained simplex."""
    which = "I1" if user == 1 else "I2"
    objs = [_Objective(spec, e, which, True) for e in ensembles]
    if not objs:
        return 0.0
    denom = int(round(1 / step))
    best = np.inf
    for q in _compositions(spec.ns, denom):
        if q @ costs.l <= constraints.lam + 1e-12:
            best = min(best, max(o.value(q[None, :]) for o in objs))
    return float(best)


def deterministic_region(spec: ChannelSpec, costs: CostModel, constraints: ConstraintSpec,
                         resolution: int = 1, budget: str = "average",
                         search: EnsembleSearch | None = None, seeds=(),
                         threshold_values: Thresholds | None = None) -> RateRegion:
    """Deterministic-code region, dispatched on the jamming thresholds."""
    cons = constraints.clamped(costs)
    th = threshold_values or thresholds(spec, costs, cons)
    case, undetermined = dispatch_case(th, cons.lam)
    meta = {"gamma1": cons.gamma1, "gamma2": cons.gamma2, "lambda": cons.lam, "budget": budget}
    if undetermined:
        return RateRegion(Mode.DETERMINISTIC, [], [], case, True, th,
                          ["a threshold equals lambda; the region is not determined there"], meta)
    if case == "D":
        return RateRegion(Mode.DETERMINISTIC, [(0.0, 0.0)], [Pentagon(0.0, 0.0, 0.0)], "D", False,
                          th, [], meta)
    cons, search = _search(spec, costs, cons, resolution, search, budget, seeds)
    flags: list[str] = []
    if case == "A":
        restrict = _Restriction(spec, costs, cons.lam, tuple(SymmetryKind))
        search.extend(Mode.RANDOM)
        search.extend(Mode.DIVIDED)
        allowed = [e for e in search.pool if restrict(e)]
        near = sum(restrict.is_near(e) for e in allowed)
        if near:
            flags.append(f"{near} ensembles within {RESTRICT_FLAG} of the symmetrizing-cost restriction")
        if not allowed:
            flags.append("no searched ensemble satisfies the symmetrizing-cost restriction")
            return RateRegion(Mode.DETERMINISTIC, [(0.0, 0.0)], [Pentagon(0.0, 0.0, 0.0)], "A",
                              False, th, flags, meta)
        pents = search.pentagons(Mode.DIVIDED, allowed)
        meta["ensembles"] = len(pents)
        return RateRegion(Mode.DETERMINISTIC, upper_boundary(pents), pents, "A", False, th, flags, meta)
    user = 2 if case == "B" else 1
    kinds = (SymmetryKind.JOINT, SymmetryKind.COND2 if user == 2 else SymmetryKind.COND1)
    restrict = _Restriction(spec, costs, cons.lam, kinds)
    allowed = [e for e in search.pool if e.nu == 1 and restrict(e)]
    if not allowed:
        flags.append("no searched ensemble satisfies the symmetrizing-cost restriction")
    val, q, lower, ok = single_user_minmax(spec, costs, cons, user, allowed)
    if not ok:
        flags.append(f"cutting-plane stopped with gap {val - lower:.3g}")
    meta.update({"minmax_lower_bound": lower, "ensembles": len(allowed)})
    if q is not None:
        meta["worst_state_law"] = [float(v) for v in q]
    if user == 2:
        seg, pent = [(0.0, 0.0), (0.0, val)], Pentagon(0.0, val, val)
    else:
        seg, pent = [(val, 0.0), (0.0, 0.0)], Pentagon(val, 0.0, val)
    return RateRegion(Mode.DETERMINISTIC, seg if val > 0 else [(0.0, 0.0)], [pent], case, False,
                      th, flags, meta)
