"""Symmetrizability tests, minimal symmetrizing state costs and jamming thresholds.

A conditional state law J is *symmetrizing* for a channel when the averaged
channel it induces cannot tell a true input from an impostor input:

* ``JOINT``: sum_s W(y|x1,x2,s) J(s|x1',x2') is symmetric in (x1,x2) <-> (x1',x2');
* ``COND1``: sum_s W(y|x1,x2,s) J1(s|x1') is symmetric in x1 <-> x1' for every x2;
* ``COND2``: the same with the roles of the users swapped.

For fixed W these are linear equalities in J, so existence is an LP feasibility
question and the cheapest symmetrizer under an input law is an LP.
"""
from __future__ import annotations

import enum
import hashlib
import itertools
from dataclasses import dataclass, field

import numpy as np

from . import lp
from .channel import ChannelSpec, ConstraintSpec, CostModel, InputEnsemble

RESIDUAL_TOL = 1e-7
ROWGEN_LIMIT = 250_000  # equality-matrix entries before switching to row generation
DUAL_LIMIT = 20_000  # equality-matrix entries up to which thresholds use the one-shot dual LP


class SymmetryKind(enum.Enum):
    JOINT = "joint"
    COND1 = "cond1"
    COND2 = "cond2"

    @property
    def label(self) -> str:
        return {"joint": "X1xX2", "cond1": "X1|X2", "cond2": "X2|X1"}[self.value]


@dataclass(frozen=True)
class Symmetrizer:
    """Witness J with rows indexed by the kind's input (flattened (x1,x2) for JOINT)."""

    kind: SymmetryKind
    J: np.ndarray
    residual: float

    def cost_per_row(self, l) -> np.ndarray:
        return self.J @ np.asarray(l, dtype=float)

    def is_zero_one(self, tol: float = 1e-7) -> bool:
        return bool(np.all((self.J < tol) | (self.J > 1 - tol)))

    def as_tensor(self, n1: int, n2: int) -> np.ndarray:
        """J(s|x1,x2) as an (n1, n2, ns) array, broadcasting the per-user kinds."""
        ns = self.J.shape[1]
        if self.kind is SymmetryKind.JOINT:
            return self.J.reshape(n1, n2, ns)
        if self.kind is SymmetryKind.COND1:
            return np.broadcast_to(self.J[:, None, :], (n1, n2, ns))
        return np.broadcast_to(self.J[None, :, :], (n1, n2, ns))


@dataclass
class PsiResult:
    value: float  # math.inf when no symmetrizer exists
    witness: Symmetrizer | None

    @property
    def finite(self) -> bool:
        return np.isfinite(self.value)


@dataclass
class Thresholds:
    """Best jamming thresholds L*, L1*, L2* and the input laws attaining them."""

    L: float
    L1: float
    L2: float
    argmax: dict = field(default_factory=dict)
    converged: bool = True

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.L, self.L1, self.L2)

    def get(self, kind: SymmetryKind) -> float:
        return {SymmetryKind.JOINT: self.L, SymmetryKind.COND1: self.L1,
                SymmetryKind.COND2: self.L2}[kind]


def _row_channels(spec: ChannelSpec, kind: SymmetryKind):
    """Return (C, ctx) where C[r, c] is the (ns, ny) channel of row r in context c."""
    W = spec.W
    if kind is SymmetryKind.JOINT:
        return W.reshape(spec.n1 * spec.n2, 1, spec.ns, spec.ny)
    if kind is SymmetryKind.COND1:
        return W  # rows x1, contexts x2
    return W.transpose(1, 0, 2, 3)  # rows x2, contexts x1


def residual_tensor(spec: ChannelSpec, kind: SymmetryKind, J: np.ndarray) -> np.ndarray:
    """Violations D[r, r', c, y] of the symmetrizing equations for J."""
    C = _row_channels(spec, kind)
    M = np.einsum("rcsy,qs->rqcy", C, J)  # sum_s W_r(y|s) J(s|r')
    return M - M.transpose(1, 0, 2, 3)


def max_residual(spec: ChannelSpec, kind: SymmetryKind, J: np.ndarray) -> float:
    return float(np.abs(residual_tensor(spec, kind, J)).max(initial=0.0))


class SymmetrizerPolytope:
    """The set of symmetrizing J for one channel and kind, with LP helpers."""

    def __init__(self, spec: ChannelSpec, kind: SymmetryKind, lp_method: str = "auto"):
        self.spec = spec
        self.kind = kind
        self.lp_method = lp_method
        self.C = _row_channels(spec, kind)
        self.R, self.nc, self.ns, self.ny = self.C.shape
        self.nvar = self.R * self.ns
        self.pairs = list(itertools.combinations(range(self.R), 2))
        self._feasible: bool | None = None
        self._vertices: list[np.ndarray] = []
        self._reduced: tuple[np.ndarray, np.ndarray] | None = None
        self._active: set = set()

    # -- constraint assembly -------------------------------------------------
    def _pair_block(self, a: int, b: int, c: int) -> np.ndarray:
        """ny equality rows for pair (a, b) in context c, deduplicated by symmetry."""
        rows = np.zeros((self.ny, self.nvar))
        ns = self.ns
        rows[:, b * ns:(b + 1) * ns] += self.C[a, c].T
        rows[:, a * ns:(a + 1) * ns] -= self.C[b, c].T
        return rows

    def equality_rows(self, items=None) -> np.ndarray:
        if items is None:
            items = [(a, b, c) for (a, b) in self.pairs for c in range(self.nc)]
        if not items:
            return np.zeros((0, self.nvar))
        return np.vstack([self._pair_block(a, b, c) for (a, b, c) in items])

    def stochastic_rows(self) -> tuple[np.ndarray, np.ndarray]:
        A = np.kron(np.eye(self.R), np.ones((1, self.ns)))
        return A, np.ones(self.R)

    @property
    def tiny(self) -> bool:
        """Small enough for the one-shot dual threshold LP."""
        return len(self.pairs) * self.nc * self.ny * self.nvar <= DUAL_LIMIT

    def _full_is_small(self) -> bool:
        n_rows = len(self.pairs) * self.nc * self.ny
        return n_rows * self.nvar <= ROWGEN_LIMIT

    def reduced_equalities(self) -> tuple[np.ndarray, np.ndarray]:
        """Independent subset of the homogeneous symmetrizing equations (pivoted QR).

        Only trustworthy for well-conditioned systems; used by the dual threshold LP.
        """
        if self._reduced is None:
            A = self.equality_rows()
            A = A[lp.independent_rows(A)] if A.shape[0] else A
            self._reduced = (A, np.zeros(A.shape[0]))
        return self._reduced

    # -- solving -------------------------------------------------------------
    def _solve(self, cost: np.ndarray) -> lp.LPResult:
        A_sto, b_sto = self.stochastic_rows()
        if self._full_is_small():
            A_sym = self.equality_rows()
            b_sym = np.zeros(A_sym.shape[0])
            return lp.linprog(cost, np.vstack([A_sym, A_sto]), np.concatenate([b_sym, b_sto]),
                              method=self.lp_method)
        return self._solve_rowgen(cost, A_sto, b_sto)

    def _solve_rowgen(self, cost, A_sto, b_sto) -> lp.LPResult:
        """Row generation: add the most violated pair equations until none remain."""
        active = self._active  # shared across calls; equations only ever get added
        if not active:
            # seed with each row's pairs against row 0 in every context
            for b in range(1, self.R):
                for c in range(self.nc):
                    active.add((0, b, c))
        while True:
            items = sorted(active)
            A_sym = self.equality_rows(items)
            res = lp.linprog(cost, np.vstack([A_sym, A_sto]),
                             np.concatenate([np.zeros(A_sym.shape[0]), b_sto]),
                             method="highs" if self.lp_method == "auto" else self.lp_method)
            if not res.success:
                return res
            J = res.x.reshape(self.R, self.ns)
            D = np.abs(residual_tensor(self.spec, self.kind, J)).max(axis=3)
            viol = np.argwhere(np.triu(D.max(axis=2) > RESIDUAL_TOL * 0.1, k=1))
            if viol.size == 0:
                return res
            new = 0
            for a, b in viol:
                for c in range(self.nc):
                    if D[a, b, c] > RESIDUAL_TOL * 0.1 and (a, b, c) not in active:
                        active.add((int(a), int(b), c))
                        new += 1
            if new == 0:
                return res

    def _witness(self, x: np.ndarray) -> Symmetrizer:
        J = np.clip(x.reshape(self.R, self.ns), 0.0, None)
        J /= J.sum(axis=1, keepdims=True)
        return Symmetrizer(self.kind, J, max_residual(self.spec, self.kind, J))

    def feasible_witness(self) -> Symmetrizer | None:
        res = self._solve(np.zeros(self.nvar))
        self._feasible = res.success
        if not res.success:
            return None
        w = self._witness(res.x)
        if w.residual > RESIDUAL_TOL:
            raise lp.LPFailure(f"witness residual {w.residual:.3g} exceeds tolerance")
        return w

    @property
    def feasible(self) -> bool:
        if self._feasible is None:
            self.feasible_witness()
        return bool(self._feasible)

    def min_cost(self, weights: np.ndarray, l: np.ndarray) -> PsiResult:
        """min_J sum_r weights[r] sum_s J(s|r) l(s) over symmetrizing J."""
        if self._feasible is False:
            return PsiResult(np.inf, None)
        weights = np.asarray(weights, dtype=float)
        cost = np.outer(weights, l).ravel()
        res = self._solve(cost)
        if not res.success:
            self._feasible = False
            return PsiResult(np.inf, None)
        self._feasible = True
        w = self._witness(res.x)
        self._vertices.append(w.cost_per_row(l))
        return PsiResult(float(weights @ w.cost_per_row(l)), w)

    def upper_bound(self, weights: np.ndarray) -> float:
        """min over previously found symmetrizers; an upper bound on the exact value."""
        if not self._vertices:
            return np.inf
        return float(min(weights @ v for v in self._vertices))


_POLYTOPES: dict = {}


def polytope(spec: ChannelSpec, kind: SymmetryKind, lp_method: str = "auto") -> SymmetrizerPolytope:
    key = (hashlib.sha1(np.ascontiguousarray(spec.W).tobytes()).hexdigest(), spec.W.shape,
           kind, lp_method)
    if key not in _POLYTOPES:
        _POLYTOPES[key] = SymmetrizerPolytope(spec, kind, lp_method)
    return _POLYTOPES[key]


def check_symmetrizable(spec: ChannelSpec, kind: SymmetryKind, lp_method: str = "auto") -> Symmetrizer | None:
    """Return a symmetrizing witness, or None when the LP is infeasible."""
    return polytope(spec, kind, lp_method).feasible_witness()


def _row_weights(spec: ChannelSpec, kind: SymmetryKind, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if kind is SymmetryKind.JOINT:
        if p.shape == (spec.n1, spec.n2):
            return p.ravel()
        if p.shape == (spec.n1 * spec.n2,):
            return p
        raise ValueError("JOINT needs a joint pmf over X1 x X2")
    n = spec.n1 if kind is SymmetryKind.COND1 else spec.n2
    if p.shape != (n,):
        raise ValueError(f"{kind.name} needs a pmf of length {n}")
    return p


def min_symmetrizing_cost(spec: ChannelSpec, costs: CostModel, kind: SymmetryKind, p,
                          lp_method: str = "auto") -> PsiResult:
    """Minimal expected state cost of a symmetrizer under input law ``p``.

    ``p`` is a joint pmf (n1 x n2) for JOINT, a pmf on X1 for COND1, on X2 for COND2.
    Infeasible kinds give ``value = inf``.
    """
    w = _row_weights(spec, kind, p)
    return polytope(spec, kind, lp_method).min_cost(w, costs.l)


def _per_u_laws(ens: InputEnsemble, kind: SymmetryKind) -> np.ndarray:
    if kind is SymmetryKind.JOINT:
        return ens.joint_x1x2_given_u().reshape(ens.nu, -1)
    if kind is SymmetryKind.COND1:
        return ens.px1_given_u
    return ens.px2_given_u


def tilde_lambda(spec: ChannelSpec, costs: CostModel, ens: InputEnsemble, kind: SymmetryKind,
                 lp_method: str = "auto") -> float:
    """sum_u P_U(u) Psi_kind(P_{X|U=u}), with a separate symmetrizer for every u."""
    poly = polytope(spec, kind, lp_method)
    if not poly.feasible:
        return np.inf
    total = 0.0
    for pu, row in zip(ens.pu, _per_u_laws(ens, kind)):
        if pu > 0:
            total += pu * poly.min_cost(row, costs.l).value
    return float(total)


def tilde_lambdas(spec, costs, ens, lp_method="auto") -> dict:
    return {k: tilde_lambda(spec, costs, ens, k, lp_method) for k in SymmetryKind}


# -- thresholds ---------------------------------------------------------------

def _input_cost_rows(spec: ChannelSpec, costs: CostModel, kind: SymmetryKind, cons: ConstraintSpec):
    """Linear cost constraints (A_ub, b_ub) on the row law of the kind."""
    if kind is SymmetryKind.JOINT:
        g1 = np.repeat(costs.g1, spec.n2)
        g2 = np.tile(costs.g2, spec.n1)
        return np.vstack([g1, g2]), np.array([cons.gamma1, cons.gamma2])
    if kind is SymmetryKind.COND1:
        return costs.g1[None, :], np.array([cons.gamma1])
    return costs.g2[None, :], np.array([cons.gamma2])


def max_psi_lp(spec: ChannelSpec, costs: CostModel, kind: SymmetryKind, cons: ConstraintSpec,
               lp_method: str = "auto") -> tuple[float, np.ndarray | None]:
    """Exact max of Psi over cost-feasible row laws via the dual of the inner LP.

    Psi(p) = min_J p.(J l) = max_{mu, nu} { sum_r nu_r : nu_r + (A^T mu)_{r,s} <= p_r l_s },
    which is jointly linear in (p, mu, nu), so the max over p is one LP.
    """
    poly = polytope(spec, kind, lp_method)
    if not poly.feasible:
        return np.inf, None
    A_sym, _ = poly.reduced_equalities()
    R, ns = poly.R, poly.ns
    k = A_sym.shape[0]
    # variables: p (R), mu+ (k), mu- (k), nu+ (R), nu- (R)
    n = R + 2 * k + 2 * R
    c = np.zeros(n)
    c[R + 2 * k:R + 2 * k + R] = -1.0
    c[R + 2 * k + R:] = 1.0
    rows = np.zeros((R * ns, n))
    E = np.kron(np.eye(R), np.ones((ns, 1)))  # (R*ns, R): picks nu_r for entry (r, s)
    rows[:, :R] = -np.kron(np.eye(R), costs.l[:, None])
    rows[:, R:R + k] = A_sym.T
    rows[:, R + k:R + 2 * k] = -A_sym.T
    rows[:, R + 2 * k:R + 2 * k + R] = E
    rows[:, R + 2 * k + R:] = -E
    G, gam = _input_cost_rows(spec, costs, kind, cons)
    cost_rows = np.zeros((G.shape[0], n))
    cost_rows[:, :R] = G
    A_ub = np.vstack([rows, cost_rows])
    b_ub = np.concatenate([np.zeros(R * ns), gam])
    A_eq = np.zeros((1, n))
    A_eq[0, :R] = 1.0
    # the dual is badly degenerate; the dense tableau only handles it for tiny channels
    method = lp_method if lp_method != "auto" or n * R * ns < 20_000 else "highs"
    res = lp.linprog(c, A_eq, np.ones(1), A_ub, b_ub, method=method)
    if not res.success:
        raise lp.LPFailure(f"threshold LP ended with status {res.status}")
    p = np.clip(res.x[:R], 0.0, None)
    p /= p.sum()
    return float(-res.fun), p


def max_psi_cutting_plane(spec: ChannelSpec, costs: CostModel, kind: SymmetryKind,
                          cons: ConstraintSpec, tol: float = 1e-9, max_iter: int = 500,
                          lp_method: str = "auto") -> tuple[float, np.ndarray | None, bool]:
    """Kelley's cutting-plane method for max_p Psi(p) over cost-feasible row laws.

    Psi(p) = min_v p.v over the finitely many vertex cost vectors v = J l, so the
    outer model max_p min_{found v} p.v is an upper bound that closes onto the
    lower bound Psi(p_k) after finitely many cuts. Used when the channel is too
    large to assemble the dual LP.
    """
    poly = polytope(spec, kind, lp_method)
    if not poly.feasible:
        return np.inf, None, True
    R = poly.R
    G, gam = _input_cost_rows(spec, costs, kind, cons)
    p = _project_polytope(np.full(R, 1.0 / R), G, gam)
    cuts = []
    best, best_p = -np.inf, p
    for _ in range(max_iter):
        r = poly.min_cost(p, costs.l)
        if r.value > best:
            best, best_p = r.value, p
        cuts.append(r.witness.cost_per_row(costs.l))
        # variables (p, t+, t-): max t  s.t. t <= p.v_i, G p <= gam, sum p = 1
        V = np.array(cuts)
        A_ub = np.zeros((len(cuts) + G.shape[0], R + 2))
        A_ub[:len(cuts), :R] = -V
        A_ub[:len(cuts), R] = 1.0
        A_ub[:len(cuts), R + 1] = -1.0
        A_ub[len(cuts):, :R] = G
        b_ub = np.concatenate([np.zeros(len(cuts)), gam])
        A_eq = np.zeros((1, R + 2))
        A_eq[0, :R] = 1.0
        c = np.zeros(R + 2)
        c[R], c[R + 1] = -1.0, 1.0
        res = lp.linprog(c, A_eq, np.ones(1), A_ub, b_ub, method="highs")
        if not res.success:
            raise lp.LPFailure(f"cutting-plane master LP ended with status {res.status}")
        upper = -res.fun
        if upper - best <= tol * max(1.0, abs(best)):
            return float(best), best_p, True
        p = np.clip(res.x[:R], 0.0, None)
        p /= p.sum()
    return float(best), best_p, False


def _project_polytope(v, G, gam, iters=500):
    """Euclidean projection onto {p in simplex, G p <= gam} by Dykstra's algorithm."""
    def proj_simplex(y):
        u = np.sort(y)[::-1]
        css = np.cumsum(u) - 1
        idx = np.arange(1, y.size + 1)
        rho = np.nonzero(u - css / idx > 0)[0][-1]
        return np.maximum(y - css[rho] / (rho + 1), 0.0)

    def proj_half(y, g, b):
        over = g @ y - b
        return y - over * g / (g @ g) if over > 0 and g @ g > 0 else y

    sets = [proj_simplex] + [lambda y, g=g, b=b: proj_half(y, g, b) for g, b in zip(G, gam)]
    x = v.copy()
    incs = [np.zeros_like(v) for _ in sets]
    for _ in range(iters):
        prev = x
        for i, P in enumerate(sets):
            y = P(x + incs[i])
            incs[i] = x + incs[i] - y
            x = y
        if np.abs(x - prev).max() < 1e-12:
            break
    return proj_simplex(x)


def max_psi_ascent(spec: ChannelSpec, costs: CostModel, kind: SymmetryKind, cons: ConstraintSpec,
                   starts: int = 6, iters: int = 300, seed: int = 0,
                   lp_method: str = "auto") -> tuple[float, np.ndarray | None, bool]:
    """Projected supergradient ascent with multi-start; returns (best, argmax, converged)."""
    poly = polytope(spec, kind, lp_method)
    if not poly.feasible:
        return np.inf, None, True
    G, gam = _input_cost_rows(spec, costs, kind, cons)
    rng = np.random.default_rng(seed)
    best, best_p = -np.inf, None
    converged = True
    for k in range(starts):
        p = np.full(poly.R, 1.0 / poly.R) if k == 0 else rng.dirichlet(np.ones(poly.R))
        p = _project_polytope(p, G, gam)
        run_best, run_p, stall = -np.inf, p, 0
        for t in range(iters):
            r = poly.min_cost(p, costs.l)
            if r.value > run_best + 1e-12:
                run_best, run_p, stall = r.value, p, 0
            else:
                stall += 1
            if stall > 40:
                break
            g = r.witness.cost_per_row(costs.l)
            g = g - g.mean()
            nrm = np.linalg.norm(g)
            if nrm < 1e-14:
                break
            p = _project_polytope(p + (0.5 / np.sqrt(t + 1)) * g / nrm, G, gam)
        else:
            converged = False
        key = tuple(np.round(run_p, 12))
        if run_best > best + 1e-12 or (abs(run_best - best) <= 1e-12 and best_p is not None
                                       and key < tuple(np.round(best_p, 12))):
            best, best_p = run_best, run_p
    return float(best), best_p, converged


def thresholds(spec: ChannelSpec, costs: CostModel, constraints: ConstraintSpec,
               method: str = "lp", lp_method: str = "auto") -> Thresholds:
    """(L*, L1*, L2*): the largest symmetrizing costs the users can force.

    The maximization runs over unrestricted row laws (joint law of (X1, X2) for L*):
    Psi is concave, so averaging over a time-sharing variable never helps and U can
    be absorbed. ``method`` is ``"lp"`` (exact minimax dual; channels too large for it
fall back to cutting planes), ``"cutting-plane"`` or ``"ascent"``.
    Values never depend on the state constraint.
    """
    out: dict = {}
    ok = True
    for kind in SymmetryKind:
        if method == "lp" and polytope(spec, kind, lp_method).tiny:
            val, arg = max_psi_lp(spec, costs, kind, constraints, lp_method)
        elif method in ("lp", "cutting-plane"):
            val, arg, conv = max_psi_cutting_plane(spec, costs, kind, constraints,
                                                   lp_method=lp_method)
            ok &= conv
        elif method == "ascent":
            val, arg, conv = max_psi_ascent(spec, costs, kind, constraints, lp_method=lp_method)
            ok &= conv
        else:
            raise ValueError(f"unknown threshold method {method!r}")
        out[kind] = (val, arg)
    return Thresholds(out[SymmetryKind.JOINT][0], out[SymmetryKind.COND1][0],
                      out[SymmetryKind.COND2][0],
                      {k.value: v[1] for k, v in out.items()}, ok)


def threshold_grid(spec: ChannelSpec, costs: CostModel, constraints: ConstraintSpec,
                   kind: SymmetryKind, step: float = 0.01) -> float:
    """Dense-grid cross-check of a threshold on binary input alphabets (product inputs for
    JOINT). The grid is augmented with the point where each cost constraint binds."""
    poly = polytope(spec, kind)
    if not poly.feasible:
        return np.inf
    base = np.round(np.arange(0.0, 1.0 + step / 2, step), 12)

    def axis(g, gamma):
        """Grid on P(X=1) plus the point where the cost constraint binds."""
        if g.size != 2:
            raise ValueError("grid cross-check needs a binary alphabet")
        pts = list(base)
        if g[1] != g[0]:
            t = (gamma - g[0]) / (g[1] - g[0])
            if 0.0 <= t <= 1.0:
                pts.append(t)
        return [a for a in pts if a * g[1] + (1 - a) * g[0] <= gamma + 1e-12]

    best = -np.inf
    if kind is SymmetryKind.JOINT:
        for a in axis(costs.g1, constraints.gamma1):
            for b in axis(costs.g2, constraints.gamma2):
                p = np.outer([1 - a, a], [1 - b, b])
                best = max(best, poly.min_cost(p.ravel(), costs.l).value)
        return best
    g = costs.g1 if kind is SymmetryKind.COND1 else costs.g2
    gam = constraints.gamma1 if kind is SymmetryKind.COND1 else constraints.gamma2
    for a in axis(g, gam):
        best = max(best, poly.min_cost(np.array([1 - a, a]), costs.l).value)
    return best
