"""Channel, cost and constraint model plus the information measures built on it.

Alphabets are indexed by integers. The channel tensor ``W`` has shape
``(n1, n2, ns, ny)`` and ``W[x1, x2, s]`` is the output pmf.
All information quantities are in bits.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

PROB_TOL = 1e-9
RENORM_TOL = 1e-12


def _as_pmf(p, name="pmf", tol=PROB_TOL):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{name} must be a non-empty vector")
    if np.any(~np.isfinite(p)) or np.any(p < -tol):
        raise ValueError(f"{name} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > tol:
        raise ValueError(f"{name} does not sum to 1 (sum={p.sum():.12g})")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def _as_rows(m, name="conditional", tol=PROB_TOL):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if np.any(~np.isfinite(m)) or np.any(m < -tol):
        raise ValueError(f"{name} has negative or non-finite entries")
    if np.any(np.abs(m.sum(axis=-1) - 1.0) > tol):
        raise ValueError(f"{name} rows do not sum to 1")
    m = np.clip(m, 0.0, None)
    return m / m.sum(axis=-1, keepdims=True)


def pmf(p) -> np.ndarray:
    """Validate and renormalize a probability vector."""
    return _as_pmf(p)


@dataclass(frozen=True)
class ChannelSpec:
    W: np.ndarray
    name: str = ""

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        if W.ndim != 4 or min(W.shape) < 1:
            raise ValueError("W must be a 4-index tensor (x1, x2, s, y)")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def sizes(self) -> tuple[int, int, int, int]:
        return tuple(int(k) for k in self.W.shape)  # type: ignore[return-value]

    @property
    def n1(self) -> int:
        return self.W.shape[0]

    @property
    def n2(self) -> int:
        return self.W.shape[1]

    @property
    def ns(self) -> int:
        return self.W.shape[2]

    @property
    def ny(self) -> int:
        return self.W.shape[3]

    def normalized(self) -> "ChannelSpec":
        """Copy with every row renormalized (kills drift after validation)."""
        W = np.clip(self.W, 0.0, None)
        return ChannelSpec(W / W.sum(axis=-1, keepdims=True), self.name)


@dataclass(frozen=True)
class CostModel:
    g1: np.ndarray
    g2: np.ndarray
    l: np.ndarray

    def __post_init__(self):
        for key in ("g1", "g2", "l"):
            v = np.array(getattr(self, key), dtype=float).ravel()
            v.setflags(write=False)
            object.__setattr__(self, key, v)

    @classmethod
    def zero(cls, spec: ChannelSpec) -> "CostModel":
        return cls(np.zeros(spec.n1), np.zeros(spec.n2), np.zeros(spec.ns))


@dataclass(frozen=True)
class ConstraintSpec:
    gamma1: float
    gamma2: float
    lam: float

    def clamped(self, costs: CostModel) -> "ConstraintSpec":
        """Clamp the levels into [0, max cost], warning when anything moves."""
        new = (
            float(np.clip(self.gamma1, 0.0, costs.g1.max())),
            float(np.clip(self.gamma2, 0.0, costs.g2.max())),
            float(np.clip(self.lam, 0.0, costs.l.max())),
        )
        if new != (self.gamma1, self.gamma2, self.lam):
            warnings.warn(
                f"constraint levels clamped from {(self.gamma1, self.gamma2, self.lam)} to {new}",
                stacklevel=2,
            )
        return ConstraintSpec(*new)


@dataclass(frozen=True)
class InputEnsemble:
    """Time-sharing law P_U with conditionally independent inputs."""

    pu: np.ndarray
    px1_given_u: np.ndarray
    px2_given_u: np.ndarray

    def __post_init__(self):
        pu = _as_pmf(self.pu, "pu")
        p1 = _as_rows(self.px1_given_u, "px1_given_u")
        p2 = _as_rows(self.px2_given_u, "px2_given_u")
        if p1.shape[0] != pu.size or p2.shape[0] != pu.size:
            raise ValueError("conditional input laws need one row per u")
        for a in (pu, p1, p2):
            a.setflags(write=False)
        object.__setattr__(self, "pu", pu)
        object.__setattr__(self, "px1_given_u", p1)
        object.__setattr__(self, "px2_given_u", p2)

    @classmethod
    def product(cls, p1, p2) -> "InputEnsemble":
        return cls([1.0], [p1], [p2])

    @property
    def nu(self) -> int:
        return self.pu.size

    @property
    def px1(self) -> np.ndarray:
        return self.pu @ self.px1_given_u

    @property
    def px2(self) -> np.ndarray:
        return self.pu @ self.px2_given_u

    def joint(self) -> np.ndarray:
        """P(u, x1, x2)."""
        return self.pu[:, None, None] * self.px1_given_u[:, :, None] * self.px2_given_u[:, None, :]

    def joint_x1x2_given_u(self) -> np.ndarray:
        return self.px1_given_u[:, :, None] * self.px2_given_u[:, None, :]

    def key(self) -> tuple:
        """Hashable rounded encoding, used for caching and tie-breaks."""
        return tuple(np.round(np.concatenate(
            [self.pu, self.px1_given_u.ravel(), self.px2_given_u.ravel()]), 12))


@dataclass(frozen=True)
class StateLaw:
    """Either one pmf over S (``rows`` has a single row, ``conditioned`` False)
    or one pmf per u (``conditioned`` True)."""

    rows: np.ndarray
    conditioned: bool = False

    def __post_init__(self):
        rows = _as_rows(self.rows, "state law")
        if not self.conditioned and rows.shape[0] != 1:
            raise ValueError("unconditional state law must have exactly one row")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @classmethod
    def unconditional(cls, q) -> "StateLaw":
        return cls(np.atleast_2d(q), False)

    @classmethod
    def given_u(cls, rows) -> "StateLaw":
        return cls(rows, True)

    def for_u(self, nu: int) -> np.ndarray:
        if self.conditioned:
            if self.rows.shape[0] != nu:
                raise ValueError("state law has wrong number of u rows")
            return self.rows
        return np.repeat(self.rows, nu, axis=0)


def validate(spec: ChannelSpec, costs: CostModel | None = None,
             constraints: ConstraintSpec | None = None, tol: float = PROB_TOL) -> list[str]:
    """Report-style validation; an empty list means valid."""
    out: list[str] = []
    W = spec.W
    if not np.all(np.isfinite(W)):
        out.append("W has non-finite entries")
    if np.any(W < -tol):
        out.append("W has negative entries")
    sums = W.sum(axis=-1)
    bad = np.argwhere(np.abs(sums - 1.0) > tol)
    if len(bad):
        x1, x2, s = bad[0]
        out.append(f"row not stochastic: W(.|{x1},{x2},{s}) sums to {sums[x1, x2, s]:.12g}"
                   + (f" (+{len(bad) - 1} more)" if len(bad) > 1 else ""))
    if costs is not None:
        for key, n, label in (("g1", spec.n1, "input 1"), ("g2", spec.n2, "input 2"),
                              ("l", spec.ns, "state")):
            v = getattr(costs, key)
            if v.size != n:
                out.append(f"{key} has length {v.size}, expected {n}")
                continue
            if np.any(~np.isfinite(v)) or np.any(v < 0):
                out.append(f"negative or non-finite cost in {key}")
            elif not np.any(v == 0):
                out.append(f"no zero-cost {label} letter in {key}")
        if constraints is not None:
            for name, val, vec in (("gamma1", constraints.gamma1, costs.g1),
                                   ("gamma2", constraints.gamma2, costs.g2),
                                   ("lambda", constraints.lam, costs.l)):
                if vec.size and np.all(np.isfinite(vec)) and not 0 <= val <= vec.max():
                    out.append(f"constraint {name}={val} out of range [0, {vec.max()}]")
    return out


def expected_cost(p, cost) -> float:
    p = np.asarray(p, dtype=float)
    cost = np.asarray(cost, dtype=float)
    if p.shape != cost.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {cost.shape}")
    return float(p @ cost)


def averaged_channel(spec: ChannelSpec, q) -> np.ndarray:
    """Sum_s q(s) W(y|x1,x2,s), shape (n1, n2, ny)."""
    q = np.asarray(q, dtype=float)
    if q.shape != (spec.ns,):
        raise ValueError(f"state pmf has shape {q.shape}, expected ({spec.ns},)")
    return np.einsum("abst,s->abt", spec.W, q)


def entropy(p, axis=None) -> np.ndarray | float:
    """Shannon entropy in bits with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0, -p * np.log2(p), 0.0)
    return t.sum(axis=axis)


def _xlogy_ratio(p, num, den):
    """p * log2(num/den) with the 0 log 0 = 0 convention."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0, p * (np.log2(num) - np.log2(den)), 0.0)


def conditional_channels(spec: ChannelSpec, ens: InputEnsemble, law: StateLaw) -> np.ndarray:
    """P(y | u, x1, x2) after averaging over the state law, shape (nu, n1, n2, ny)."""
    Q = law.for_u(ens.nu)
    if Q.shape[1] != spec.ns:
        raise ValueError("state law does not match |S|")
    if ens.px1_given_u.shape[1] != spec.n1 or ens.px2_given_u.shape[1] != spec.n2:
        raise ValueError("ensemble does not match input alphabets")
    return np.einsum("abst,us->uabt", spec.W, Q)


def info_terms(P: np.ndarray, ens: InputEnsemble) -> tuple[float, float, float]:
    """(I(X1;Y|X2,U), I(X2;Y|X1,U), I(X1,X2;Y|U)) given P(y|u,x1,x2)."""
    p1 = ens.px1_given_u
    p2 = ens.px2_given_u
    w = ens.pu[:, None, None] * p1[:, :, None] * p2[:, None, :]  # P(u,x1,x2)
    py_ux2 = np.einsum("ua,uabt->ubt", p1, P)  # P(y|u,x2)
    py_ux1 = np.einsum("ub,uabt->uat", p2, P)  # P(y|u,x1)
    py_u = np.einsum("ua,uat->ut", p1, py_ux1)
    joint = w[..., None] * P
    i1 = _xlogy_ratio(joint, P, py_ux2[:, None, :, :]).sum()
    i2 = _xlogy_ratio(joint, P, py_ux1[:, :, None, :]).sum()
    i12 = _xlogy_ratio(joint, P, py_u[:, None, None, :]).sum()
    return max(float(i1), 0.0), max(float(i2), 0.0), max(float(i12), 0.0)


def mutual_informations(spec: ChannelSpec, ens: InputEnsemble, law: StateLaw) -> tuple[float, float, float]:
    """Conditional mutual informations (I(X1;Y|X2,U), I(X2;Y|X1,U), I(X1,X2;Y|U)) in bits."""
    return info_terms(conditional_channels(spec, ens, law), ens)


def joint_distribution(spec: ChannelSpec, ens: InputEnsemble, law: StateLaw) -> np.ndarray:
    """Full joint P(u, x1, x2, s, y)."""
    Q = law.for_u(ens.nu)
    return (ens.joint()[:, :, :, None, None] * Q[:, None, None, :, None]
            * spec.W[None, :, :, :, :])
