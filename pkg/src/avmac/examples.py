"""Worked channels with known answers, and their closed-form oracles."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .channel import ChannelSpec, ConstraintSpec, CostModel


@dataclass(frozen=True)
class OracleResult:
    quantity: str
    value: object  # float, math.inf, or a region description
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BuiltinChannel:
    spec: ChannelSpec
    costs: CostModel
    constraints: ConstraintSpec
    meta: dict = field(default_factory=dict)


def binary_entropy(t: float) -> float:
    """h(t) in bits, h(0) = h(1) = 0."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"binary_entropy argument {t} outside [0, 1]")
    if t in (0.0, 1.0):
        return 0.0
    return float(-t * np.log2(t) - (1 - t) * np.log2(1 - t))


def convolve_prob(a: float, b: float) -> float:
    """Binary convolution a*b = (1-a)b + a(1-b)."""
    for v in (a, b):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"convolve_prob argument {v} outside [0, 1]")
    return (1 - a) * b + a * (1 - b)


def _deterministic(f, n1, n2, ns, ny, name):
    W = np.zeros((n1, n2, ns, ny))
    for x1 in range(n1):
        for x2 in range(n2):
            for s in range(ns):
                W[x1, x2, s, f(x1, x2, s)] = 1.0
    return ChannelSpec(W, name)


def adder_channel(state_size: int = 3) -> BuiltinChannel:
    """Y = X1 + X2 + S with binary inputs and S in {0, .., state_size-1}.

    Costs: Hamming inputs, l(s) = s.
    """
    if state_size not in (2, 3):
        raise ValueError("adder channel supports state_size 2 or 3")
    spec = _deterministic(lambda a, b, s: a + b + s, 2, 2, state_size, 2 + state_size,
                          f"adder{state_size}")
    costs = CostModel([0, 1], [0, 1], np.arange(state_size))
    return BuiltinChannel(spec, costs, ConstraintSpec(1.0, 1.0, float(state_size - 1)))


def ahlswede_cai_channel() -> BuiltinChannel:
    """Binary MAC that is jointly symmetrizable but not per-user symmetrizable."""
    W = np.zeros((2, 2, 2, 2))
    half = [0.5, 0.5]
    W[0, 0, 0] = W[1, 1, 0] = [1, 0]
    W[1, 0, 0] = W[0, 1, 0] = half
    W[0, 0, 1] = W[1, 1, 1] = half
    W[1, 0, 1] = W[0, 1, 1] = [0, 1]
    costs = CostModel([0, 1], [0, 1], [0, 1])
    return BuiltinChannel(ChannelSpec(W, "ahlswede-cai"), costs, ConstraintSpec(1.0, 1.0, 1.0))


def bsmac_channel(gamma1: float = 1.0, gamma2: float = 1.0, lam: float = 0.1) -> BuiltinChannel:
    """Two independent binary symmetric channels Y_k = X_k + S_k mod 2.

    States and outputs are pairs flattened row-major: (a, b) -> 2a + b.
    Costs are Hamming weights, l(s) = s1 + s2.
    """
    W = np.zeros((2, 2, 4, 4))
    for x1 in range(2):
        for x2 in range(2):
            for s1 in range(2):
                for s2 in range(2):
                    W[x1, x2, 2 * s1 + s2, 2 * ((x1 + s1) % 2) + (x2 + s2) % 2] = 1.0
    costs = CostModel([0, 1], [0, 1], [0, 1, 1, 2])
    return BuiltinChannel(ChannelSpec(W, "bsmac"), costs, ConstraintSpec(gamma1, gamma2, lam))


def erasure_adder_channel(r: int = 2, lam: float = 1.0) -> BuiltinChannel:
    """Y = X1 + X2 when X1*X2 = S = 0, erasure symbol r otherwise. Inputs 0..r-1."""
    if r < 2:
        raise ValueError("erasure adder channel needs r >= 2")
    spec = _deterministic(lambda a, b, s: a + b if (a * b == 0 and s == 0) else r,
                          r, r, 2, r + 1, f"erasure{r}")
    costs = CostModel(np.zeros(r), np.zeros(r), [0, 1])
    return BuiltinChannel(spec, costs, ConstraintSpec(0.0, 0.0, lam))


def gaussian_discretized(gamma1: float = 1.0, gamma2: float = 1.0, lam: float = 0.5,
                         sigma2: float = 0.5, input_grid: int = 9, state_grid: int | None = None,
                         output_grid: int = 33, span: float = 3.0,
                         output_span: float = 4.0) -> BuiltinChannel:
    """Quantized Y = X1 + X2 + S + Z, Z ~ N(0, sigma2), with power costs.

    Inputs and states share one lattice of spacing span*sqrt(max gamma)/((input_grid-1)/2)
    so that the shift symmetrizers s = x1, s = x2 and s = x1 + x2 are representable.
    Each user gets the lattice points in [-span sqrt(gamma_k), span sqrt(gamma_k)]; states
    cover [-R, R] with R = max(span sqrt(lam), largest |x1 + x2|), widened to at least
    ``state_grid`` points when given. Outputs are ``output_grid`` equal bins on [-c, c],
    c = output_span * sqrt(gamma1 + gamma2 + lam + sigma2), with the Gaussian tails
    folded into the edge bins.
    """
    if min(gamma1, gamma2, lam, sigma2) <= 0:
        raise ValueError("gaussian parameters must be positive")
    if input_grid < 3 or input_grid % 2 == 0 or output_grid < 3:
        raise ValueError("need an odd input grid with >= 3 points and >= 3 output bins")
    half = (input_grid - 1) // 2
    delta = span * np.sqrt(max(gamma1, gamma2)) / half

    def lattice(radius):
        k = int(np.floor(radius / delta + 1e-9))
        return delta * np.arange(-k, k + 1)

    x1 = lattice(span * np.sqrt(gamma1))
    x2 = lattice(span * np.sqrt(gamma2))
    if x1.size < 3 or x2.size < 3:
        raise ValueError("degenerate input grid; powers too unequal for the lattice")
    s = lattice(max(span * np.sqrt(lam), x1.max() + x2.max()))
    if state_grid is not None and s.size < state_grid:
        s = delta * np.arange(-(state_grid // 2), state_grid // 2 + 1)
    c = output_span * np.sqrt(gamma1 + gamma2 + lam + sigma2)
    edges = np.linspace(-c, c, output_grid + 1)
    edges[0], edges[-1] = -np.inf, np.inf
    t = x1[:, None, None] + x2[None, :, None] + s[None, None, :]
    sd = np.sqrt(sigma2)
    cdf = norm.cdf((edges[None, None, None, :] - t[..., None]) / sd)
    W = np.diff(cdf, axis=-1)
    W = np.clip(W, 0.0, None)
    W /= W.sum(axis=-1, keepdims=True)
    costs = CostModel(x1 ** 2, x2 ** 2, s ** 2)
    meta = {"x1": x1, "x2": x2, "s": s, "delta": delta, "edges": edges,
            "sigma2": sigma2, "gamma1": gamma1, "gamma2": gamma2, "lam": lam}
    return BuiltinChannel(ChannelSpec(W, "gaussian"), costs,
                          ConstraintSpec(gamma1, gamma2, lam), meta)


# -- closed forms -------------------------------------------------------------

def bsmac_thresholds(gamma1: float, gamma2: float) -> OracleResult:
    w1, w2 = min(gamma1, 0.5), min(gamma2, 0.5)
    return OracleResult("thresholds", (w1 + w2, w1, w2), {"gamma1": gamma1, "gamma2": gamma2})


def bsmac_corner(gamma: float, lam: float) -> float:
    """h(omega * lambda) - h(lambda) with omega = min(gamma, 1/2), lambda = min(lam, 1/2)."""
    w, lm = min(gamma, 0.5), min(lam, 0.5)
    return binary_entropy(convolve_prob(w, lm)) - binary_entropy(lm)


def bsmac_random_region(gamma1: float, gamma2: float, lam: float) -> OracleResult:
    return OracleResult("random-code rectangle",
                        (bsmac_corner(gamma1, lam), bsmac_corner(gamma2, lam)),
                        {"gamma1": gamma1, "gamma2": gamma2, "lambda": lam})


def bsmac_deterministic_region(gamma1: float, gamma2: float, lam: float) -> OracleResult:
    """Case label and corner pair of the deterministic-code region."""
    r1, r2 = bsmac_corner(gamma1, lam), bsmac_corner(gamma2, lam)
    if lam >= 0.5:
        case = "D" if (gamma1 <= lam and gamma2 <= lam) else "A"
        return OracleResult("deterministic region", (case, (0.0, 0.0)), {})
    if gamma1 > lam and gamma2 > lam:
        return OracleResult("deterministic region", ("A", (r1, r2)), {})
    if gamma1 <= lam < gamma2:
        return OracleResult("deterministic region", ("B", (0.0, r2)), {})
    if gamma2 <= lam < gamma1:
        return OracleResult("deterministic region", ("C", (r1, 0.0)), {})
    return OracleResult("deterministic region", ("D", (0.0, 0.0)), {})


def gaussian_random_region(gamma1, gamma2, lam, sigma2) -> OracleResult:
    n = lam + sigma2
    return OracleResult("gaussian random-code pentagon", (
        0.5 * np.log2(1 + gamma1 / n), 0.5 * np.log2(1 + gamma2 / n),
        0.5 * np.log2(1 + (gamma1 + gamma2) / n)), {"sigma2": sigma2})


def gaussian_deterministic_case(gamma1, gamma2, lam) -> str:
    if gamma1 > lam and gamma2 > lam:
        return "A"
    if gamma1 <= lam < gamma2:
        return "B"
    if gamma2 <= lam < gamma1:
        return "C"
    return "D"


BUILTINS = {
    "adder2": lambda **kw: adder_channel(2),
    "adder3": lambda **kw: adder_channel(3),
    "ahlswede-cai": lambda **kw: ahlswede_cai_channel(),
    "bsmac": lambda gamma1=1.0, gamma2=1.0, lam=0.1, **kw: bsmac_channel(gamma1, gamma2, lam),
    "erasure": lambda r=2, lam=1.0, **kw: erasure_adder_channel(int(r), lam),
    "gaussian": lambda gamma1=1.0, gamma2=1.0, lam=0.5, sigma2=0.5, input_grid=9, output_grid=33,
    **kw: gaussian_discretized(gamma1, gamma2, lam, sigma2, int(input_grid),
                               output_grid=int(output_grid)),
}


def builtin(name: str, **params) -> BuiltinChannel:
    """Construct a registered channel; unknown keyword parameters are ignored."""
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown built-in channel {name!r}; choose from {sorted(BUILTINS)}") from None
    return factory(**{k: v for k, v in params.items() if v is not None})
