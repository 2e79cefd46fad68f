"""A jammer that knows the codebook defeats a deterministic code on the adder channel.

Y = X1 + X2 + S with S in {0, 1, 2}: sending s = x1' + x2' for a random codeword pair
makes the output symmetric in the true and the fake pair. The exact error is computed by
enumeration and compared with a Monte-Carlo estimate.

    python3 demos/symmetrizing_attack.py
"""
import numpy as np

from avmac.channel import InputEnsemble
from avmac.coding import (SymJoint, TypeDecoder, build_codebook, exact_error_under_attack,
                          simulate)
from avmac.examples import adder_channel

b = adder_channel(3)
J = np.zeros((2, 2, 3))
for a in range(2):
    for c in range(2):
        J[a, c, a + c] = 1.0
attack = SymJoint(J)
ens = InputEnsemble.product([0.5, 0.5], [0.5, 0.5])

print("seed  exact error  MC estimate  95% Wilson interval")
for seed in range(5):
    code = build_codebook(b.spec, b.costs, b.constraints, 6, 2, 2, ens, seed=seed)
    exact, _ = exact_error_under_attack(b.spec, code, TypeDecoder(), attack, b.costs,
                                        b.constraints)
    rep = simulate(b.spec, code, TypeDecoder(), attack, b.costs, b.constraints, 2000, seed)
    lo, hi = rep.interval
    print(f"{seed:<5} {exact:<12.4f} {rep.estimate:<12.4f} [{lo:.4f}, {hi:.4f}]")
