"""Secret random permutations versus a codebook-aware jammer on the Ahlswede-Cai channel.

The same codebooks are run once as deterministic codes and once with a fresh uniform
permutation of the time axis per block (unknown to the jammer), on paired seeds.

    python3 demos/permutation_codes.py
"""
import numpy as np

from avmac.channel import InputEnsemble
from avmac.coding import (MaxLikelihoodWorstQ, PermutationCode, build_codebook, simulate,
                          strategy_from_witness)
from avmac.examples import ahlswede_cai_channel
from avmac.symmetrizability import SymmetryKind, check_symmetrizable

b = ahlswede_cai_channel()
attack = strategy_from_witness(check_symmetrizable(b.spec, SymmetryKind.JOINT), b.spec)
dec = MaxLikelihoodWorstQ(np.array([0.5, 0.5]))
ens = InputEnsemble.product([0.5, 0.5], [0.5, 0.5])

print("seed  deterministic  permuted")
for seed in range(5):
    code = build_codebook(b.spec, b.costs, b.constraints, 8, 2, 2, ens, seed=seed)
    det = simulate(b.spec, code, dec, attack, b.costs, b.constraints, 2000, seed)
    perm = simulate(b.spec, PermutationCode(code, np.arange(8)), dec, attack, b.costs,
                    b.constraints, 2000, seed)
    print(f"{seed:<5} {det.estimate:<14.4f} {perm.estimate:.4f}")
