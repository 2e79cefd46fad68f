"""Random-code, divided-randomness and deterministic-code regions of the binary symmetric MAC.

Prints the random-code corners against their closed form for a few state budgets and
shows how the deterministic region degrades as one user's input budget drops below
the state budget.

    python3 demos/bsmac_regions.py
"""
from avmac.capacity import EnsembleSearch, deterministic_region, random_code_region
from avmac.examples import bsmac_channel, bsmac_corner

print("lambda   R1 corner   closed form")
for lam in (0.05, 0.1, 0.2, 0.4):
    b = bsmac_channel(1, 1, lam)
    reg = random_code_region(b.spec, b.costs, b.constraints)
    print(f"{lam:<8} {reg.max_r1:.6f}    {bsmac_corner(1, lam):.6f}")

print("\ngamma1  gamma2  case  R1        R2")
for g1, g2 in ((1, 1), (0.05, 1), (0.05, 0.08)):
    b = bsmac_channel(g1, g2, 0.1)
    search = EnsembleSearch(b.spec, b.costs, b.constraints)
    det = deterministic_region(b.spec, b.costs, b.constraints, search=search)
    print(f"{g1:<7} {g2:<7} {det.case_label:<5} {det.max_r1:.6f}  {det.max_r2:.6f}")
