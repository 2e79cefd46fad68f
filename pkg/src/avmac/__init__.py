"""Arbitrarily varying multiple-access channels under input and state constraints.

Modules: ``channel`` (data model and information measures), ``symmetrizability``
(symmetrizer LPs, minimal symmetrizing costs, jamming thresholds), ``capacity``
(random-code, divided-randomness and deterministic-code regions), ``examples``
(built-in channels with closed forms), ``coding`` (finite-blocklength experiments),
``io`` (channel-spec documents, region export) and ``cli``.
"""
from .channel import (ChannelSpec, ConstraintSpec, CostModel, InputEnsemble, StateLaw,
                      averaged_channel, expected_cost, joint_distribution, mutual_informations,
                      validate)
from .symmetrizability import (SymmetryKind, Symmetrizer, Thresholds, check_symmetrizable,
                               min_symmetrizing_cost, thresholds, tilde_lambda, tilde_lambdas)
from .capacity import (CostConstrained, ExplicitList, Mode, Pentagon, RateRegion,
                       cost_constrained, deterministic_region, dispatch_case,
                       divided_randomness_region, min_info_over_states, pentagon,
                       random_code_region)
from .examples import BUILTINS, builtin
from .coding import (Codebook, PermutationCode, SimReport, TypeDecoder, MaxLikelihoodWorstQ,
                     build_codebook, conditional_error_exact, decode, run_jammer, simulate)

__version__ = "0.1.0"
