"""Rates, minimax solvers and Monte Carlo simulation for myopic adversarial channels.

The jammer (James) sees the transmitted word through a noisy channel and picks a
state sequence under a type constraint; the receiver (Bob) decodes from the
state-corrupted output.
"""

from .capacity import (MinimaxResult, RateReport, capacity_c_qp, capacity_ce_qp, capacity_cef,
                       check_conditions, minimax_rate, rate_report_for_spec, rate_wcef2,
                       secrecy_c_qp, secrecy_ce_qp, secrecy_cef)
from .coding import (Codebook, CodebookSizeError, build_oracle_partition, confusability_census,
                     decode_ball, decode_erasure, decode_typicality, erasure_preimage_count,
                     generate_codebook, shell_census, stochastic_encode)
from .core import (Alphabet, ChannelSpec, ConditionalKernel, EmpiricalType, Polytope, ProbVector,
                   bec, bsc, joint_type_of, make_c_qp, make_ce_qp, make_cef, type_of)
from .adversary import AdversaryStrategy, AttackResult
from .simulator import ExperimentConfig, SecrecyConfig, SweepResult, leakage, run_trials, sweep

__version__ = "0.1.0"

__all__ = [
    "AdversaryStrategy", "Alphabet", "AttackResult", "ChannelSpec", "Codebook",
    "CodebookSizeError", "ConditionalKernel", "EmpiricalType", "ExperimentConfig",
    "MinimaxResult", "Polytope", "ProbVector", "RateReport", "SecrecyConfig", "SweepResult",
    "bec", "bsc", "build_oracle_partition", "capacity_c_qp", "capacity_ce_qp", "capacity_cef",
    "check_conditions", "confusability_census", "decode_ball", "decode_erasure",
    "decode_typicality", "erasure_preimage_count", "generate_codebook", "joint_type_of",
    "leakage", "make_c_qp", "make_ce_qp", "make_cef", "minimax_rate", "rate_report_for_spec",
    "rate_wcef2", "run_trials", "secrecy_c_qp", "secrecy_ce_qp", "secrecy_cef", "shell_census",
    "stochastic_encode", "sweep", "type_of",
]
