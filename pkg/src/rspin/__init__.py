"""Exact open r-spin intersection numbers, computed two independent ways."""

from .coeffring import NonRationalError, RingElem, q_power, rational_part
from .correlators import CorrelatorTable, Evaluator, NeedsBase, fit_extended_primaries, load_base_table
from .hierarchy import FlowInconsistency, GDSolution, solve, solve_L, solve_wave_function
from .keys import CorrelatorKey, dimension_gate, ext_key, open_key
from .potentials import OpenPotentials, change_of_variables, extract_correlator, open_potential
from .psido import PsiDO, compose, rth_root
from .series import MSeries, TruncationError, VarSystem

__version__ = "0.1.0"

__all__ = [
    "CorrelatorKey", "CorrelatorTable", "Evaluator", "FlowInconsistency", "GDSolution", "MSeries",
    "NeedsBase", "NonRationalError", "OpenPotentials", "PsiDO", "RingElem", "TruncationError",
    "VarSystem", "change_of_variables", "compose", "dimension_gate", "ext_key", "extract_correlator",
    "fit_extended_primaries", "load_base_table", "open_key", "open_potential", "q_power",
    "rational_part", "rth_root", "solve", "solve_L", "solve_wave_function",
]
