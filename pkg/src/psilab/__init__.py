"""Desk-scale laboratory for large values of psi(x) - x.

Exact Chebyshev-function computation, zeta-zero statistics, the truncated
explicit formula, Bohr-set geometry, smooth majorants and the end-to-end
amplification pipeline.
"""

from psilab.zeros import ZeroTable, load_zero_table, bundled_table_path
from psilab.psi import PsiSeries, ErrorSample, build_psi_series, mangoldt
from psilab.intervals import IntervalUnion
from psilab.bohr import BohrSpec

__all__ = [
    "ZeroTable",
    "load_zero_table",
    "bundled_table_path",
    "PsiSeries",
    "ErrorSample",
    "build_psi_series",
    "mangoldt",
    "IntervalUnion",
    "BohrSpec",
]

__version__ = "0.1.0"
