"""
Quantizer banks and their Gaussian cell moments.
"""

# flake8: noqa
# pylint: disable=unused-variable

from .bank import (
    NULL_LABEL,
    QuantizerSpec,
    QuantizerBank,
    compute_delays,
    delays_for_levels,
    null_quantizer,
    parse_bank,
    product_grid,
    quantize,
    quantize_many,
)
from .moments import (
    CellMomentTable,
    build_moment_tables,
    cell_moments,
    reduction_covariance,
)
