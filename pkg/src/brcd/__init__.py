"""Contrastive knowledge distillation for binary hash codes.

Modules: ``codes`` (packed ±1 codes), ``metrics``, ``cluster``, ``bitmask``,
``kd_loss``, ``distill``, ``search`` and the ``brcd`` command line in ``cli``.
"""

__version__ = "0.1.0"

from .codes import BitCode, CodeMatrix, cosine, dot_pm1, hamming, sign_quantize  # noqa: E402,F401
from .errors import BRCDError, DimensionError, FormatError, InvalidInputError, NumericError  # noqa: E402,F401
