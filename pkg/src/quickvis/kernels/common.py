"""Shared constants for the kernel backends.

Contact codes returned by the scan kernels:
  0 = certain no-contact (clear)
  1 = certain proper crossing / strictly inside obstacle (blocked)
  2 = grazing or numerically uncertain; caller must resolve exactly
"""

CLEAR = 0
BLOCKED = 1
GRAZE = 2

# Shewchuk-style first-level error bound factor for the 2x2 orientation determinant.
ORIENT_ERR = 3.3306690738754716e-16
