"""CODATA 2018 constants in SI units (h, c, k_B are exact by definition)."""

import math

PLANCK = 6.62607015e-34  # J s
HBAR = PLANCK / (2.0 * math.pi)  # 1.054571817e-34 J s
SPEED_OF_LIGHT = 299792458.0  # m / s
BOLTZMANN = 1.380649e-23  # J / K

THZ = 1e12
NM = 1e-9
UM = 1e-6
