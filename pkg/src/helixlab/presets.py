"""Named scenarios shipped with the package."""

import math

from .curves import CurveN

EXAMPLE_5_1 = "example-5.1"

# plane curve in the plane 4x - 3z = 0, unit speed, curvature 1
EXAMPLE_CURVE = ("(3/5)*sin(u)", "1 + cos(u)", "(4/5)*sin(u)")
EXAMPLE_THETA = "pi/6"
EXAMPLE_U_DOMAIN = ("0", "5*pi")
EXAMPLE_V_DOMAIN = ("0", "pi")


def example_curve() -> CurveN:
    return CurveN.from_strings(EXAMPLE_CURVE, "u", (0.0, 5 * math.pi))


def example_printed_coordinates(u, v):
    """The surface coordinates as printed for the preset (theta = pi/6)."""
    import numpy as np

    r3 = math.sqrt(3.0)
    x = (3 / 5 - 3 * v / 10) * np.sin(u) + (2 * r3 / 5) * v
    y = (1 - v / 2) * np.cos(u) + 1
    z = (4 / 5 - 2 * v / 5) * np.sin(u) - (3 * r3 / 10) * v
    return np.stack([x, y, z])
