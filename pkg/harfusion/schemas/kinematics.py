from typing import NamedTuple


class Quaternion(NamedTuple):
    """
    Orientation quaternion in (x, y, z, w) order, scalar last.
    """

    x: float
    y: float
    z: float
    w: float


class Vec3(NamedTuple):
    x: float
    y: float
    z: float


IDENTITY = Quaternion(0.0, 0.0, 0.0, 1.0)
X_AXIS = Vec3(1.0, 0.0, 0.0)
Z_AXIS = Vec3(0.0, 0.0, 1.0)
