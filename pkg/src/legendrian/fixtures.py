"""Built-in diagrams and curves used by the tests, the examples and ``legendrian export``."""
from __future__ import annotations

import numpy as np

from . import knots
from .diagram import DiagramCurve
from .legendrify import S3Curve, legendrian_lift, project_to_s3
from .trigpoly import TrigPoly


def cos_k(k: int, c: float = 1.0) -> TrigPoly:
    """``c cos(k t)``."""
    return TrigPoly(0.0, [0.0] * (k - 1) + [c])


def sin_k(k: int, c: float = 1.0) -> TrigPoly:
    """``c sin(k t)``."""
    return TrigPoly(0.0, [], [0.0] * (k - 1) + [c])


def figure8_xy():
    """Figure-eight shadow with nine crossings and no kinks."""
    return cos_k(3) * (2.0 + cos_k(2)), sin_k(4) + sin_k(2, 0.25)


# the induced over/under pattern with crossing 5, the one at the origin, switched
FIGURE8_CODE = "U1- U2+ U3- U4+ O5+ U6+ U7- U8+ U9- O1- O6+ O7- O8+ U5+ O2+ O3- O4+ O9-"


def figure8_diagram() -> DiagramCurve:
    X, Y = figure8_xy()
    return DiagramCurve(X, Y, tuple(knots.parse_code(FIGURE8_CODE)), "figure8")


def trefoil_xy():
    """Three-lobed trefoil shadow, ``(sin t / 2 + sin 2t, cos t / 2 - cos 2t)``."""
    return sin_k(1, 0.5) + sin_k(2), cos_k(1, 0.5) - cos_k(2)


TREFOIL_CODE = "O1+ U2+ O3+ U1+ O2+ U3+"


def trefoil_diagram() -> DiagramCurve:
    X, Y = trefoil_xy()
    return DiagramCurve(X, Y, tuple(knots.parse_code(TREFOIL_CODE)), "trefoil")


def unknot_diagram(r: float = 1.0) -> DiagramCurve:
    return DiagramCurve(cos_k(1, r), sin_k(1, r), (), "unknot")


def tacnode_diagram() -> DiagramCurve:
    """Closed curve whose two branches touch tangentially at the origin (``t = 0, pi``)."""
    X = sin_k(2) + sin_k(1, 0.3)
    Y = sin_k(1) * sin_k(1) * (1.0 + sin_k(1, 0.5))
    return DiagramCurve(X, Y, (), "tacnode")


def degree11_figure8_xy():
    """Degree-11 figure-eight projection ``(X, Y)`` as printed, before rebalancing."""
    X = cos_k(3, 2.4) + cos_k(1)
    amp = cos_k(1) * cos_k(1) * 1.5 + sin_k(1) * sin_k(1) * (2.0 / 3.0)
    # 1.5 cos(6t - 1) + sin(6t)
    Y = amp * (cos_k(6, 1.5 * np.cos(1.0)) + sin_k(6, 1.5 * np.sin(1.0)) + sin_k(6))
    return X, Y


# rounded Z coefficients printed with the degree-11 curve: frequency -> (cos, sin)
DEGREE11_Z = {
    1: (-1.4183, -3.9589), 3: (-3.3015, -9.2153), 5: (-1.1110, -3.1011),
    7: (-0.4511, -1.2590), 9: (-0.4169, -1.1636), 11: (-0.0921, -0.2571),
}


def degree11_figure8() -> S3Curve:
    """Rebalanced degree-11 figure-eight, lifted and projected to S^3."""
    return project_to_s3(legendrian_lift(*degree11_figure8_xy()))


def torus_curve(p: int = 2, q: int = 3) -> S3Curve:
    """Legendrian ``(p, q)`` torus knot ``(sqrt(p/(p+q)) e^{iqt}, sqrt(q/(p+q)) e^{-ipt})``, ``rho = 1``."""
    a, b = np.sqrt(p / (p + q)), np.sqrt(q / (p + q))
    return S3Curve.from_numerators(cos_k(q, a), sin_k(q, a), cos_k(p, b), sin_k(p, -b))


def torus_G_constant(p: int = 2, q: int = 3) -> float:
    """The constant ``c`` with ``z1^p z2^q = c`` on :func:`torus_curve` (real for this phase)."""
    return (p / (p + q)) ** (p / 2) * (q / (p + q)) ** (q / 2)


DIAGRAMS = {"figure8": figure8_diagram, "trefoil": trefoil_diagram, "unknot": unknot_diagram,
            "tacnode": tacnode_diagram}
CURVES = {"torus": torus_curve, "figure8-degree11": degree11_figure8}

__all__ = [
    "cos_k", "sin_k", "figure8_xy", "figure8_diagram", "FIGURE8_CODE", "trefoil_xy", "trefoil_diagram",
    "TREFOIL_CODE", "unknot_diagram", "tacnode_diagram", "degree11_figure8_xy", "DEGREE11_Z", "degree11_figure8",
    "torus_curve", "torus_G_constant", "DIAGRAMS", "CURVES",
]
