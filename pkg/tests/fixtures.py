"""Shared curve fixtures for the test suite."""
from legendrian.fixtures import (  # noqa: F401
    DEGREE11_Z as BEST_FIG8_Z, cos_k, degree11_figure8, degree11_figure8_xy as best_fig8_xy,
    figure8_diagram, figure8_xy as fig8_xy, sin_k, torus_curve, torus_G_constant, trefoil_diagram,
    unknot_diagram,
)


def trefoil_xy():
    """Standard 3-crossing trefoil shadow ``(sin t + 2 sin 2t, cos t - 2 cos 2t)``."""
    return sin_k(1) + sin_k(2, 2.0), cos_k(1) - cos_k(2, 2.0)


def circle_xy(r=1.0):
    return cos_k(1, r), sin_k(1, r)
