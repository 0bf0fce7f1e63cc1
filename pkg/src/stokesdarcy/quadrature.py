"""Gauss quadrature on the reference triangle and on segments."""

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

_tri_cache = {}
_seg_cache = {}


def triangle_rule(degree):
    """Quadrature rule on the reference triangle {x,y >= 0, x+y <= 1}.

    Conical-product construction: Gauss-Legendre in one direction crossed
    with Gauss-Jacobi (alpha=1) in the other, collapsed onto the triangle.
    Exact for bivariate polynomials of total degree <= ``degree``.

    Returns
    -------
    points : (m, 2) ndarray
    weights : (m,) ndarray, summing to 1/2 (the reference area)
    """
    if degree in _tri_cache:
        return _tri_cache[degree]
    k = degree // 2 + 1
    xg, wg = roots_legendre(k)
    xj, wj = roots_jacobi(k, 1.0, 0.0)
    # map both 1d rules from (-1,1) to (0,1); Jacobi weight (1-t) absorbs
    # the collapsed-edge Jacobian
    xg = 0.5 * (xg + 1.0)
    wg = 0.5 * wg
    xj = 0.5 * (xj + 1.0)
    wj = 0.25 * wj
    pts = np.empty((k * k, 2))
    wts = np.empty(k * k)
    idx = 0
    for a, wa in zip(xj, wj):
        for b, wb in zip(xg, wg):
            pts[idx] = (a, (1.0 - a) * b)
            wts[idx] = wa * wb
            idx += 1
    _tri_cache[degree] = (pts, wts)
    return pts, wts


def segment_rule(npoints):
    """Gauss-Legendre rule on (0,1); exact for degree 2*npoints - 1."""
    if npoints in _seg_cache:
        return _seg_cache[npoints]
    x, w = roots_legendre(npoints)
    rule = (0.5 * (x + 1.0), 0.5 * w)
    _seg_cache[npoints] = rule
    return rule
