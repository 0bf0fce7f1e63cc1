"""Error norms against the reference fields and empirical convergence rates."""

import math

import numpy as np

from . import quadrature

ERROR_QDEG = 10


class ErrorRecord:
    """Discretization errors of one solve, plus mesh metadata.

    e_uS is the full H1 norm over the free-flow half, e_uD the graph
    norm of the flux (field plus divergence), the pressures plain L2.
    """

    def __init__(self, dof, h, e_uS, e_pS, e_uD, e_pD):
        self.dof = dof
        self.h = h
        self.e_uS = e_uS
        self.e_pS = e_pS
        self.e_uD = e_uD
        self.e_pD = e_pD

    def as_tuple(self):
        return (self.e_uS, self.e_pS, self.e_uD, self.e_pD)

    def __repr__(self):
        return ("ErrorRecord(dof=%d, h=%g, e_uS=%.3e, e_pS=%.3e, "
                "e_uD=%.3e, e_pD=%.3e)" % ((self.dof, self.h)
                                           + self.as_tuple()))


def _phys_points(space, pts):
    p = space.mesh.vertices[space.mesh.triangles[space.tris]]
    J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)
    return p, J


def velocity_h1_error(vel, coeffs, u_exact, grad_exact, qdeg=ERROR_QDEG):
    sc = vel.scalar
    pts, w = quadrature.triangle_rule(qdeg)
    vals, grads, det = sc.tabulate(pts)
    p, J = _phys_points(sc, pts)
    c = coeffs[vel.cell_dofs]
    cx, cy = c[:, 0::2], c[:, 1::2]
    err2 = 0.0
    for iq, wq in enumerate(w):
        phys = p[:, 0] + J[:, :, 0] * pts[iq, 0] + J[:, :, 1] * pts[iq, 1]
        ue = u_exact(phys)
        ge = grad_exact(phys)
        uh = np.stack([cx @ vals[:, iq], cy @ vals[:, iq]], axis=-1)
        gh = np.stack([np.einsum("tl,tla->ta", cx, grads[:, :, iq, :]),
                       np.einsum("tl,tla->ta", cy, grads[:, :, iq, :])],
                      axis=1)
        err2 += wq * np.sum(det * (((ue - uh) ** 2).sum(1)
                                   + ((ge - gh) ** 2).sum((1, 2))))
    return math.sqrt(err2)


def scalar_l2_error(space, coeffs, exact, qdeg=ERROR_QDEG):
    pts, w = quadrature.triangle_rule(qdeg)
    vals, _, det = space.tabulate(pts)
    p, J = _phys_points(space, pts)
    c = coeffs[space.cell_dofs]
    err2 = 0.0
    for iq, wq in enumerate(w):
        phys = p[:, 0] + J[:, :, 0] * pts[iq, 0] + J[:, :, 1] * pts[iq, 1]
        err2 += wq * np.sum(det * (exact(phys) - c @ vals[:, iq]) ** 2)
    return math.sqrt(err2)


def flux_hdiv_error(flux, coeffs, u_exact, div_exact, qdeg=ERROR_QDEG):
    pts, w = quadrature.triangle_rule(qdeg)
    vals, divs, det = flux.tabulate(pts)
    p, J = _phys_points(flux, pts)
    c = coeffs[flux.cell_dofs]
    err2 = 0.0
    for iq, wq in enumerate(w):
        phys = p[:, 0] + J[:, :, 0] * pts[iq, 0] + J[:, :, 1] * pts[iq, 1]
        ue = u_exact(phys)
        de = div_exact(phys)
        uh = np.einsum("tl,tlc->tc", c, vals[:, :, iq, :])
        dh = np.einsum("tl,tl->t", c, divs[:, :, iq])
        err2 += wq * np.sum(det * (((ue - uh) ** 2).sum(1) + (de - dh) ** 2))
    return math.sqrt(err2)


def compute_errors(report, case=None):
    """Error record of a coupled solve against the reference fields."""
    pr = report.problem
    case = case or pr.case
    return ErrorRecord(
        pr.dof_total, pr.h,
        velocity_h1_error(pr.vel, report.u_S, case.u_S, case.grad_u_S),
        scalar_l2_error(pr.pres, report.p_S, case.p_S),
        flux_hdiv_error(pr.flux, report.u_D, case.u_D, case.div_u_D),
        scalar_l2_error(pr.dpres, report.p_D, case.p_D))


class RateRecord:
    """Empirical convergence rates between two consecutive records."""

    def __init__(self, r_uS, r_pS, r_uD, r_pD):
        self.r_uS = r_uS
        self.r_pS = r_pS
        self.r_uD = r_uD
        self.r_pD = r_pD

    def as_tuple(self):
        return (self.r_uS, self.r_pS, self.r_uD, self.r_pD)


def rate(e_coarse, e_fine, h_coarse, h_fine):
    if e_fine == 0.0 or e_coarse == 0.0:
        return float("nan")
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)


def compute_rates(coarse, fine):
    """Rates log(e/e') / log(h/h') between consecutive mesh levels."""
    if not np.isclose(fine.h / coarse.h, 0.5):
        raise ValueError("rates are defined for successive halvings only")
    return RateRecord(*(rate(ec, ef, coarse.h, fine.h)
                        for ec, ef in zip(coarse.as_tuple(),
                                          fine.as_tuple())))
