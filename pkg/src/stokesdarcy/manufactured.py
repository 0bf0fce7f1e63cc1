"""Closed-form reference solution on the split unit square.

The free-flow velocity, both pressures and the porous velocity
u_D = -K grad(p_D) are smooth trig fields chosen so that mass is conserved
across the interface exactly and the essential boundary conditions hold.
The momentum sources f_S, f_D follow by substitution.  The normal and
tangential stress balances on the interface are NOT homogeneous for these
fields, so the load carries an explicit interface correction g_sigma.

All formulas assume unit viscosity, friction and permeability.
"""

import numpy as np

PI = np.pi


def _sc(x):
    s = np.sin(2 * PI * x)
    c = np.cos(2 * PI * x)
    return s, c


class ManufacturedCase:
    """Reference fields and derived data, all vectorized over (n, 2) points."""

    nu = 1.0
    kappa = 1.0
    tau = 1.0

    # --- Stokes fields -------------------------------------------------
    def u_S(self, p):
        x, y = p[:, 0], p[:, 1]
        s, c = _sc(x)
        out = np.empty_like(p)
        out[:, 0] = PI * np.sin(2 * PI * y) * s ** 3
        out[:, 1] = -3 * PI * s ** 2 * c * (1 - np.cos(2 * PI * y))
        return out

    def grad_u_S(self, p):
        """Gradient with layout (n, 2, 2), entry [i, j] = d u_i / d x_j."""
        x, y = p[:, 0], p[:, 1]
        s, c = _sc(x)
        sy, cy = np.sin(2 * PI * y), np.cos(2 * PI * y)
        g = np.empty((len(p), 2, 2))
        g[:, 0, 0] = 6 * PI ** 2 * sy * s ** 2 * c
        g[:, 0, 1] = 2 * PI ** 2 * cy * s ** 3
        g[:, 1, 0] = -6 * PI ** 2 * (1 - cy) * (2 * s * c ** 2 - s ** 3)
        g[:, 1, 1] = -6 * PI ** 2 * sy * s ** 2 * c
        return g

    def p_S(self, p):
        x, y = p[:, 0], p[:, 1]
        return -(PI / 4) * np.cos(PI * x / 2) * (y - 0.5 + np.sin(PI * y))

    def f_S(self, p):
        """Momentum source -div(2 eps(u_S)) + grad p_S."""
        x, y = p[:, 0], p[:, 1]
        s, c = _sc(x)
        sy, cy = np.sin(2 * PI * y), np.cos(2 * PI * y)
        lap1 = 4 * PI ** 3 * sy * (6 * s - 10 * s ** 3)
        lap2 = -12 * PI ** 3 * ((1 - cy) * (2 * c ** 3 - 7 * s ** 2 * c)
                                + s ** 2 * c * cy)
        out = np.empty_like(p)
        out[:, 0] = -lap1 + (PI ** 2 / 8) * np.sin(PI * x / 2) * (y - 0.5 + np.sin(PI * y))
        out[:, 1] = -lap2 - (PI / 4) * np.cos(PI * x / 2) * (1 + PI * np.cos(PI * y))
        return out

    # --- Darcy fields --------------------------------------------------
    def p_D(self, p):
        x, y = p[:, 0], p[:, 1]
        s, c = _sc(x)
        return (3 * PI * y - 1.5 * np.sin(2 * PI * y)) * s ** 2 * c

    def u_D(self, p):
        x, y = p[:, 0], p[:, 1]
        s, c = _sc(x)
        w = 3 * PI * y - 1.5 * np.sin(2 * PI * y)
        out = np.empty_like(p)
        out[:, 0] = -w * 2 * PI * (2 * s * c ** 2 - s ** 3)
        out[:, 1] = -3 * PI * (1 - np.cos(2 * PI * y)) * s ** 2 * c
        return out

    def f_D(self, p):
        """div u_D = -lap p_D; integrates to zero over the porous half."""
        x, y = p[:, 0], p[:, 1]
        s, c = _sc(x)
        w = 3 * PI * y - 1.5 * np.sin(2 * PI * y)
        return (-w * 4 * PI ** 2 * (2 * c ** 3 - 7 * s ** 2 * c)
                - 6 * PI ** 2 * np.sin(2 * PI * y) * s ** 2 * c)

    div_u_D = f_D

    # --- interface data -------------------------------------------------
    def g_sigma(self, x):
        """Residual of the interface stress balance at y = 1/2.

        g = 2 eps(u_S) n - p_S n + pi_t(u_S) + p_D n, with n = (0, -1);
        vanishing g would mean the fields satisfy the homogeneous balance.
        """
        x = np.asarray(x, dtype=float)
        s, c = _sc(x)
        out = np.empty((len(x), 2))
        out[:, 0] = 24 * PI ** 2 * s * c ** 2 - 10 * PI ** 2 * s ** 3
        out[:, 1] = -(PI / 4) * np.cos(PI * x / 2) - 1.5 * PI * s ** 2 * c
        return out

    def sigma_flux(self, x):
        """Common normal trace u_S.n = u_D.n on the interface."""
        x = np.asarray(x, dtype=float)
        s, c = _sc(x)
        return 6 * PI * s ** 2 * c


class ZeroCase(ManufacturedCase):
    """Identically zero fields; handy for degenerate-path tests."""

    def u_S(self, p):
        return np.zeros_like(p)

    def grad_u_S(self, p):
        return np.zeros((len(p), 2, 2))

    def p_S(self, p):
        return np.zeros(len(p))

    def f_S(self, p):
        return np.zeros_like(p)

    def p_D(self, p):
        return np.zeros(len(p))

    def u_D(self, p):
        return np.zeros_like(p)

    def f_D(self, p):
        return np.zeros(len(p))

    div_u_D = f_D

    def g_sigma(self, x):
        return np.zeros((len(np.asarray(x)), 2))

    def sigma_flux(self, x):
        return np.zeros(len(np.asarray(x)))
