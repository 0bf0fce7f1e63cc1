"""Decoupled nested solve of the coupled free-flow / porous problem,
the monolithic reference solve, and stability-constant estimation."""

import time

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import assembly, ftp, precond
from .assembly import PhysicalParams
from .fespace import (REGION_D, REGION_S, FluxSpace, Space, TraceSpace,
                      VectorSpace, nodal_prolongation, sigma_flux_maps,
                      vector_expand)
from .krylov import LinOp, minres
from .manufactured import ManufacturedCase
from .mesh import build_unit_square, mesh_hierarchy

PAIRS = {
    "mini-bdm1": ("p1b", "p1", "bdm1", "p0dc"),
    "p2isop1-bdm1": ("p1", "p1", "bdm1", "p0dc"),
    "taylorhood-rt1": ("p2", "p1", "rt1", "p1dc"),
}
_ALIASES = {"mini": "mini-bdm1", "iso": "p2isop1-bdm1",
            "p2isop1": "p2isop1-bdm1", "th": "taylorhood-rt1",
            "taylorhood": "taylorhood-rt1"}


def canonical_pair(name):
    key = name.lower().replace("_", "-")
    key = _ALIASES.get(key, key)
    if key not in PAIRS:
        raise ValueError("unknown element pair %r" % (name,))
    return key


class Problem:
    """Assembled discrete problem for one element pair and mesh size."""

    def __init__(self, pair, n, params=None, case=None):
        pair = canonical_pair(pair)
        vfam, pfam, ffam, qfam = PAIRS[pair]
        if n < 2 or n % 2:
            raise ValueError("n must be even and >= 2")
        if pair == "p2isop1-bdm1" and n % 4:
            raise ValueError("the iso pair needs n divisible by 4 (the "
                             "pressure lives on the n/2 mesh)")
        self.pair = pair
        self.n = n
        self.h = 1.0 / n
        self.params = params or PhysicalParams()
        self.case = case or ManufacturedCase()

        self.mesh = build_unit_square(n)
        self.vel = VectorSpace(Space(self.mesh, vfam, REGION_S))
        if pair == "p2isop1-bdm1":
            self.pres_mesh = build_unit_square(n // 2)
            self.pres = Space(self.pres_mesh, pfam, REGION_S)
            fine_p = Space(self.mesh, pfam, REGION_S)
            self.pres_embed = nodal_prolongation(self.pres, fine_p)
        else:
            self.pres_mesh = self.mesh
            self.pres = Space(self.mesh, pfam, REGION_S)
            self.pres_embed = None
        self.flux = FluxSpace(self.mesh, ffam)
        self.dpres = Space(self.mesh, qfam, REGION_D)
        self.trace = TraceSpace(self.mesh)
        self.lift, self.ntrace = sigma_flux_maps(self.flux, self.trace)

        p = self.params
        self.A_S = assembly.stokes_velocity_matrix(self.vel, p)
        if self.pres_embed is None:
            self.B_S = assembly.divergence_matrix(self.vel, self.pres)
            self.M_S = assembly.scalar_mass(self.pres)
        else:
            fine_p = Space(self.mesh, pfam, REGION_S)
            Bf = assembly.divergence_matrix(self.vel, fine_p)
            Mf = assembly.scalar_mass(fine_p)
            E = self.pres_embed
            self.B_S = (E.T @ Bf).tocsr()
            self.M_S = (E.T @ Mf @ E).tocsr()
        self.A_D, self.B_D, self.D_D, self.M_D = assembly.assemble_darcy(
            self.flux, self.dpres, p)
        self.Q_S, self.T_SD, self.R = assembly.assemble_interface(
            self.vel, self.flux, self.trace)

        self.free_vel = np.where(~self.vel.on_gamma)[0]
        self.free_flux = np.where(~self.flux.on_boundary)[0]
        self.A_ff = self.A_S[np.ix_(self.free_vel, self.free_vel)].tocsr()
        self.B_Sf = self.B_S[:, self.free_vel].tocsr()
        self.R_f = self.R[:, self.free_vel].tocsr()

        self.F_S = assembly.stokes_load(self.vel, self.case, p)
        self.G_D = assembly.darcy_load(self.dpres, self.case)
        self.mvec = assembly.pressure_integral(self.dpres)

    @property
    def dof_total(self):
        """Raw total of the four space dimensions (the table convention)."""
        return (self.vel.ndof + self.pres.ndof
                + self.flux.ndof + self.dpres.ndof)

    def make_subsolver(self, precond_kind="pd0", rtol=1e-2, maxit=2000,
                       mode="iter", mass_mode="auto", stop_norm="pinv",
                       stop_ref="r0"):
        return ftp.DarcySubsolver(self.A_D, self.B_D, self.D_D, self.M_D,
                                  self.flux, self.dpres, self.lift,
                                  self.params, precond_kind=precond_kind,
                                  rtol=rtol, maxit=maxit, mode=mode,
                                  mass_mode=mass_mode, stop_norm=stop_norm,
                                  stop_ref=stop_ref)


class SolveConfig:
    """Solve parameters; defaults follow the reported experiments."""

    def __init__(self, pair, n, outer_rtol=1e-6, inner_rtol=1e-2,
                 combo=("direct", "pd0"), mass_mode="auto",
                 maxit_outer=None, maxit_inner=2000, recovery_rtol=1e-8,
                 inner_mode="iter", seed=0, stop_norm="pinv",
                 stop_ref="r0"):
        self.pair = canonical_pair(pair)
        self.n = n
        self.outer_rtol = outer_rtol
        self.inner_rtol = inner_rtol
        self.combo = parse_combo(combo) if isinstance(combo, str) else combo
        self.mass_mode = mass_mode
        self.maxit_outer = maxit_outer or 1600
        self.maxit_inner = maxit_inner
        self.recovery_rtol = min(recovery_rtol, inner_rtol)
        self.inner_mode = inner_mode
        self.seed = seed
        # default: preconditioned residual norm against the initial
        # residual; 'euclidean' and ref 'b'/'b2' reproduce other common
        # stopping conventions (see krylov.minres)
        self.stop_norm = stop_norm
        self.stop_ref = stop_ref


OUTER_KINDS = ("direct", "bpx")
INNER_KINDS = ("pd0", "hx", "hxbpx")


def parse_combo(text):
    """'outer:inner' combo names, e.g. 'direct:pd0' or 'bpx:hx'."""
    try:
        outer, inner = text.split(":")
    except ValueError:
        raise ValueError("combo must look like 'outer:inner', got %r"
                         % (text,))
    outer, inner = outer.strip().lower(), inner.strip().lower()
    if outer not in OUTER_KINDS or inner not in INNER_KINDS:
        raise ValueError("unknown combo %r (outer in %s, inner in %s)"
                         % (text, OUTER_KINDS, INNER_KINDS))
    return outer, inner


def combo_label(combo):
    outer = {"direct": "PS_dir", "bpx": "PS_bpx"}[combo[0]]
    inner = {"pd0": "PD0", "hx": "PD_hx", "hxbpx": "PD_hxbpx"}[combo[1]]
    return "%s(%s)" % (outer, inner)


class SolveReport:
    """Fields and iteration statistics of one coupled solve."""

    def __init__(self, problem, config, u_S, p_S, u_D, p_D,
                 outer_iterations, inner_counts, residuals, converged,
                 wall_time, global_shift=0.0):
        self.problem = problem
        self.config = config
        self.u_S = u_S
        self.p_S = p_S
        self.u_D = u_D
        self.p_D = p_D
        self.outer_iterations = outer_iterations
        self.inner_counts = list(inner_counts)
        self.residuals = residuals
        self.converged = converged
        self.wall_time = wall_time
        self.global_shift = global_shift

    @property
    def mean_inner(self):
        if not self.inner_counts:
            return 0.0
        return float(np.mean(self.inner_counts))

    def pressures_zero_total_mean(self):
        """Both pressures shifted by the single constant that moves the
        normalization from the porous half to the whole domain."""
        return self.p_S + self.global_shift, self.p_D + self.global_shift


def bpx_coarsest(n, enriched=False):
    """Coarsest multilevel level: the hierarchy floors at the coarsest
    production mesh (n = 8); the bubble-enriched pair counts its embedded
    linear level as a level of its own, pure nodal pairs keep at least
    two nodal levels."""
    if n > 8:
        return 8
    return n if enriched else max(2, n // 2)


def stokes_velocity_bpx(problem, n_coarsest=None):
    """Multilevel hierarchy for the free-flow velocity block.

    Nodal levels run from the coarsest mesh up to the fine one; for the
    bubble-enriched pair the top level is the enriched space itself (its
    Jacobi scaling covers the bubbles) on top of the linear hierarchy.
    """
    pair = problem.pair
    params = problem.params
    if n_coarsest is None:
        n_coarsest = bpx_coarsest(problem.n, pair == "mini-bdm1")
    meshes = mesh_hierarchy(problem.n, n_coarsest)
    fam = {"mini-bdm1": "p1", "p2isop1-bdm1": "p1",
           "taylorhood-rt1": "p2"}[pair]
    spaces = [VectorSpace(Space(m, fam, REGION_S)) for m in meshes]
    mats, frees = [], []
    for v in spaces:
        free = np.where(~v.on_gamma)[0]
        A = assembly.stokes_velocity_matrix(v, params)
        mats.append(A[np.ix_(free, free)].tocsr())
        frees.append(free)
    prolongs = []
    for i in range(len(spaces) - 1):
        P = vector_expand(nodal_prolongation(spaces[i].scalar,
                                             spaces[i + 1].scalar))
        prolongs.append(P[frees[i + 1]][:, frees[i]].tocsr())
    if pair == "mini-bdm1":
        # embed the top linear level into the enriched fine space
        top = spaces[-1]
        nv = top.scalar.ndof
        E = sp.eye(problem.vel.ndof, 2 * nv, format="csr")
        Ef = E[problem.free_vel][:, frees[-1]].tocsr()
        mats.append(problem.A_ff)
        prolongs.append(Ef)
    else:
        mats[-1] = problem.A_ff
    return precond.build_bpx(mats, prolongs)


def outer_preconditioner(problem, config):
    """Block-diagonal free-flow preconditioner for the chosen combo."""
    if config.combo[0] == "direct":
        vel_inv = precond.direct_inverse(problem.A_ff)
    else:
        vel_inv = stokes_velocity_bpx(problem)
    mass_inv = precond.mass_inverse(problem.M_S, config.mass_mode)
    return precond.block_diag_op([vel_inv, mass_inv])


def _outer_operator(problem, coupling):
    nf = len(problem.free_vel)
    npres = problem.pres.ndof
    A_ff, B = problem.A_ff, problem.B_Sf

    def apply(x):
        u, p = x[:nf], x[nf:]
        out = np.empty_like(x)
        out[:nf] = A_ff @ u - B.T @ p
        if coupling is not None:
            out[:nf] += coupling(u)
        out[nf:] = -(B @ u)
        return out

    return LinOp(nf + npres, apply)


def solve_coupled(problem, config=None, subsolver=None):
    """Nested decoupled solve: outer residual-minimizing iteration on the
    interface-condensed free-flow system, porous fields by splitting."""
    t0 = time.perf_counter()
    config = config or SolveConfig(problem.pair, problem.n)
    if subsolver is None:
        subsolver = problem.make_subsolver(
            precond_kind=config.combo[1], rtol=config.inner_rtol,
            maxit=config.maxit_inner, mode=config.inner_mode,
            mass_mode=config.mass_mode, stop_norm=config.stop_norm,
            stop_ref=config.stop_ref)

    gamma_res = ftp.source_residual(subsolver, problem.G_D,
                                    rtol=config.recovery_rtol)
    nf = len(problem.free_vel)
    ell = problem.F_S[problem.free_vel] \
        - np.asarray(problem.R_f.T @ gamma_res.functional).ravel()
    rhs = np.concatenate([ell, np.zeros(problem.pres.ndof)])

    P = outer_preconditioner(problem, config)
    stokes_op = _outer_operator(problem, None)
    x_init, init_stats = minres(stokes_op, rhs, Pinv=P,
                                rtol=config.outer_rtol,
                                maxit=config.maxit_outer,
                                stop_norm=config.stop_norm,
                                stop_ref=config.stop_ref)

    coupling = ftp.CouplingOperator(problem.R_f, subsolver,
                                    rtol=config.inner_rtol)
    full_op = _outer_operator(problem, coupling)
    mark = len(subsolver.iteration_log)
    x, stats = minres(full_op, rhs, Pinv=P, x0=x_init,
                      rtol=config.outer_rtol, maxit=config.maxit_outer,
                      stop_norm=config.stop_norm, stop_ref=config.stop_ref)
    inner_counts = subsolver.iteration_log[mark:]

    u_Sf, p_S = x[:nf], x[nf:]
    u_S = np.zeros(problem.vel.ndof)
    u_S[problem.free_vel] = u_Sf
    phi = np.asarray(problem.R_f @ u_Sf).ravel()
    u_phi, p_phi, _ = subsolver.solve_lifted(phi, rtol=config.recovery_rtol)
    u_D = gamma_res.u + u_phi
    p_D = gamma_res.p + p_phi
    # exact zero mean on the porous half; coefficients are nodal values,
    # so a constant shift subtracts uniformly
    p_D = p_D - (problem.mvec @ p_D) / 0.5

    int_pS = assembly.pressure_integral(problem.pres) @ p_S
    global_shift = -int_pS  # |Omega| = 1 and the porous integral is zero

    return SolveReport(problem, config, u_S, p_S, u_D, p_D,
                       stats.iterations, inner_counts, stats.residuals,
                       stats.converged, time.perf_counter() - t0,
                       global_shift=global_shift)


def solve_monolithic_oracle(problem):
    """Direct factorized solve of the fully coupled discrete system with
    the interface constraint eliminated through the trace projection."""
    fidx = problem.free_vel
    iidx = problem.free_flux
    E = (problem.lift @ problem.R).tocsr()[:, fidx]
    A_S, A_D, B_S, B_D = (problem.A_S, problem.A_D, problem.B_S,
                          problem.B_D)
    Kss = problem.A_ff + E.T @ A_D @ E
    Ksi = (E.T @ A_D[:, iidx]).tocsr()
    Aii = A_D[np.ix_(iidx, iidx)].tocsr()
    BSf = problem.B_Sf
    BDi = B_D[:, iidx].tocsr()
    BDE = (B_D @ E).tocsr()
    mcol = sp.csc_matrix(problem.mvec[:, None])
    K = sp.bmat([[Kss, Ksi, -BSf.T, -BDE.T, None],
                 [Ksi.T, Aii, None, -BDi.T, None],
                 [-BSf, None, None, None, None],
                 [-BDE, -BDi, None, None, mcol],
                 [None, None, None, mcol.T, None]], format="csc")
    rhs = np.concatenate([problem.F_S[fidx], np.zeros(len(iidx)),
                          np.zeros(problem.pres.ndof), -problem.G_D, [0.0]])
    t0 = time.perf_counter()
    x = spla.spsolve(K, rhs)
    if not np.all(np.isfinite(x)):
        raise RuntimeError("monolithic system is singular; the interface "
                           "constraint elimination is inconsistent")
    nf, ni, nps = len(fidx), len(iidx), problem.pres.ndof
    u_S = np.zeros(problem.vel.ndof)
    u_S[fidx] = x[:nf]
    u_D = np.asarray(E @ x[:nf]).ravel()
    u_D[iidx] += x[nf:nf + ni]
    p_S = x[nf + ni:nf + ni + nps]
    p_D = x[nf + ni + nps:-1]
    config = SolveConfig(problem.pair, problem.n)
    int_pS = assembly.pressure_integral(problem.pres) @ p_S
    return SolveReport(problem, config, u_S, p_S, u_D, p_D, 0, [],
                       [0.0], True, time.perf_counter() - t0,
                       global_shift=-int_pS)


def _vector_h1_gram(vel):
    sc = vel.scalar
    G = assembly.scalar_stiffness(sc) + assembly.scalar_mass(sc)
    G = G.tocoo()
    X = sp.coo_matrix(
        (np.concatenate([G.data, G.data]),
         (np.concatenate([2 * G.row, 2 * G.row + 1]),
          np.concatenate([2 * G.col, 2 * G.col + 1]))),
        shape=(vel.ndof, vel.ndof)).tocsr()
    return X


def _infsup_from_matrices(B, X, M, mvec):
    """Smallest nonzero singular value of the divergence coupling in the
    (X-norm, M-norm) pair over zero-mean pressures, by dense eigensolve."""
    from scipy.linalg import eigh, null_space
    Xd = X.toarray()
    Bd = B.toarray()
    Md = M.toarray()
    S = Bd @ np.linalg.solve(Xd, Bd.T)
    Z = null_space(mvec[None, :])
    Sz = Z.T @ S @ Z
    Mz = Z.T @ Md @ Z
    evals = eigh(Sz, Mz, eigvals_only=True)
    tol = max(evals[-1], 1.0) * 1e-12
    pos = evals[evals > tol]
    return float(np.sqrt(pos[0])) if len(pos) else 0.0


def infsup_stokes(mesh, vfam, pfam, pres_mesh=None):
    """Divergence inf-sup constant of a velocity/pressure pair on the
    free-flow half with full homogeneous boundary conditions."""
    vel = VectorSpace(Space(mesh, vfam, REGION_S))
    pres_mesh = pres_mesh or mesh
    pres = Space(pres_mesh, pfam, REGION_S)
    if pres_mesh is mesh:
        B = assembly.divergence_matrix(vel, pres)
    else:
        fine = Space(mesh, pfam, REGION_S)
        B = (nodal_prolongation(pres, fine).T
             @ assembly.divergence_matrix(vel, fine)).tocsr()
    free = np.where(~vel.on_boundary)[0]
    X = _vector_h1_gram(vel)[np.ix_(free, free)]
    M = assembly.scalar_mass(pres)
    mvec = assembly.pressure_integral(pres)
    return _infsup_from_matrices(B[:, free], X, M, mvec)


def infsup_darcy(mesh, ffam, qfam):
    """Divergence inf-sup constant of a flux/pressure pair on the porous
    half with vanishing normal trace on the whole boundary."""
    flux = FluxSpace(mesh, ffam)
    dpres = Space(mesh, qfam, REGION_D)
    A1, D1 = assembly.flux_operator_matrices(flux, 1.0)
    _, B, _, M = assembly.assemble_darcy(flux, dpres, PhysicalParams())
    free = np.where(~flux.on_boundary)[0]
    X = (A1 + D1)[np.ix_(free, free)]
    mvec = assembly.pressure_integral(dpres)
    return _infsup_from_matrices(B[:, free], X, M, mvec)


def estimate_infsup(pair, n):
    """Inf-sup constants of both half-problems for one element pair."""
    pair = canonical_pair(pair)
    vfam, pfam, ffam, qfam = PAIRS[pair]
    mesh = build_unit_square(n)
    if pair == "p2isop1-bdm1":
        beta_S = infsup_stokes(mesh, vfam, pfam,
                               pres_mesh=build_unit_square(n // 2))
    else:
        beta_S = infsup_stokes(mesh, vfam, pfam)
    beta_D = infsup_darcy(mesh, ffam, qfam)
    return {"beta_S": beta_S, "beta_D": beta_D}
