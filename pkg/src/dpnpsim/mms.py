"""Manufactured-solution verification for every subsystem and the coupled loop.

Five cases on the unit square:

  poisson         phi = x^2 - x + 1/6 with constant charge.  Two-point fluxes
                  are exact for quadratics on uniform grids, so the discrete
                  solution reproduces the exact one to solver precision.
  darcy           divergence-free trig velocity from a stream function with a
                  manufactured face body force; second-order in p and q.
  diffusion       c = cos(pi x) cos(pi y) e^{-t}, one implicit step with a
                  manufactured volume source; dt is scaled with h^2 so the
                  observed order reflects the spatial scheme.
  driftdiffusion  1D exponential steady profile with constant drift: the
                  exponential-fitting flux reproduces it exactly on every grid.
  coupled         full Gummel step.  Extra sources may enter only the
                  transport equations, so the state is manufactured to be
                  electroneutral (rho_f = 0), the pressure harmonic, and the
                  potential quadratic: field and flow are then satisfied
                  without sources and the transport sources are closed-form.

Potentials and pressures are gauge fields (defined up to a constant); their
errors are computed after projecting both the discrete and the sampled exact
field to zero volume-weighted mean.  Cell errors are volume-weighted discrete
L2 norms; face errors use the same cell measure per face.

For the exactness cases the errors sit at the rounding floor, where "order"
is meaningless jitter; the order columns matter for darcy/diffusion/coupled.
"""

import math
from dataclasses import dataclass

import numpy as np

from .gummel import gummel_step, initial_state
from .darcy import solve_darcy
from .gauss import solve_gauss
from .linalg import project_zero_mean
from .mesh import BoundaryField, CellField, FaceField, build_grid
from .params import PhysParams
from .schedule import StepData
from .transport import Concentrations, step_transport

CASES = ("poisson", "darcy", "diffusion", "driftdiffusion", "coupled")


@dataclass
class ConvergenceTable:
    case: str
    grids: list  # (nx, ny) pairs
    hs: list
    errors: dict  # field -> list of errors, one per grid
    orders: dict  # field -> list of orders, one per refinement
    sweeps: list  # coupled case: Gummel sweeps per grid (zeros otherwise)

    def fields(self):
        return list(self.errors)

    def text(self):
        cols = self.fields()
        head = "%-9s %-10s" % ("grid", "h")
        for f in cols:
            head += " %12s %7s" % (f + "_err", "order")
        lines = ["case: %s" % self.case, head]
        for k, ((nx, ny), h) in enumerate(zip(self.grids, self.hs)):
            row = "%-9s %-10.4g" % ("%dx%d" % (nx, ny), h)
            for f in cols:
                row += " %12.4e" % self.errors[f][k]
                if k > 0:
                    row += " %7.2f" % self.orders[f][k - 1]
                else:
                    row += " %7s" % "-"
            lines.append(row)
        return "\n".join(lines)

    def csv_rows(self):
        rows = [["case", "nx", "ny", "h", "field", "error", "order"]]
        for k, ((nx, ny), h) in enumerate(zip(self.grids, self.hs)):
            for f in self.fields():
                order = "" if k == 0 else repr(self.orders[f][k - 1])
                rows.append([self.case, str(nx), str(ny), repr(h), f, repr(self.errors[f][k]), order])
        return rows

    def min_order(self, field):
        return min(self.orders[field]) if self.orders[field] else float("nan")


def _l2_cells(grid, diff):
    return float(np.sqrt((diff * diff).sum() * grid.cell_volume))


def _l2_faces(grid, dfx, dfy):
    return float(np.sqrt(((dfx * dfx).sum() + (dfy * dfy).sum()) * grid.cell_volume))


def _aligned_error(grid, discrete, exact_sampled):
    w = np.full(discrete.shape, grid.cell_volume)
    d = project_zero_mean(discrete, w) - project_zero_mean(exact_sampled, w)
    return _l2_cells(grid, d)


def _face_centers(grid):
    """Midpoint coordinate arrays for x-faces and y-faces."""
    xfx, yfx = np.meshgrid(grid.xf, grid.yc)
    xfy, yfy = np.meshgrid(grid.xc, grid.yf)
    return (xfx, yfx), (xfy, yfy)


def _run_poisson(grid, params):
    eps_x = params.epsilon[0]
    X, Y = grid.cell_centers()
    phi_ex = X**2 - X + 1.0 / 6.0
    rho_b = CellField.full(grid, -2.0 * eps_x)
    rho_f = CellField.zeros(grid)
    sigma = BoundaryField(grid, left=-eps_x, right=-eps_x)
    st = solve_gauss(grid, params, rho_f, rho_b, sigma)
    (xfx, _), _ = _face_centers(grid)
    ex_fx = -eps_x * (2.0 * xfx - 1.0)
    return {
        "phi": _aligned_error(grid, st.phi.values, phi_ex),
        "e": _l2_faces(grid, st.e_faces.fx - ex_fx, st.e_faces.fy - 0.0),
    }, 0


def _run_darcy(grid, params):
    if params.K[0] != params.K[1]:
        raise ValueError("darcy manufactured case needs isotropic permeability")
    m = params.K[0] / params.mu
    eps_x, eps_y = params.epsilon

    def qx(x, y):
        return math.pi * np.sin(math.pi * x) * np.cos(math.pi * y)

    def qy(x, y):
        return -math.pi * np.cos(math.pi * x) * np.sin(math.pi * y)

    def px(x, y):
        return -math.pi * np.sin(math.pi * x) * np.cos(math.pi * y)

    def py(x, y):
        return -math.pi * np.cos(math.pi * x) * np.sin(math.pi * y)

    X, Y = grid.cell_centers()
    p_ex = np.cos(math.pi * X) * np.cos(math.pi * Y)
    (xfx, yfx), (xfy, yfy) = _face_centers(grid)
    # required body force b = (mu/K) q + grad p, injected as E with rho_f = 1
    e = FaceField(
        grid,
        eps_x * (qx(xfx, yfx) / m + px(xfx, yfx)),
        eps_y * (qy(xfy, yfy) / m + py(xfy, yfy)),
    )
    st = solve_darcy(grid, params, CellField.full(grid, 1.0), e, BoundaryField.zeros(grid))
    return {
        "p": _aligned_error(grid, st.p.values, p_ex),
        "q": _l2_faces(grid, st.q_faces.fx - qx(xfx, yfx), st.q_faces.fy - qy(xfy, yfy)),
    }, 0


def _dt_for(grid, dt0=0.01, n0=16):
    h = max(grid.hx, grid.hy)
    return dt0 * (h * n0) ** 2


def _run_diffusion(grid, params):
    theta = params.theta
    dx, dy = params.D
    dt = _dt_for(grid)
    t1 = dt

    def c_ex(x, y, t):
        return np.cos(math.pi * x) * np.cos(math.pi * y) * math.exp(-t)

    X, Y = grid.cell_centers()
    src = (-theta + math.pi**2 * (dx + dy)) * c_ex(X, Y, t1)
    prev = Concentrations(CellField(grid, c_ex(X, Y, 0.0)), CellField(grid, c_ex(X, Y, 0.0)))
    res = step_transport(
        grid,
        params,
        prev,
        FaceField.zeros(grid),
        FaceField.zeros(grid),
        BoundaryField.zeros(grid),
        BoundaryField.zeros(grid),
        dt,
        sources=(src, src),
    )
    exact = c_ex(X, Y, t1)
    return {
        "c1": _l2_cells(grid, res.conc.c1.values - exact),
        "c2": _l2_cells(grid, res.conc.c2.values - exact),
    }, 0


def _run_driftdiffusion(grid, params):
    u0 = 1.0
    dx = params.D[0]

    def c_ex(x):
        return np.exp(u0 * x / dx) + 1.0

    X, _ = grid.cell_centers()
    prev = Concentrations(CellField(grid, c_ex(X)), CellField(grid, c_ex(X)))
    q = FaceField(grid, np.full((grid.ny, grid.nx + 1), u0), np.zeros((grid.ny + 1, grid.nx)))
    # constant total flux J = u0: inflow left, outflow right
    g = BoundaryField(grid, left=u0, right=-u0)
    res = step_transport(grid, params, prev, q, FaceField.zeros(grid), g, g, dt=0.1)
    exact = c_ex(X)
    return {
        "c1": _l2_cells(grid, res.conc.c1.values - exact),
        "c2": _l2_cells(grid, res.conc.c2.values - exact),
    }, 0


def _run_coupled(grid, params):
    if params.K[0] != params.K[1]:
        raise ValueError("coupled manufactured case needs isotropic permeability")
    theta = params.theta
    dxx, dyy = params.D
    eps_x, eps_y = params.epsilon
    kap = params.kappa
    m = params.K[0] / params.mu
    a = (float(-params.z2), float(params.z1))  # electroneutral amplitudes
    rho_b_val = -2.0 * eps_x
    dt = _dt_for(grid)
    t1 = dt

    def w(x, y, t):
        return (1.5 + 0.5 * np.sin(math.pi * x) * np.sin(math.pi * y)) * math.exp(-t)

    def wx(x, y, t):
        return 0.5 * math.pi * np.cos(math.pi * x) * np.sin(math.pi * y) * math.exp(-t)

    def wy(x, y, t):
        return 0.5 * math.pi * np.sin(math.pi * x) * np.cos(math.pi * y) * math.exp(-t)

    def lap_w(x, y, t):
        # (dxx d^2/dx^2 + dyy d^2/dy^2) w
        return -0.5 * math.pi**2 * (dxx + dyy) * np.sin(math.pi * x) * np.sin(math.pi * y) * math.exp(-t)

    def ux(z, x, y):
        return -2.0 * m * x - kap * z * eps_x * (2.0 * x - 1.0)

    def uy(z, x, y):
        return 2.0 * m * y

    div_u = {z: kap * z * rho_b_val for z in (params.z1, params.z2)}

    def source(z, amp, x, y, t):
        # theta dc/dt - div(D grad c) + u . grad c + c div u, with c = amp * w
        return amp * (
            -theta * w(x, y, t)
            - lap_w(x, y, t)
            + ux(z, x, y) * wx(x, y, t)
            + uy(z, x, y) * wy(x, y, t)
            + w(x, y, t) * div_u[z]
        )

    def g_side(z, amp, t):
        # inflow g = (D grad c - c u) . nu, outward, per side at face midpoints
        yc, xc = grid.yc, grid.xc
        left = -(dxx * amp * wx(0.0, yc, t) - amp * w(0.0, yc, t) * ux(z, 0.0, yc))
        right = dxx * amp * wx(1.0, yc, t) - amp * w(1.0, yc, t) * ux(z, 1.0, yc)
        bottom = -(dyy * amp * wy(xc, 0.0, t) - amp * w(xc, 0.0, t) * uy(z, xc, 0.0))
        top = dyy * amp * wy(xc, 1.0, t) - amp * w(xc, 1.0, t) * uy(z, xc, 1.0)
        return BoundaryField(grid, left=left, right=right, bottom=bottom, top=top)

    X, Y = grid.cell_centers()
    initial = Concentrations(CellField(grid, a[0] * w(X, Y, 0.0)), CellField(grid, a[1] * w(X, Y, 0.0)))
    data = StepData(
        sigma=BoundaryField(grid, left=-eps_x, right=-eps_x),
        f=BoundaryField(grid, right=-2.0 * m, top=2.0 * m),
        g1=g_side(params.z1, a[0], t1),
        g2=g_side(params.z2, a[1], t1),
        rho_b=CellField.full(grid, rho_b_val),
        sources=(source(params.z1, a[0], X, Y, t1), source(params.z2, a[1], X, Y, t1)),
    )
    state0 = initial_state(grid, params, initial, data)
    state, report = gummel_step(grid, params, state0, data, dt, tol=1e-11, max_sweeps=50)

    phi_ex = X**2 - X + 1.0 / 6.0
    p_ex = X**2 - Y**2
    return {
        "c1": _l2_cells(grid, state.conc.c1.values - a[0] * w(X, Y, t1)),
        "c2": _l2_cells(grid, state.conc.c2.values - a[1] * w(X, Y, t1)),
        "phi": _aligned_error(grid, state.electro.phi.values, phi_ex),
        "p": _aligned_error(grid, state.flow.p.values, p_ex),
    }, report.sweeps


_RUNNERS = {
    "poisson": _run_poisson,
    "darcy": _run_darcy,
    "diffusion": _run_diffusion,
    "driftdiffusion": _run_driftdiffusion,
    "coupled": _run_coupled,
}


def run_mms(case, grids, params=None):
    """Run one manufactured case over a grid list; returns a ConvergenceTable.

    grids entries are ints (n -> n x n) or (nx, ny) pairs; the domain is the
    unit square.  params defaults to the unit material data.
    """
    if case not in _RUNNERS:
        raise ValueError("unknown manufactured case %r; choose from %s" % (case, ", ".join(CASES)))
    if params is None:
        params = PhysParams()
    norm_grids = []
    for g in grids:
        if isinstance(g, int):
            norm_grids.append((g, g))
        else:
            nx, ny = g
            norm_grids.append((int(nx), int(ny)))
    if not norm_grids:
        raise ValueError("need at least one grid")

    errors = {}
    hs = []
    sweeps = []
    for nx, ny in norm_grids:
        grid = build_grid(nx, ny, 1.0, 1.0)
        errs, swp = _RUNNERS[case](grid, params)
        hs.append(max(grid.hx, grid.hy))
        sweeps.append(swp)
        for f, e in errs.items():
            errors.setdefault(f, []).append(e)

    orders = {}
    for f, es in errors.items():
        ords = []
        for k in range(1, len(es)):
            if es[k] == 0.0 or es[k - 1] == 0.0:
                ords.append(float("inf"))
            else:
                ords.append(math.log(es[k - 1] / es[k]) / math.log(hs[k - 1] / hs[k]))
        orders[f] = ords
    return ConvergenceTable(case, norm_grids, hs, errors, orders, sweeps)
