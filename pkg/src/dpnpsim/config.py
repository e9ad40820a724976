"""JSON run configuration: schema, validation, and object construction.

A configuration is one JSON object with blocks

  grid, physics, initial, background_charge, boundary, time, output

(all optional except grid, physics, initial, and time).  `parse_config`
validates the whole document before building anything and reports *every*
violation at once in ConfigError.violations, each message naming the
offending content; it never stops at the first problem.

Scalar fields on cells (initial concentrations, background charge) are given
as specs:

  2.5                                                   constant shorthand
  {"kind": "constant", "value": 2.5}
  {"kind": "gaussian", "center": [x, y], "width": w, "amplitude": a}
  {"kind": "expression", "expr": "1 + 0.5*sin(pi*x)*sin(pi*y)"}

Expressions are parsed into a whitelisted AST (names x, y, pi; calls sin,
cos, exp, sqrt, abs; arithmetic and unary minus) and evaluated with numpy on
the cell centers -- no general evaluation happens.

Boundary data (sigma, f, g1, g2) are per-side constants with an optional
time ramp; inflows g1, g2 must be nonnegative and the Darcy data f must
balance to zero total flux, since the flow problem is incompressible with
pure flux boundary conditions.
"""

import ast
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import SIDES, BoundaryField, CellField, Grid, build_grid
from .params import PhysParams, ReactionSpec
from .schedule import BoundarySpec, Ramp, Schedule
from .transport import Concentrations

_BLOCKS = ("grid", "physics", "initial", "background_charge", "boundary", "time", "output")
_GRID_KEYS = ("nx", "ny", "lx", "ly")
_PHYSICS_KEYS = ("theta", "D", "K", "mu", "eps_s", "kappa", "z1", "z2", "reaction")
_REACTION_KEYS = ("kind", "rate")
_INITIAL_KEYS = ("c1", "c2")
_BOUNDARY_KEYS = ("sigma", "f", "g1", "g2")
_SIDE_KEYS = SIDES + ("ramp",)
_RAMP_KEYS = ("kind", "t0", "t1")
_TIME_KEYS = ("t_end", "dt", "tol", "max_sweeps", "damping", "init_iterate", "lin_tol", "lin_tol_transport")
_OUTPUT_KEYS = ("directory", "snapshot_stride")
_SPEC_KEYS = {
    "constant": ("kind", "value"),
    "gaussian": ("kind", "center", "width", "amplitude"),
    "expression": ("kind", "expr"),
}

_ALLOWED_CALLS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt, "abs": np.abs}
_ALLOWED_NAMES = ("x", "y", "pi")
_ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)


class ConfigError(ValueError):
    """Raised by parse_config; carries the full list of violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n" + "\n".join("  - " + v for v in self.violations))


class ExpressionError(ValueError):
    pass


def compile_expression(text):
    """Compile a whitelisted arithmetic expression of x and y.

    Returns a function (x, y) -> array.  Raises ExpressionError for anything
    outside the whitelist, naming the offending construct.
    """
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError("expression %r does not parse: %s" % (text, exc.msg)) from None

    def check(node):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)):
                raise ExpressionError("expression %r uses a non-numeric constant %r" % (text, node.value))
        elif isinstance(node, ast.Name):
            if node.id not in _ALLOWED_NAMES:
                raise ExpressionError(
                    "expression %r uses unknown name %r (allowed: %s)" % (text, node.id, ", ".join(_ALLOWED_NAMES))
                )
        elif isinstance(node, ast.BinOp):
            if not isinstance(node.op, _ALLOWED_BINOPS):
                raise ExpressionError("expression %r uses a forbidden operator" % text)
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.UAdd, ast.USub)):
                raise ExpressionError("expression %r uses a forbidden unary operator" % text)
            check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_CALLS:
                raise ExpressionError(
                    "expression %r calls something other than %s" % (text, ", ".join(sorted(_ALLOWED_CALLS)))
                )
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError("expression %r: %s takes exactly one argument" % (text, node.func.id))
            check(node.args[0])
        else:
            raise ExpressionError("expression %r uses forbidden syntax (%s)" % (text, type(node).__name__))

    check(tree)

    def evaluate(x, y):
        def ev(node):
            if isinstance(node, ast.Expression):
                return ev(node.body)
            if isinstance(node, ast.Constant):
                return float(node.value)
            if isinstance(node, ast.Name):
                return {"x": x, "y": y, "pi": math.pi}[node.id]
            if isinstance(node, ast.BinOp):
                a, b = ev(node.left), ev(node.right)
                if isinstance(node.op, ast.Add):
                    return a + b
                if isinstance(node.op, ast.Sub):
                    return a - b
                if isinstance(node.op, ast.Mult):
                    return a * b
                if isinstance(node.op, ast.Div):
                    return a / b
                return a**b
            if isinstance(node, ast.UnaryOp):
                v = ev(node.operand)
                return -v if isinstance(node.op, ast.USub) else +v
            return _ALLOWED_CALLS[node.func.id](ev(node.args[0]))

        return ev(tree)

    return evaluate


@dataclass
class RunConfig:
    grid: Grid
    params: PhysParams
    initial: Concentrations
    schedule: Schedule
    tol: float
    max_sweeps: int
    damping: float
    init_iterate: str
    lin_tol: float
    lin_tol_transport: float
    out_dir: str
    snapshot_stride: int
    raw: dict = field(repr=False, default_factory=dict)


class _Reader:
    """Accumulates violations while pulling typed values out of the document."""

    def __init__(self):
        self.violations = []

    def flag(self, message):
        self.violations.append(message)

    def block(self, doc, name, allowed, required=False):
        sub = doc.get(name)
        if sub is None:
            if required:
                self.flag("missing required block %r" % name)
            return {}
        if not isinstance(sub, dict):
            self.flag("block %r must be an object" % name)
            return {}
        for key in sub:
            if key not in allowed:
                self.flag("unknown key %r in block %r (allowed: %s)" % (key, name, ", ".join(allowed)))
        return sub

    def number(self, sub, where, key, default=None, required=False, low=None, low_strict=None):
        if key not in sub:
            if required:
                self.flag("%s.%s is required" % (where, key))
            return default
        v = sub[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.flag("%s.%s must be a finite number, got %r" % (where, key, v))
            return default
        v = float(v)
        if low is not None and v < low:
            self.flag("%s.%s must be >= %g, got %g" % (where, key, low, v))
            return default
        if low_strict is not None and v <= low_strict:
            self.flag("%s.%s must be > %g, got %g" % (where, key, low_strict, v))
            return default
        return v

    def integer(self, sub, where, key, default=None, required=False, low=None):
        if key not in sub:
            if required:
                self.flag("%s.%s is required" % (where, key))
            return default
        v = sub[key]
        if isinstance(v, bool) or not isinstance(v, int):
            self.flag("%s.%s must be an integer, got %r" % (where, key, v))
            return default
        if low is not None and v < low:
            self.flag("%s.%s must be >= %d, got %d" % (where, key, low, v))
            return default
        return v

    def pair(self, sub, where, key, default):
        if key not in sub:
            return default
        v = sub[key]
        ok = isinstance(v, (list, tuple)) and len(v) == 2 and all(
            isinstance(c, (int, float)) and not isinstance(c, bool) and math.isfinite(c) and c > 0 for c in v
        )
        if not ok:
            self.flag("%s.%s must be a pair of positive numbers, got %r" % (where, key, v))
            return default
        return (float(v[0]), float(v[1]))


def _read_field_spec(reader, raw, where):
    """Returns a function (x, y) -> array, or None when invalid."""
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        if not math.isfinite(raw):
            reader.flag("%s must be finite, got %r" % (where, raw))
            return None
        return lambda x, y, v=float(raw): np.full(np.shape(x), v)
    if not isinstance(raw, dict):
        reader.flag("%s must be a number or a field spec object, got %r" % (where, raw))
        return None
    kind = raw.get("kind")
    if kind not in _SPEC_KEYS:
        reader.flag("%s.kind must be one of %s, got %r" % (where, ", ".join(_SPEC_KEYS), kind))
        return None
    for key in raw:
        if key not in _SPEC_KEYS[kind]:
            reader.flag("unknown key %r in %s (allowed for %s: %s)" % (key, where, kind, ", ".join(_SPEC_KEYS[kind])))
    if kind == "constant":
        v = reader.number(raw, where, "value", required=True)
        if v is None:
            return None
        return lambda x, y: np.full(np.shape(x), v)
    if kind == "gaussian":
        center = raw.get("center")
        ok = isinstance(center, (list, tuple)) and len(center) == 2 and all(
            isinstance(c, (int, float)) and not isinstance(c, bool) and math.isfinite(c) for c in center
        )
        if not ok:
            reader.flag("%s.center must be [x, y], got %r" % (where, center))
        width = reader.number(raw, where, "width", required=True, low_strict=0.0)
        amp = reader.number(raw, where, "amplitude", required=True)
        if not ok or width is None or amp is None:
            return None
        cx, cy = float(center[0]), float(center[1])
        return lambda x, y: amp * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * width**2))
    expr = raw.get("expr")
    if not isinstance(expr, str):
        reader.flag("%s.expr must be a string, got %r" % (where, expr))
        return None
    try:
        fn = compile_expression(expr)
    except ExpressionError as exc:
        reader.flag("%s: %s" % (where, exc))
        return None
    return lambda x, y: np.asarray(fn(x, y), dtype=float) + np.zeros(np.shape(x))


def _read_boundary_block(reader, raw, where, nonneg):
    """Returns (sides dict, Ramp) with defaults; flags violations."""
    sides = {s: 0.0 for s in SIDES}
    ramp = Ramp("const")
    if raw is None:
        return sides, ramp
    if not isinstance(raw, dict):
        reader.flag("%s must be an object with per-side values" % where)
        return sides, ramp
    for key in raw:
        if key not in _SIDE_KEYS:
            reader.flag("unknown key %r in %s (allowed: %s)" % (key, where, ", ".join(_SIDE_KEYS)))
    for s in SIDES:
        v = reader.number(raw, where, s, default=0.0)
        if v is None:
            v = 0.0
        if nonneg and v < 0.0:
            reader.flag("%s.%s is an inflow and must be nonnegative, got %g" % (where, s, v))
            v = 0.0
        sides[s] = v
    if "ramp" in raw:
        rr = raw["ramp"]
        if not isinstance(rr, dict):
            reader.flag("%s.ramp must be an object" % where)
            return sides, ramp
        for key in rr:
            if key not in _RAMP_KEYS:
                reader.flag("unknown key %r in %s.ramp (allowed: %s)" % (key, where, ", ".join(_RAMP_KEYS)))
        kind = rr.get("kind", "const")
        if kind not in ("const", "linear"):
            reader.flag("%s.ramp.kind must be 'const' or 'linear', got %r" % (where, kind))
            return sides, ramp
        if kind == "linear":
            t0 = reader.number(rr, where + ".ramp", "t0", default=0.0, low=0.0)
            t1 = reader.number(rr, where + ".ramp", "t1", required=True)
            if t0 is None or t1 is None:
                return sides, ramp
            if t1 <= t0:
                reader.flag("%s.ramp needs t1 > t0, got t0=%g, t1=%g" % (where, t0, t1))
                return sides, ramp
            ramp = Ramp("linear", t0, t1)
    return sides, ramp


def parse_config(source):
    """Parse JSON text (or an already-decoded dict) into a RunConfig.

    Raises ConfigError carrying every violation found; the error message
    lists them one per line.
    """
    if isinstance(source, dict):
        doc = source
    else:
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError(["document is not valid JSON: %s" % exc]) from None
        if not isinstance(doc, dict):
            raise ConfigError(["top level must be a JSON object"])

    r = _Reader()
    for key in doc:
        if key not in _BLOCKS:
            r.flag("unknown top-level block %r (allowed: %s)" % (key, ", ".join(_BLOCKS)))

    g = r.block(doc, "grid", _GRID_KEYS, required=True)
    nx = r.integer(g, "grid", "nx", required=True, low=1)
    ny = r.integer(g, "grid", "ny", required=True, low=1)
    lx = r.number(g, "grid", "lx", default=1.0, low_strict=0.0)
    ly = r.number(g, "grid", "ly", default=1.0, low_strict=0.0)

    ph = r.block(doc, "physics", _PHYSICS_KEYS, required=True)
    theta = r.number(ph, "physics", "theta", default=1.0)
    d_pair = r.pair(ph, "physics", "D", (1.0, 1.0))
    k_pair = r.pair(ph, "physics", "K", (1.0, 1.0))
    mu = r.number(ph, "physics", "mu", default=1.0, low_strict=0.0)
    eps_s = r.number(ph, "physics", "eps_s", default=1.0, low_strict=0.0)
    kappa = r.number(ph, "physics", "kappa", default=1.0, low=0.0)
    z1 = r.integer(ph, "physics", "z1", default=1)
    z2 = r.integer(ph, "physics", "z2", default=-1)
    if theta is not None and not 0.0 < theta <= 1.0:
        r.flag("physics.theta must lie in (0, 1], got %g" % theta)
        theta = 1.0
    if z1 is not None and z2 is not None and not z1 > 0 > z2:
        r.flag("physics valencies must satisfy z1 > 0 > z2, got z1=%d, z2=%d" % (z1, z2))
        z1, z2 = 1, -1
    reaction = ReactionSpec("none", 0.0)
    if "reaction" in ph:
        rb = ph["reaction"]
        if not isinstance(rb, dict):
            r.flag("physics.reaction must be an object")
        else:
            for key in rb:
                if key not in _REACTION_KEYS:
                    r.flag("unknown key %r in physics.reaction (allowed: %s)" % (key, ", ".join(_REACTION_KEYS)))
            kind = rb.get("kind", "none")
            rate = r.number(rb, "physics.reaction", "rate", default=0.0, low=0.0)
            if kind not in ("none", "exchange"):
                r.flag("physics.reaction.kind must be 'none' or 'exchange', got %r" % kind)
            else:
                reaction = ReactionSpec(kind, rate if rate is not None else 0.0)

    ini = r.block(doc, "initial", _INITIAL_KEYS, required=True)
    c_specs = []
    for name in _INITIAL_KEYS:
        if name not in ini:
            r.flag("initial.%s is required" % name)
            c_specs.append(None)
        else:
            c_specs.append(_read_field_spec(r, ini[name], "initial.%s" % name))

    rho_b_spec = None
    if "background_charge" in doc:
        rho_b_spec = _read_field_spec(r, doc["background_charge"], "background_charge")

    bnd = r.block(doc, "boundary", _BOUNDARY_KEYS)
    sigma_sides, sigma_ramp = _read_boundary_block(r, bnd.get("sigma"), "boundary.sigma", nonneg=False)
    f_sides, f_ramp = _read_boundary_block(r, bnd.get("f"), "boundary.f", nonneg=False)
    g1_sides, g1_ramp = _read_boundary_block(r, bnd.get("g1"), "boundary.g1", nonneg=True)
    g2_sides, g2_ramp = _read_boundary_block(r, bnd.get("g2"), "boundary.g2", nonneg=True)

    tm = r.block(doc, "time", _TIME_KEYS, required=True)
    t_end = r.number(tm, "time", "t_end", required=True, low_strict=0.0)
    dt = r.number(tm, "time", "dt", required=True, low_strict=0.0)
    tol = r.number(tm, "time", "tol", default=1e-10, low_strict=0.0)
    max_sweeps = r.integer(tm, "time", "max_sweeps", default=50, low=1)
    damping = r.number(tm, "time", "damping", default=1.0)
    if damping is not None and not 0.0 < damping <= 1.0:
        r.flag("time.damping must lie in (0, 1], got %g" % damping)
        damping = 1.0
    init_iterate = tm.get("init_iterate", "previous")
    if init_iterate not in ("previous", "zero"):
        r.flag("time.init_iterate must be 'previous' or 'zero', got %r" % init_iterate)
        init_iterate = "previous"
    lin_tol = r.number(tm, "time", "lin_tol", default=1e-12, low_strict=0.0)
    lin_tol_transport = r.number(tm, "time", "lin_tol_transport", default=1e-14, low_strict=0.0)
    if t_end is not None and dt is not None and dt > t_end:
        r.flag("time.dt must not exceed time.t_end, got dt=%g, t_end=%g" % (dt, t_end))
        dt = t_end

    out = r.block(doc, "output", _OUTPUT_KEYS)
    out_dir = out.get("directory", "out")
    if not isinstance(out_dir, str) or not out_dir:
        r.flag("output.directory must be a nonempty string, got %r" % out_dir)
        out_dir = "out"
    stride = r.integer(out, "output", "snapshot_stride", default=1, low=1)

    # Everything below needs a valid grid; build it only if the geometry
    # parsed, and keep collecting violations that do not need it.
    grid = None
    if not any(v is None for v in (nx, ny, lx, ly)):
        grid = build_grid(nx, ny, lx, ly)

    f_bf = None
    if grid is not None:
        f_bf = BoundaryField(grid, **f_sides)
        total = f_bf.boundary_integral()
        scale = max(f_bf.abs_integral(), 1.0)
        if abs(total) > 1e-10 * scale:
            r.flag(
                "boundary.f must have zero total flux for the incompressible flow problem; "
                "net integral is %g" % total
            )

    initial = None
    if grid is not None and all(s is not None for s in c_specs):
        X, Y = grid.cell_centers()
        fields = []
        for name, spec in zip(_INITIAL_KEYS, c_specs):
            vals = np.asarray(spec(X, Y), dtype=float)
            if not np.all(np.isfinite(vals)):
                r.flag("initial.%s evaluates to non-finite values on the grid" % name)
            elif vals.min() < 0.0:
                r.flag("initial.%s must be nonnegative on the grid; minimum is %g" % (name, float(vals.min())))
            else:
                fields.append(CellField(grid, vals))
        if len(fields) == 2:
            initial = Concentrations(fields[0], fields[1])

    rho_b_field = None
    if grid is not None:
        if rho_b_spec is not None:
            X, Y = grid.cell_centers()
            vals = np.asarray(rho_b_spec(X, Y), dtype=float)
            if not np.all(np.isfinite(vals)):
                r.flag("background_charge evaluates to non-finite values on the grid")
            else:
                rho_b_field = CellField(grid, vals)
        elif "background_charge" not in doc:
            rho_b_field = CellField.zeros(grid)

    params = None
    if not any(v is None for v in (theta, mu, eps_s, kappa, z1, z2, t_end, dt)):
        try:
            params = PhysParams(
                theta=theta,
                D=d_pair,
                K=k_pair,
                mu=mu,
                eps_s=eps_s,
                kappa=kappa,
                z1=z1,
                z2=z2,
                reaction=reaction,
                T_end=t_end,
                dt=dt,
            )
        except ValueError as exc:
            r.flag(str(exc))

    if r.violations:
        raise ConfigError(r.violations)

    schedule = Schedule(
        grid,
        sigma=BoundarySpec(grid, **sigma_sides, ramp=sigma_ramp),
        f=BoundarySpec(grid, **f_sides, ramp=f_ramp),
        g1=BoundarySpec(grid, **g1_sides, ramp=g1_ramp),
        g2=BoundarySpec(grid, **g2_sides, ramp=g2_ramp),
        rho_b=rho_b_field,
    )
    return RunConfig(
        grid=grid,
        params=params,
        initial=initial,
        schedule=schedule,
        tol=tol,
        max_sweeps=max_sweeps,
        damping=damping,
        init_iterate=init_iterate,
        lin_tol=lin_tol,
        lin_tol_transport=lin_tol_transport,
        out_dir=out_dir,
        snapshot_stride=stride,
        raw=doc,
    )


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
