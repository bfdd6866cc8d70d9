"""Algebraic kernel of the j-function.

Covers the modular polynomials Phi_N (golden files on disk), the
third-order equation satisfied by j

    f(Y0, Y1, Y2, Y3) = Y3/Y1 - 3/2 (Y2/Y1)^2 + R(Y0) Y1^2
    R(y) = (y^2 - 1968 y + 2654208) / (2 y^2 (y - 1728)^2)

its solution for the third derivative, the Schwarzian, the jet transform
under a Moebius matrix, the derived system along a modular relation, and
the total-derivative (prolongation) operator on a j-block.

Golden file format, one file per level, ``phi_<N>.txt``:

    PHI N=<level>
    <exponent of X> <exponent of Y> <integer coefficient>
    ...

terms sorted lexicographically by exponents. The directory defaults to
``golden/`` next to this module and can be moved with ``JLAB_GOLDEN_DIR``.

Variable naming for jets of coordinate i: ``y<i>``, ``dy<i>``, ``ddy<i>``
(``dddy<i>`` for third derivatives) and ``z<i>``/``x<i>`` for the
argument. No prime characters are used anywhere.
"""

import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from pathlib import Path

import errors
from polycore import QQ, Poly, RatFn, rat, unify_values

try:
    import eventlog
except Exception:
    eventlog = None


DEBUG_MODULAR = False

MODPOLY_VARS = ("X", "Y")
GOLDEN_HEADER = "PHI N="

_THREE_HALVES = QQ(3, 2)


def _d(*args):
    if DEBUG_MODULAR:
        print("[modular_j]", *args)


def _log(message):
    if eventlog is not None:
        try:
            eventlog.log_event(message)
        except Exception:
            pass


def jet_names(i):
    """Variable names (y, dy, ddy, dddy) for coordinate ``i``."""
    return ("y{}".format(i), "dy{}".format(i), "ddy{}".format(i), "dddy{}".format(i))


def z_name(i):
    return "z{}".format(i)


def x_name(i):
    return "x{}".format(i)


def jet_variables(n):
    """Ambient (y1..yn, dy1..dyn, ddy1..ddyn) of a D-special variety."""
    return tuple(jet_names(i)[k] for k in range(3) for i in range(1, n + 1))


def full_variables(n):
    """Ambient (x1..xn, y1..yn, dy1..dyn, ddy1..ddyn) used for normality."""
    return tuple(x_name(i) for i in range(1, n + 1)) + jet_variables(n)


# ---------------------------------------------------------------------------
# Modular polynomials


@dataclass(frozen=True)
class ModularPoly:
    level: int
    poly: Poly

    def __post_init__(self):
        if self.poly.variables != MODPOLY_VARS:
            raise errors.InvalidArgument("modular polynomials live in (X, Y)")
        for coeff in self.poly.terms.values():
            if coeff.denominator != 1:
                raise errors.InvalidArgument("modular polynomial with non-integer coefficient")

    def dx(self):
        return self.poly.diff("X")

    def dy(self):
        return self.poly.diff("Y")

    def is_symmetric(self):
        swapped = {(e[1], e[0]): c for e, c in self.poly.terms.items()}
        return swapped == self.poly.terms

    def degree(self):
        return self.poly.degree("X")

    def substitute(self, x, y):
        """Phi(x, y) for exact, numeric or symbolic values."""
        return self.poly.evaluate({"X": x, "Y": y})

    def in_variables(self, variables, first, second):
        """Phi(first, second) as a Poly over ``variables``."""
        return self.substitute(Poly.gen(variables, first), Poly.gen(variables, second))

    def to_golden_text(self):
        lines = ["{}{}".format(GOLDEN_HEADER, self.level)]
        for expv in sorted(self.poly.terms):
            lines.append("{} {} {}".format(expv[0], expv[1], int(self.poly.terms[expv].numerator)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_golden_text(cls, text):
        lines = [line.strip() for line in text.splitlines() if line.strip()]
        if not lines or not lines[0].startswith(GOLDEN_HEADER):
            raise errors.InvalidInput("golden file does not start with '{}'".format(GOLDEN_HEADER))
        try:
            level = int(lines[0][len(GOLDEN_HEADER):])
            terms = {}
            for line in lines[1:]:
                ex, ey, coeff = line.split()
                terms[(int(ex), int(ey))] = int(coeff)
        except ValueError as exc:
            raise errors.InvalidInput("malformed golden file: {}".format(exc)) from exc
        return cls(level, Poly.from_terms(MODPOLY_VARS, terms))

    def __str__(self):
        return str(self.poly)


def golden_dir():
    override = os.environ.get("JLAB_GOLDEN_DIR")
    if override:
        return Path(override)
    return Path(__file__).resolve().parent / "golden"


def golden_path(level, directory=None):
    return Path(directory or golden_dir()) / "phi_{}.txt".format(level)


def read_golden(level, directory=None):
    path = golden_path(level, directory)
    if not path.exists():
        raise errors.UnsupportedLevel(
            "no golden modular polynomial for N={} at {}".format(level, path), level=level
        )
    phi = ModularPoly.from_golden_text(path.read_text())
    if phi.level != level:
        raise errors.InvalidInput("{} declares level {}".format(path, phi.level))
    return phi


def write_golden(phi, directory=None):
    """Write ``phi`` to its golden file; this is the exclusive maintenance step."""
    path = golden_path(phi.level, directory)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(phi.to_golden_text())
    os.replace(tmp, path)
    _cached_modular_polynomial.cache_clear()
    _log("golden modular polynomial N={} written to {}".format(phi.level, path))
    return path


@lru_cache(maxsize=None)
def _cached_modular_polynomial(level, directory):
    if level == 1:
        return ModularPoly(1, Poly.parse("X - Y", MODPOLY_VARS))
    return read_golden(level, directory)


def modular_polynomial(level, directory=None):
    """Return Phi_level; levels other than 1 come from the golden files."""
    if isinstance(level, bool) or not isinstance(level, int) or level < 1:
        raise errors.InvalidArgument("level must be a positive int, got {!r}".format(level))
    return _cached_modular_polynomial(level, str(directory or golden_dir()))


def modular_levels(n_max, directory=None, strict=False):
    """Levels 1..n_max whose Phi_N is known.

    Levels without a golden file are left out (and logged) unless
    ``strict``, in which case the first one raises UnsupportedLevel.
    """
    if isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 1:
        raise errors.InvalidArgument("level bound must be a positive int, got {!r}".format(n_max))
    levels, missing = [], []
    for level in range(1, n_max + 1):
        if level == 1 or golden_path(level, directory).exists():
            levels.append(level)
        elif strict:
            raise errors.UnsupportedLevel(
                "no golden modular polynomial for N={}".format(level), level=level
            )
        else:
            missing.append(level)
    if missing:
        _log("relation search skips levels {} (no golden file)".format(missing))
    return levels


def golden_diff(expected, actual):
    """Lines describing coefficient differences between two ModularPolys."""
    out = []
    keys = sorted(set(expected.poly.terms) | set(actual.poly.terms))
    for key in keys:
        a = expected.poly.terms.get(key, QQ.zero)
        b = actual.poly.terms.get(key, QQ.zero)
        if a != b:
            out.append("X^{} Y^{}: golden {} oracle {}".format(key[0], key[1], a, b))
    return out


def verify_golden(level, ctx=None, directory=None):
    """Re-derive Phi_level with the oracle; return the list of differences."""
    import qseries_oracle

    expected = modular_polynomial(level, directory)
    actual = qseries_oracle.interpolate_modular_polynomial(level, ctx)
    diff = golden_diff(expected, actual)
    _log("golden check N={}: {}".format(level, "match" if not diff else "{} differences".format(len(diff))))
    return diff


# ---------------------------------------------------------------------------
# The third-order equation


def _nonzero_or_raise(value, exc):
    if value == 0:
        raise exc


def _check_r_domain(y):
    if y == 0 or y == 1728:
        raise errors.PoleOfR("R has a pole at y = {}".format(y))


def R(y):
    """R(y) = (y^2 - 1968 y + 2654208) / (2 y^2 (y - 1728)^2)."""
    kind, (y,), lift = unify_values(y)
    _check_r_domain(y)
    num = y * y - lift(1968) * y + lift(2654208)
    den = lift(2) * y * y * (y - lift(1728)) * (y - lift(1728))
    return num / den


def r_ratfn(variables, y="y"):
    return R(Poly.gen(variables, y))


def j_ode_f(j, j1, j2, j3):
    """f(j, j', j'', j''') evaluated exactly, numerically or symbolically."""
    kind, (j, j1, j2, j3), lift = unify_values(j, j1, j2, j3)
    _nonzero_or_raise(j1, errors.DegenerateJet("j' vanishes"))
    r = R(j)
    ratio = j2 / j1
    return j3 / j1 - lift(_THREE_HALVES) * ratio * ratio + r * j1 * j1


def solve_y3(j, j1, j2):
    """The unique j''' with f(j, j', j'', j''') = 0."""
    kind, (j, j1, j2), lift = unify_values(j, j1, j2)
    _nonzero_or_raise(j1, errors.DegenerateJet("j' vanishes"))
    r = R(j)
    return lift(_THREE_HALVES) * j2 * j2 / j1 - r * j1 * j1 * j1


def h_ratfn(variables, y, dy, ddy):
    """h(y, dy, ddy) = solve_y3 as a rational function over ``variables``."""
    return solve_y3(Poly.gen(variables, y), Poly.gen(variables, dy), Poly.gen(variables, ddy))


def schwarzian(y, z):
    """Schwarzian derivative of the rational function ``y`` with respect to ``z``."""
    y = RatFn.lift(y, y.variables) if isinstance(y, (Poly, RatFn)) else y
    if not isinstance(y, RatFn):
        raise errors.InvalidArgument("schwarzian needs a Poly or RatFn")
    y1 = y.diff(z)
    if not y1:
        raise errors.DegenerateJet("constant function has no Schwarzian")
    y2 = y1.diff(z)
    y3 = y2.diff(z)
    ratio = y2 / y1
    return y3 / y1 - ratio * ratio * _THREE_HALVES


# ---------------------------------------------------------------------------
# Moebius matrices and jets


def _to_fraction(q):
    return Fraction(int(q.numerator), int(q.denominator))


@dataclass(frozen=True, eq=False)
class GeoMatrix:
    """Rational 2x2 matrix with positive determinant, up to positive scaling.

    The all-zero matrix is the marker for an unlinked pair.
    """

    a: object
    b: object
    c: object
    d: object

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, rat(getattr(self, name)))
        if not self.is_zero() and self.det() <= 0:
            raise errors.InvalidArgument(
                "geodesic matrices need a positive determinant, got {}".format(self.det())
            )

    @classmethod
    def of(cls, rows):
        try:
            (a, b), (c, d) = rows
        except (TypeError, ValueError) as exc:
            raise errors.InvalidArgument("expected [[a, b], [c, d]], got {!r}".format(rows)) from exc
        return cls(a, b, c, d)

    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)

    @classmethod
    def zero(cls):
        return cls(0, 0, 0, 0)

    def is_zero(self):
        return not (self.a or self.b or self.c or self.d)

    def det(self):
        return self.a * self.d - self.b * self.c

    def is_upper_triangular(self):
        return self.c == 0

    def rows(self):
        return [[self.a, self.b], [self.c, self.d]]

    def normalized(self):
        """Integer entries with gcd 1 (the positive scaling representative)."""
        if self.is_zero():
            return (0, 0, 0, 0)
        entries = [_to_fraction(v) for v in (self.a, self.b, self.c, self.d)]
        den = 1
        for e in entries:
            den = den * e.denominator // gcd(den, e.denominator)
        ints = [int(e * den) for e in entries]
        g = 0
        for v in ints:
            g = gcd(g, abs(v))
        return tuple(v // g for v in ints)

    def level(self):
        """N(g): determinant after scaling to coprime integer entries."""
        a, b, c, d = self.normalized()
        return a * d - b * c

    def compose(self, other):
        """Matrix product ``self @ other`` (apply ``other`` first)."""
        return GeoMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    __matmul__ = compose

    def adjugate(self):
        """Inverse up to positive scaling."""
        return GeoMatrix(self.d, -self.b, -self.c, self.a)

    def denominator_at(self, z):
        kind, (z,), lift = unify_values(z)
        return lift(self.c) * z + lift(self.d)

    def apply(self, z):
        """g z = (a z + b)/(c z + d); a zero denominator raises PoleAtPoint."""
        kind, (z,), lift = unify_values(z)
        den = lift(self.c) * z + lift(self.d)
        if den == 0:
            raise errors.PoleAtPoint("c z + d vanishes at z = {}".format(z))
        return (lift(self.a) * z + lift(self.b)) / den

    def derivative_factor(self, z):
        """d(gz)/dz = det(g) / (c z + d)^2."""
        kind, (z,), lift = unify_values(z)
        den = lift(self.c) * z + lift(self.d)
        if den == 0:
            raise errors.PoleAtPoint("c z + d vanishes at z = {}".format(z))
        return lift(self.det()) / (den * den)

    def __eq__(self, other):
        if not isinstance(other, GeoMatrix):
            return NotImplemented
        return self.normalized() == other.normalized()

    def __hash__(self):
        return hash(self.normalized())

    def to_json(self):
        return [[_rat_json(self.a), _rat_json(self.b)], [_rat_json(self.c), _rat_json(self.d)]]

    def __str__(self):
        a, b, c, d = self.normalized()
        return "[[{}, {}], [{}, {}]]".format(a, b, c, d)


def _rat_json(q):
    if q.denominator == 1:
        return int(q.numerator)
    return "{}/{}".format(int(q.numerator), int(q.denominator))


@dataclass(frozen=True)
class Jet:
    """(z, j, j', j'', j''') with any entry possibly missing."""

    z: object = None
    j: object = None
    j1: object = None
    j2: object = None
    j3: object = None

    def is_complete(self):
        return None not in (self.j, self.j1, self.j2, self.j3)

    def residual(self):
        if not self.is_complete():
            raise errors.InvalidArgument("jet is missing derivatives")
        return j_ode_f(self.j, self.j1, self.j2, self.j3)

    def with_j3(self):
        return Jet(self.z, self.j, self.j1, self.j2, solve_y3(self.j, self.j1, self.j2))


def a3_transform(g, jet):
    """Move ``jet`` from z to g z by the chain rule.

    With phi = d(gz)/dz = det/(cz+d)^2 the new derivatives are
    j1/phi, (j2 - u1 phi')/phi^2 and (j3 - 3 u2 phi phi' - u1 phi'')/phi^3.
    For det = 1 the first two agree with the unimodular transformation law.
    """
    if jet.z is None:
        raise errors.InvalidArgument("a3_transform needs the jet's z value")
    if g.is_zero():
        raise errors.UnlinkedPair("cannot transform along the zero marker")
    given = {
        name: value
        for name, value in zip(("z", "j", "j1", "j2", "j3"), (jet.z, jet.j, jet.j1, jet.j2, jet.j3))
        if value is not None
    }
    kind, values, lift = unify_values(*given.values())
    lookup = dict(zip(given, values))
    z = lookup["z"]
    c, det = lift(g.c), lift(g.det())
    den = c * z + lift(g.d)
    if den == 0:
        raise errors.PoleAtPoint("c z + d vanishes at the jet's z")
    phi = det / (den * den)
    dphi = lift(-2) * c * det / (den * den * den)
    ddphi = lift(6) * c * c * det / (den * den * den * den)
    u1 = u2 = u3 = None
    if "j1" in lookup:
        u1 = lookup["j1"] / phi
    if u1 is not None and "j2" in lookup:
        u2 = (lookup["j2"] - u1 * dphi) / (phi * phi)
    if u2 is not None and "j3" in lookup:
        u3 = (lookup["j3"] - lift(3) * u2 * phi * dphi - u1 * ddphi) / (phi * phi * phi)
    gz = (lift(g.a) * z + lift(g.b)) / den
    return Jet(z=gz, j=lookup.get("j"), j1=u1, j2=u2, j3=u3)


def a4_system(phi, jet1, j2):
    """Solve the derived system of Phi(j1, j2) = 0 for (j2', j2'').

    ``jet1`` is (j1, j1', j1''). Both coordinates are differentiated along
    the same parameter.
    """
    y1, d1, dd1 = jet1
    kind, (y1, d1, dd1, y2), lift = unify_values(y1, d1, dd1, j2)
    px, py = phi.dx(), phi.dy()
    at = {"X": y1, "Y": y2}

    def ev(p):
        return lift(p.evaluate(at))

    fy = ev(py)
    if fy == 0:
        raise errors.SingularModularPoint(
            "dPhi/dY vanishes at the given pair; the derived system is singular", level=phi.level
        )
    fx = ev(px)
    fxx, fxy, fyy = ev(px.diff("X")), ev(px.diff("Y")), ev(py.diff("Y"))
    d2 = -(fx * d1) / fy
    dd2 = -(fxx * d1 * d1 + lift(2) * fxy * d1 * d2 + fyy * d2 * d2 + fx * dd1) / fy
    return d2, dd2


# ---------------------------------------------------------------------------
# Prolongation along a j-block


class BlockContext:
    """Geodesic data of one j-block: a root coordinate and path matrices.

    ``matrices[i]`` maps z_root to z_i. The ambient is
    (z_root, y_i..., dy_i..., ddy_i...) over the members in order.
    """

    def __init__(self, root, matrices):
        self.root = root
        self.matrices = dict(matrices)
        self.matrices.setdefault(root, GeoMatrix.identity())
        self.members = tuple(sorted(self.matrices))
        for i, g in self.matrices.items():
            if g.is_zero():
                raise errors.UnlinkedPair("member {} has the zero marker as path".format(i))
        self.z = z_name(root)
        self.variables = (self.z,) + tuple(
            jet_names(i)[k] for k in range(3) for i in self.members
        )
        self._images = None

    @classmethod
    def pair(cls, g, first=1, second=2):
        return cls(first, {first: GeoMatrix.identity(), second: g})

    def factor(self, i):
        """dz_i/dz_root as a RatFn in z_root."""
        zed = Poly.gen(self.variables, self.z)
        return self.matrices[i].derivative_factor(zed)

    def images(self):
        """Total derivatives of every ambient variable."""
        if self._images is None:
            v = self.variables
            out = {self.z: RatFn.lift(1, v)}
            for i in self.members:
                y, dy, ddy, _ = jet_names(i)
                phi = self.factor(i)
                out[y] = phi * Poly.gen(v, dy)
                out[dy] = phi * Poly.gen(v, ddy)
                out[ddy] = phi * h_ratfn(v, y, dy, ddy)
            self._images = out
        return self._images

    def all_upper_triangular(self):
        return all(g.is_upper_triangular() for g in self.matrices.values())


def total_derivative(p, ctx):
    """d/dz_root of ``p`` (Poly or RatFn over the block ambient), as a RatFn."""
    p = RatFn.lift(p, ctx.variables) if isinstance(p, (Poly, RatFn)) else p
    images = ctx.images()
    out = RatFn.lift(0, ctx.variables)
    for v in ctx.variables:
        dp = p.diff(v)
        if dp:
            out = out + dp * images[v]
    return out


def prolong(p, ctx):
    """Total derivative of ``p`` with denominators cleared (the numerator)."""
    if isinstance(p, Poly) and p.variables != ctx.variables:
        p = p.align(ctx.variables)
    return total_derivative(p, ctx).num


def geodesic_derived_equation(phi, g, first=1, second=2):
    """First and second prolongations of Phi(y_first, y_second) along z_second = g z_first."""
    if g.is_zero():
        raise errors.UnlinkedPair("the pair is unlinked (zero marker)")
    ctx = BlockContext.pair(g, first, second)
    base = phi.in_variables(ctx.variables, jet_names(first)[0], jet_names(second)[0])
    e1 = prolong(base, ctx)
    e2 = prolong(e1, ctx)
    _d("derived equation for N =", phi.level, "g =", g, ":", e1)
    return e1, e2
