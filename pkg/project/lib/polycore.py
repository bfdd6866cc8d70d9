"""Exact sparse polynomial algebra over the rationals for jlab.

Everything above this module (modular polynomials, D-special synthesis,
derivation spaces) is expressed with the types defined here:

    Poly        - sparse polynomial over an explicit ordered variable list
    RatFn       - reduced fraction of two Polys (canonical denominator)
    MonOrder    - lex, grevlex or a two-block elimination order
    Ideal       - generators plus a cache of reduced Groebner bases
    FieldMatrix - rectangular matrix of RatFn entries
    Budget      - caps that abort runaway Groebner computations

Arithmetic is delegated to sympy's sparse ``PolyRing``/``FracField`` over
``QQ`` (gmpy2-backed when available). The Groebner engine is a Buchberger
loop with the normal selection strategy, sugar tie-breaking, the
Gebauer-Moeller pair criteria and full inter-reduction.

Polynomial text grammar (parse and serialize):
    terms joined by ``+``/``-``; a monomial is ``coefficient*var^exp*...``;
    variables match ``[A-Za-z][A-Za-z0-9_]*``; coefficients are integers or
    fractions ``p/q``. Serialization sorts terms by grevlex, descending.
"""

import itertools
import re
import sys
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce

import mpmath
from sympy import Float, Symbol
from sympy.parsing.sympy_parser import parse_expr
from sympy.polys.domains import QQ
from sympy.polys.fields import FracField
from sympy.polys.matrices import DomainMatrix
from sympy.polys.rings import PolyRing

import errors

try:
    import eventlog
except Exception:
    eventlog = None


DEBUG_POLYCORE = False

_VARIABLE_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")


def _d(*args):
    if DEBUG_POLYCORE:
        print("[polycore]", *args)


def _log(message):
    if eventlog is not None:
        try:
            eventlog.log_event(message)
        except Exception:
            pass


# ---------------------------------------------------------------------------
# Rationals


Rat = type(QQ.one)


def rat(value):
    """Convert ``value`` to an exact rational in ``QQ``.

    Accepts ints, ``Fraction``, strings such as ``"3/2"``, sympy Rationals
    and values that are already in ``QQ``. Floats are rejected.
    """
    if isinstance(value, bool):
        raise errors.InvalidArgument("booleans are not rationals")
    if isinstance(value, int):
        return QQ(value)
    if isinstance(value, Rat):
        return value
    if isinstance(value, str):
        try:
            value = Fraction(value.strip())
        except ValueError as exc:
            raise errors.InvalidArgument("not a rational: {!r}".format(value)) from exc
    if isinstance(value, Fraction):
        return QQ(value.numerator, value.denominator)
    if getattr(value, "is_Rational", False):
        return QQ(int(value.p), int(value.q))
    if hasattr(value, "numerator") and hasattr(value, "denominator") and not isinstance(value, float):
        return QQ(int(value.numerator), int(value.denominator))
    raise errors.InvalidArgument("not an exact rational: {!r}".format(value))


def is_exact(value):
    """True for ints and rationals (values ``rat`` accepts without loss)."""
    if isinstance(value, bool):
        return False
    if isinstance(value, (int, Fraction, Rat)):
        return True
    return bool(getattr(value, "is_Rational", False))


def is_numeric(value):
    return isinstance(value, (float, complex, mpmath.mpf, mpmath.mpc))


def to_mp(value):
    """Lift an exact rational to an mpmath number at the active precision."""
    if is_numeric(value):
        return mpmath.mpmathify(value)
    q = rat(value)
    return mpmath.mpf(int(q.numerator)) / int(q.denominator)


def format_rat(value):
    q = rat(value)
    if q.denominator == 1:
        return str(int(q.numerator))
    return "{}/{}".format(int(q.numerator), int(q.denominator))


# ---------------------------------------------------------------------------
# Monomial orders


def _grevlex_key(monom):
    return (sum(monom), tuple(reversed([-e for e in monom])))


@dataclass(frozen=True)
class MonOrder:
    """A monomial order usable as a sympy ring order.

    ``kind`` is ``lex``, ``grevlex`` or ``block``. A block order compares
    the first ``split`` exponents by grevlex and breaks ties with grevlex
    on the rest, so it eliminates the first block.
    """

    kind: str = "grevlex"
    split: int = 0

    def __post_init__(self):
        if self.kind not in ("lex", "grevlex", "block"):
            raise errors.InvalidArgument("unknown monomial order: {}".format(self.kind))
        if self.kind == "block" and self.split < 1:
            raise errors.InvalidArgument("block order needs a split point >= 1")

    def __call__(self, monom):
        if self.kind == "lex":
            return tuple(monom)
        if self.kind == "grevlex":
            return _grevlex_key(monom)
        return (_grevlex_key(monom[: self.split]), _grevlex_key(monom[self.split :]))

    def __str__(self):
        if self.kind == "block":
            return "block({})".format(self.split)
        return self.kind


LEX = MonOrder("lex")
GREVLEX = MonOrder("grevlex")


def block_order(split):
    return MonOrder("block", split)


# ---------------------------------------------------------------------------
# Rings


def _check_variables(variables):
    variables = tuple(sys.intern(str(v)) for v in variables)
    for v in variables:
        if not _VARIABLE_RE.fullmatch(v):
            raise errors.InvalidArgument("invalid variable name: {!r}".format(v))
    if len(set(variables)) != len(variables):
        raise errors.InvalidArgument("duplicate variables in {}".format(variables))
    if not variables:
        raise errors.InvalidArgument("at least one variable is required")
    return variables


@lru_cache(maxsize=None)
def poly_ring(variables, order=GREVLEX):
    """Return the cached sympy ring ``QQ[variables]`` with ``order``."""
    return PolyRing(tuple(Symbol(v) for v in variables), QQ, order)


@lru_cache(maxsize=None)
def frac_field(variables):
    return FracField(tuple(Symbol(v) for v in variables), QQ, GREVLEX)


def fresh_variable(variables, stem="t"):
    """Return a variable name not present in ``variables``."""
    taken = set(variables)
    for k in itertools.count():
        name = "{}_{}".format(stem, k)
        if name not in taken:
            return name


# ---------------------------------------------------------------------------
# Polynomials


def _value_kind(values):
    kinds = set()
    for v in values:
        if is_exact(v):
            kinds.add("exact")
        elif is_numeric(v):
            kinds.add("numeric")
        elif isinstance(v, (Poly, RatFn)):
            kinds.add("symbolic")
        else:
            raise errors.InvalidArgument("cannot evaluate at value {!r}".format(v))
    if "symbolic" in kinds:
        if "numeric" in kinds:
            raise errors.InvalidArgument("cannot mix numeric and symbolic values")
        return "symbolic"
    if "numeric" in kinds:
        return "numeric"
    return "exact"


def unify_values(*values):
    """Bring mixed inputs to one arithmetic regime.

    Returns ``(kind, converted, lift)`` where ``lift`` maps a rational
    constant into the same regime.
    """
    kind = _value_kind(values)
    if kind == "exact":
        return kind, [rat(v) for v in values], rat
    if kind == "numeric":
        return kind, [to_mp(v) for v in values], to_mp
    target = next(v.variables for v in values if isinstance(v, (Poly, RatFn)))
    lift = lambda v: RatFn.lift(v, target)
    return kind, [lift(v) for v in values], lift


def _format_monomial(variables, expv):
    parts = []
    for v, e in zip(variables, expv):
        if e == 1:
            parts.append(v)
        elif e:
            parts.append("{}^{}".format(v, e))
    return "*".join(parts)


class Poly:
    """Sparse polynomial with exact rational coefficients.

    Two Polys are equal when they share the variable list and the term map.
    Mixing Polys over different variable lists raises ``InvalidArgument``;
    use ``align`` to move a polynomial into another ambient list first.
    """

    __slots__ = ("variables", "elem")

    def __init__(self, variables, elem=None):
        self.variables = _check_variables(variables)
        ring = poly_ring(self.variables)
        if elem is None:
            elem = ring.zero
        elif elem.ring != ring:
            elem = elem.set_ring(ring)
        self.elem = elem

    # construction ---------------------------------------------------------

    @classmethod
    def from_terms(cls, variables, terms):
        variables = _check_variables(variables)
        ring = poly_ring(variables)
        elem = ring.zero
        for expv, coeff in dict(terms).items():
            expv = tuple(int(e) for e in expv)
            if len(expv) != len(variables) or any(e < 0 for e in expv):
                raise errors.InvalidArgument("bad exponent vector {}".format(expv))
            c = rat(coeff)
            if c:
                elem[expv] = elem.get(expv, QQ.zero) + c
                if not elem[expv]:
                    del elem[expv]
        return cls(variables, elem)

    @classmethod
    def constant(cls, variables, value):
        variables = _check_variables(variables)
        return cls(variables, poly_ring(variables).ground_new(rat(value)))

    @classmethod
    def gen(cls, variables, name):
        variables = _check_variables(variables)
        if name not in variables:
            raise errors.InvalidArgument("unknown variable {!r}".format(name))
        return cls(variables, poly_ring(variables).gens[variables.index(name)])

    @classmethod
    def gens(cls, variables):
        variables = _check_variables(variables)
        return tuple(cls(variables, g) for g in poly_ring(variables).gens)

    @classmethod
    def parse(cls, text, variables=None):
        """Parse ``text`` written in the polynomial grammar.

        Without ``variables`` the ambient list is the identifiers in order of
        first appearance.
        """
        expr, names = _parse_text(text)
        if variables is None:
            variables = names or ("x",)
        variables = _check_variables(variables)
        unknown = [n for n in names if n not in variables]
        if unknown:
            raise errors.InvalidArgument(
                "unknown variables {} in {!r}".format(unknown, text)
            )
        try:
            elem = poly_ring(variables).from_expr(expr)
        except (ValueError, TypeError) as exc:
            raise errors.InvalidArgument("not a polynomial: {!r}".format(text)) from exc
        return cls(variables, elem)

    # basic properties -----------------------------------------------------

    @property
    def ring(self):
        return self.elem.ring

    @property
    def terms(self):
        return dict(self.elem)

    def is_zero(self):
        return not self.elem

    def __bool__(self):
        return bool(self.elem)

    def is_constant(self):
        return all(not any(expv) for expv in self.elem)

    def constant_value(self):
        if not self.is_constant():
            raise errors.InvalidArgument("polynomial is not constant: {}".format(self))
        return self.elem.get(self.ring.zero_monom, QQ.zero)

    def degree(self, v=None):
        """Total degree, or the degree in ``v``. The zero polynomial has -1."""
        if not self.elem:
            return -1
        if v is None:
            return max(sum(expv) for expv in self.elem)
        i = self._index(v)
        return max(expv[i] for expv in self.elem)

    def used_variables(self):
        used = set()
        for expv in self.elem:
            used.update(v for v, e in zip(self.variables, expv) if e)
        return tuple(v for v in self.variables if v in used)

    def leading_monomial(self, order=GREVLEX):
        if not self.elem:
            return None
        return max(self.elem, key=order)

    def _index(self, v):
        try:
            return self.variables.index(v)
        except ValueError:
            raise errors.InvalidArgument(
                "unknown variable {!r} (ambient {})".format(v, self.variables)
            ) from None

    # arithmetic -------------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Poly):
            if other.variables != self.variables:
                raise errors.InvalidArgument(
                    "cross-ambient operation {} vs {}; align first".format(
                        self.variables, other.variables
                    )
                )
            return other.elem
        if isinstance(other, RatFn):
            return NotImplemented
        if is_exact(other):
            return self.ring.ground_new(rat(other))
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return Poly(self.variables, self.elem + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return Poly(self.variables, self.elem - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return Poly(self.variables, o - self.elem)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return Poly(self.variables, self.elem * o)

    __rmul__ = __mul__

    def __neg__(self):
        return Poly(self.variables, -self.elem)

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise errors.InvalidArgument("polynomial powers must be non-negative ints")
        return Poly(self.variables, self.elem ** n)

    def __truediv__(self, other):
        return RatFn(self) / other

    def __rtruediv__(self, other):
        return RatFn.lift(other, self.variables) / RatFn(self)

    def diff(self, v):
        """Partial derivative with respect to ``v``."""
        return Poly(self.variables, self.elem.diff(self._index(v)))

    def diff_or_zero(self, v):
        """Partial derivative, treating variables outside the ambient as absent."""
        if v not in self.variables:
            return Poly(self.variables)
        return self.diff(v)

    # evaluation -------------------------------------------------------------

    def evaluate(self, point):
        """Evaluate at ``point`` (a mapping from variable name to value).

        Exact values give a rational, numeric values (float/complex/mpmath)
        give an mpmath number, Poly or RatFn values give a composition.
        Only variables that actually occur need to be assigned. A composition
        stays a Poly when every substituted value is a Poly.
        """
        used = self.used_variables()
        missing = [v for v in used if v not in point]
        if missing:
            raise errors.InvalidArgument("no value for variables {}".format(missing))
        raw = [point[v] for v in used]
        kind = _value_kind(raw)
        idx = [self.variables.index(v) for v in used]
        if kind == "exact":
            values = dict(zip(idx, (rat(v) for v in raw)))
            lift = lambda c: c
        elif kind == "numeric":
            values = dict(zip(idx, (mpmath.mpmathify(v) for v in raw)))
            lift = to_mp
        else:
            target = next(v.variables for v in raw if isinstance(v, (Poly, RatFn)))
            values = dict(zip(idx, (RatFn.lift(v, target) for v in raw)))
            lift = lambda c: RatFn.lift(c, target)
        total = lift(QQ.zero)
        powers = {}
        for expv, coeff in self.elem.iterterms():
            term = lift(coeff)
            for i in idx:
                e = expv[i]
                if e:
                    key = (i, e)
                    if key not in powers:
                        powers[key] = values[i] ** e
                    term = term * powers[key]
            total = total + term
        if kind == "symbolic" and all(not isinstance(v, RatFn) for v in raw):
            return total.as_poly()
        return total

    def subs(self, assignment):
        """Substitute exact rationals for some variables; ambient unchanged."""
        ring = self.ring
        pairs = []
        for v, value in assignment.items():
            pairs.append((ring.gens[self._index(v)], rat(value)))
        if not pairs:
            return self
        return Poly(self.variables, self.elem.subs(pairs))

    def align(self, variables):
        """Re-embed into another ambient list containing every used variable."""
        variables = _check_variables(variables)
        if variables == self.variables:
            return self
        missing = [v for v in self.used_variables() if v not in variables]
        if missing:
            raise errors.InvalidArgument(
                "cannot align: variables {} not in {}".format(missing, variables)
            )
        pos = [self.variables.index(v) if v in self.variables else None for v in variables]
        terms = {}
        for expv, coeff in self.elem.iterterms():
            terms[tuple(expv[p] if p is not None else 0 for p in pos)] = coeff
        return Poly.from_terms(variables, terms)

    def in_ring(self, ring):
        """Return the underlying element moved into ``ring`` (same symbol set)."""
        return self.elem.set_ring(ring)

    # factorization ----------------------------------------------------------

    def factor_list(self):
        """Irreducible factors over QQ as ``[(Poly, multiplicity), ...]``."""
        _, factors = self.elem.factor_list()
        return [(Poly(self.variables, f), m) for f, m in factors]

    def sqf_list(self):
        _, factors = self.elem.sqf_list()
        return [(Poly(self.variables, f), m) for f, m in factors]

    def monic(self, order=GREVLEX):
        lm = self.leading_monomial(order)
        if lm is None:
            return self
        return Poly(self.variables, self.elem.quo_ground(self.elem[lm]))

    def to_expr(self):
        return self.elem.as_expr()

    # comparison / text ------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.variables == other.variables and dict(self.elem) == dict(other.elem)
        if is_exact(other):
            return self.is_constant() and self.constant_value() == rat(other)
        return NotImplemented

    def __hash__(self):
        return hash((self.variables, frozenset(self.elem.items())))

    def __str__(self):
        if not self.elem:
            return "0"
        out = []
        for expv in sorted(self.elem, key=GREVLEX, reverse=True):
            coeff = self.elem[expv]
            sign = "-" if coeff < 0 else "+"
            mag = -coeff if coeff < 0 else coeff
            mono = _format_monomial(self.variables, expv)
            if not mono:
                body = format_rat(mag)
            elif mag == 1:
                body = mono
            else:
                body = "{}*{}".format(format_rat(mag), mono)
            if not out:
                out.append(body if sign == "+" else "-" + body)
            else:
                out.append("{} {}".format(sign, body))
        return " ".join(out)

    def __repr__(self):
        return "Poly({!r}, {})".format(str(self), list(self.variables))


def _parse_text(text):
    if not isinstance(text, str):
        raise errors.InvalidArgument("expected polynomial text, got {!r}".format(text))
    names = []
    for name in _VARIABLE_RE.findall(text):
        if name not in names:
            names.append(name)
    local = {n: Symbol(n) for n in names}
    try:
        expr = parse_expr(text.replace("^", "**"), local_dict=local)
    except Exception as exc:
        raise errors.InvalidArgument("cannot parse {!r}: {}".format(text, exc)) from exc
    if expr.atoms(Float):
        raise errors.InvalidArgument("decimal coefficients are not exact: {!r}".format(text))
    return expr, tuple(names)


def partial_derivative(p, v):
    """Return the partial derivative of ``p`` with respect to variable ``v``."""
    return p.diff(v)


# ---------------------------------------------------------------------------
# Rational functions


class RatFn:
    """Reduced rational function ``num/den`` over a fixed variable list.

    The denominator is normalized to be monic under grevlex, so equal
    functions have identical representations.
    """

    __slots__ = ("variables", "frac")

    def __init__(self, num, den=None):
        if isinstance(num, RatFn) and den is None:
            self.variables, self.frac = num.variables, num.frac
            return
        if not isinstance(num, Poly):
            raise errors.InvalidArgument("RatFn numerator must be a Poly")
        variables = num.variables
        field = frac_field(variables)
        if den is None:
            d = field.ring.one
        else:
            if is_exact(den):
                den = Poly.constant(variables, den)
            if den.variables != variables:
                raise errors.InvalidArgument("numerator and denominator ambients differ")
            if not den.elem:
                raise errors.PoleAtPoint("zero denominator")
            d = den.elem.set_ring(field.ring)
        self.variables = variables
        self.frac = _monic_frac(field, num.elem.set_ring(field.ring), d)

    @classmethod
    def from_frac(cls, variables, frac):
        obj = cls.__new__(cls)
        obj.variables = variables
        obj.frac = _monic_frac(frac.field, frac.numer, frac.denom)
        return obj

    @classmethod
    def lift(cls, value, variables):
        """Coerce a scalar, Poly or RatFn into a RatFn over ``variables``."""
        if isinstance(value, RatFn):
            if value.variables != variables:
                raise errors.InvalidArgument("cross-ambient rational functions; align first")
            return value
        if isinstance(value, Poly):
            if value.variables != variables:
                raise errors.InvalidArgument("cross-ambient polynomial; align first")
            return cls(value)
        return cls(Poly.constant(variables, value))

    @classmethod
    def parse(cls, text, variables):
        expr, names = _parse_text(text)
        variables = _check_variables(variables)
        unknown = [n for n in names if n not in variables]
        if unknown:
            raise errors.InvalidArgument("unknown variables {} in {!r}".format(unknown, text))
        field = frac_field(variables)
        try:
            frac = field.from_expr(expr)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise errors.InvalidArgument("not a rational function: {!r}".format(text)) from exc
        return cls.from_frac(variables, frac)

    @property
    def num(self):
        return Poly(self.variables, self.frac.numer)

    @property
    def den(self):
        return Poly(self.variables, self.frac.denom)

    def is_zero(self):
        return not self.frac.numer

    def __bool__(self):
        return bool(self.frac.numer)

    def is_polynomial(self):
        return self.frac.denom == self.frac.field.ring.one

    def as_poly(self):
        if not self.is_polynomial():
            raise errors.InvalidArgument("not a polynomial: {}".format(self))
        return self.num

    def _other(self, other):
        if isinstance(other, (RatFn, Poly)) or is_exact(other):
            return RatFn.lift(other, self.variables).frac
        return NotImplemented

    def __add__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        return RatFn.from_frac(self.variables, self.frac + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        return RatFn.from_frac(self.variables, self.frac - o)

    def __rsub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        return RatFn.from_frac(self.variables, o - self.frac)

    def __mul__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        return RatFn.from_frac(self.variables, self.frac * o)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        if not o:
            raise errors.PoleAtPoint("division by the zero rational function")
        return RatFn.from_frac(self.variables, self.frac / o)

    def __rtruediv__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        if not self.frac:
            raise errors.PoleAtPoint("division by the zero rational function")
        return RatFn.from_frac(self.variables, o / self.frac)

    def __neg__(self):
        return RatFn.from_frac(self.variables, -self.frac)

    def __pow__(self, n):
        if not isinstance(n, int):
            raise errors.InvalidArgument("rational function powers must be ints")
        if n < 0 and not self.frac:
            raise errors.PoleAtPoint("negative power of zero")
        return RatFn.from_frac(self.variables, self.frac ** n)

    def diff(self, v):
        """Partial derivative by the quotient rule."""
        if v not in self.variables:
            raise errors.InvalidArgument("unknown variable {!r}".format(v))
        i = self.variables.index(v)
        n, d = self.frac.numer, self.frac.denom
        num = n.diff(i) * d - n * d.diff(i)
        return RatFn.from_frac(self.variables, self.frac.field.new(num, d * d))

    def diff_or_zero(self, v):
        if v not in self.variables:
            return RatFn(Poly(self.variables))
        return self.diff(v)

    def evaluate(self, point):
        """Evaluate at ``point``; a vanishing denominator raises PoleAtPoint."""
        d = self.den.evaluate(point)
        if isinstance(d, (Poly, RatFn)):
            if not d:
                raise errors.PoleAtPoint("denominator vanishes identically after substitution")
        elif d == 0:
            raise errors.PoleAtPoint("denominator {} vanishes at the point".format(self.den))
        n = self.num.evaluate(point)
        if isinstance(n, (Poly, RatFn)) or isinstance(d, (Poly, RatFn)):
            return RatFn.lift_any(n) / d
        return n / d

    @staticmethod
    def lift_any(value):
        if isinstance(value, Poly):
            return RatFn(value)
        return value

    def align(self, variables):
        return RatFn(self.num.align(variables), self.den.align(variables))

    def __eq__(self, other):
        if isinstance(other, RatFn):
            return self.variables == other.variables and self.frac == other.frac
        if isinstance(other, Poly):
            return self.variables == other.variables and self.is_polynomial() and self.num == other
        if is_exact(other):
            return self.is_polynomial() and self.num == other
        return NotImplemented

    def __hash__(self):
        return hash((self.variables, frozenset(self.frac.numer.items()), frozenset(self.frac.denom.items())))

    def __str__(self):
        if self.is_polynomial():
            return str(self.num)
        return "({})/({})".format(self.num, self.den)

    def __repr__(self):
        return "RatFn({!r}, {})".format(str(self), list(self.variables))


def _monic_frac(field, numer, denom):
    numer, denom = numer.cancel(denom)
    lm = max(denom, key=GREVLEX)
    lc = denom[lm]
    if lc != 1:
        numer = numer.quo_ground(lc)
        denom = denom.quo_ground(lc)
    return field.raw_new(numer, denom)


# ---------------------------------------------------------------------------
# Groebner engine


@dataclass(frozen=True)
class Budget:
    """Caps for one Groebner computation.

    Exceeding any cap raises ``ComputationAborted`` with the partial
    diagnostics in ``details``.
    """

    max_basis: int = 400
    max_degree: int = 80
    max_reductions: int = 20000


DEFAULT_BUDGET = Budget()


def _spoly(f, g):
    ring = f.ring
    lmf, lmg = f.LM, g.LM
    lcm = ring.monomial_lcm(lmf, lmg)
    return f.mul_monom(ring.monomial_div(lcm, lmf)) - g.mul_monom(ring.monomial_div(lcm, lmg))


def _update(ring, lms, pairs, lmf):
    """Gebauer-Moeller update of the pair set when a new leading monomial joins."""
    ring_lcm, ring_mul, ring_div = ring.monomial_lcm, ring.monomial_mul, ring.monomial_div
    k = len(lms)
    pairs = {
        p
        for p in pairs
        if not ring_div(ring_lcm(lms[p[0]], lms[p[1]]), lmf)
        or ring_lcm(lms[p[0]], lms[p[1]]) == ring_lcm(lms[p[0]], lmf)
        or ring_lcm(lms[p[0]], lms[p[1]]) == ring_lcm(lms[p[1]], lmf)
    }
    by_lcm = {}
    for i in range(k):
        by_lcm.setdefault(ring_lcm(lms[i], lmf), []).append(i)
    minimal = []
    for L in sorted(by_lcm, key=ring.order):
        if all(not ring_div(L, M) for M in minimal):
            minimal.append(L)
    for L in minimal:
        if not any(ring_lcm(lms[i], lmf) == ring_mul(lms[i], lmf) for i in by_lcm[L]):
            pairs.add((min(by_lcm[L]), k))
    return pairs


class _Engine:
    """One Buchberger run inside a fixed sympy ring.

    With ``track`` set every basis element carries cofactors expressing it
    as a combination of the input generators.
    """

    def __init__(self, ring, budget, track=False):
        self.ring = ring
        self.order = ring.order
        self.budget = budget or DEFAULT_BUDGET
        self.track = track
        self.basis = []
        self.lms = []
        self.sugar = []
        self.cofactors = []
        self.pairs = set()
        self.reductions = 0
        self.top_degree = 0

    def _abort(self, reason):
        details = {
            "reason": reason,
            "basis_size": len(self.basis),
            "max_degree": self.top_degree,
            "pending_pairs": len(self.pairs),
            "reductions": self.reductions,
        }
        _log("Groebner aborted: {} ({})".format(reason, details))
        raise errors.ComputationAborted("Groebner budget exceeded: " + reason, **details)

    def _monic(self, f, cof):
        lc = f[f.LM]
        if lc == 1:
            return f, cof
        inv = QQ.one / lc
        f = f.mul_ground(inv)
        if cof is not None:
            cof = [c.mul_ground(inv) for c in cof]
        return f, cof

    def _reduce(self, f, cof):
        if not self.basis:
            return f, cof
        if not self.track:
            return f.rem(self.basis), None
        quotients, r = f.div(self.basis)
        cof = list(cof)
        for q, gcof in zip(quotients, self.cofactors):
            if q:
                cof = [a - q * b for a, b in zip(cof, gcof)]
        return r, cof

    def _add(self, f, sugar, cof):
        f, cof = self._monic(f, cof)
        lm = f.LM
        self.pairs = _update(self.ring, self.lms, self.pairs, lm)
        self.basis.append(f)
        self.lms.append(lm)
        self.sugar.append(sugar)
        self.cofactors.append(cof)
        deg = max(sum(m) for m in f)
        self.top_degree = max(self.top_degree, deg)
        if len(self.basis) > self.budget.max_basis:
            self._abort("basis size above {}".format(self.budget.max_basis))
        if deg > self.budget.max_degree:
            self._abort("degree {} above {}".format(deg, self.budget.max_degree))

    def _pair_key(self, pair):
        i, j = pair
        lcm = self.ring.monomial_lcm(self.lms[i], self.lms[j])
        dl = sum(lcm)
        sugar = max(self.sugar[i] + dl - sum(self.lms[i]), self.sugar[j] + dl - sum(self.lms[j]))
        return (self.order(lcm), sugar, i, j)

    def run(self, polys):
        ring = self.ring
        n = len(polys)
        for k, f in enumerate(polys):
            if not f:
                continue
            cof = None
            if self.track:
                cof = [ring.one if i == k else ring.zero for i in range(n)]
            self._add(f, max(sum(m) for m in f), cof)
        while self.pairs:
            pair = min(self.pairs, key=self._pair_key)
            self.pairs.discard(pair)
            sugar = self._pair_key(pair)[1]
            i, j = pair
            s = _spoly(self.basis[i], self.basis[j])
            cof = None
            if self.track:
                ring_div = ring.monomial_div
                lcm = ring.monomial_lcm(self.lms[i], self.lms[j])
                mi, mj = ring_div(lcm, self.lms[i]), ring_div(lcm, self.lms[j])
                cof = [
                    a.mul_monom(mi) - b.mul_monom(mj)
                    for a, b in zip(self.cofactors[i], self.cofactors[j])
                ]
            r, cof = self._reduce(s, cof)
            self.reductions += 1
            if self.reductions > self.budget.max_reductions:
                self._abort("more than {} reductions".format(self.budget.max_reductions))
            if r:
                self._add(r, sugar, cof)
        return self._reduced()

    def _reduced(self):
        order = self.order
        ring = self.ring
        items = sorted(zip(self.basis, self.cofactors), key=lambda fc: order(fc[0].LM))
        minimal = []
        for f, cof in items:
            if all(not ring.monomial_div(f.LM, g.LM) for g, _ in minimal):
                minimal.append((f, cof))
        reduced = []
        for k, (f, cof) in enumerate(minimal):
            others = [g for i, (g, _) in enumerate(minimal) if i != k]
            if not others:
                r, rcof = f, cof
            elif self.track:
                quotients, r = f.div(others)
                other_cofs = [c for i, (_, c) in enumerate(minimal) if i != k]
                rcof = list(cof)
                for q, gcof in zip(quotients, other_cofs):
                    if q:
                        rcof = [a - q * b for a, b in zip(rcof, gcof)]
            else:
                r, rcof = f.rem(others), None
            reduced.append(self._monic(r, rcof))
        reduced.sort(key=lambda fc: order(fc[0].LM), reverse=True)
        return reduced


def _groebner_elements(polys, ring, budget=None, track=False):
    polys = [p for p in polys if p]
    if not polys:
        return []
    for p in polys:
        if p.LM == ring.zero_monom and not track:
            return [(ring.one, None)]
    return _Engine(ring, budget, track=track).run(polys)


# ---------------------------------------------------------------------------
# Ideals


class Ideal:
    """Ideal of ``QQ[variables]`` given by generators.

    Reduced Groebner bases are cached per monomial order. Cache insertion
    is guarded by a lock; the bases are canonical so concurrent writers
    store identical values.
    """

    def __init__(self, variables, generators=()):
        self.variables = _check_variables(variables)
        gens = []
        for g in generators:
            if isinstance(g, str):
                g = Poly.parse(g, self.variables)
            elif isinstance(g, RatFn):
                g = g.as_poly()
            elif not isinstance(g, Poly):
                g = Poly.constant(self.variables, g)
            if g.variables != self.variables:
                g = g.align(self.variables)
            if g:
                gens.append(g)
        self.generators = tuple(gens)
        self._cache = {}
        self._lock = threading.Lock()

    @classmethod
    def parse(cls, variables, texts):
        return cls(variables, [Poly.parse(t, variables) for t in texts])

    def ring(self, order=GREVLEX):
        return poly_ring(self.variables, order)

    def groebner(self, order=GREVLEX, budget=None):
        """Reduced Groebner basis under ``order`` as a tuple of Polys."""
        cached = self._cache.get(order)
        if cached is not None:
            return cached
        ring = poly_ring(self.variables, order)
        elems = [g.in_ring(ring) for g in self.generators]
        _d("groebner", order, "on", len(elems), "generators over", self.variables)
        reduced = _groebner_elements(elems, ring, budget)
        basis = tuple(Poly(self.variables, f) for f, _ in reduced)
        with self._lock:
            basis = self._cache.setdefault(order, basis)
        return basis

    def _store(self, order, basis):
        with self._lock:
            self._cache.setdefault(order, tuple(basis))

    def certify(self, order=GREVLEX, budget=None):
        """Return ``[(basis element, cofactors)]`` with basis = sum(cof_i * gen_i)."""
        ring = poly_ring(self.variables, order)
        elems = [g.in_ring(ring) for g in self.generators]
        if not elems:
            return []
        reduced = _Engine(ring, budget, track=True).run(elems)
        out = []
        for f, cof in reduced:
            out.append((Poly(self.variables, f), [Poly(self.variables, c) for c in cof]))
        return out

    def normal_form(self, p, order=GREVLEX):
        if isinstance(p, str):
            p = Poly.parse(p, self.variables)
        p = p.align(self.variables)
        basis = self.groebner(order)
        ring = poly_ring(self.variables, order)
        if not basis:
            return p
        r = p.in_ring(ring).rem([b.in_ring(ring) for b in basis])
        return Poly(self.variables, r)

    def contains(self, p):
        return self.normal_form(p).is_zero()

    def is_unit(self):
        basis = self.groebner()
        return len(basis) == 1 and basis[0].is_constant()

    def is_zero(self):
        return not self.generators

    def dimension(self):
        return ideal_dimension(self)

    def __add__(self, other):
        if isinstance(other, Ideal):
            if other.variables != self.variables:
                raise errors.InvalidArgument("cross-ambient ideal sum; align first")
            return Ideal(self.variables, self.generators + other.generators)
        return Ideal(self.variables, self.generators + tuple(other))

    def align(self, variables):
        return Ideal(variables, [g.align(variables) for g in self.generators])

    def gens_text(self):
        return [str(g) for g in self.generators]

    def __eq__(self, other):
        if not isinstance(other, Ideal) or other.variables != self.variables:
            return NotImplemented
        return self.groebner() == other.groebner()

    def __hash__(self):
        return hash((self.variables, self.groebner()))

    def __repr__(self):
        return "Ideal({}, {})".format(list(self.variables), self.gens_text())


def groebner(ideal, order=GREVLEX, budget=None):
    """Reduced Groebner basis of ``ideal`` under ``order``."""
    return list(ideal.groebner(order, budget))


def eliminate(ideal, drop, budget=None):
    """Return ``ideal`` intersected with the ring of the remaining variables."""
    requested = _as_tuple(drop)
    missing = [v for v in requested if v not in ideal.variables]
    if missing:
        raise errors.InvalidArgument("cannot eliminate unknown variables {}".format(missing))
    drop = [v for v in ideal.variables if v in requested]
    remaining = tuple(v for v in ideal.variables if v not in drop)
    if not remaining:
        raise errors.InvalidArgument("elimination must keep at least one variable")
    if not drop:
        return Ideal(remaining, ideal.generators)
    order = block_order(len(drop))
    reordered = tuple(drop) + remaining
    ring = poly_ring(reordered, order)
    elems = [g.align(reordered).in_ring(ring) for g in ideal.generators]
    _log("eliminate {} from {} generators over {}".format(drop, len(elems), len(reordered)))
    reduced = _groebner_elements(elems, ring, budget)
    k = len(drop)
    kept = []
    for f, _ in reduced:
        if all(not any(expv[:k]) for expv in f):
            kept.append(Poly.from_terms(remaining, {expv[k:]: c for expv, c in f.iterterms()}))
    result = Ideal(remaining, kept)
    result._store(GREVLEX, sorted(kept, key=lambda p: GREVLEX(p.leading_monomial()), reverse=True))
    return result


def _as_tuple(values):
    if isinstance(values, str):
        return (values,)
    return tuple(values)


def maximal_independent_set(ideal):
    """A largest variable set independent modulo the leading-term ideal.

    Returns None for the unit ideal.
    """
    basis = ideal.groebner()
    if len(basis) == 1 and basis[0].is_constant():
        return None
    supports = []
    for b in basis:
        lm = b.leading_monomial()
        supports.append(frozenset(i for i, e in enumerate(lm) if e))
    n = len(ideal.variables)
    for size in range(n, -1, -1):
        for subset in itertools.combinations(range(n), size):
            chosen = set(subset)
            if all(not s <= chosen for s in supports):
                return tuple(ideal.variables[i] for i in subset)
    return ()


def ideal_dimension(ideal):
    """Krull dimension of V(ideal); -1 for the unit ideal."""
    independent = maximal_independent_set(ideal)
    if independent is None:
        return -1
    return len(independent)


def _rabinowitsch(ideal, p):
    t = fresh_variable(ideal.variables)
    variables = (t,) + ideal.variables
    tp = Poly.gen(variables, t) * p.align(variables)
    return t, Ideal(variables, [g.align(variables) for g in ideal.generators] + [1 - tp])


def saturate(ideal, p, budget=None):
    """Return ``ideal : p^infinity`` by adjoining ``1 - t*p`` and eliminating t."""
    if isinstance(p, str):
        p = Poly.parse(p, ideal.variables)
    if p.is_zero():
        raise errors.InvalidArgument("cannot saturate by the zero polynomial")
    t, extended = _rabinowitsch(ideal, p)
    sat = eliminate(extended, [t], budget)
    return sat.align(ideal.variables) if sat.variables != ideal.variables else sat


def radical_membership(p, ideal, budget=None):
    """True iff ``p`` vanishes on V(ideal), decided by ``1 in I + (1 - t*p)``."""
    if isinstance(p, str):
        p = Poly.parse(p, ideal.variables)
    p = p.align(ideal.variables)
    if p.is_zero() or ideal.contains(p):
        return True
    _, extended = _rabinowitsch(ideal, p)
    basis = extended.groebner(GREVLEX, budget)
    return len(basis) == 1 and basis[0].is_constant()


def same_radical(a, b, budget=None):
    """True iff the two ideals define the same variety."""
    return all(radical_membership(g, b, budget) for g in a.generators) and all(
        radical_membership(g, a, budget) for g in b.generators
    )


def resultant(p, q, v):
    """Sylvester resultant of ``p`` and ``q`` with respect to ``v``."""
    if p.variables != q.variables:
        raise errors.InvalidArgument("resultant operands must share the ambient")
    if p.degree(v) < 1 or q.degree(v) < 1:
        raise errors.InvalidArgument("resultant needs positive degree in {}".format(v))
    variables = p.variables
    others = tuple(u for u in variables if u != v)
    reordered = (v,) + others
    ring = poly_ring(reordered, LEX)
    res = p.align(reordered).in_ring(ring).resultant(q.align(reordered).in_ring(ring))
    if not others:
        return Poly.constant(variables, res)
    terms = {}
    pos = {u: i for i, u in enumerate(others)}
    for expv, coeff in res.iterterms():
        terms[tuple(expv[pos[u]] if u != v else 0 for u in variables)] = coeff
    return Poly.from_terms(variables, terms)


# ---------------------------------------------------------------------------
# Matrices over the function field


class FieldMatrix:
    """Rectangular matrix of RatFn entries sharing one variable list."""

    def __init__(self, variables, rows):
        self.variables = _check_variables(variables)
        rows = [list(r) for r in rows]
        if rows and any(len(r) != len(rows[0]) for r in rows):
            raise errors.InvalidArgument("matrix rows have different lengths")
        self.rows = [[RatFn.lift(e, self.variables) for e in r] for r in rows]

    @classmethod
    def jacobian(cls, polys, variables=None):
        """Jacobian of ``polys`` with respect to ``variables`` (default: ambient)."""
        polys = list(polys)
        if not polys:
            raise errors.InvalidArgument("jacobian of an empty list")
        ambient = polys[0].variables
        variables = ambient if variables is None else tuple(variables)
        return cls(ambient, [[p.diff(v) for v in variables] for p in polys])

    @property
    def shape(self):
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    def __getitem__(self, key):
        i, j = key
        return self.rows[i][j]

    def stack(self, other):
        if other.variables != self.variables:
            raise errors.InvalidArgument("cannot stack matrices over different ambients")
        return FieldMatrix(self.variables, self.rows + other.rows)

    def submatrix(self, rows, cols):
        return FieldMatrix(self.variables, [[self.rows[i][j] for j in cols] for i in rows])

    def to_domain_matrix(self):
        field = frac_field(self.variables)
        m, n = self.shape
        return DomainMatrix([[e.frac for e in r] for r in self.rows], (m, n), field.to_domain())

    def evaluate(self, point):
        return [[e.evaluate(point) for e in r] for r in self.rows]

    def apply(self, vector):
        """Matrix-vector product with RatFn/Poly/scalar entries."""
        out = []
        for r in self.rows:
            total = RatFn(Poly(self.variables))
            for e, v in zip(r, vector):
                total = total + e * v
            out.append(total)
        return out

    def __str__(self):
        return "\n".join("[" + ", ".join(str(e) for e in r) + "]" for r in self.rows)


def _numeric_rank(values, tol=None):
    m = len(values)
    n = len(values[0]) if m else 0
    if not m or not n:
        return 0
    a = mpmath.matrix(m, n)
    for i in range(m):
        for j in range(n):
            a[i, j] = mpmath.mpmathify(values[i][j])
    sv = mpmath.svd_c(a, compute_uv=False)
    svals = [abs(sv[k]) for k in range(min(m, n))]
    top = max(svals) if svals else 0
    if tol is None:
        tol = mpmath.mpf(2) ** (-(mpmath.mp.prec // 2))
    return sum(1 for s in svals if s > tol * max(1, top))


def matrix_rank(matrix, at=None, ideal=None, tol=None):
    """Rank of ``matrix``.

    Without ``at``: the generic rank over the fraction field of the
    coordinate ring of ``ideal`` (over the rational-function field when no
    ideal is given). With ``at``: the exact or numeric rank at that point.
    """
    m, n = matrix.shape
    if not m or not n:
        return 0
    if at is not None:
        values = matrix.evaluate(at)
        flat = [v for r in values for v in r]
        if all(is_exact(v) for v in flat):
            dm = DomainMatrix([[rat(v) for v in r] for r in values], (m, n), QQ)
            return dm.rank()
        return _numeric_rank(values, tol)
    if ideal is not None and not ideal.is_zero():
        rows, pivots = _echelon_modulo(matrix, ideal)
        return len(pivots)
    return matrix.to_domain_matrix().rank()


def minors(matrix, size):
    """All ``size`` x ``size`` minors in (row-set, col-set) lexicographic order."""
    m, n = matrix.shape
    if not isinstance(size, int) or size < 1 or size > min(m, n):
        raise errors.InvalidArgument("minor size {} out of range for {}x{}".format(size, m, n))
    out = []
    for rows in itertools.combinations(range(m), size):
        for cols in itertools.combinations(range(n), size):
            det = matrix.submatrix(rows, cols).to_domain_matrix().det()
            out.append(RatFn.from_frac(matrix.variables, det))
    return out


# Linear algebra over Frac(QQ[x]/I) for a prime ideal I: entries are kept as
# normal forms modulo a grevlex Groebner basis and pivots are tested for
# membership in I.


def _row_elements(row, ring):
    dens = [e.frac.denom for e in row]
    common = reduce(lambda a, b: a.lcm(b), dens, ring.one)
    out = []
    for e in row:
        scale = common.exquo(e.frac.denom)
        out.append((e.frac.numer * scale).set_ring(ring))
    return out


def _echelon_modulo(matrix, ideal):
    ring = poly_ring(matrix.variables)
    if ideal is not None and ideal.variables != matrix.variables:
        raise errors.InvalidArgument("matrix and ideal ambients differ")
    if ideal is not None and ideal.is_unit():
        raise errors.InvalidArgument("linear algebra modulo the unit ideal")
    basis = [b.in_ring(ring) for b in ideal.groebner()] if ideal is not None else []

    def nf(p):
        return p.rem(basis) if basis and p else p

    rows = [[nf(e) for e in _row_elements(r, ring)] for r in matrix.rows]
    m, n = len(rows), len(rows[0]) if rows else 0
    pivots = []
    r = 0
    for col in range(n):
        found = next((i for i in range(r, m) if rows[i][col]), None)
        if found is None:
            continue
        rows[r], rows[found] = rows[found], rows[r]
        piv = rows[r][col]
        for i in range(m):
            if i == r or not rows[i][col]:
                continue
            f = rows[i][col]
            new = [nf(piv * a - f * b) for a, b in zip(rows[i], rows[r])]
            nonzero = [e for e in new if e]
            if nonzero:
                g = reduce(lambda a, b: a.gcd(b), nonzero)
                if g != ring.one:
                    new = [nf(e.exquo(g)) if e else e for e in new]
            rows[i] = new
        pivots.append((r, col))
        r += 1
        if r == m:
            break
    return rows, pivots


def kernel_modulo(matrix, ideal=None):
    """Basis of the right kernel over Frac(QQ[x]/ideal), as polynomial vectors.

    ``ideal`` must be prime; ``None`` means the zero ideal.
    """
    variables = matrix.variables
    ring = poly_ring(variables)
    m, n = matrix.shape
    if not m:
        return [
            [Poly(variables, ring.one if i == j else ring.zero) for i in range(n)]
            for j in range(n)
        ]
    rows, pivots = _echelon_modulo(matrix, ideal)
    pivot_cols = {c: r for r, c in pivots}
    basis = [b.in_ring(ring) for b in ideal.groebner()] if ideal is not None else []
    vectors = []
    for free in range(n):
        if free in pivot_cols:
            continue
        involved = [(r, c) for r, c in pivots if rows[r][free]]
        common = reduce(lambda a, b: a.lcm(b), [rows[r][c] for r, c in involved], ring.one)
        vec = [ring.zero] * n
        vec[free] = common
        for r, c in involved:
            vec[c] = -rows[r][free] * common.exquo(rows[r][c])
        if basis:
            vec = [e.rem(basis) if e else e for e in vec]
        content = reduce(lambda a, b: a.gcd(b), [e for e in vec if e])
        if content != ring.one:
            vec = [e.exquo(content) for e in vec]
        vectors.append([Poly(variables, e) for e in vec])
    return vectors
