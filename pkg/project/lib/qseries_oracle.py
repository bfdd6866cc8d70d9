"""Arbitrary-precision evaluation of j and its derivatives from q-expansions.

j is assembled from the Eisenstein series

    E4 = 1 + 240 * sum sigma_3(n) q^n
    E6 = 1 - 504 * sum sigma_5(n) q^n
    j  = 1728 * E4^3 / (E4^3 - E6^2),        q = exp(2*pi*i*tau)

and derivatives come from term-wise differentiation, d/dtau = 2*pi*i*q*d/dq.
The truncation order is picked per |q| so that a certified tail bound stays
below 2^-bits. Everything numeric runs at ``bits`` plus a few guard bits.

The oracle is independent of the symbolic side: modular polynomials are
interpolated from the exact integer q-expansion of j and recognized as
integers, and sampled jets are what the symbolic identities are checked
against.

Sample records (one per line, used by ``jcli oracle sample``):

    tau=<re>+<im>i j=<...> dj=<...> ddj=<...> dddj=<...> bits=<n>
"""

import math
import random
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
from sympy.functions.combinatorial.numbers import divisor_sigma
from sympy.polys.domains import QQ
from sympy.polys.ring_series import rs_mul, rs_pow, rs_series_inversion
from sympy.polys.rings import ring

import errors
import modular_j
from polycore import Poly, RatFn, to_mp

try:
    import eventlog
except Exception:
    eventlog = None


DEBUG_ORACLE = False

GUARD_BITS = 24
MIN_IM_TAU = 0.8
DEFAULT_BITS = 128
INTERPOLATION_BITS = 256
INTEGER_TOLERANCE = 1e-6

# |sigma_5(n)| <= zeta(5) n^5 and three theta-derivatives add n^3.
_COEFF_GROWTH = 504 * 1.04
_GROWTH_POWER = 8


def _d(*args):
    if DEBUG_ORACLE:
        print("[oracle]", *args)


def _log(message):
    if eventlog is not None:
        try:
            eventlog.log_event(message)
        except Exception:
            pass


@dataclass(frozen=True)
class PrecisionCtx:
    """Working precision and domain guard shared by every oracle call."""

    bits: int = DEFAULT_BITS
    min_im: float = MIN_IM_TAU

    def __post_init__(self):
        if not isinstance(self.bits, int) or self.bits < 53:
            raise errors.InvalidArgument("precision must be an int of at least 53 bits")
        if self.min_im < MIN_IM_TAU:
            raise errors.InvalidArgument(
                "domain guard below Im(tau) = {} is not supported".format(MIN_IM_TAU)
            )

    def workprec(self):
        return mpmath.workprec(self.bits + GUARD_BITS)

    def tail_bound(self, q_abs, order):
        """Bound on the dropped terms n > order of any series used for a jet."""
        r = float(q_abs)
        m = order + 1
        ratio = r * ((m + 1) / m) ** _GROWTH_POWER
        if ratio >= 1:
            return math.inf
        return _COEFF_GROWTH * m ** _GROWTH_POWER * r ** m / (1 - ratio)

    def truncation(self, q_abs):
        """Smallest order whose certified tail is below 2^-bits."""
        target = 2.0 ** (-self.bits)
        order = 8
        while self.tail_bound(q_abs, order) >= target:
            order += 1
            if order > 10000:
                raise errors.OutOfDomain("no usable truncation for |q| = {}".format(q_abs))
        return order

    def tolerance(self, fraction=0.5):
        return mpmath.mpf(2) ** (-int(self.bits * fraction))


@dataclass(frozen=True)
class NumericJet:
    """Values of j and its first three tau-derivatives at one point."""

    tau: object
    j: object
    j1: object
    j2: object
    j3: object
    bits: int = DEFAULT_BITS

    def ode_residual(self):
        """|f(j, j', j'', j''')| for the third-order equation satisfied by j."""
        return abs(modular_j.j_ode_f(self.j, self.j1, self.j2, self.j3))

    def as_modular_jet(self):
        return modular_j.Jet(z=self.tau, j=self.j, j1=self.j1, j2=self.j2, j3=self.j3)

    def record(self):
        return "tau={} j={} dj={} ddj={} dddj={} bits={}".format(
            _fmt(self.tau), _fmt(self.j), _fmt(self.j1), _fmt(self.j2), _fmt(self.j3), self.bits
        )


def _fmt(value, digits=30):
    value = mpmath.mpmathify(value)
    re = mpmath.nstr(mpmath.re(value), digits)
    im = mpmath.im(value)
    if im == 0:
        return re
    sign = "-" if im < 0 else "+"
    return "{}{}{}i".format(re, sign, mpmath.nstr(abs(im), digits))


def parse_tau(text):
    """Parse ``i``, ``2i``, ``0.5+1.1i`` or ``1+2j`` into an mpmath complex."""
    if not isinstance(text, str):
        return mpmath.mpmathify(text)
    s = text.strip().replace(" ", "").replace("I", "i").replace("j", "i")
    if s.endswith("i"):
        body = s[:-1]
        split = max(body.rfind("+"), body.rfind("-"))
        if split > 0 and body[split - 1] not in "eE":
            re_part, im_part = body[:split], body[split:]
        else:
            re_part, im_part = "0", body
        if im_part in ("", "+"):
            im_part = "1"
        elif im_part == "-":
            im_part = "-1"
        try:
            return mpmath.mpc(mpmath.mpf(re_part), mpmath.mpf(im_part))
        except (ValueError, TypeError) as exc:
            raise errors.InvalidArgument("cannot parse tau {!r}".format(text)) from exc
    try:
        return mpmath.mpc(mpmath.mpf(s), 0)
    except (ValueError, TypeError) as exc:
        raise errors.InvalidArgument("cannot parse tau {!r}".format(text)) from exc


def _check_domain(tau, ctx):
    if mpmath.im(tau) < ctx.min_im:
        raise errors.OutOfDomain(
            "Im(tau) = {} is below the guard {}".format(mpmath.nstr(mpmath.im(tau), 8), ctx.min_im),
            tau=str(tau),
        )


@lru_cache(maxsize=None)
def _eisenstein_coefficients(order):
    e4 = [1] + [240 * int(divisor_sigma(n, 3)) for n in range(1, order + 1)]
    e6 = [1] + [-504 * int(divisor_sigma(n, 5)) for n in range(1, order + 1)]
    return tuple(e4), tuple(e6)


def _theta_sums(coefficients, q):
    """[sum c_n q^n, sum n c_n q^n, sum n^2 c_n q^n, sum n^3 c_n q^n]."""
    sums = [mpmath.mpf(0)] * 4
    qn = mpmath.mpf(1)
    for n, c in enumerate(coefficients):
        if n:
            qn *= q
        term = c * qn
        sums[0] += term
        sums[1] += n * term
        sums[2] += n * n * term
        sums[3] += n * n * n * term
    return sums


def eval_j_jet(tau, ctx=None):
    """Evaluate (j, j', j'', j''') at ``tau``; derivatives are in tau."""
    ctx = ctx or PrecisionCtx()
    with ctx.workprec():
        tau = parse_tau(tau)
        _check_domain(tau, ctx)
        q = mpmath.exp(2j * mpmath.pi * tau)
        order = ctx.truncation(abs(q))
        e4c, e6c = _eisenstein_coefficients(order)
        w = 2j * mpmath.pi
        a = [s * w ** k for k, s in enumerate(_theta_sums(e4c, q))]
        b = [s * w ** k for k, s in enumerate(_theta_sums(e6c, q))]
        # cube of E4 and square of E6 with three derivatives each
        a3 = [
            a[0] ** 3,
            3 * a[0] ** 2 * a[1],
            6 * a[0] * a[1] ** 2 + 3 * a[0] ** 2 * a[2],
            6 * a[1] ** 3 + 18 * a[0] * a[1] * a[2] + 3 * a[0] ** 2 * a[3],
        ]
        b2 = [
            b[0] ** 2,
            2 * b[0] * b[1],
            2 * b[1] ** 2 + 2 * b[0] * b[2],
            6 * b[1] * b[2] + 2 * b[0] * b[3],
        ]
        num = [1728 * v for v in a3]
        den = [x - y for x, y in zip(a3, b2)]
        u0 = num[0] / den[0]
        u1 = (num[1] - u0 * den[1]) / den[0]
        u2 = (num[2] - 2 * u1 * den[1] - u0 * den[2]) / den[0]
        u3 = (num[3] - 3 * u2 * den[1] - 3 * u1 * den[2] - u0 * den[3]) / den[0]
        _d("tau", tau, "order", order)
        jet = NumericJet(tau=tau, j=u0, j1=u1, j2=u2, j3=u3, bits=ctx.bits)
    return jet


def finite_difference_residual(tau, h=1e-8, ctx=None):
    """|central difference of j - j'| at ``tau``; it should scale like h^2."""
    ctx = ctx or PrecisionCtx(bits=256)
    with ctx.workprec():
        tau = parse_tau(tau)
        h = mpmath.mpf(h)
        plus = eval_j_jet(tau + h, ctx).j
        minus = eval_j_jet(tau - h, ctx).j
        exact = eval_j_jet(tau, ctx).j1
        return abs((plus - minus) / (2 * h) - exact)


# ---------------------------------------------------------------------------
# Exact q-expansion of j


_Q_RING, _Q = ring("q", QQ)


@lru_cache(maxsize=None)
def j_q_expansion(terms):
    """Integer coefficients [c(-1), c(0), c(1), ...] of j, ``terms`` entries."""
    prec = terms + 1
    e4c, e6c = _eisenstein_coefficients(prec)
    e4 = _Q_RING.from_dict({(n,): QQ(c) for n, c in enumerate(e4c)})
    e6 = _Q_RING.from_dict({(n,): QQ(c) for n, c in enumerate(e6c)})
    e4_cubed = rs_pow(e4, 3, _Q, prec + 1)
    delta = e4_cubed - rs_mul(e6, e6, _Q, prec + 1)
    shifted = _Q_RING.from_dict({(n - 1,): c for (n,), c in delta.items() if n >= 1})
    q_times_j = rs_mul(1728 * e4_cubed, rs_series_inversion(shifted, _Q, prec), _Q, prec)
    out = []
    for n in range(terms):
        c = q_times_j.get((n,), QQ.zero)
        if c.denominator != 1:
            raise errors.PrecisionInsufficient("non-integral q-coefficient of j at q^{}".format(n - 1))
        out.append(int(c.numerator))
    return tuple(out)


@lru_cache(maxsize=None)
def _j_power_expansion(k, terms):
    """Coefficients of (q*j)^k, i.e. of j^k shifted by q^k."""
    base = j_q_expansion(terms)
    series = _Q_RING.from_dict({(n,): QQ(c) for n, c in enumerate(base)})
    power = rs_pow(series, k, _Q, terms) if k else _Q_RING.one
    return tuple(int(power.get((n,), QQ.zero).numerator) for n in range(terms))


# ---------------------------------------------------------------------------
# Modular polynomial interpolation


def isogeny_cosets(level):
    """Representatives (a, b, d) of tau -> (a*tau + b)/d with a*d = level."""
    reps = []
    for a in range(1, level + 1):
        if level % a:
            continue
        d = level // a
        for b in range(d):
            if math.gcd(math.gcd(a, b), d) == 1:
                reps.append((a, b, d))
    return reps


def _series_mul(x, y, top):
    out = {}
    for ex, cx in x.items():
        for ey, cy in y.items():
            e = ex + ey
            if e <= top:
                out[e] = out.get(e, 0) + cx * cy
    return out


def interpolate_modular_polynomial(level, ctx=None):
    """Recover the level-``level`` modular polynomial from q-expansions.

    Multiplies out prod (X - j(rep(tau))) over the isogeny cosets with
    s = q^(1/level), keeps the powers of q, and peels each X-coefficient
    into an integer polynomial in Y = j(tau).
    """
    if not isinstance(level, int) or level < 1:
        raise errors.InvalidArgument("level must be a positive int")
    if level == 1:
        return modular_j.ModularPoly(1, Poly.parse("X - Y", modular_j.MODPOLY_VARS))
    ctx = ctx or PrecisionCtx(bits=INTERPOLATION_BITS)
    reps = isogeny_cosets(level)
    psi = len(reps)
    top = psi * level * level
    terms = top + 2
    coeffs = j_q_expansion(terms)
    _log("interpolate level {} over {} cosets at {} bits".format(level, psi, ctx.bits))
    with ctx.workprec():
        product = [{0: mpmath.mpc(1)}]
        for a, b, d in reps:
            j_rep = {}
            for idx, c in enumerate(coeffs):
                n = idx - 1
                e = a * a * n
                if e > top:
                    break
                if c:
                    j_rep[e] = c * mpmath.expjpi(mpmath.mpf(2 * b * n) / d)
            shifted = [{}] + product
            scaled = [_series_mul(j_rep, s, top) for s in product] + [{}]
            product = []
            for hi, lo in zip(shifted, scaled):
                merged = dict(hi)
                for e, v in lo.items():
                    merged[e] = merged.get(e, 0) - v
                product.append(merged)
        terms_xy = {}
        for kx, series in enumerate(product):
            for ky, value in _peel(series, level, psi, ctx).items():
                if value:
                    terms_xy[(kx, ky)] = value
    poly = Poly.from_terms(modular_j.MODPOLY_VARS, terms_xy)
    return modular_j.ModularPoly(level, poly)


def _recognize(value, what):
    re = mpmath.re(value)
    im = mpmath.im(value)
    nearest = int(mpmath.nint(re))
    error = max(abs(re - nearest), abs(im))
    if error > INTEGER_TOLERANCE:
        raise errors.PrecisionInsufficient(
            "{} is {} away from an integer".format(what, mpmath.nstr(error, 5)),
            error=float(error),
        )
    return nearest


def _peel(series, level, psi, ctx):
    """Rewrite a q-series (keyed by powers of s = q^(1/level)) as a polynomial in j."""
    valid = {e: v for e, v in series.items() if e <= level}
    scale = max([abs(v) for v in valid.values()] + [mpmath.mpf(1)])
    noise = scale * ctx.tolerance(0.75)
    q_series = {}
    for e, v in valid.items():
        if e % level:
            if abs(v) > max(noise, INTEGER_TOLERANCE):
                raise errors.PrecisionInsufficient(
                    "fractional power s^{} survives with size {}".format(e, mpmath.nstr(abs(v), 5))
                )
            continue
        q_series[e // level] = v
    out = {}
    for k in range(psi, 0, -1):
        lead = q_series.get(-k, 0)
        coeff = _recognize(lead, "coefficient of j^{}".format(k))
        if not coeff:
            continue
        out[k] = coeff
        power = _j_power_expansion(k, k + 2)
        for n, c in enumerate(power):
            e = n - k
            if e <= 1:
                q_series[e] = q_series.get(e, 0) - coeff * c
    out[0] = _recognize(q_series.get(0, 0), "constant coefficient")
    leftover = abs(q_series.get(1, 0))
    if leftover > max(noise, INTEGER_TOLERANCE):
        raise errors.PrecisionInsufficient(
            "q^1 remainder {} after peeling".format(mpmath.nstr(leftover, 5))
        )
    return out


# ---------------------------------------------------------------------------
# Sampling and vanishing


@dataclass
class ESample:
    """One numeric point: z values and jets of every coordinate."""

    zs: tuple
    jets: tuple
    bits: int = DEFAULT_BITS
    roots: dict = field(default_factory=dict)

    def point(self):
        """Assignment for the ``x<i>``/``z<i>``/``y<i>``/``dy<i>``/``ddy<i>`` names."""
        out = {}
        for i, (z, jet) in enumerate(zip(self.zs, self.jets), start=1):
            names = modular_j.jet_names(i)
            out["x{}".format(i)] = z
            out["z{}".format(i)] = z
            out[names[0]] = jet.j
            out[names[1]] = jet.j1
            out[names[2]] = jet.j2
            out[names[3]] = jet.j3
        return out


def sample_E_points(geo, tau0, ctx=None, count=1, spread=0.05, seed=0):
    """Sample numeric points of the differential predicate along ``geo``.

    Each block gets its own root value (``tau0`` shifted per block, then
    perturbed per sample); every member z is the composed path matrix
    applied to the root, and its jet comes from ``eval_j_jet``.
    """
    import special_geometry

    ctx = ctx or PrecisionCtx()
    rng = random.Random(seed)
    decomp = special_geometry.geodesic_paths(geo)
    samples = []
    with ctx.workprec():
        base = parse_tau(tau0)
        for s in range(count):
            zs = [None] * geo.n
            roots = {}
            for b, (root, paths) in enumerate(decomp):
                shift = mpmath.mpc(0.13 * b, 0.07 * b)
                if s:
                    shift += mpmath.mpc(rng.uniform(-spread, spread), rng.uniform(-spread, spread))
                z_root = base + shift
                roots[root] = z_root
                for member, matrix in paths.items():
                    zs[member - 1] = matrix.apply(z_root)
            jets = tuple(eval_j_jet(z, ctx) for z in zs)
            samples.append(ESample(zs=tuple(zs), jets=jets, bits=ctx.bits, roots=roots))
    _log("sampled {} point(s) for {} coordinates at tau0={}".format(count, geo.n, _fmt(base, 8)))
    return samples


def _term_magnitude(poly, point):
    absolute = Poly.from_terms(poly.variables, {e: abs(c) for e, c in poly.terms.items()})
    return absolute.evaluate({v: abs(mpmath.mpmathify(point[v])) for v in poly.used_variables()})


def numeric_vanish(p, point, tol=1e-10, scale=False):
    """Return ``(vanishes, residual)`` for ``p`` at a numeric point.

    With ``scale`` the residual is divided by the sum of the absolute term
    values, which keeps the test meaningful for coefficients of size 1e20.
    """
    tol = mpmath.mpf(tol)
    if isinstance(p, RatFn):
        den = p.den.evaluate(point)
        den_abs = abs(mpmath.mpmathify(den))
        if scale:
            size = _term_magnitude(p.den, point)
            den_abs = den_abs / size if size else den_abs
        if den_abs < tol:
            raise errors.PoleProximity(
                "denominator {} is within {} of zero".format(p.den, mpmath.nstr(tol, 3))
            )
        p = p.num
    value = p.evaluate(point)
    residual = abs(to_mp(value))
    if scale and residual:
        size = _term_magnitude(p, point)
        if size:
            residual = residual / size
    return residual < tol, residual
