"""Derivations of function fields K = Frac(QQ[x]/I) for a prime ideal I.

A derivation is stored by its images on the ambient variables. It is
well defined on K exactly when the generator Jacobian annihilates the
image vector modulo I, so Der(K/QQ) is the kernel of that Jacobian over
K and its dimension equals the transcendence degree (dim I).

Jet ambients use the names of modular_j: y<i>, dy<i>, ddy<i> and
optionally x<i>. The third derivative is never a variable; wherever it
is needed it is replaced by h(y, dy, ddy), the value solving the j ODE.
"""

import hashlib
import itertools
from dataclasses import dataclass, field

import errors
from modular_j import full_variables, h_ratfn, jet_names, x_name
from polycore import (
    FieldMatrix,
    Ideal,
    Poly,
    RatFn,
    ideal_dimension,
    kernel_modulo,
    matrix_rank,
    minors,
    radical_membership,
)
from qseries_oracle import numeric_vanish
from special_geometry import (
    FREE_N_MAX,
    JSpecialSpec,
    coordinate_count,
    j_block_decomposition,
    lowest_level_edges,
    modular_relations,
)

try:
    import eventlog
except Exception:
    eventlog = None


DEBUG_DERIVATIONS = False


def _d(*args):
    if DEBUG_DERIVATIONS:
        print("[derivation_lab]", *args)


def _log(message):
    if eventlog is not None:
        try:
            eventlog.log_event(message)
        except Exception:
            pass


def ideal_digest(ideal):
    """Short stable digest of the reduced grevlex basis."""
    text = "|".join(ideal.variables) + "#" + "\n".join(str(g) for g in ideal.groebner())
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def reduce_mod(value, ideal):
    """Numerator of ``value`` reduced modulo ``ideal`` (denominator kept)."""
    value = RatFn.lift(value, ideal.variables)
    if ideal.is_zero():
        return value
    return RatFn(ideal.normal_form(value.num), value.den)


def vanishes_mod(value, ideal):
    value = RatFn.lift(value, ideal.variables)
    if ideal.is_zero():
        return value.is_zero()
    return ideal.normal_form(value.num).is_zero()


# ---------------------------------------------------------------------------
# Vectors and spaces


@dataclass(frozen=True)
class DerivationVector:
    variables: tuple
    images: tuple

    def __post_init__(self):
        if len(self.images) != len(self.variables):
            raise errors.InvalidArgument(
                "{} images for {} variables".format(len(self.images), len(self.variables))
            )
        object.__setattr__(
            self, "images", tuple(RatFn.lift(e, self.variables) for e in self.images)
        )

    @classmethod
    def coordinate(cls, variables, name):
        """The partial derivative with respect to ``name``."""
        variables = tuple(variables)
        return cls(variables, tuple(1 if v == name else 0 for v in variables))

    def image(self, name):
        return self.images[self.variables.index(name)]

    def apply(self, value):
        """D(value) by the chain rule through the coordinate partials."""
        value = RatFn.lift(value, self.variables)
        total = RatFn.lift(0, self.variables)
        for v, e in zip(self.variables, self.images):
            if e:
                total = total + e * value.diff(v)
        return total

    def reduced(self, ideal):
        return DerivationVector(self.variables, tuple(reduce_mod(e, ideal) for e in self.images))

    def is_zero_mod(self, ideal):
        return all(vanishes_mod(e, ideal) for e in self.images)

    def annihilates(self, ideal):
        """True if every generator of ``ideal`` is sent into ``ideal``."""
        return all(vanishes_mod(self.apply(g), ideal) for g in ideal.generators)

    def to_strings(self):
        return [str(e) for e in self.images]


@dataclass
class DerivationSpace:
    ideal: Ideal
    basis: list = field(default_factory=list)

    @property
    def variables(self):
        return self.ideal.variables

    def dimension(self):
        return len(self.basis)

    def to_report(self):
        return {
            "variables": list(self.variables),
            "ideal": self.ideal.gens_text(),
            "ideal_digest": ideal_digest(self.ideal),
            "dim": self.dimension(),
            "basis": [d.to_strings() for d in self.basis],
        }


def _combine(basis, coefficients, ideal):
    """Sum of coefficient_k * basis_k, reduced modulo ``ideal``."""
    variables = ideal.variables
    images = [RatFn.lift(0, variables) for _ in variables]
    for vector, c in zip(basis, coefficients):
        if not c:
            continue
        images = [acc + e * c for acc, e in zip(images, vector.images)]
    return DerivationVector(variables, tuple(reduce_mod(e, ideal) for e in images))


def derivation_space(ideal):
    """Basis of Der(K/QQ) for K the function field of the prime ``ideal``."""
    variables = ideal.variables
    if ideal.is_zero():
        basis = [DerivationVector.coordinate(variables, v) for v in variables]
        return DerivationSpace(ideal, basis)
    if ideal.is_unit():
        raise errors.InvalidArgument("the unit ideal has no function field")
    jac = FieldMatrix.jacobian(ideal.generators)
    kernel = kernel_modulo(jac, ideal)
    basis = [DerivationVector(variables, tuple(vec)) for vec in kernel]
    dim = ideal_dimension(ideal)
    if len(basis) != dim:
        raise errors.NonRadicalOrSingular(
            "Jacobian corank {} differs from dimension {}".format(len(basis), dim),
            corank=len(basis),
            dimension=dim,
        )
    _log("derivation space over {} generators: dim {}".format(len(ideal.generators), dim))
    return DerivationSpace(ideal, basis)


# ---------------------------------------------------------------------------
# Jet-compatible derivations


def jet_coordinates(variables):
    """Indices i for which y<i>, dy<i> and ddy<i> are all ambient variables."""
    out = []
    i = 1
    while True:
        names = jet_names(i)[:3]
        if not all(v in variables for v in names):
            break
        out.append(i)
        i += 1
    if not out:
        raise errors.InvalidArgument("ambient {} carries no jet coordinates".format(variables))
    return out


def _third_derivative(variables, i, ideal):
    y, dy, ddy = jet_names(i)[:3]
    for value in (Poly.gen(variables, dy), Poly.gen(variables, y), Poly.gen(variables, y) - 1728):
        if vanishes_mod(value, ideal):
            raise errors.DegenerateJetLocus(
                "{} vanishes on the variety".format(value),
                coordinate=i,
            )
    return h_ratfn(variables, y, dy, ddy)


def jet_constraints(space):
    """Rows (D(y) ddy - D(dy) dy, D(dy) h - D(ddy) ddy) per coordinate, one column per basis vector."""
    variables = space.variables
    rows = []
    for i in jet_coordinates(variables):
        y, dy, ddy = jet_names(i)[:3]
        h = _third_derivative(variables, i, space.ideal)
        ddy_p = Poly.gen(variables, ddy)
        dy_p = Poly.gen(variables, dy)
        first, second = [], []
        for d in space.basis:
            first.append(d.image(y) * ddy_p - d.image(dy) * dy_p)
            second.append(d.image(dy) * h - d.image(ddy) * ddy_p)
        rows.extend([first, second])
    return rows


def lambda_subspace(space):
    """Derivations D with D(y)/y' = D(y')/y'' = D(y'')/y''' for every coordinate."""
    ideal = space.ideal
    variables = space.variables
    if not space.basis:
        return DerivationSpace(ideal, [])
    rows = jet_constraints(space)
    matrix = FieldMatrix(variables, rows)
    kernel = kernel_modulo(matrix, None if ideal.is_zero() else ideal)
    basis = [_combine(space.basis, vec, ideal) for vec in kernel]
    _d("lambda subspace", len(basis), "of", len(space.basis))
    _log("jet-compatible derivations: {} of {}".format(len(basis), len(space.basis)))
    return DerivationSpace(ideal, basis)


def satisfies_jet_constraints(vector, ideal):
    variables = ideal.variables
    for i in jet_coordinates(variables):
        y, dy, ddy = jet_names(i)[:3]
        h = _third_derivative(variables, i, ideal)
        ddy_p = Poly.gen(variables, ddy)
        dy_p = Poly.gen(variables, dy)
        if not vanishes_mod(vector.image(y) * ddy_p - vector.image(dy) * dy_p, ideal):
            return False
        if not vanishes_mod(vector.image(dy) * h - vector.image(ddy) * ddy_p, ideal):
            return False
    return True


def moves_every_coordinate(space):
    """True if some D in the span has D(y_i) nonzero for every coordinate i.

    Over an infinite field this holds iff each y_i is moved by some basis
    vector.
    """
    ideal = space.ideal
    for i in jet_coordinates(space.variables):
        y = jet_names(i)[0]
        if all(vanishes_mod(d.image(y), ideal) for d in space.basis):
            return False
    return True


@dataclass
class LambdaBound:
    dim_der: int
    dim_lambda: int
    dim_t: int
    dim_special: int
    moves_all: bool

    @property
    def bound(self):
        return self.dim_der - (self.dim_t - self.dim_special)

    @property
    def holds(self):
        return self.dim_lambda >= self.bound

    @property
    def quotient_dim(self):
        return self.dim_der - self.dim_lambda

    def to_report(self):
        return {
            "dim_der": self.dim_der,
            "dim_lambda": self.dim_lambda,
            "dim_T": self.dim_t,
            "dim_special": self.dim_special,
            "bound": self.bound,
            "holds": self.holds,
            "quotient_dim": self.quotient_dim,
            "moves_every_coordinate": self.moves_all,
        }


def lambda_bound_report(ideal, variety):
    """Check dim Lambda >= dim W - (dim T - dim T~) for W inside a D-special T."""
    space = derivation_space(ideal)
    lam = lambda_subspace(space)
    report = LambdaBound(
        dim_der=space.dimension(),
        dim_lambda=lam.dimension(),
        dim_t=variety.dimension(),
        dim_special=variety.special_dimension(),
        moves_all=moves_every_coordinate(lam) if lam.basis else False,
    )
    _log(
        "lambda bound: dim {} against bound {} ({})".format(
            report.dim_lambda, report.bound, "holds" if report.holds else "FAILS"
        )
    )
    return report


# ---------------------------------------------------------------------------
# Lie brackets


def lie_bracket(first, second):
    """[D1, D2](x_j) = D1(D2 x_j) - D2(D1 x_j)."""
    if first.variables != second.variables:
        raise errors.InvalidArgument("derivations over different ambients")
    images = tuple(
        first.apply(w) - second.apply(v) for v, w in zip(first.images, second.images)
    )
    return DerivationVector(first.variables, images)


def in_span(vector, space):
    """True if ``vector`` is a K-combination of the basis of ``space``."""
    ideal = space.ideal
    if vector.is_zero_mod(ideal):
        return True
    if not space.basis:
        return False
    rows = [list(d.images) for d in space.basis]
    base = matrix_rank(FieldMatrix(space.variables, rows), ideal=ideal)
    extended = matrix_rank(FieldMatrix(space.variables, rows + [list(vector.images)]), ideal=ideal)
    return extended == base


def is_lie_closed(space):
    for first, second in itertools.combinations(space.basis, 2):
        bracket = lie_bracket(first, second).reduced(space.ideal)
        if not in_span(bracket, space):
            _d("bracket outside the span:", bracket.to_strings())
            return False
    return True


# ---------------------------------------------------------------------------
# The E(z, J) Jacobian


def ezj_jacobian(polys, variables=None):
    """Rows d p/d x_i + y'_i dp/dy_i + y''_i dp/dy'_i + h_i dp/dy''_i, one column per coordinate."""
    polys = list(polys)
    if not polys:
        raise errors.InvalidArgument("E(z, J) Jacobian of an empty list")
    variables = polys[0].variables if variables is None else tuple(variables)
    polys = [p.align(variables) for p in polys]
    coords = jet_coordinates(variables)
    columns = []
    for i in coords:
        y, dy, ddy = jet_names(i)[:3]
        h = h_ratfn(variables, y, dy, ddy)
        columns.append((x_name(i), y, dy, ddy, h))
    rows = []
    for p in polys:
        row = []
        for x, y, dy, ddy, h in columns:
            entry = RatFn.lift(p.diff_or_zero(x), variables)
            entry = entry + Poly.gen(variables, dy) * p.diff_or_zero(y)
            entry = entry + Poly.gen(variables, ddy) * p.diff_or_zero(dy)
            entry = entry + h * p.diff_or_zero(ddy)
            row.append(entry)
        rows.append(row)
    return FieldMatrix(variables, rows)


# ---------------------------------------------------------------------------
# Ax-Schanuel inequality


@dataclass
class AxSchanuelCheck:
    dim_v: int
    blocks: int
    rank: int
    max_rank: int
    relations: list = field(default_factory=list)

    @property
    def bound(self):
        return 3 * self.blocks + self.rank

    @property
    def holds(self):
        return self.dim_v >= self.bound

    @property
    def deficit(self):
        return max(0, self.bound - self.dim_v)

    def to_report(self):
        return {
            "dim_V": self.dim_v,
            "blocks": self.blocks,
            "rank": self.rank,
            "max_rank": self.max_rank,
            "bound": self.bound,
            "holds": self.holds,
            "deficit": self.deficit,
            "relations": [list(e) for e in self.relations],
        }


def ax_schanuel_check(ideal, rank=1, n_max=None, directory=None):
    """Test dim V >= 3 * (number of j-blocks) + rank on V in the (x, y, dy, ddy) ambient.

    A point of E(z, J) generic in V whose z-Jacobian has rank ``rank``
    needs this inequality; when it fails no such point exists. Modular
    relations on V are read off by radical membership, and each j-block
    counts once. ``max_rank`` is the largest z-Jacobian rank the E(z, J)
    Jacobian of V allows at its generic point (the generators should
    generate a prime ideal).
    """
    n = coordinate_count(ideal)
    ambient = full_variables(n)
    if set(ideal.variables) != set(ambient):
        raise errors.InvalidArgument(
            "the Ax-Schanuel check needs the (x, y, dy, ddy) ambient on {} coordinates".format(n)
        )
    if isinstance(rank, bool) or not isinstance(rank, int) or not 1 <= rank <= n:
        raise errors.InvalidArgument("z-Jacobian rank must be in 1..{}, got {!r}".format(n, rank))
    if ideal.variables != ambient:
        ideal = ideal.align(ambient)
    if ideal.is_unit():
        raise errors.InvalidInput("V is empty")
    relations = modular_relations(ideal, FREE_N_MAX if n_max is None else n_max, directory)
    blocks = len(j_block_decomposition(JSpecialSpec(n, lowest_level_edges(relations))).blocks)
    if ideal.generators:
        max_rank = n - matrix_rank(ezj_jacobian(ideal.generators, ambient), ideal=ideal)
    else:
        max_rank = n
    check = AxSchanuelCheck(ideal_dimension(ideal), blocks, rank, max_rank, relations)
    _log(
        "Ax-Schanuel: dim {} against 3*{} + {} ({})".format(
            check.dim_v, blocks, rank, "holds" if check.holds else "violated"
        )
    )
    return check


# ---------------------------------------------------------------------------
# Minor stabilization


def exact_point_oracle(point):
    """Vanishing predicate at a rational point; poles raise PoleAtPoint."""

    def vanishes(value):
        return value.evaluate(point) == 0

    return vanishes


def numeric_point_oracle(point, tol=1e-10):
    """Vanishing predicate at a numeric point, with term-scaled residuals."""

    def vanishes(value):
        ok, _ = numeric_vanish(value, point, tol, scale=True)
        return ok

    return vanishes


@dataclass
class StabilizeResult:
    chain: list
    stable: Ideal
    adjoined: list = field(default_factory=list)

    @property
    def steps(self):
        return len(self.chain) - 1

    def to_report(self):
        return {
            "steps": self.steps,
            "chain": [
                {"generators": ideal.gens_text(), "dim": ideal_dimension(ideal)} for ideal in self.chain
            ],
            "adjoined": [str(p) for p in self.adjoined],
        }


def _all_minors(matrix):
    m, n = matrix.shape
    out = []
    for size in range(1, min(m, n) + 1):
        out.extend(minors(matrix, size))
    return out


def _select_factor(numerator, current, vanishes):
    """The unique oracle-vanishing irreducible factor not already on the variety."""
    found = []
    for factor, _ in numerator.factor_list():
        if factor.is_constant() or current.contains(factor):
            continue
        if vanishes(factor) and factor not in found:
            found.append(factor)
    if len(found) > 1:
        raise errors.NeedsDecomposition(
            "point lies on {} factor components of {}".format(len(found), numerator),
            factors=[str(f) for f in found],
        )
    return found[0] if found else None


def minor_stabilize(ideal, vanishes, max_steps=None):
    """Refine ``ideal`` until generic minor vanishing matches the point.

    Minors of the E(z, J) Jacobian that are generically nonzero on the
    current variety but vanish at the distinguished point are adjoined,
    one irreducible factor each, and the chain continues from there.
    """
    current = ideal
    chain = [current]
    adjoined = []
    limit = len(ideal.variables) if max_steps is None else max_steps
    dim = ideal_dimension(current)
    while True:
        if not current.generators:
            break
        matrix = ezj_jacobian(current.generators, current.variables)
        new = []
        for minor in _all_minors(matrix):
            if vanishes_mod(minor, current):
                continue
            if not vanishes(minor):
                continue
            factor = _select_factor(minor.num, current, vanishes)
            if factor is not None and factor not in new:
                new.append(factor)
        if not new:
            break
        if len(chain) > limit:
            raise errors.ComputationAborted(
                "minor stabilization exceeded {} steps".format(limit), steps=len(chain) - 1
            )
        refined = current + new
        refined_dim = ideal_dimension(refined)
        if refined_dim >= dim:
            raise errors.NeedsDecomposition(
                "adjoining {} did not lower the dimension {}".format([str(p) for p in new], dim)
            )
        _log("minor stabilization: dim {} -> {}".format(dim, refined_dim))
        adjoined.extend(new)
        current, dim = refined, refined_dim
        chain.append(current)
    return StabilizeResult(chain, current, adjoined)


# ---------------------------------------------------------------------------
# Rank and descent checks


def _require_vanishing(polys, ideal, what):
    for p in polys:
        if not radical_membership(p, ideal):
            raise errors.InvalidInput("{}: {} does not vanish".format(what, p))


def rank_lemma_check(polys, component, q):
    """rank d(p)/dX equals rank d(p, q)/dX at the generic point of ``component``."""
    polys = [p.align(component.variables) for p in polys]
    q = q.align(component.variables)
    _require_vanishing(polys, component, "component is not inside V")
    _require_vanishing([q], component, "q is not in the ideal of the component")
    base = matrix_rank(FieldMatrix.jacobian(polys), ideal=component)
    extended = matrix_rank(FieldMatrix.jacobian(polys + [q]), ideal=component)
    _d("rank lemma", base, extended)
    return base == extended


def _images(values, variables):
    out = []
    for v in values:
        if isinstance(v, str):
            v = RatFn.parse(v, variables)
        out.append(RatFn.lift(v.align(variables) if isinstance(v, (Poly, RatFn)) else v, variables))
    return tuple(out)


def verify_derivation_descends(V, U, W, images):
    """True if the derivation with the given images on V and U restricts to W."""
    variables = W.variables
    for other in (V, U):
        if other.variables != variables:
            raise errors.InvalidInput("V, U and W must share the ambient")
    vector = DerivationVector(variables, _images(images, variables))
    _require_vanishing(V.generators + U.generators, W, "W is not inside V meet U")
    for label, ideal in (("V", V), ("U", U)):
        for e in vector.images:
            if vanishes_mod(RatFn(e.den), ideal):
                raise errors.InvalidInput("an image has a pole along {}".format(label))
        if not vector.annihilates(ideal):
            raise errors.InvalidInput("the images do not define a derivation of {}".format(label))
    for e in vector.images:
        if radical_membership(e.den, W):
            raise errors.PoleOnComponent("image {} has a pole along W".format(e), image=str(e))
    return vector.annihilates(W)
