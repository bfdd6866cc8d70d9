"""Dimension-of-intersection analysis.

For V, T inside S the expected dimension of V meet T is
dim V + dim T - dim S. A larger intersection dimension is an excess and
certifies that some component is atypical; without a component ideal
the verdict is global (the dimension of an intersection is the maximum
over its components).

The explorer enumerates small j-special configurations (levels up to
N_max, matrices from a finite pool), synthesizes each D-special variety
and records every candidate whose meet with V has an excess.
"""

import itertools
from dataclasses import dataclass, field

import mpmath

import errors
from modular_j import GeoMatrix, modular_levels, modular_polynomial
from polycore import (
    FieldMatrix,
    Poly,
    RatFn,
    ideal_dimension,
    is_exact,
    matrix_rank,
    radical_membership,
)
from qseries_oracle import NumericJet, numeric_vanish
from special_geometry import (
    FREE_N_MAX,
    GeodesicSpec,
    JSpecialSpec,
    d_normality,
    synthesize_dspecial,
)

try:
    import eventlog
except Exception:
    eventlog = None


DEBUG_ATYPICAL = False

VERDICT_TYPICAL = "typical"
VERDICT_ATYPICAL = "atypical-witness"
VERDICT_EMPTY = "empty"


def _d(*args):
    if DEBUG_ATYPICAL:
        print("[atypicality]", *args)


def _log(message):
    if eventlog is not None:
        try:
            eventlog.log_event(message)
        except Exception:
            pass


def _describe_verdict(report):
    """Build an event-log sentence for an atypicality verdict."""
    dim_v, dim_t, dim_s, dim_w = report.dims
    if report.verdict == VERDICT_EMPTY:
        return "V and T do not meet"
    expected = dim_v + dim_t - dim_s
    message = "dim(V meet T) = {} against expected {}".format(dim_w, expected)
    if report.verdict == VERDICT_ATYPICAL:
        message += "; excess {} so some component is atypical".format(report.excess)
    return message


@dataclass
class AtypicalityReport:
    dims: tuple
    verdict: str
    excess: int
    component_note: str = "global"
    edges: list = field(default_factory=list)
    candidate: str = ""

    def to_report(self):
        dim_v, dim_t, dim_s, dim_w = self.dims
        return {
            "candidate": self.candidate,
            "dims": {"V": dim_v, "T": dim_t, "S": dim_s, "V_meet_T": dim_w},
            "verdict": self.verdict,
            "excess": self.excess,
            "component_note": self.component_note,
            "edges": [list(e) for e in self.edges],
        }


def _require_contained(inner, outer, what):
    for g in outer.generators:
        if not radical_membership(g, inner):
            raise errors.InvalidInput(
                "{}: generator {} of the ambient does not vanish on it".format(what, g)
            )


def _same_ambient(*ideals):
    variables = ideals[0].variables
    for other in ideals[1:]:
        if other.variables != variables:
            raise errors.InvalidInput(
                "ideals live in different ambients: {} vs {}".format(variables, other.variables)
            )


def atypicality_verdict(V, T, S, component=None):
    """Compare dim(V meet T) with dim V + dim T - dim S."""
    _same_ambient(V, T, S)
    _require_contained(V, S, "V is not inside S")
    _require_contained(T, S, "T is not inside S")
    dim_v, dim_t, dim_s = ideal_dimension(V), ideal_dimension(T), ideal_dimension(S)
    meet = V + T
    note = "global"
    if component is not None:
        _same_ambient(V, component)
        _require_contained(component, meet, "component does not lie in V meet T")
        meet = component
        note = "component-certified"
    dim_w = ideal_dimension(meet)
    if dim_w < 0:
        report = AtypicalityReport((dim_v, dim_t, dim_s, dim_w), VERDICT_EMPTY, 0, note)
    else:
        excess = dim_w - (dim_v + dim_t - dim_s)
        verdict = VERDICT_ATYPICAL if excess > 0 else VERDICT_TYPICAL
        report = AtypicalityReport((dim_v, dim_t, dim_s, dim_w), verdict, excess, note)
    _log(_describe_verdict(report))
    return report


def is_strongly_atypical(W, V, T, S):
    """Atypical at W's dimension and strongly D-normal relative to T's blocks.

    ``T`` and ``S`` are DSpecialVariety values; ``W`` is a component of
    V meet T supplied by the caller.
    """
    if W.variables != V.variables:
        W = W.align(V.variables)
    for g in V.generators + T.ideal.generators:
        if not radical_membership(g, W):
            raise errors.InvalidInput("W does not satisfy the relation {} of V meet T".format(g))
    dim_w = ideal_dimension(W)
    excess = dim_w - (ideal_dimension(V) + T.dimension() - S.dimension())
    if dim_w < 0 or excess <= 0:
        return False
    verdict = d_normality(W, T, mode="strongly-d-normal")
    _d("strong D-normality", verdict.holds, "witness", verdict.witness)
    return verdict.holds


# ---------------------------------------------------------------------------
# Points, smoothness and fibres


def _point_on(V, point, tol):
    for g in V.generators:
        value = g.evaluate(point)
        if is_exact(value):
            if value != 0:
                raise errors.PointNotOnVariety("{} does not vanish at the point".format(g))
        else:
            ok, residual = numeric_vanish(g, point, tol, scale=True)
            if not ok:
                raise errors.PointNotOnVariety(
                    "{} has residual {} at the point".format(g, mpmath.nstr(residual, 5))
                )


def is_smooth_point(V, point, tol=1e-10):
    """Jacobian criterion: rank at the point equals codimension of V.

    The generators should generate the ideal of V; with non-radical
    generators a smooth point can be reported as singular.
    """
    _point_on(V, point, tol)
    codim = len(V.variables) - ideal_dimension(V)
    if not V.generators:
        return codim == 0
    jac = FieldMatrix.jacobian(V.generators)
    values = [point[v] for v in V.variables if v in point]
    rank_tol = None
    if values and not all(is_exact(v) for v in values):
        rank_tol = mpmath.mpf(tol)
    return matrix_rank(jac, at=point, tol=rank_tol) == codim


def fibre_dimension(V, coordinates, point):
    """Dimension of the fibre of V over ``point`` for the projection to ``coordinates``.

    Returns -1 when the point is not in the image.
    """
    for v in coordinates:
        if v not in V.variables:
            raise errors.InvalidArgument("unknown coordinate {!r}".format(v))
        if v not in point:
            raise errors.InvalidArgument("no value for coordinate {!r}".format(v))
    extra = [Poly.gen(V.variables, v) - point[v] for v in coordinates]
    return ideal_dimension(V + extra)


# ---------------------------------------------------------------------------
# Modular relations among values


def _j_value(value):
    if isinstance(value, NumericJet):
        return value.j
    if hasattr(value, "j") and not isinstance(value, (Poly, RatFn)):
        return value.j
    return value


def modular_relation_search(values, n_max=FREE_N_MAX, tol=1e-10, directory=None, strict=False):
    """All (i, k, N) with Phi_N(v_i, v_k) = 0, N <= n_max (1-based indices).

    Levels follow ``special_geometry.modular_relations``: every vanishing
    level is reported and levels without a golden file are skipped unless
    ``strict``.
    """
    js = [_j_value(v) for v in values]
    levels = modular_levels(n_max, directory, strict)
    found = []
    for (i, a), (k, b) in itertools.combinations(enumerate(js, start=1), 2):
        for level in levels:
            phi = modular_polynomial(level, directory)
            symbolic = isinstance(a, (Poly, RatFn)) or isinstance(b, (Poly, RatFn))
            if symbolic or (is_exact(a) and is_exact(b)):
                value = phi.substitute(a, b)
                vanishes = value == 0
            else:
                vanishes, _ = numeric_vanish(phi.poly, {"X": a, "Y": b}, tol, scale=True)
            if vanishes:
                found.append((i, k, level))
    return found


# ---------------------------------------------------------------------------
# Explorer


_POOL_GENERATORS = (
    GeoMatrix.identity(),
    GeoMatrix(2, 0, 0, 1),
    GeoMatrix(0, -1, 1, 0),
    GeoMatrix(1, 1, 0, 1),
)


def default_matrix_pool():
    """The four base matrices and their products of length 2, deduplicated."""
    pool = []
    for g in list(_POOL_GENERATORS) + [a @ b for a, b in itertools.product(_POOL_GENERATORS, repeat=2)]:
        if g not in pool:
            pool.append(g)
    return pool


def _candidate_key(edges):
    return ";".join("({},{},N={},g={})".format(i, k, level, g) for i, k, level, g in edges)


def _candidates(n, n_max, pool):
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    by_level = {level: [g for g in pool if g.level() == level] for level in range(1, n_max + 1)}
    for size in range(1, len(pairs) + 1):
        for chosen in itertools.combinations(pairs, size):
            for levels in itertools.product(range(1, n_max + 1), repeat=size):
                options = [by_level[level] for level in levels]
                for matrices in itertools.product(*options):
                    yield [(i, k, level, g) for (i, k), level, g in zip(chosen, levels, matrices)]


@dataclass
class ExploreResult:
    records: list
    witnesses: list
    partial: bool = False
    skipped: list = field(default_factory=list)

    def to_report(self):
        return {
            "partial": self.partial,
            "skipped": self.skipped,
            "candidates": [r.to_report() for r in self.records],
            "witnesses": [r.to_report() for r in self.witnesses],
        }


def weak_mzp_explore(V, S, n_max=1, pool=None, budget=None, directory=None):
    """Run the atypicality verdict against every small D-special candidate.

    ``S`` is the ambient DSpecialVariety. V must lie in S; that is checked
    once up front and raises InvalidInput. Candidates whose synthesized
    ideal coincides with an earlier one are dropped, and candidates that
    exceed the Groebner budget or fail the verdict's preconditions are
    recorded in ``skipped`` with the reason.
    """
    n = S.n
    if n > 3:
        raise errors.InvalidArgument("the explorer is limited to n <= 3 coordinates")
    pool = list(pool) if pool is not None else default_matrix_pool()
    if V.variables != S.ideal.variables:
        try:
            V = V.align(S.ideal.variables)
        except errors.InvalidArgument as exc:
            raise errors.InvalidInput("V does not fit the ambient of S: {}".format(exc)) from exc
    _require_contained(V, S.ideal, "V is not inside S")
    seen = set()
    records, skipped = [], []
    candidates = sorted(_candidates(n, n_max, pool), key=_candidate_key)
    for edges in candidates:
        key = _candidate_key(edges)
        jspec = JSpecialSpec(n, tuple((i, k, level) for i, k, level, _ in edges))
        geo = GeodesicSpec(n, tuple((i, k, g) for i, k, _, g in edges))
        try:
            T = synthesize_dspecial(jspec, geo, budget, directory)
        except errors.InvalidGeodesic:
            continue
        except errors.ComputationAborted as exc:
            skipped.append({"candidate": key, "reason": exc.describe()})
            continue
        basis = T.ideal.groebner()
        if basis in seen:
            continue
        seen.add(basis)
        try:
            report = atypicality_verdict(V, T.ideal, S.ideal)
        except (errors.InvalidInput, errors.ComputationAborted) as exc:
            skipped.append({"candidate": key, "reason": exc.describe()})
            continue
        report.candidate = key
        report.edges = [(i, k, level) for i, k, level, _ in edges]
        records.append(report)
    witnesses = [r for r in records if r.verdict == VERDICT_ATYPICAL]
    _log("explorer: {} candidates, {} atypical, {} skipped".format(len(records), len(witnesses), len(skipped)))
    return ExploreResult(records, witnesses, bool(skipped), skipped)
