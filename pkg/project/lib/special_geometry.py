"""j-special, geodesic and D-special varieties.

A j-special configuration on n coordinates is a set of modular edges
(i, k, N) meaning Phi_N(y_i, y_k) = 0. The associated geodesic data puts a
Moebius matrix on every edge, read as z_k = g z_i. Connected components
are the j-blocks; each block gets a single z at its smallest index and
every member's z is the composed path matrix applied to it.

D-special synthesis, per block:

    Phi_N(y_i, y_k), its prolongation and the prolongation of that
    -> saturate by every dy_i and every (c_i z + d_i) with c_i != 0
    -> eliminate z (saturation and elimination share one Groebner run)

Ambients: D-special ideals live in (y1..yn, dy1..dyn, ddy1..ddyn); the
normality checks use (x1..xn, y1.., dy1.., ddy1..).

Variety documents (JSON):

    {
      "n": 2,
      "jspecial": {"edges": [{"i": 1, "k": 2, "N": 2}]},
      "geodesic": {"edges": [{"i": 1, "k": 2, "g": [[0, -1], [2, 0]]}]},
      "generators": ["y1 - y2"],
      "ambient": "jet" | "full" | [names...]
    }

Optional ``V``, ``T``, ``S`` lists of polynomial strings feed ``analyze``.
"""

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from pathlib import Path

import errors
from modular_j import (
    BlockContext,
    GeoMatrix,
    full_variables,
    jet_names,
    jet_variables,
    modular_levels,
    modular_polynomial,
    prolong,
    x_name,
)
from polycore import (
    Ideal,
    Poly,
    RatFn,
    eliminate,
    fresh_variable,
    ideal_dimension,
    radical_membership,
    rat,
    same_radical,
    saturate,
)

try:
    import eventlog
except Exception:
    eventlog = None


DEBUG_SPECIAL = False

# Levels without a golden file are skipped; pass a smaller n_max to bound the work.
FREE_N_MAX = 5
MAX_EXHAUSTIVE_N = 6


def _d(*args):
    if DEBUG_SPECIAL:
        print("[special]", *args)


def _log(message):
    if eventlog is not None:
        try:
            eventlog.log_event(message)
        except Exception:
            pass


def _describe_block(members, dim, upper):
    """Build an event-log sentence for a synthesized block."""
    if len(members) == 1:
        return "block {} is trivial (dim 3)".format(list(members))
    shape = "upper triangular" if upper else "not upper triangular"
    return "block {} synthesized with dim {} ({})".format(list(members), dim, shape)


# ---------------------------------------------------------------------------
# Combinatorial data


@dataclass(frozen=True)
class JSpecialSpec:
    n: int
    edges: tuple = ()

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise errors.InvalidInput("coordinate count must be a positive int")
        normalized = []
        seen = set()
        for edge in self.edges:
            try:
                i, k, level = (int(v) for v in edge)
            except (TypeError, ValueError) as exc:
                raise errors.InvalidInput("bad modular edge {!r}".format(edge)) from exc
            if i == k:
                raise errors.InvalidInput("self-edge on coordinate {}".format(i))
            i, k = min(i, k), max(i, k)
            if not (1 <= i and k <= self.n):
                raise errors.InvalidInput("edge ({}, {}) outside 1..{}".format(i, k, self.n))
            if level < 1:
                raise errors.InvalidInput("modular level must be >= 1, got {}".format(level))
            if (i, k) in seen:
                raise errors.InvalidInput("more than one edge on pair ({}, {})".format(i, k))
            seen.add((i, k))
            normalized.append((i, k, level))
        object.__setattr__(self, "edges", tuple(sorted(normalized)))

    def pairs(self):
        return {(i, k) for i, k, _ in self.edges}

    def level(self, i, k):
        i, k = min(i, k), max(i, k)
        for a, b, level in self.edges:
            if (a, b) == (i, k):
                return level
        return None

    def to_doc(self):
        return {"edges": [{"i": i, "k": k, "N": level} for i, k, level in self.edges]}


@dataclass(frozen=True)
class GeodesicSpec:
    """Matrix-labelled edges (i, k, g): z_k = g z_i. Zero markers are dropped."""

    n: int
    edges: tuple = ()

    def __post_init__(self):
        normalized = []
        seen = set()
        for edge in self.edges:
            try:
                i, k, g = edge
                i, k = int(i), int(k)
            except (TypeError, ValueError) as exc:
                raise errors.InvalidInput("bad geodesic edge {!r}".format(edge)) from exc
            if not isinstance(g, GeoMatrix):
                g = GeoMatrix.of(g)
            if g.is_zero():
                continue
            if i == k or not (1 <= min(i, k) and max(i, k) <= self.n):
                raise errors.InvalidInput("bad geodesic edge ({}, {})".format(i, k))
            if k < i:
                i, k, g = k, i, g.adjugate()
            if (i, k) in seen:
                raise errors.InvalidInput("more than one matrix on pair ({}, {})".format(i, k))
            seen.add((i, k))
            normalized.append((i, k, g))
        object.__setattr__(self, "edges", tuple(sorted(normalized, key=lambda e: (e[0], e[1]))))

    def pairs(self):
        return {(i, k) for i, k, _ in self.edges}

    def matrix(self, i, k):
        for a, b, g in self.edges:
            if (a, b) == (i, k):
                return g
            if (a, b) == (k, i):
                return g.adjugate()
        return None

    def is_associated(self, jspec):
        return self.n == jspec.n and self.pairs() == jspec.pairs()

    def to_doc(self):
        return {"edges": [{"i": i, "k": k, "g": g.to_json()} for i, k, g in self.edges]}


@dataclass(frozen=True)
class JBlock:
    members: tuple
    tree: tuple = ()

    @property
    def root(self):
        return self.members[0]

    def is_trivial(self):
        return len(self.members) == 1


@dataclass(frozen=True)
class JBlockDecomp:
    n: int
    blocks: tuple

    def block_of(self, i):
        for block in self.blocks:
            if i in block.members:
                return block
        raise errors.InvalidArgument("coordinate {} is not in 1..{}".format(i, self.n))

    def to_doc(self):
        return [{"members": list(b.members), "tree": [list(e) for e in b.tree]} for b in self.blocks]


def _components(n, pairs):
    adjacency = {i: set() for i in range(1, n + 1)}
    for i, k in pairs:
        adjacency[i].add(k)
        adjacency[k].add(i)
    seen = set()
    out = []
    for start in range(1, n + 1):
        if start in seen:
            continue
        seen.add(start)
        order, tree = [start], []
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in sorted(adjacency[u]):
                if w not in seen:
                    seen.add(w)
                    order.append(w)
                    tree.append((u, w))
                    queue.append(w)
        out.append((tuple(sorted(order)), tuple(tree)))
    return out


def j_block_decomposition(spec):
    """Connected components of the modular graph, rooted at their smallest index."""
    blocks = tuple(JBlock(members, tree) for members, tree in _components(spec.n, spec.pairs()))
    return JBlockDecomp(spec.n, blocks)


def geodesic_paths(geo):
    """Per block: (root, {member: matrix taking z_root to z_member}).

    Non-tree edges must agree with the composed paths up to positive
    scaling, otherwise ``InvalidGeodesic``.
    """
    out = []
    for members, tree in _components(geo.n, geo.pairs()):
        root = members[0]
        paths = {root: GeoMatrix.identity()}
        for u, w in tree:
            paths[w] = geo.matrix(u, w).compose(paths[u])
        for i, k, g in geo.edges:
            if i in paths and k in paths and g.compose(paths[i]) != paths[k]:
                raise errors.InvalidGeodesic(
                    "cycle through edge ({}, {}) is inconsistent".format(i, k), edge=[i, k]
                )
        out.append((root, paths))
    return out


# ---------------------------------------------------------------------------
# D-special synthesis


@dataclass
class DSpecialVariety:
    ideal: Ideal
    blocks: JBlockDecomp
    block_dims: tuple
    upper_triangular: tuple
    jspec: JSpecialSpec
    geo: GeodesicSpec
    block_ideals: tuple = ()
    expected_dims: tuple = ()
    invariants_hold: bool = True

    @property
    def n(self):
        return self.blocks.n

    def dimension(self):
        return sum(self.block_dims)

    def is_upper_triangular(self):
        return all(self.upper_triangular)

    def special_dimension(self):
        """Dimension of the associated j-special variety (one per block)."""
        return len(self.blocks.blocks)

    def to_report(self):
        return {
            "n": self.n,
            "variables": list(self.ideal.variables),
            "generators": self.ideal.gens_text(),
            "blocks": [
                {
                    "members": list(block.members),
                    "dim": dim,
                    "expected_dim": expected,
                    "upper_triangular": upper,
                }
                for block, dim, expected, upper in zip(
                    self.blocks.blocks, self.block_dims, self.expected_dims, self.upper_triangular
                )
            ],
            "dim": self.dimension(),
            "special_dim": self.special_dimension(),
            "upper_triangular": self.is_upper_triangular(),
            "invariants_hold": self.invariants_hold,
        }


def _relative(paths, k, a):
    """Matrix taking z_a to z_k inside one block."""
    return paths[k].compose(paths[a].adjugate())


def expected_block_dimension(paths, members):
    """3 for a single member or all-triangular relative matrices, else 4."""
    if len(members) == 1:
        return 3
    a = members[0]
    if all(_relative(paths, k, a).is_upper_triangular() for k in members[1:]):
        return 3
    return 4


def block_generators(block, jspec, paths, directory=None):
    """Phi-edges and their two prolongations over the block's z-ambient."""
    ctx = BlockContext(block.root, {i: paths[i] for i in block.members})
    gens = []
    for i, k, level in jspec.edges:
        if i not in block.members:
            continue
        phi = modular_polynomial(level, directory)
        base = phi.in_variables(ctx.variables, jet_names(i)[0], jet_names(k)[0])
        e1 = prolong(base, ctx)
        e2 = prolong(e1, ctx)
        gens.extend([base, e1, e2])
    return ctx, gens


def synthesize_block(block, jspec, paths, budget=None, directory=None):
    """Ideal of the D-special block over its own (y, dy, ddy) variables."""
    block_vars = tuple(jet_names(i)[k] for k in range(3) for i in block.members)
    if block.is_trivial():
        return Ideal(block_vars, [])
    ctx, gens = block_generators(block, jspec, paths, directory)
    t = fresh_variable(ctx.variables)
    ambient = (t,) + ctx.variables
    gens = [g.align(ambient) for g in gens]
    saturator = Poly.constant(ambient, 1)
    for i in block.members:
        saturator = saturator * Poly.gen(ambient, jet_names(i)[1])
        g = paths[i]
        if not g.is_upper_triangular():
            saturator = saturator * (Poly.gen(ambient, ctx.z) * g.c + g.d)
    gens.append(1 - Poly.gen(ambient, t) * saturator)
    _log("synthesizing block {} from {} generators".format(list(block.members), len(gens)))
    projected = eliminate(Ideal(ambient, gens), [t, ctx.z], budget)
    return projected.align(block_vars) if projected.variables != block_vars else projected


def synthesize_dspecial(jspec, geo, budget=None, directory=None):
    """Synthesize the D-special variety of an associated (jspec, geo) pair."""
    if not geo.is_associated(jspec):
        raise errors.InvalidGeodesic(
            "geodesic edges {} do not mirror the modular edges {}".format(
                sorted(geo.pairs()), sorted(jspec.pairs())
            )
        )
    decomp = j_block_decomposition(jspec)
    all_paths = {}
    for _, paths in geodesic_paths(geo):
        all_paths.update(paths)
    variables = jet_variables(jspec.n)
    gens, dims, expected, upper, block_ideals = [], [], [], [], []
    for block in decomp.blocks:
        ideal = synthesize_block(block, jspec, all_paths, budget, directory)
        aligned = ideal.align(variables)
        block_ideals.append(aligned)
        gens.extend(aligned.generators)
        dim = ideal_dimension(ideal)
        want = expected_block_dimension(all_paths, block.members)
        dims.append(dim)
        expected.append(want)
        upper.append(want == 3)
        _log(_describe_block(block.members, dim, want == 3))
    variety = DSpecialVariety(
        ideal=Ideal(variables, gens),
        blocks=decomp,
        block_dims=tuple(dims),
        upper_triangular=tuple(upper),
        jspec=jspec,
        geo=geo,
        block_ideals=tuple(block_ideals),
        expected_dims=tuple(expected),
        invariants_hold=tuple(dims) == tuple(expected),
    )
    if not variety.invariants_hold:
        _log("dimension invariants FAILED: computed {} expected {}".format(dims, expected))
    return variety


# ---------------------------------------------------------------------------
# Coordinates and projections


def coordinate_count(ideal):
    """Largest i such that y<i> is an ambient variable."""
    n = 0
    for v in ideal.variables:
        if v.startswith("y") and v[1:].isdigit():
            n = max(n, int(v[1:]))
    if not n:
        raise errors.InvalidArgument("ambient {} has no y<i> coordinates".format(ideal.variables))
    return n


def coordinate_group(i, variables):
    names = set(jet_names(i)[:3]) | {x_name(i)}
    return [v for v in variables if v in names]


def project(ideal, indices):
    """Elimination projection of ``ideal`` onto the coordinate groups in ``indices``."""
    keep = set()
    for i in indices:
        keep.update(coordinate_group(i, ideal.variables))
    drop = [v for v in ideal.variables if v not in keep]
    if not drop:
        return ideal
    return eliminate(ideal, drop)


def projection_dimension(ideal, indices):
    return ideal_dimension(project(ideal, indices))


def _subsets(n, subsets):
    if subsets is not None:
        return [tuple(sorted(s)) for s in subsets]
    if n > MAX_EXHAUSTIVE_N:
        raise errors.ComputationAborted(
            "{} coordinates is too many for exhaustive projections; pass subsets".format(n),
            coordinates=n,
        )
    out = []
    for size in range(1, n + 1):
        out.extend(itertools.combinations(range(1, n + 1), size))
    return out


@dataclass
class NormalityVerdict:
    mode: str
    holds: bool
    witness: tuple = None
    table: list = field(default_factory=list)

    def to_report(self):
        return {
            "mode": self.mode,
            "holds": self.holds,
            "witness": list(self.witness) if self.witness else None,
            "projections": self.table,
        }


def normality(ideal, mode="normal", subsets=None):
    """Check dim pr V >= 3k (``normal``) or > 3k (``strongly-normal``) on every projection."""
    if mode not in ("normal", "strongly-normal"):
        raise errors.InvalidArgument("unknown normality mode {!r}".format(mode))
    n = coordinate_count(ideal)
    if set(ideal.variables) != set(full_variables(n)):
        raise errors.InvalidArgument("normality needs the (x, y, dy, ddy) ambient on {} coordinates".format(n))
    strict = mode == "strongly-normal"
    table = []
    witness = None
    for subset in _subsets(n, subsets):
        dim = projection_dimension(ideal, subset)
        bound = 3 * len(subset)
        ok = dim > bound if strict else dim >= bound
        table.append({"indices": list(subset), "dim": dim, "bound": bound, "ok": ok})
        if not ok and witness is None:
            witness = subset
    return NormalityVerdict(mode, witness is None, witness, table)


def product_with_affine(ideal):
    """F^n x V: the same generators read in the (x, y, dy, ddy) ambient."""
    n = coordinate_count(ideal)
    return ideal.align(full_variables(n))


def structural_projection_dims(variety, indices):
    """(dim pr S, dim pr T) from block metadata alone."""
    paths = {}
    for _, p in geodesic_paths(variety.geo):
        paths.update(p)
    dim_s = dim_t = 0
    chosen = set(indices)
    for block in variety.blocks.blocks:
        selected = [i for i in block.members if i in chosen]
        if not selected:
            continue
        dim_t += 1
        dim_s += expected_block_dimension(paths, selected)
    return dim_s, dim_t


def d_normality(ideal, variety, mode="d-normal", subsets=None):
    """Check dim pr V >= (or >) dim pr S - dim pr T for every projection."""
    if mode not in ("d-normal", "strongly-d-normal"):
        raise errors.InvalidArgument("unknown D-normality mode {!r}".format(mode))
    n = variety.n
    if ideal.variables != jet_variables(n):
        ideal = ideal.align(jet_variables(n))
    strict = mode == "strongly-d-normal"
    table = []
    witness = None
    for subset in _subsets(n, subsets):
        dim = projection_dimension(ideal, subset)
        dim_s, dim_t = structural_projection_dims(variety, subset)
        bound = dim_s - dim_t
        ok = dim > bound if strict else dim >= bound
        table.append({"indices": list(subset), "dim": dim, "dim_S": dim_s, "dim_T": dim_t, "ok": ok})
        if not ok and witness is None:
            witness = subset
    return NormalityVerdict(mode, witness is None, witness, table)


# ---------------------------------------------------------------------------
# Freeness and closure


def modular_relations(ideal, n_max=FREE_N_MAX, directory=None, first_only=False, strict=False):
    """Every edge (i, k, N), N <= n_max, whose Phi_N vanishes on V(ideal).

    A pair can appear at several levels. ``first_only`` stops at the first
    edge found; ``strict`` makes a level without a golden file an error.
    """
    n = coordinate_count(ideal)
    levels = modular_levels(n_max, directory, strict)
    found = []
    for i, k in itertools.combinations(range(1, n + 1), 2):
        yi, yk = jet_names(i)[0], jet_names(k)[0]
        if yi not in ideal.variables or yk not in ideal.variables:
            continue
        for level in levels:
            phi = modular_polynomial(level, directory)
            if radical_membership(phi.in_variables(ideal.variables, yi, yk), ideal):
                found.append((i, k, level))
                if first_only:
                    return found
    return found


def is_free(ideal, n_max=FREE_N_MAX, directory=None, strict=False):
    """True iff no Phi_N(y_i, y_k) with N <= n_max vanishes on V(ideal)."""
    return not modular_relations(ideal, n_max, directory, first_only=True, strict=strict)


def lowest_level_edges(edges):
    lowest = {}
    for i, k, level in edges:
        if (i, k) not in lowest or level < lowest[(i, k)]:
            lowest[(i, k)] = level
    return tuple((i, k, level) for (i, k), level in sorted(lowest.items()))


@dataclass
class FreePart:
    indices: tuple
    ideal: Ideal


def free_parts(ideal, blocks):
    """One representative per block, in every combination, with its projection."""
    choices = [block.members for block in blocks.blocks]
    out = []
    for combo in itertools.product(*choices):
        indices = tuple(sorted(combo))
        out.append(FreePart(indices, project(ideal, indices)))
    return out


def _default_pool():
    from atypicality import default_matrix_pool

    return default_matrix_pool()


def _constant_on(r, ideal, budget=None):
    """The rational constant that ``r`` takes on V(ideal), or None."""
    num, den = ideal.normal_form(r.num), ideal.normal_form(r.den)
    if den.is_zero():
        return None
    lead = den.leading_monomial()
    value = rat(num.terms.get(lead, 0)) / rat(den.terms[lead])
    if not radical_membership(r.num - r.den * value, ideal, budget):
        return None
    return Fraction(int(value.numerator), int(value.denominator))


def _exact_sqrt(q):
    if q < 0:
        return None
    top, bottom = isqrt(q.numerator), isqrt(q.denominator)
    if top * top != q.numerator or bottom * bottom != q.denominator:
        return None
    return Fraction(top, bottom)


def _factor_matrices(kind, value, level):
    """Matrices whose derivative factor has the recovered shape, level-N ones first.

    ``slope``: dz_w/dz_u is the constant a/d (c = 0).
    ``curve``: (dz_w/dz_u)'^2 = value * (dz_w/dz_u)^3 with value = 4c^2/det.
    """
    out = []
    if value <= 0:
        return out
    if kind == "slope":
        p, q = value.numerator, value.denominator
        if level % (p * q) == 0:
            s = _exact_sqrt(Fraction(level // (p * q)))
            if s is not None:
                s = int(s)
                out.append(GeoMatrix(p * s, 0 if s == 1 else 1, 0, q * s))
        out.append(GeoMatrix(p, 0, 0, q))
    else:
        ratio = value / 4
        c = _exact_sqrt(ratio * level)
        if c is not None:
            out.append(GeoMatrix(1, 0, c, level))
        out.append(GeoMatrix(1, 0, ratio.numerator, ratio.numerator * ratio.denominator))
    unique = []
    for g in out:
        if g not in unique:
            unique.append(g)
    return unique


def recover_edge_matrices(ideal, u, w, level, directory=None, budget=None):
    """Matrices g with z_w = g z_u consistent with V's projection onto (u, w).

    Along the edge the derivative factor phi = dz_w/dz_u is read off the
    first two prolongations of Phi_N(y_u, y_w). It is constant when c = 0;
    otherwise phi'^2 / phi^3 is the constant 4c^2/det. Either constant pins
    the block down up to the matrices returned here.
    """
    pair = project(ideal, (u, w))
    v = pair.variables
    yu, dyu, ddyu = jet_names(u)[:3]
    yw, dyw, ddyw = jet_names(w)[:3]
    if not all(name in v for name in (yu, yw, dyu, dyw, ddyu, ddyw)):
        return []
    base = modular_polynomial(level, directory).in_variables(v, yu, yw)
    px, py = base.diff(yu), base.diff(yw)
    if py.is_zero():
        return []
    du, dw = Poly.gen(v, dyu), Poly.gen(v, dyw)
    try:
        pair = saturate(pair, du * dw * py, budget)
    except errors.ComputationAborted:
        return []
    slope = RatFn(-px * du, py * dw)
    second = (
        px.diff(yu) * du * du
        + slope * px.diff(yw) * du * dw * 2
        + slope * slope * py.diff(yw) * dw * dw
        + px * Poly.gen(v, ddyu)
        + slope * slope * py * Poly.gen(v, ddyw)
    )
    rate = -second / (py * dw)
    try:
        value = _constant_on(slope, pair, budget)
        if value is not None:
            return _factor_matrices("slope", value, level)
        if rate.is_zero() or slope.is_zero():
            return []
        value = _constant_on(rate * rate / (slope * slope * slope), pair, budget)
    except errors.ComputationAborted:
        return []
    if value is None:
        return []
    _d("edge", (u, w), "derivative factor constant", value)
    return _factor_matrices("curve", value, level)


def dspecial_closure(ideal, n_max=2, pool=None, directory=None, budget=None):
    """Product of V's j-blocks, each of which must itself be D-special.

    Modular edges are read off V by radical membership, keeping the lowest
    level per pair. For each block, candidate matrices are recovered from
    V's own pair projections first and then taken from ``pool``; a block is
    accepted once the synthesized block has the same radical as V's
    projection onto it.
    """
    n = coordinate_count(ideal)
    if ideal.variables != jet_variables(n):
        ideal = ideal.align(jet_variables(n))
    pool = list(pool) if pool is not None else _default_pool()
    jspec = JSpecialSpec(n, lowest_level_edges(modular_relations(ideal, n_max, directory)))
    decomp = j_block_decomposition(jspec)
    chosen = []
    for block in decomp.blocks:
        block_vars = tuple(jet_names(i)[k] for k in range(3) for i in block.members)
        target = project(ideal, block.members)
        target = target.align(block_vars) if target.variables != block_vars else target
        if block.is_trivial():
            if ideal_dimension(target) != 3:
                raise errors.NoCanonicalClosure(
                    "coordinate {} is constrained but unrelated to any other".format(block.root)
                )
            continue
        match = _search_block(block, jspec, target, pool, directory, budget)
        if match is None:
            raise errors.NoCanonicalClosure(
                "block {} is not D-special for any recovered or pooled matrices".format(list(block.members)),
                block=list(block.members),
            )
        chosen.extend(match)
    geo = GeodesicSpec(n, tuple(chosen))
    _log("D-special closure found for {} block(s)".format(len(decomp.blocks)))
    return synthesize_dspecial(jspec, geo, budget, directory)


def _search_block(block, jspec, target, pool, directory, budget):
    tree = list(block.tree)
    options = []
    for u, w in tree:
        level = jspec.level(u, w)
        recovered = recover_edge_matrices(target, u, w, level, directory, budget)
        options.append(recovered + [g for g in pool if g.level() == level and g not in recovered])
    tried = set()
    for combo in itertools.product(*options):
        edges = tuple((min(u, w), max(u, w), g if u < w else g.adjugate()) for (u, w), g in zip(tree, combo))
        geo = GeodesicSpec(jspec.n, edges)
        paths = {}
        for _, p in geodesic_paths(geo):
            paths.update(p)
        key = tuple(_relative(paths, k, block.root) for k in block.members)
        if key in tried:
            continue
        tried.add(key)
        sub = JSpecialSpec(jspec.n, tuple(e for e in jspec.edges if e[0] in block.members))
        try:
            candidate = synthesize_block(block, sub, paths, budget, directory)
        except errors.InvalidGeodesic:
            continue
        if same_radical(candidate, target):
            return list(edges)
    return None


# ---------------------------------------------------------------------------
# Documents


@dataclass
class VarietyDoc:
    n: int
    jspec: JSpecialSpec
    geo: GeodesicSpec
    variables: tuple
    generators: list = field(default_factory=list)
    sections: dict = field(default_factory=dict)

    def ideal(self, key=None):
        texts = self.generators if key is None else self.sections.get(key)
        if texts is None:
            raise errors.InvalidInput("document has no '{}' section".format(key))
        return Ideal(self.variables, [Poly.parse(t, self.variables) for t in texts])


def _parse_ambient(n, ambient):
    if ambient in (None, "jet"):
        return jet_variables(n)
    if ambient == "full":
        return full_variables(n)
    if isinstance(ambient, list):
        return tuple(ambient)
    raise errors.InvalidInput("unknown ambient {!r}".format(ambient))


def load_document(source):
    """Read a variety document from a path, JSON text or an already-parsed dict."""
    if isinstance(source, dict):
        data = source
    else:
        text = Path(source).read_text() if not str(source).lstrip().startswith("{") else source
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise errors.InvalidInput("document is not valid JSON: {}".format(exc)) from exc
    try:
        n = int(data["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise errors.InvalidInput("document needs an integer 'n'") from exc
    if data.get("constants"):
        raise errors.InvalidInput("constant coordinates are not supported")
    try:
        jedges = [(e["i"], e["k"], e["N"]) for e in data.get("jspecial", {}).get("edges", [])]
        gedges = [(e["i"], e["k"], e["g"]) for e in data.get("geodesic", {}).get("edges", [])]
    except (KeyError, TypeError, AttributeError) as exc:
        raise errors.InvalidInput("malformed edge list: {!r}".format(exc)) from exc
    variables = _parse_ambient(n, data.get("ambient"))
    sections = {key: list(data[key]) for key in ("V", "T", "S", "W") if key in data}
    return VarietyDoc(
        n=n,
        jspec=JSpecialSpec(n, tuple(jedges)),
        geo=GeodesicSpec(n, tuple(gedges)),
        variables=variables,
        generators=list(data.get("generators", [])),
        sections=sections,
    )


def dump_document(variety, generators=None):
    """Variety document for a synthesized D-special variety."""
    return {
        "n": variety.n,
        "jspecial": variety.jspec.to_doc(),
        "geodesic": variety.geo.to_doc(),
        "generators": generators if generators is not None else variety.ideal.gens_text(),
    }
