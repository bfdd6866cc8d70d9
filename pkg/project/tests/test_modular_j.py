import mpmath
import pytest

import errors
import modular_j
from modular_j import (
    GeoMatrix,
    Jet,
    ModularPoly,
    R,
    a3_transform,
    a4_system,
    geodesic_derived_equation,
    j_ode_f,
    modular_polynomial,
    schwarzian,
    solve_y3,
)
from polycore import Poly, RatFn, rat
from qseries_oracle import PrecisionCtx, eval_j_jet

S_MATRIX = GeoMatrix(0, -1, 1, 0)
PAIR_VARS = ("z1", "y1", "y2", "dy1", "dy2", "ddy1", "ddy2")


def _pair(text):
    return Poly.parse(text, PAIR_VARS)


# ---------------------------------------------------------------------------
# Modular polynomials


def test_level_one_is_x_minus_y():
    phi = modular_polynomial(1)
    assert str(phi) == "X - Y"
    assert phi.substitute(5, 5) == 0


@pytest.mark.parametrize("level, degree", [(2, 3), (3, 4)])
def test_golden_polynomials_are_symmetric_with_psi_degree(level, degree):
    phi = modular_polynomial(level)
    assert phi.is_symmetric()
    assert phi.degree() == degree
    assert phi.poly.terms[(degree, 0)] == 1


def test_phi2_vanishes_on_j_of_i_and_2i():
    phi = modular_polynomial(2)
    assert phi.substitute(1728, 287496) == 0
    assert phi.substitute(287496, 1728) == 0


def test_phi2_vanishes_on_oracle_values():
    ctx = PrecisionCtx(bits=128)
    first = eval_j_jet("0.1+1.1i", ctx).j
    second = eval_j_jet("0.2+2.2i", ctx).j
    value = modular_polynomial(2).substitute(first, second)
    assert abs(value) < mpmath.mpf(10) ** -10 * abs(second) ** 3


def test_missing_level_is_unsupported(tmp_path):
    with pytest.raises(errors.UnsupportedLevel) as info:
        modular_polynomial(7, tmp_path)
    assert info.value.exit_code == 2


@pytest.mark.parametrize("bad", [0, -2, True, 2.0])
def test_level_must_be_positive_int(bad):
    with pytest.raises(errors.InvalidArgument):
        modular_polynomial(bad)
    with pytest.raises(errors.InvalidArgument):
        modular_j.modular_levels(bad)


def test_known_levels_skip_missing_golden_files(tmp_path):
    assert modular_j.modular_levels(5) == [1, 2, 3]
    assert modular_j.modular_levels(4, tmp_path) == [1]
    modular_j.write_golden(modular_polynomial(3), tmp_path)
    assert modular_j.modular_levels(4, tmp_path) == [1, 3]
    with pytest.raises(errors.UnsupportedLevel):
        modular_j.modular_levels(4, tmp_path, strict=True)


def test_golden_file_round_trip(tmp_path):
    phi = modular_polynomial(2)
    path = modular_j.write_golden(phi, tmp_path)
    assert path.name == "phi_2.txt"
    assert path.read_text().splitlines()[0] == "PHI N=2"
    assert modular_polynomial(2, tmp_path).poly == phi.poly


def test_golden_level_mismatch_is_rejected(tmp_path):
    (tmp_path / "phi_5.txt").write_text("PHI N=2\n1 0 1\n0 1 -1\n")
    with pytest.raises(errors.InvalidInput):
        modular_j.read_golden(5, tmp_path)


@pytest.mark.parametrize("text", ["", "PHI N=x\n", "PHI N=2\n1 0\n", "PSI N=2\n"])
def test_malformed_golden_text(text):
    with pytest.raises(errors.InvalidInput):
        ModularPoly.from_golden_text(text)


def test_golden_diff_lists_changed_coefficients():
    a = ModularPoly(1, Poly.parse("X - Y", ("X", "Y")))
    b = ModularPoly(1, Poly.parse("X - 2*Y", ("X", "Y")))
    assert modular_j.golden_diff(a, a) == []
    assert modular_j.golden_diff(a, b) == ["X^0 Y^1: golden -1 oracle -2"]


# ---------------------------------------------------------------------------
# The third-order equation


def test_r_value_and_poles():
    assert R(1) == rat("2652241/5965058")
    for pole in (0, 1728):
        with pytest.raises(errors.PoleOfR):
            R(pole)


def test_solve_y3_solves_the_equation():
    y3 = solve_y3(3, 2, 5)
    assert j_ode_f(3, 2, 5, y3) == 0
    assert j_ode_f(3, 2, 5, y3 + 1) == rat("1/2")


def test_flat_jet_is_degenerate():
    with pytest.raises(errors.DegenerateJet):
        solve_y3(3, 0, 5)


def test_oracle_jet_satisfies_the_equation():
    ctx = PrecisionCtx(bits=128)
    jet = eval_j_jet("0.3+1.2i", ctx)
    with ctx.workprec():
        assert jet.ode_residual() < mpmath.mpf(10) ** -25


def test_schwarzian_of_moebius_vanishes():
    z = ("z",)
    y = RatFn.parse("(z + 1)/(z + 2)", z)
    assert schwarzian(y, "z") == 0


def test_schwarzian_of_square():
    y = Poly.parse("z^2", ("z",))
    assert schwarzian(y, "z") == RatFn.parse("-3/(2*z^2)", ("z",))


# ---------------------------------------------------------------------------
# Matrices and jets


def test_matrix_level_and_normalization():
    assert GeoMatrix(2, 0, 0, 1).level() == 2
    half = GeoMatrix(rat("1/2"), 0, 0, 1)
    assert half.normalized() == (1, 0, 0, 2)
    assert half.level() == 2
    assert GeoMatrix(2, 0, 0, 2) == GeoMatrix.identity()


def test_matrix_needs_positive_determinant():
    with pytest.raises(errors.InvalidArgument):
        GeoMatrix(0, 1, 1, 0)
    assert GeoMatrix.zero().is_zero()


def test_adjugate_inverts_up_to_scaling():
    g = GeoMatrix(2, 1, 1, 1)
    assert g @ g.adjugate() == GeoMatrix.identity()
    assert g.adjugate().apply(g.apply(rat(3))) == 3


def test_matrix_pole():
    with pytest.raises(errors.PoleAtPoint):
        S_MATRIX.apply(0)


def test_a3_identity_and_translation_keep_derivatives():
    jet = Jet(z=rat(2), j=rat(5), j1=rat(3), j2=rat(7))
    assert a3_transform(GeoMatrix.identity(), jet) == jet
    moved = a3_transform(GeoMatrix(1, 1, 0, 1), jet)
    assert moved == Jet(z=rat(3), j=rat(5), j1=rat(3), j2=rat(7))


def test_a3_inversion_chain_rule():
    jet = Jet(z=rat(2), j=rat(5), j1=rat(3), j2=rat(7))
    moved = a3_transform(S_MATRIX, jet)
    assert moved.z == rat("-1/2")
    assert moved.j1 == 12
    assert moved.j2 == 160
    assert moved.j3 is None


def test_a3_preserves_the_equation_and_inverts():
    jet = Jet(z=rat(2), j=rat(5), j1=rat(3), j2=rat(7)).with_j3()
    g = GeoMatrix(1, 2, 3, 7)
    moved = a3_transform(g, jet)
    assert moved.residual() == 0
    assert a3_transform(g.adjugate(), moved) == jet


def test_a3_needs_z_and_linked_matrix():
    with pytest.raises(errors.InvalidArgument):
        a3_transform(S_MATRIX, Jet(j=rat(1), j1=rat(1)))
    with pytest.raises(errors.UnlinkedPair):
        a3_transform(GeoMatrix.zero(), Jet(z=rat(1), j=rat(1)))


def test_a4_for_level_one_copies_the_jet():
    assert a4_system(modular_polynomial(1), (rat(4), rat(2), rat(9)), rat(4)) == (2, 9)


def test_a4_matches_oracle_for_level_two():
    ctx = PrecisionCtx(bits=128)
    tau = mpmath.mpc("0.1", "1.1")
    low = eval_j_jet(tau, ctx)
    high = eval_j_jet(2 * tau, ctx)
    with ctx.workprec():
        d2, dd2 = a4_system(modular_polynomial(2), (low.j, low.j1, low.j2), high.j)
        assert abs(d2 - 2 * high.j1) < mpmath.mpf(10) ** -15 * abs(high.j1)
        assert abs(dd2 - 4 * high.j2) < mpmath.mpf(10) ** -12 * abs(high.j2)


def test_a4_singular_at_double_root():
    # j(2i) is a double root of Phi_2(1728, Y)
    with pytest.raises(errors.SingularModularPoint):
        a4_system(modular_polynomial(2), (rat(1728), rat(1), rat(0)), rat(287496))


# ---------------------------------------------------------------------------
# Prolongation


def test_derived_equation_for_identity():
    e1, e2 = geodesic_derived_equation(modular_polynomial(1), GeoMatrix.identity())
    assert e1 == _pair("dy1 - dy2")
    assert e2 == _pair("ddy1 - ddy2")


def test_derived_equation_for_inversion_clears_denominator():
    e1, _ = geodesic_derived_equation(modular_polynomial(1), S_MATRIX)
    assert e1 == _pair("z1^2*dy1 - dy2")


def test_derived_equation_of_unlinked_pair():
    with pytest.raises(errors.UnlinkedPair):
        geodesic_derived_equation(modular_polynomial(1), GeoMatrix.zero())


def test_block_context_rejects_zero_path():
    with pytest.raises(errors.UnlinkedPair):
        modular_j.BlockContext(1, {2: GeoMatrix.zero()})


def test_total_derivative_uses_the_third_order_equation():
    ctx = modular_j.BlockContext(1, {})
    assert ctx.variables == ("z1", "y1", "dy1", "ddy1")
    image = modular_j.total_derivative(Poly.gen(ctx.variables, "ddy1"), ctx)
    assert image == modular_j.h_ratfn(ctx.variables, "y1", "dy1", "ddy1")


def test_jet_variable_order():
    assert modular_j.jet_variables(2) == ("y1", "y2", "dy1", "dy2", "ddy1", "ddy2")
    assert modular_j.full_variables(1) == ("x1", "y1", "dy1", "ddy1")
