"""Tests for toric-model score equations, critical points, amplitude residue
sums and trace tests, including the square-model image of the standard
triangle."""

from __future__ import annotations

import numpy as np
import pytest

from geomodels import poly3
from polypol.adjoint import adjoint
from polypol.algebra import MultiPoly
from polypol.errors import DegenerateInputError, PolypolError, UnsupportedInputError
from polypol.forms import canonical_form, interval_form
from polypol.likelihood import (
    LikelihoodSystem,
    ToricModel,
    amplitude_residue,
    critical_points,
    image_polypol,
    likelihood_instance,
    likelihood_system,
    moment_map,
    square_model,
    trace_test,
)

PAPER_MODEL = square_model(15.0, 2.0, 8.0, 23.0)
PAPER_DATA = (1, 2, 5, 2)


def paper_instance():
    return likelihood_instance(PAPER_MODEL, PAPER_DATA)


def segment_model() -> ToricModel:
    """q = (1+x)^2 on one variable."""
    return ToricModel(((0,), (1,), (2,)), (1.0, 2.0, 1.0))


# ----------------------------------------------------------------------
# model and instance validation


def test_instance_derives_size_and_target():
    inst = paper_instance()
    assert inst.sample_size == 10
    assert inst.target == (4.0, 7.0)


def test_model_validation():
    with pytest.raises(DegenerateInputError, match="lower dimension"):
        ToricModel(((0, 0), (1, 1), (2, 2)), (1.0, 1.0, 1.0))
    with pytest.raises(DegenerateInputError, match="positive"):
        ToricModel(((0,), (1,)), (1.0, -2.0))
    with pytest.raises(UnsupportedInputError, match="negative exponents"):
        ToricModel(((0,), (-1,)), (1.0, 2.0))
    with pytest.raises(DegenerateInputError, match="distinct"):
        ToricModel(((0,), (0,)), (1.0, 2.0))


def test_data_validation():
    with pytest.raises(DegenerateInputError, match="one count per"):
        likelihood_instance(PAPER_MODEL, (1, 2, 5))
    with pytest.raises(DegenerateInputError, match="positive integers"):
        likelihood_instance(PAPER_MODEL, (1, 0, 5, 2))
    with pytest.raises(DegenerateInputError, match="positive integers"):
        likelihood_instance(PAPER_MODEL, (1, 2.5, 5, 2))


def test_three_variable_models_are_not_supported():
    cube = ToricModel(((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)),
                      (1.0, 1.0, 1.0, 1.0))
    with pytest.raises(UnsupportedInputError, match="two-dimensional"):
        likelihood_system(cube, likelihood_instance(cube, (1, 1, 1, 1)))


# ----------------------------------------------------------------------
# cleared equations


def test_square_model_equations_match_the_hand_formula():
    inst = paper_instance()
    system = likelihood_system(PAPER_MODEL, inst)
    assert len(system.equations) == 2
    assert system.nonvanishing.terms == PAPER_MODEL.denominator().terms
    rng = np.random.default_rng(0)
    for _ in range(6):
        x, y = rng.uniform(-2.0, 2.0, size=2)
        q = 15.0 + 2.0 * x + 8.0 * y + 23.0 * x * y
        qx, qy = 2.0 + 23.0 * y, 8.0 + 23.0 * x
        assert system.equations[0]((x, y)).real == pytest.approx(
            4.0 * q - 10.0 * x * qx, rel=1e-12)
        assert system.equations[1]((x, y)).real == pytest.approx(
            7.0 * q - 10.0 * y * qy, rel=1e-12)


def test_segment_model_equation_is_cleared_not_cancelled():
    seg = segment_model()
    inst = likelihood_instance(seg, (3, 2, 4))
    system = likelihood_system(seg, inst)
    # target 10, size 9: 10(1+x)^2 - 9x*2(1+x) = 10 + 2x - 8x^2
    assert {e: c.real for e, c in system.equations[0].terms.items()} == \
        {(0,): 10.0, (1,): 2.0, (2,): -8.0}


# ----------------------------------------------------------------------
# critical points


def test_printed_critical_points():
    crit = critical_points(PAPER_MODEL, paper_instance())
    assert len(crit) == 2
    assert all(abs(z.imag) < 1e-12 for pt in crit for z in pt)
    first, second = crit
    assert first[0].real == pytest.approx(-4.11469, abs=1e-5)
    assert first[1].real == pytest.approx(-0.18234, abs=1e-5)
    assert second[0].real == pytest.approx(0.42266, abs=1e-5)
    assert second[1].real == pytest.approx(2.08633, abs=1e-5)


def test_the_clearing_root_is_filtered_out():
    seg = segment_model()
    crit = critical_points(seg, likelihood_instance(seg, (3, 2, 4)))
    # v(1+x)^2 = 2sx(1+x) keeps the factor 1+x; x = -1 is a denominator hit
    assert len(crit) == 1
    assert crit[0][0] == pytest.approx(1.25, rel=1e-12)


def test_linear_model_has_one_critical_point():
    lin = ToricModel(((0,), (1,)), (3.0, 5.0))
    inst = likelihood_instance(lin, (2, 7))
    crit = critical_points(lin, inst)
    assert len(crit) == 1
    # v*c0 + (v - s)*c1*x = 0
    assert crit[0][0].real == pytest.approx(7.0 * 3.0 / (5.0 * 2.0), rel=1e-12)


def test_data_scaling_keeps_the_critical_points():
    seg = segment_model()
    a = critical_points(seg, likelihood_instance(seg, (3, 2, 4)))
    b = critical_points(seg, likelihood_instance(seg, (6, 4, 8)))
    assert len(a) == len(b) == 1
    assert abs(a[0][0] - b[0][0]) < 1e-12


def test_random_square_models_have_two_critical_points():
    rng = np.random.default_rng(5)
    for _ in range(50):
        m = square_model(*rng.uniform(0.5, 20.0, size=4))
        inst = likelihood_instance(m, tuple(rng.integers(1, 9, size=4)))
        assert len(critical_points(m, inst)) == 2


def test_positive_critical_points_map_to_the_target():
    inst = paper_instance()
    for pt in critical_points(PAPER_MODEL, inst):
        if all(z.real > 0 and abs(z.imag) < 1e-12 for z in pt):
            image = moment_map(PAPER_MODEL, inst, tuple(z.real for z in pt))
            assert np.allclose([g.real for g in image], inst.target,
                               rtol=0, atol=1e-10)


def test_positive_dimensional_critical_set_is_detected():
    system = likelihood_system(PAPER_MODEL, paper_instance())
    doubled = LikelihoodSystem((system.equations[0], system.equations[0]),
                               system.nonvanishing)
    from polypol.likelihood import _solve_2d
    with pytest.raises(PolypolError, match="positive-dimensional"):
        _solve_2d(doubled)


def test_moment_map_is_undefined_on_the_denominator():
    seg = segment_model()
    inst = likelihood_instance(seg, (3, 2, 4))
    with pytest.raises(DegenerateInputError, match="undefined"):
        moment_map(seg, inst, (-1.0,))


# ----------------------------------------------------------------------
# amplitude residue sums and trace tests


def test_amplitude_matches_the_closed_form():
    amp = amplitude_residue(PAPER_MODEL, paper_instance())
    assert abs(amp - 25.0 / 126.0) <= 1e-13 * (25.0 / 126.0)
    assert amp.real == pytest.approx(0.1984126984126981, rel=1e-12)


def test_amplitude_is_order_independent():
    inst = paper_instance()
    crit = critical_points(PAPER_MODEL, inst)
    forward = amplitude_residue(PAPER_MODEL, inst, points=crit)
    backward = amplitude_residue(PAPER_MODEL, inst, points=crit[::-1])
    assert forward == backward


def test_trace_test_square_polytope():
    report = trace_test(PAPER_MODEL, paper_instance())
    assert report.passed
    assert report.reference_value == pytest.approx(25.0 / 126.0, rel=1e-14)
    assert report.relative_error <= 1e-12


def test_trace_test_detects_a_dropped_point():
    inst = paper_instance()
    crit = critical_points(PAPER_MODEL, inst)
    report = trace_test(PAPER_MODEL, inst, points=crit[:1])
    assert not report.passed
    assert report.relative_error > 1e-2


def test_trace_test_random_square_models():
    rng = np.random.default_rng(11)
    for _ in range(25):
        m = square_model(*rng.uniform(0.5, 20.0, size=4))
        inst = likelihood_instance(m, tuple(rng.integers(1, 9, size=4)))
        assert trace_test(m, inst).relative_error <= 1e-9


def test_segment_trace_matches_the_dilated_interval():
    seg = segment_model()
    inst = likelihood_instance(seg, (3, 2, 4))
    amp = amplitude_residue(seg, inst)
    target = interval_form(0.0, 2.0 * inst.sample_size)(inst.target[0])
    assert amp.real == pytest.approx(target.real, rel=1e-12)
    assert trace_test(seg, inst).passed


def test_triangle_model_uses_the_hull_reference():
    tri = ToricModel(((0, 0), (1, 0), (0, 1)), (1.0, 1.0, 1.0))
    inst = likelihood_instance(tri, (2, 3, 4))
    assert len(critical_points(tri, inst)) == 1
    report = trace_test(tri, inst)
    assert report.passed
    assert report.relative_error <= 1e-12


def test_unsupported_regions_are_rejected():
    inst = paper_instance()
    with pytest.raises(UnsupportedInputError, match="not supported"):
        amplitude_residue(PAPER_MODEL, inst, region="disk")
    seg = segment_model()
    seg_inst = likelihood_instance(seg, (3, 2, 4))
    with pytest.raises(UnsupportedInputError, match="two-dimensional"):
        amplitude_residue(seg, seg_inst, region="simplex")
    with pytest.raises(PolypolError, match="no critical points"):
        amplitude_residue(PAPER_MODEL, inst, points=[])


def test_callable_region_weighs_like_the_polytope_density():
    inst = paper_instance()
    default = amplitude_residue(PAPER_MODEL, inst)
    custom = amplitude_residue(PAPER_MODEL, inst,
                               region=lambda pt: 1.0 / (pt[0] * pt[1]))
    assert default == custom


# ----------------------------------------------------------------------
# the image of the standard triangle


def test_image_polypol_conic_has_the_published_coefficients():
    p = image_polypol(PAPER_MODEL, paper_instance())
    conic = p.curves[2].form.dehomogenize()
    expected = {(0, 0): -528000.0, (1, 0): 383000.0, (0, 1): -111400.0,
                (1, 1): -153480.0, (2, 0): 55930.0, (0, 2): 75670.0}
    assert set(conic.terms) == set(expected)
    for e, c in expected.items():
        assert conic.terms[e].real == pytest.approx(c, rel=1e-12)
    verts = np.array([[complex(c).real for c in v.affine()] for v in p.vertices])
    assert np.allclose(verts[0], (0.0, 0.0))
    assert np.allclose(verts[1], (0.0, 80.0 / 23.0))
    assert np.allclose(verts[2], (20.0 / 17.0, 0.0))


def test_image_polypol_adjoint_and_value():
    p = image_polypol(PAPER_MODEL, paper_instance())
    a = adjoint(p)
    target = poly3({(0, 0, 1): 528000.0, (1, 0, 0): 65800.0,
                    (0, 1, 0): 263200.0})
    keys = sorted(set(a.alpha.terms) | set(target.terms))
    va = np.array([a.alpha.terms.get(e, 0.0) for e in keys], dtype=complex)
    vb = np.array([target.terms.get(e, 0.0) for e in keys], dtype=complex)
    ratio = va[int(np.argmax(np.abs(vb)))] / vb[int(np.argmax(np.abs(vb)))]
    assert float(np.max(np.abs(va - ratio * vb))) <= 1e-8 * float(np.max(np.abs(va)))
    value = canonical_form(p, a)((4.0, 7.0))
    assert value.real == pytest.approx(65840.0 / 370629.0, rel=1e-12)


def test_trace_test_simplex_image():
    report = trace_test(PAPER_MODEL, paper_instance(), region="simplex")
    assert report.passed
    exact = 65840.0 / 370629.0
    assert abs(report.residue_value - exact) <= 1e-12 * exact
    assert report.residue_value.real == pytest.approx(0.17764395122885715,
                                                      rel=1e-12)


def test_sampled_triangle_edge_images_lie_on_the_conic():
    inst = paper_instance()
    p = image_polypol(PAPER_MODEL, inst)
    conic = p.curves[2].form.dehomogenize()
    scale = conic.norm()
    rng = np.random.default_rng(17)
    for t in rng.uniform(0.001, 0.999, size=200):
        image = moment_map(PAPER_MODEL, inst, (t, 1.0 - t))
        assert abs(conic((image[0].real, image[1].real))) <= 1e-9 * scale


def test_symmetric_model_gives_a_symmetric_conic():
    m = square_model(1.0, 1.0, 1.0, 1.0)
    p = image_polypol(m, likelihood_instance(m, (1, 1, 1, 1)))
    conic = p.curves[2].form.dehomogenize()
    for (e1, e2), c in conic.terms.items():
        assert conic.terms.get((e2, e1), 0.0) == pytest.approx(c.real)


def test_image_polypol_needs_the_square_model():
    seg = segment_model()
    with pytest.raises(UnsupportedInputError, match="square model"):
        image_polypol(seg, likelihood_instance(seg, (1, 1, 1)))
