"""
Tests for the rootfinder module.
"""

import math

import numpy as np
import pytest
from scipy.special import lambertw

from app.exceptions import (
    BoundaryTooCloseError,
    BranchCutError,
    DomainError,
    MarginNonPositiveError,
    SubdivisionLimitError,
)
from app.rootfinder import (
    Circle,
    Rectangle,
    RootMethod,
    certification_disk,
    certify_unstable,
    find_roots,
    lemma_center,
    lemma_family,
    lemma_root,
    newton_refine,
    rouche_margin,
    spectral_abscissa_window,
    winding_number,
)
from app.symbols import FamilyKind, Mode, SymbolFamily, relative_residual

PARABOLIC = SymbolFamily(kind=FamilyKind.PARABOLIC_DELAY)
HYPERBOLIC = SymbolFamily(kind=FamilyKind.HYPERBOLIC_DELAY)
STABLE = SymbolFamily(kind=FamilyKind.STABLE_PARABOLIC_DELAY)
MAXWELL = SymbolFamily(kind=FamilyKind.MAXWELL_CATTANEO)
ALL_FAMILIES = [SymbolFamily(kind=kind) for kind in FamilyKind]

# lambda + exp(-lambda) = 0 has the roots W_k(-1)
W0_MINUS_ONE = complex(-0.3181315052047641, 1.3372357014306895)


@pytest.fixture
def branch_box():
    return Rectangle.from_bounds((-1.0, 1.0, 0.1, 40.0))


def test_rectangle_geometry():
    box = Rectangle.from_bounds((0.0, 2.0, -1.0, 1.0))
    assert box.perimeter == 8.0
    assert box.center == complex(1.0, 0.0)
    points = box.boundary_points(64)
    assert all(box.contains(complex(z)) for z in points)
    children = box.split(0.25, 0.5)
    assert sum(child.width * child.height for child in children) == pytest.approx(4.0)
    dilated = box.dilate(1.01)
    assert dilated.center == pytest.approx(box.center)
    assert dilated.width == pytest.approx(2.02)


def test_rectangle_rejects_empty():
    with pytest.raises(ValueError):
        Rectangle.from_bounds((1.0, 1.0, 0.0, 1.0))


def test_winding_single_branch_root(branch_box):
    assert winding_number(PARABOLIC, Mode(n=1), branch_box) == 1


def test_find_roots_branch_box(branch_box):
    roots = find_roots(PARABOLIC, Mode(n=1), branch_box)
    assert len(roots) == 1
    assert roots[0].value == pytest.approx(W0_MINUS_ONE, abs=1e-12)
    assert roots[0].method is RootMethod.NEWTON_REFINED
    assert roots[0].residual <= 1e-9


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_parabolic_abscissa_is_principal_lambert(n):
    """lambda + n^2 exp(-lambda) = 0 means lambda = W_k(-n^2); W_0 is rightmost."""
    mode = Mode(n=n)
    box = Rectangle.from_bounds((-5.0, 10.0, -50.0, 50.0))
    expected = lambertw(-float(n * n)).real
    assert spectral_abscissa_window(PARABOLIC, mode, box) == pytest.approx(expected, abs=1e-9)


def test_parabolic_n2_conjugate_closure():
    box = Rectangle.from_bounds((-3.0, 3.0, -10.0, 10.0))
    mode = Mode(n=2)
    roots = find_roots(PARABOLIC, mode, box)
    assert len(roots) == winding_number(PARABOLIC, mode, box) == 4
    values = [r.value for r in roots]
    for z in values:
        assert min(abs(z.conjugate() - w) for w in values) < 1e-8
    assert max(r.re for r in roots) == pytest.approx(0.679, abs=0.01)


@pytest.mark.parametrize("family", ALL_FAMILIES, ids=lambda f: f.token)
@pytest.mark.parametrize("n", [1, 2, 3])
def test_conjugate_closure(family, n):
    box = Rectangle.from_bounds((-4.3, 3.1, -12.7, 12.7))
    values = [r.value for r in find_roots(family, Mode(n=n), box)]
    for z in values:
        assert min(abs(z.conjugate() - w) for w in values) < 1e-8


def test_hyperbolic_n1_dominant_root():
    box = Rectangle.from_bounds((-5.0, 10.0, -50.0, 50.0))
    roots = find_roots(HYPERBOLIC, Mode(n=1), box)
    dominant = max(roots, key=lambda r: r.re)
    assert dominant.re == pytest.approx(0.325, abs=0.01)
    assert abs(dominant.im) == pytest.approx(0.786, abs=0.01)


def test_maxwell_roots_found_by_subdivision():
    roots = find_roots(MAXWELL, Mode(n=2), Rectangle.from_bounds((-5.0, 10.0, -50.0, 50.0)))
    assert len(roots) == 2
    for root in roots:
        assert root.re == pytest.approx(-0.5, abs=1e-10)
        assert abs(root.im) == pytest.approx(math.sqrt(15) / 2, abs=1e-10)


@pytest.mark.parametrize("family", ALL_FAMILIES, ids=lambda f: f.token)
def test_count_consistency_on_random_boxes(family):
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(50):
        x0, y0 = rng.uniform(-4, 3), rng.uniform(-20, 15)
        box = Rectangle.from_bounds((x0, x0 + rng.uniform(0.5, 4), y0, y0 + rng.uniform(1, 10)))
        mode = Mode(n=int(rng.integers(1, 6)))
        try:
            count = winding_number(family, mode, box)
        except BoundaryTooCloseError:
            continue
        roots = find_roots(family, mode, box)
        assert len(roots) == count
        assert all(box.contains(r.value) and r.residual <= 1e-9 for r in roots)
        assert len({(round(r.re, 8), round(r.im, 8)) for r in roots}) == len(roots)
        checked += 1
    assert checked > 0


def test_roots_sorted():
    roots = find_roots(PARABOLIC, Mode(n=3), Rectangle.from_bounds((-5.0, 5.0, -30.0, 30.0)))
    keys = [(r.re, r.im) for r in roots]
    assert keys == sorted(keys)


def test_stable_window_is_empty():
    box = Rectangle.from_bounds((0.5, 40.0, -200.0, 200.0))
    for n in (1, 5, 20):
        assert winding_number(STABLE, Mode(n=n), box) == 0


def test_root_on_edge_is_too_close():
    box = Rectangle.from_bounds((W0_MINUS_ONE.real, 1.0, 0.1, 40.0))
    with pytest.raises(BoundaryTooCloseError):
        winding_number(PARABOLIC, Mode(n=1), box)


def test_find_roots_dilates_off_an_edge_root():
    box = Rectangle.from_bounds((W0_MINUS_ONE.real, 1.0, 0.1, 40.0))
    roots = find_roots(PARABOLIC, Mode(n=1), box)
    assert len(roots) == 1
    assert roots[0].value == pytest.approx(W0_MINUS_ONE, abs=1e-12)


def test_subdivision_limit_reports_centroid():
    box = Rectangle.from_bounds((-3.0, 3.0, -10.0, 10.0))
    with pytest.raises(SubdivisionLimitError) as excinfo:
        find_roots(PARABOLIC, Mode(n=2), box, max_depth=0)
    assert excinfo.value.detail["method"] == "winding_subdivision"
    assert excinfo.value.detail["certified"] is False
    assert excinfo.value.detail["count"] == 4


def test_newton_refine_polishes():
    z, residual, iterations = newton_refine(PARABOLIC, Mode(n=1), W0_MINUS_ONE + complex(0.01, -0.01))
    assert z == pytest.approx(W0_MINUS_ONE, abs=1e-13)
    assert residual <= 1e-12
    assert 1 <= iterations <= 60


def test_circle_winding():
    mode = Mode(n=1)
    assert winding_number(PARABOLIC, mode, Circle.around(W0_MINUS_ONE, 0.5)) == 1
    assert winding_number(PARABOLIC, mode, Circle.around(complex(3.0, 0.0), 1.0)) == 0


def test_rouche_margin_lemma_disk():
    w = lemma_center(Mode(n=100))
    assert w == pytest.approx(complex(math.log(10000.0), math.pi))
    assert rouche_margin(1, w) > 0
    assert rouche_margin(2, lemma_center(Mode(n=1000))) > 0
    assert rouche_margin(1, lemma_center(Mode(n=1))) < 0


def test_rouche_margin_errors():
    with pytest.raises(DomainError):
        rouche_margin(1, complex(5.0, math.pi), samples=128)
    with pytest.raises(BranchCutError):
        rouche_margin(1, complex(-1.0, 0.1))


@pytest.mark.parametrize("b", [1, 2])
def test_certify_unstable_sequence(b):
    roots = [certify_unstable(b, Mode(n=n)) for n in (10, 100, 1000, 10000)]
    family = PARABOLIC if b == 1 else HYPERBOLIC
    for root in roots:
        assert root.certified
        assert root.method is RootMethod.CERTIFIED_ROUCHE
        assert root.rouche_margin > 0
        assert root.residual <= 1e-9
        assert root.re > 0
        assert relative_residual(family, Mode(n=root.n), root.value) <= 1e-9
    real_parts = [r.re for r in roots]
    assert all(a < b for a, b in zip(real_parts, real_parts[1:]))


def test_certify_unstable_expected_values():
    assert certify_unstable(1, Mode(n=100)).re == pytest.approx(7.17, abs=0.05)
    assert certify_unstable(2, Mode(n=10)).re == pytest.approx(2.40, abs=0.05)


def test_certify_unstable_fails_for_n1():
    with pytest.raises(MarginNonPositiveError):
        certify_unstable(1, Mode(n=1))


def test_certify_rejects_bad_b():
    with pytest.raises(DomainError):
        certify_unstable(3, Mode(n=10))


def test_lemma_root_matches_certified():
    mode = Mode(n=100)
    root = lemma_root(2, mode)
    assert not root.certified
    assert root.value == pytest.approx(certify_unstable(2, mode).value, abs=1e-9)


def test_newton_refine_reaches_rounding_level():
    z, residual, _ = newton_refine(PARABOLIC, Mode(n=1), W0_MINUS_ONE + complex(0.3, -0.2))
    assert z == pytest.approx(W0_MINUS_ONE, abs=1e-13)
    assert residual <= 1e-14
    assert relative_residual(PARABOLIC, Mode(n=1), z) == residual


@pytest.mark.parametrize("b", [1, 2])
@pytest.mark.parametrize("n", [10, 100, 1000, 10000])
def test_certification_disk_holds_one_symbol_zero(b, n):
    """The accepted disk holds exactly one zero of the original symbol, and the root."""
    mode = Mode(n=n)
    disk, margin = certification_disk(b, mode)
    assert margin > 0
    assert disk.center.real - disk.radius > 0
    assert winding_number(lemma_family(b), mode, disk) == 1
    root = certify_unstable(b, mode)
    assert disk.contains(root.value)
    assert root.rouche_margin == margin


@pytest.mark.parametrize("b, n", [(1, 1000), (1, 10000), (2, 1000), (2, 10000)])
def test_crowded_lemma_disk_falls_back(b, n):
    """At large n the Lemma disk holds several zeros, so the tightened disk is used."""
    mode = Mode(n=n)
    w = lemma_center(mode)
    lemma = Circle.around(w, abs(w) / 2.0)
    assert winding_number(lemma_family(b), mode, lemma) > 1
    disk, _ = certification_disk(b, mode)
    assert disk.radius < lemma.radius
