import math
import warnings

import numpy as np
import pytest

from extspec.eigensolve import (
    ConstraintUnreachable,
    IsolationError,
    NotConverged,
    SolveConfig,
    closedness_check,
    isolation_gap,
    principal,
    refine_and_extrapolate,
    second_radial_general_p,
    spectrum_p2,
    sturm_count,
)
from extspec.radialfem import assemble_p2, build_grid, energy_G, grading_for_first_element
from extspec.rearrange import ExponentContext
from extspec.weightlib import Piecewise, PowerLaw, SignedSum

from oracles import dense_fd_eigs, reference_lambda, shooting_principal

ctx2 = ExponentContext(3, 2.0)
w4 = PowerLaw(1, 4)


@pytest.fixture(scope="module")
def ref_principal():
    return principal(w4, ctx2, build_grid(2048, 64.0))


@pytest.fixture(scope="module")
def ref_spectrum():
    return spectrum_p2(w4, ctx2, build_grid(4096, 64.0), k=5)


def test_principal_reference(ref_principal):
    r = ref_principal
    assert r.converged and r.residual <= 1e-8
    assert r.eigenvalue == pytest.approx(reference_lambda(1, 64), rel=5e-3)
    assert r.eigenvalue == pytest.approx(dense_fd_eigs(64.0, 2000, 1)[0], rel=1e-3)
    assert abs(energy_G(r.field, r.grid, w4, 2.0) - 1) <= 1e-10
    assert r.diagnostics["positive"]
    assert np.all(r.field.values[:-1] > 0)
    d = r.to_dict()
    assert d["lambda"] == r.eigenvalue and d["n"] == 2048 and d["weight"]["kind"] == "power"


@pytest.mark.parametrize("p,q,R", [(3.0, 6.0, 8.0), (1.5, 4.0, 8.0), (2.5, 5.0, 16.0)])
def test_principal_general_p_against_shooting(p, q, R):
    r = principal(PowerLaw(1, q), ExponentContext(3, p), build_grid(1024, R))
    assert r.converged and r.diagnostics["positive"]
    assert r.eigenvalue == pytest.approx(shooting_principal(3, p, q, R), rel=1e-4)


def test_principal_homogeneity(ref_principal):
    r2 = principal(w4.scaled(2.0), ctx2, build_grid(2048, 64.0))
    assert r2.eigenvalue == pytest.approx(ref_principal.eigenvalue / 2, rel=1e-8)
    # minimiser rescaled by 2^(-1/p)
    np.testing.assert_allclose(r2.field.values, ref_principal.field.values / math.sqrt(2),
                               rtol=1e-5, atol=1e-8)


def test_principal_R_monotone_on_nested_meshes():
    lam32 = principal(w4, ctx2, build_grid(31 * 16, 32.0)).eigenvalue
    lam64 = principal(w4, ctx2, build_grid(63 * 16, 64.0)).eigenvalue
    assert lam32 >= lam64


def test_principal_constraint_unreachable():
    with pytest.raises(ConstraintUnreachable, match="constraint unreachable"):
        principal(PowerLaw(-1, 4), ctx2, build_grid(64, 8.0))
    with pytest.raises(ConstraintUnreachable):
        principal(Piecewise(((100.0, 200.0, 1.0),)), ctx2, build_grid(64, 64.0))


def test_principal_sign_changing_weight():
    w = SignedSum((PowerLaw(1, 4), PowerLaw(-0.5, 3, 2.0)))
    r = principal(w, ctx2, build_grid(512, 16.0))
    assert r.converged and r.diagnostics["positive"]
    # a lighter positive part raises the eigenvalue
    assert r.eigenvalue > principal(w4, ctx2, build_grid(512, 16.0)).eigenvalue


def test_principal_not_converged_warns():
    with warnings.catch_warnings(record=True) as wl:
        warnings.simplefilter("always")
        r = principal(PowerLaw(1, 4), ExponentContext(3, 3.0), build_grid(256, 16.0),
                      SolveConfig(max_iters=3, restarts=1))
    assert any(issubclass(x.category, NotConverged) for x in wl)
    assert not r.converged and math.isfinite(r.eigenvalue)


@pytest.mark.parametrize("kw", [dict(residual_tol=0), dict(backtrack=1.0), dict(restarts=0),
                                dict(eps_schedule=(1e-3, -1.0))])
def test_solve_config_validation(kw):
    with pytest.raises(ValueError):
        SolveConfig(**kw)


def test_principal_deterministic():
    g = build_grid(300, 10.0)
    a = principal(w4, ExponentContext(3, 1.7), g, SolveConfig(seed=3))
    b = principal(w4, ExponentContext(3, 1.7), g, SolveConfig(seed=3))
    assert a.eigenvalue == b.eigenvalue
    np.testing.assert_array_equal(a.field.values, b.field.values)


def test_sturm_count_matches_dense():
    g = build_grid(60, 8.0, 1.02)
    s = assemble_p2(g, w4, 0)
    ev = np.sort(np.linalg.eigvals(np.linalg.solve(s.Mg.dense(), s.K.dense())).real)
    sig = np.array([0.5 * (ev[i] + ev[i + 1]) for i in range(10)])
    np.testing.assert_array_equal(sturm_count(s.K, s.Mg, sig), np.arange(1, 11))


def test_spectrum_reference(ref_spectrum, ref_principal):
    lams = [r.eigenvalue for r in ref_spectrum]
    want = [reference_lambda(k, 64) for k in range(1, 6)]
    np.testing.assert_allclose(lams, want, rtol=1e-2)
    np.testing.assert_allclose(lams, dense_fd_eigs(64.0, 2000, 5), rtol=5e-3)
    assert all(b > a for a, b in zip(lams, lams[1:]))
    assert lams[0] == pytest.approx(ref_principal.eigenvalue, rel=1e-3)
    assert [r.diagnostics["radial_index"] for r in ref_spectrum] == [1, 2, 3, 4, 5]
    assert ref_spectrum[0].diagnostics["positive"]
    for r in ref_spectrum:
        assert r.diagnostics["G_value"] == pytest.approx(1.0, rel=1e-10)


def test_spectrum_angular_modes():
    res = spectrum_p2(w4, ctx2, build_grid(1024, 32.0), k=12, l_max=2)
    by_l = {}
    for r in res:
        by_l.setdefault(r.diagnostics["l"], []).append(r.eigenvalue)
    assert set(by_l) == {0, 1, 2}
    for vals in by_l.values():
        assert all(b > a for a, b in zip(vals, vals[1:]))
    for j in range(min(len(v) for v in by_l.values())):
        assert by_l[0][j] < by_l[1][j] < by_l[2][j]
    lams = [r.eigenvalue for r in res]
    assert lams == sorted(lams)


def test_spectrum_validation():
    g = build_grid(64, 8.0)
    with pytest.raises(ValueError):
        spectrum_p2(w4, ExponentContext(3, 3.0), g, k=2)
    with pytest.raises(ValueError):
        spectrum_p2(SignedSum((w4, PowerLaw(-1, 3, 2.0))), ctx2, g, k=2)
    with pytest.raises(ValueError):
        spectrum_p2(w4, ctx2, g, k=0)


def test_second_radial_p2_matches_spectrum():
    g = build_grid(1024, 64.0)
    sec = second_radial_general_p(w4, ctx2, g)
    ref = spectrum_p2(w4, ctx2, g, k=2)
    assert sec.eigenvalue == pytest.approx(ref[1].eigenvalue, rel=1e-2)
    assert sec.eigenvalue > principal(w4, ctx2, g).eigenvalue
    assert sec.diagnostics["approximation"] is False
    assert 1.0 < sec.diagnostics["nodal_radius"] < 64.0


def test_second_radial_p3_regression():
    g = build_grid(1024, 32.0, grading_for_first_element(1024, 32.0, 1e-3))
    sec = second_radial_general_p(PowerLaw(1, 6), ExponentContext(3, 3.0), g,
                                  SolveConfig(residual_tol=1e-9))
    assert sec.converged
    assert sec.diagnostics["approximation"] is True
    assert sec.eigenvalue == pytest.approx(85.83507882420267, rel=1e-9)
    assert max(sec.diagnostics["pieces"]) == sec.eigenvalue


def test_second_radial_failures():
    with pytest.raises(ValueError):
        second_radial_general_p(w4, ctx2, build_grid(4, 8.0))
    # positive part only next to r = 1: the outer nodal domain never sees G > 0
    with pytest.raises(ConstraintUnreachable):
        second_radial_general_p(Piecewise(((1.0, 1.05, 1.0),)), ctx2, build_grid(64, 8.0))


def test_refine_and_extrapolate_reference():
    res = [principal(w4, ctx2, build_grid(4096, R)) for R in (16.0, 32.0, 64.0)]
    ex = refine_and_extrapolate(res)
    assert ex.limit == pytest.approx(math.pi**2 / 4, rel=1e-2)
    assert ex.h_rate is None
    limit, R_rate, h_rate = ex
    assert R_rate > 0


def test_refine_and_extrapolate_h_rate():
    res = [principal(w4, ctx2, build_grid(1024, R)) for R in (16.0, 32.0)]
    res += [principal(w4, ctx2, build_grid(n, 64.0)) for n in (256, 512, 1024)]
    ex = refine_and_extrapolate(res)
    assert ex.h_rate == pytest.approx(2.0, abs=0.2)


def test_refine_and_extrapolate_rejections(ref_principal):
    with pytest.raises(ValueError):
        refine_and_extrapolate([ref_principal])
    a = principal(w4, ctx2, build_grid(256, 16.0))
    b = principal(w4, ctx2, build_grid(256, 32.0))
    bad = principal(PowerLaw(0.5, 4), ctx2, build_grid(256, 64.0))
    with pytest.raises(ValueError, match="non-monotone"):
        refine_and_extrapolate([a, b, bad])


def test_isolation_gap(ref_spectrum):
    rep = isolation_gap(ref_spectrum[:2])
    closed = reference_lambda(2, 64) - reference_lambda(1, 64)
    assert rep.gap == pytest.approx(closed, rel=1e-2)
    assert rep.gap == pytest.approx(20.37, abs=0.05)
    assert rep.min_interior > 0
    with pytest.raises(IsolationError):
        isolation_gap([ref_spectrum[0], ref_spectrum[0]])


def test_isolation_gap_rejects_unconverged():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r = principal(w4, ExponentContext(3, 3.0), build_grid(64, 8.0), SolveConfig(max_iters=2, restarts=1))
    with pytest.raises(ValueError):
        isolation_gap([r, r])


def test_closedness_reference():
    fam = [spectrum_p2(w4, ctx2, build_grid(n, 64.0), k=3) for n in (1024, 2048, 4096)]
    v = closedness_check(fam)
    assert v.closed
    for b in v.branches:
        assert 3.0 <= b.ratios[0] <= 5.0


def test_closedness_controls():
    assert closedness_check([[1.0, 2.0]] * 3).closed
    noisy = [[1.0, 5.0], [1.01, 4.0], [1.0125, 4.5]]
    v = closedness_check(noisy)
    assert not v.closed and v.failing == [1]
    with pytest.raises(ValueError):
        closedness_check([[1.0], [1.0]])
