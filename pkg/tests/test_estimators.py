import math

import numpy as np
import pytest
from scipy.integrate import dblquad

from biharmonic_isp import greens
from biharmonic_isp.estimators import (
    ErgodicEstimate,
    MeasurementTable,
    band_exponent,
    band_frequencies,
    ergodic_average,
    expected_measurement,
    measurement_mc,
    reference_td,
    td_constant,
    td_matrix,
    variance_asymptotics_check,
)
from biharmonic_isp.forward import PreconditionError, ReceiverSet, WaveSampleSet, sweep
from biharmonic_isp.randsrc import ConfigurationError, Grid, NoiseRealization, StrengthField, eval_strength

G2 = Grid.from_bounds((-1, -1), (1, 1), 20)
G3 = Grid.from_bounds((-1, -1, -1), (1, 1, 1), 20)


def samples_from(values, freqs, rec=None):
    values = np.asarray(values, dtype=complex)
    rec = rec or ReceiverSet.single(*([[3.0, 0.0]] * values.shape[0]))
    return WaveSampleSet(values, np.asarray(freqs, dtype=float), 0, rec)


# -- measurement_mc -------------------------------------------------------------

def test_zero_samples_zero_table():
    t = measurement_mc(samples_from(np.zeros((3, 5, 2)), [1.0, 2.0]))
    assert np.all(t.values == 0) and np.all(t.stderr == 0)


def test_measurement_preconditions():
    with pytest.raises(ConfigurationError):
        measurement_mc(samples_from(np.zeros((1, 1, 1)), [1.0]))
    with pytest.raises(ConfigurationError):
        measurement_mc(samples_from(np.zeros((1, 4, 3)), [1.0, 2.0]))
    with pytest.raises(ConfigurationError):
        measurement_mc(samples_from(np.zeros((1, 4, 1)), [1.0]), kind="bogus")


def test_single_cell_limit():
    # one active cell, mu = 1: E M = |I| G(r, k)
    grid = Grid.from_bounds((0, 0), (0.1, 0.1), 1)
    f = StrengthField("constant", True, (-0.01, -0.01), (0.01, 0.01), value=1.0)
    assert np.count_nonzero(eval_strength(f, grid.nodes())) == 1
    rec = ReceiverSet.single([1.3, 0.4])
    k = 2.5
    t = measurement_mc(sweep(rec, [k], f, grid, 20000, 1))
    r = float(np.hypot(1.3, 0.4))
    want = grid.cell_area * greens.measurement_kernel_g(r, k)
    assert abs(t.values[0, 0] - want) <= 4 * t.stderr[0, 0]
    assert expected_measurement(rec, grid, f, k)[0] == pytest.approx(want, rel=1e-14)


def test_stderr_scales_as_inverse_sqrt_p():
    f = StrengthField.example1()
    rec = ReceiverSet.from_boxes([(1.5, 1.5)], 1.0, 4)
    se = {P: measurement_mc(sweep(rec, [2.0], f, G2, P, 3)).stderr.mean() for P in (250, 500, 1000)}
    assert se[500] / se[250] == pytest.approx(1 / math.sqrt(2), rel=0.2)
    assert se[1000] / se[250] == pytest.approx(0.5, rel=0.2)


def test_measurement_csv_roundtrip(tmp_path):
    rec = ReceiverSet.from_boxes([(1.5, 1.5), (-2.5, -2.5)], 1.0, 2)
    vals = np.arange(len(rec) * 2, dtype=float).reshape(-1, 2) / 7
    t = MeasurementTable(vals, vals / 10, np.array([1.0, 2.0]), "difference", rec)
    p = tmp_path / "m.csv"
    t.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "i1,i2,x1,x2,k,M,stderr"
    assert len(lines) == 1 + vals.size
    back = MeasurementTable.from_csv(p, rec)
    assert np.array_equal(back.values, vals)
    assert np.array_equal(back.stderr, vals / 10)


# -- ergodic averages ---------------------------------------------------------------

def test_exponents():
    assert band_exponent(0, 3) == 4
    assert band_exponent(0.5, 3) == 4.5
    assert band_exponent(0, 2) == 5
    assert band_exponent(-1, 2) == 4


def test_ergodic_constant_integrand():
    k = band_frequencies(1.0, 50)
    c = 0.3 - 0.4j
    # exponent m + 7 - d = 0 with d = 3, m = -4
    est = ergodic_average(samples_from(np.full((1, 1, 50), c), k), -4.0, 3)
    assert est.values[0] == pytest.approx(abs(c) ** 2, rel=1e-15)
    assert est.band == (1.0, 2.0) and est.exponent == 0 and est.nodes == 50


def test_ergodic_one_over_k():
    k = band_frequencies(1.0, 200)
    est = ergodic_average(samples_from((1 / k)[None, None, :], k), -4.0, 3)
    assert abs(est.values[0] - 0.5) <= 1e-4


def test_ergodic_band_must_be_covered():
    k = np.linspace(1.0, 1.8, 20)
    with pytest.raises(ConfigurationError):
        ergodic_average(samples_from(np.ones((1, 1, 20)), k), 0.0, 3)


def test_ergodic_refinement_invariance():
    def smooth(k):
        return np.exp(1j * 0.3 * k) * (1 + 0.2 * np.sin(0.1 * k)) / k**2

    vals = []
    for n in (400, 800, 1600):
        k = band_frequencies(50.0, n)
        vals.append(ergodic_average(samples_from(smooth(k)[None, None, :], k), 0.0, 3).values[0])
    assert abs(vals[1] / vals[0] - 1) <= 0.005
    assert abs(vals[2] / vals[0] - 1) <= 0.005


def test_ergodic_linear_in_abs2():
    k = band_frequencies(5.0, 101)
    u = (np.cos(k) + 2j)[None, None, :]
    a = ergodic_average(samples_from(u, k), 0.0, 2).values[0]
    b = ergodic_average(samples_from(2 * u, k), 0.0, 2).values[0]
    assert b == pytest.approx(4 * a, rel=1e-14)


def test_u_and_u3_ergodic_agree_2d():
    f = StrengthField.example1()
    rec = ReceiverSet.single([2.0, 2.0], [-2.5, 0.3])
    k = band_frequencies(20.0, 200)
    full = ergodic_average(sweep(rec, k, f, G2, 1, 4), 0.0, 2)
    trunc = ergodic_average(sweep(rec, k, f, G2, 1, 4, kind="truncated"), 0.0, 2)
    assert np.all(np.abs(trunc.values / full.values - 1) <= 0.02)


def test_ergodic_csv(tmp_path):
    est = ErgodicEstimate(np.array([1.0, 2.0]), (50.0, 100.0), 4.0, 200,
                          np.array([[2.0, 0, 0], [0, 3.0, 0]]), np.array([1.0, 4.0]))
    p = tmp_path / "e.csv"
    est.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "x1,x2,x3,Td_hat,Td_ref,ratio"
    assert lines[2].endswith(",2.0,4.0,0.5")


# -- reference functional ---------------------------------------------------------------

def test_td_constants():
    assert td_constant(2) == pytest.approx(1 / (32 * math.pi), rel=1e-15)
    assert td_constant(3) == pytest.approx(1 / (64 * math.pi**2), rel=1e-15)


def test_reference_td_zero_and_point_mass():
    x = np.array([[2.5, 0.0, 0.0]])
    assert reference_td(x, StrengthField.constant(0.0, 3), G3, 3)[0] == 0.0
    j = 4000
    y0 = G3.nodes()[j]
    vals = np.zeros(G3.size)
    vals[j] = 1 / G3.cell_area
    # discrete point mass of unit weight at node j
    got = (td_matrix(x, G3, 3) @ vals)[0]
    assert got == pytest.approx(1 / (64 * math.pi**2 * np.sum((x[0] - y0) ** 2)), rel=1e-12)


def test_reference_td_2d_against_adaptive_quadrature():
    f = StrengthField.example1()
    ref = reference_td([[2.0, 2.0]], f, G2, 2)[0]
    val, _ = dblquad(lambda y2, y1: 4 * np.exp(-4 * (y1 * y1 + y2 * y2)) / np.hypot(2 - y1, 2 - y2),
                     -1, 1, -1, 1, epsabs=1e-13, epsrel=1e-12)
    assert ref == pytest.approx(val / (32 * math.pi), rel=0.005)


def test_reference_td_rejects_inside_point():
    with pytest.raises(PreconditionError):
        reference_td([[0.2, 0.2]], StrengthField.example1(), G2, 2)


# -- asymptotics report -------------------------------------------------------------------

def test_asymptotics_zero_strength_undefined():
    rec = ReceiverSet.single([2.5, 0.0, 0.0])
    s = sweep(rec, [20.0, 40.0], StrengthField.constant(0.0, 3), G3, 3, 0)
    rep = variance_asymptotics_check(s, StrengthField.constant(0.0, 3), G3, 0.0, 3)
    assert not rep.defined
    assert rep.lines() == ["ratios undefined: reference T_d vanishes"]


def test_asymptotics_report_shapes():
    rec = ReceiverSet.single([2.5, 0.3])
    f = StrengthField.example1()
    s = sweep(rec, [10.0, 20.0], f, G2, 50, 0, kind="truncated")
    rep = variance_asymptotics_check(s, f, G2, 0.0, 2, kind="truncated")
    assert rep.defined and rep.ratios.shape == (1, 2)
    assert np.all(np.abs(rep.expected_ratios - 1) < 0.1)
    assert len(rep.lines()) == 3


def test_noise_realization_nodal_values():
    n = NoiseRealization(np.array([0.2, -0.4]), 0, 0, 0.04)
    assert n.nodal_values() == pytest.approx([5.0, -10.0])


@pytest.mark.slow
def test_ergodic_3d_converges_with_band():
    # one path, the ergodic3d geometry: the spread of T_hat / T_d about 1
    # shrinks roughly like T^{-1/2}
    from biharmonic_isp.config import ExperimentConfig
    from biharmonic_isp.experiments import ergodic_run

    cfg = ExperimentConfig.from_preset("ergodic3d")
    grid, field, cubes = cfg.grid(), cfg.strength(), cfg.receivers()
    sel = np.arange(0, len(cubes), 38)
    rec = ReceiverSet(cubes.points[sel], cubes.labels[sel])
    rms = {}
    for T in (50.0, 800.0):
        est = ergodic_run(rec, grid, field, T, int(4 * T), 0.0, cfg.seed)
        rms[T] = float(np.sqrt(np.mean((est.values / est.reference - 1) ** 2)))
    assert rms[800.0] < 0.5 * rms[50.0]
    assert rms[800.0] <= 0.15
