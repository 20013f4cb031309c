import math

import numpy as np
import pytest

import sqcav


def test_parameter_round_trip():
    wp = sqcav.pump_amplitude(10.0, 1.0)
    assert wp == pytest.approx(9.6403, rel=1e-4)
    assert sqcav.squeezing_param(10.0, wp) == pytest.approx(1.0, abs=1e-12)
    assert sqcav.squeezed_frequency(10.0, wp) == pytest.approx(2.6580, rel=1e-4)
    n_s, m_s = sqcav.noise_params(1.0)
    assert m_s**2 == pytest.approx(n_s * (n_s + 1.0))
    g_s, g_sp = sqcav.enhanced_couplings(2.0, 0.7)
    assert g_s**2 - g_sp**2 == pytest.approx(4.0)


def test_threshold_error_carries_kind():
    with pytest.raises(sqcav.SqcavError) as info:
        sqcav.squeezing_param(1.0, 1.2)
    assert info.value.args[0] == "threshold"


def test_empty_cavity_matches_gaussian_moments():
    delta_c, r = 0.5, 0.4
    res = sqcav.steady_state(delta_c, r, frame="lab")
    n, m = sqcav.gaussian_moments(delta_c, sqcav.pump_amplitude(delta_c, r))
    assert res["mean_photon"] == pytest.approx(n, abs=1e-6)
    assert abs(res["second_moment"] - m) < 1e-6
    assert res["output_flux"] == pytest.approx(res["lab_mean_photon"])

    sq = sqcav.steady_state(delta_c, r)
    assert sq["lab_mean_photon"] == pytest.approx(n, abs=1e-6)
    assert sum(sq["squeezed_fock_probs"]) <= 1.0 + 1e-9


def test_squeezed_vacuum_series():
    c = np.asarray(sqcav.squeezed_vacuum_amplitudes(0.5, 60))
    assert c[0] == pytest.approx(1.0 / math.sqrt(math.cosh(0.5)))
    assert np.all(c[1::2] == 0.0)
    assert np.sum(np.abs(c) ** 2) == pytest.approx(1.0, abs=1e-10)


def test_config_round_trip():
    text = "scenario = custom\ng0_over_kappa = 1\ndelta_c_over_kappa = 0.5\nr_values = 0.3\natom_present = both\n"
    diag = sqcav.validate_config(text)
    assert diag["ok"]
    rows = sqcav.run_config(text)
    assert len(rows) == 2
    empty, atom = rows
    assert not empty["atom_present"] and atom["atom_present"]
    assert atom["cutoff_converged"]
    assert len(atom["probs"]) == 11
    with pytest.raises(sqcav.SqcavError) as info:
        sqcav.run_config("no_such_key = 1\n")
    assert info.value.args[0] == "invalid-config"
