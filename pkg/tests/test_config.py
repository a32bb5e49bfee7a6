import math

import pytest

from dynirs.config import (
    CONFIG_KEYS,
    ConfigError,
    ScenarioConfig,
    config_from_dict,
    parse_config_text,
    parse_overrides,
    resolve_config,
)


def test_defaults_match_reference_scenario():
    c = ScenarioConfig()
    assert (c.bs_radius, c.radar_radius) == (200.0, 200.0)
    assert (c.num_bs_antennas, c.num_ue_antennas, c.num_radar_antennas, c.num_irs_elements) == (8, 2, 8, 32)
    assert (c.points_min, c.points_max) == (1, 5)
    assert c.reflection_coeff == 0.2
    assert c.carrier_freq == 31e9
    assert c.pathloss_exponent == 3.5
    assert c.bs_power == c.radar_power == 10.0
    assert c.convergence_tol == 1e-3
    assert c.balance == 0.5
    assert c.max_iterations == 100


def test_empty_file_gives_defaults(tmp_path):
    f = tmp_path / "empty.cfg"
    f.write_text("# nothing here\n\n")
    assert resolve_config(None, f, None) == ScenarioConfig()


def test_flag_beats_file_beats_default(tmp_path):
    f = tmp_path / "a.cfg"
    f.write_text("array.num_bs_antennas = 8\narray.num_irs_elements = 64  # bigger IRS\n")
    c = resolve_config(None, f, {"array.num_bs_antennas": "16"})
    assert c.num_bs_antennas == 16
    assert c.num_irs_elements == 64
    assert c.num_ue_antennas == 2


def test_range_error_names_key_and_location(tmp_path):
    f = tmp_path / "bad.cfg"
    f.write_text("\ntarget.reflection_coeff = 1.5\n")
    with pytest.raises(ConfigError, match=r"target\.reflection_coeff.*bad\.cfg:2"):
        resolve_config(None, f)


def test_unknown_key_rejected_with_location():
    with pytest.raises(ConfigError, match=r"array\.bogus.*cfg:3"):
        parse_config_text("\n\narray.bogus = 1\n", "cfg")


def test_type_mismatch_rejected():
    with pytest.raises(ConfigError, match="expected int"):
        parse_config_text("array.num_irs_elements = 3.5")
    with pytest.raises(ConfigError, match="expected float"):
        parse_overrides(["power.bs_power=ten"])


def test_malformed_line_rejected():
    with pytest.raises(ConfigError, match="key = value"):
        parse_config_text("array.num_irs_elements 32")


def test_inf_accepted_for_floats():
    c = resolve_config(None, None, {"channel.kappa_direct": "inf"})
    assert math.isinf(c.kappa_direct)


@pytest.mark.parametrize("changes", [
    {"num_irs_elements": 0}, {"reflection_coeff": 0.0}, {"irs_spacing": 0.5},
    {"ue_noise": 0.0}, {"balance": -1.0}, {"points_min": 3, "points_max": 2},
    {"convergence_tol": 0.0}, {"pathloss_convention": "dB"}, {"kappa_irs": -1.0},
])
def test_invariants_enforced(changes):
    with pytest.raises(ConfigError):
        ScenarioConfig(**changes)


def test_text_and_dict_round_trip():
    c = ScenarioConfig(ue_noise=1.2345678901234567e-27, kappa_irs=math.inf, num_irs_elements=64)
    assert ScenarioConfig(**parse_config_text(c.to_text())) == c
    assert config_from_dict(c.to_dict()) == c
    assert set(c.to_dict()) == set(CONFIG_KEYS)


def test_wavelength():
    assert ScenarioConfig().wavelength == pytest.approx(299_792_458 / 31e9, rel=1e-15)
