import io
import math

import mpmath
import numpy as np
import pytest

from dynirs import _random
from dynirs.channel import (
    LinkFadingSpec,
    ChannelSet,
    amplitude_scale,
    build_channel_set,
    dump_channels,
    load_channels,
    los_component,
    nlos_matrix,
    pathloss,
    rician_channel,
    steering,
    target_link,
)
from dynirs.config import ScenarioConfig
from dynirs.scenario import sample_layout

C = 299_792_458
WL = C / 31e9


def _c0_oracle():
    mpmath.mp.dps = 40
    return float((mpmath.mpf(C) / mpmath.mpf("31e9") / (4 * mpmath.pi)) ** 2)


def test_pathloss_reference_distance():
    assert pathloss(1.0, 3.5, WL) == pytest.approx(_c0_oracle(), rel=1e-14)
    # the quoted 5.929e-7 is rounded; the exact value with c = 299792458 m/s is 5.9224e-7
    assert pathloss(1.0, 3.5, WL) == pytest.approx(5.929e-7, rel=2e-3)
    assert pathloss(1.0, 2.0, WL) == pathloss(1.0, 7.0, WL)


def test_pathloss_100m():
    assert pathloss(100.0, 3.5, WL) == pytest.approx(_c0_oracle() * 1e-7, rel=1e-12)
    assert pathloss(100.0, 3.5, WL) == pytest.approx(5.93e-14, rel=2e-3)


@pytest.mark.parametrize("d", [0.0, -1.0])
def test_pathloss_rejects_nonpositive(d):
    with pytest.raises(ValueError):
        pathloss(d, 3.5, WL)


def test_steering_basic():
    assert np.array_equal(steering(5, 0.0), np.ones(5))
    np.testing.assert_allclose(steering(2, math.pi / 2), [1, -1], atol=1e-15)
    rng = np.random.default_rng(0)
    for th in rng.uniform(-math.pi, math.pi, 1000):
        a = steering(7, th)
        assert np.vdot(a, a).real == pytest.approx(7, rel=1e-12)


def test_steering_phase_progression():
    th, d = 0.3, 0.25
    a = steering(4, th, d)
    np.testing.assert_allclose(np.angle(a[1] * a[0].conj()), -2 * math.pi * d * math.sin(th), atol=1e-12)


@pytest.mark.parametrize("spacing", [0.0, 0.6])
def test_steering_rejects_spacing(spacing):
    with pytest.raises(ValueError):
        steering(3, 0.1, spacing)


def test_los_component_rank_and_norm():
    assert np.array_equal(los_component(3, 4, 0.0, 0.0), np.ones((3, 4)))
    rng = np.random.default_rng(1)
    for a, b in rng.uniform(-math.pi, math.pi, (200, 2)):
        h = los_component(5, 3, a, b)
        s = np.linalg.svd(h, compute_uv=False)
        assert s[1] < 1e-10 * s[0]
        assert np.linalg.norm(h) ** 2 == pytest.approx(15, rel=1e-12)
        np.testing.assert_allclose(np.abs(h), 1.0)


def test_rician_pure_los_is_exact():
    spec = LinkFadingSpec(kappa=math.inf, pathloss=3e-9, rx_count=3, tx_count=4, rx_angle=0.2, tx_angle=-0.7)
    h = rician_channel(spec, np.random.default_rng(0))
    assert np.array_equal(h, 3e-9 * los_component(3, 4, 0.2, -0.7))


def test_rician_power_split():
    kappa, n = 4.0, 100_000
    spec = LinkFadingSpec(kappa=kappa, pathloss=1.0, rx_count=1, tx_count=n, rx_angle=0.0, tx_angle=0.0)
    h = rician_channel(spec, np.random.default_rng(5)).ravel()
    nlos = (h - math.sqrt(kappa / (kappa + 1))) * math.sqrt(kappa + 1)
    assert abs(nlos.mean()) < 4 / math.sqrt(n)
    assert np.mean(np.abs(nlos) ** 2) == pytest.approx(1.0, abs=4 * math.sqrt(1 / n))
    assert abs(np.mean(nlos.real ** 2) - 0.5) < 4 * math.sqrt(0.5 / n)


def test_amplitude_conventions():
    assert amplitude_scale(4e-8) == 4e-8
    assert amplitude_scale(4e-8, "sqrt_power") == pytest.approx(2e-4)
    with pytest.raises(ValueError):
        amplitude_scale(1.0, "dB")


def test_link_spec_validation():
    with pytest.raises(ValueError):
        LinkFadingSpec(kappa=1.0, pathloss=0.0, rx_count=1, tx_count=1)
    with pytest.raises(ValueError):
        LinkFadingSpec(kappa=-1.0, pathloss=1.0, rx_count=1, tx_count=1)


def test_nlos_matrix_is_prefix_stable():
    seq = np.random.SeedSequence(7)
    small = nlos_matrix(np.random.default_rng(seq), 3, 4)
    big = nlos_matrix(np.random.default_rng(np.random.SeedSequence(7)), 5, 9)
    assert np.array_equal(big[:3, :4], small)


def test_target_link_structure():
    rng = np.random.default_rng(2)
    phases = np.array([0.1, 2.0, 4.0])
    h = target_link(3, 4, 0.4, 1e-8, rng, phases=phases)
    expected = math.sqrt(1e-8) * np.exp(1j * phases)[:, None] * steering(4, 0.4)[None, :]
    np.testing.assert_allclose(h, expected, rtol=1e-14)
    with pytest.raises(ValueError):
        target_link(0, 4, 0.4, 1e-8, rng)


def _channel_set(cfg=ScenarioConfig(), seed=0, trial=0):
    lay = sample_layout(cfg, _random.substream(seed, trial, _random.LAYOUT))
    return build_channel_set(lay, cfg, _random.substream(seed, trial, _random.FADING))


def test_channel_set_shapes_reciprocity_finite():
    cfg = ScenarioConfig()
    for t in range(20):
        ch = _channel_set(cfg, trial=t)
        d = ch.dims
        L, M, Q, N, K = d["L"], d["M"], d["Q"], d["N"], d["K"]
        assert (L, M, Q, N) == (8, 2, 8, 32) and 1 <= K <= 5
        shapes = {"bu": (M, L), "bi": (N, L), "br": (Q, L), "ru": (M, Q), "ri": (N, Q), "rt": (K, Q),
                  "iu": (M, N), "it": (K, N), "ir": (Q, N), "tr": (Q, K), "tu": (M, K), "bt": (K, L)}
        for name, shape in shapes.items():
            assert ch[name].shape == shape
            assert np.all(np.isfinite(ch[name]))
        assert np.array_equal(ch.ir, ch.ri.T)
        assert np.array_equal(ch.tr, ch.rt.T)
        assert ch["b", "u"] is ch.bu


def test_growing_bs_array_extends_direct_fading():
    a = _channel_set(ScenarioConfig(num_bs_antennas=4, kappa_direct=0.0))
    b = _channel_set(ScenarioConfig(num_bs_antennas=8, kappa_direct=0.0))
    # pure NLoS: the first 4 columns are the same draws up to the pathloss factor
    np.testing.assert_allclose(b.bu[:, :4], a.bu, rtol=1e-12)
    assert a.K == b.K


def test_replace_tracks_reverse_links():
    ch = _channel_set()
    ri = np.zeros_like(ch.ri)
    ch2 = ch.replace(ri=ri)
    assert np.array_equal(ch2.ir, ri.T)


def test_dump_round_trip():
    ch = _channel_set()
    buf = io.BytesIO()
    dump_channels(ch, buf)
    buf.seek(0)
    back = load_channels(buf)
    for name, mat in ch.links().items():
        assert np.array_equal(back[name], mat)


def test_dump_rejects_garbage():
    with pytest.raises(ValueError):
        load_channels(io.BytesIO(b"nope\n"))
    ch = _channel_set()
    buf = io.BytesIO()
    dump_channels(ch, buf)
    with pytest.raises(ValueError, match="truncated"):
        load_channels(io.BytesIO(buf.getvalue()[:-8]))


def test_channel_set_from_forward():
    z = np.zeros((2, 3))
    ch = ChannelSet.from_forward(bu=z, bi=z, br=z, ru=z, ri=np.ones((4, 5)), rt=np.ones((1, 5)),
                                 iu=z, it=z, tu=z, bt=z)
    assert ch.ir.shape == (5, 4) and ch.tr.shape == (5, 1)


def test_pathloss_decreasing():
    d = np.linspace(1, 500, 200)
    vals = [pathloss(x, 3.5, WL) for x in d]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_rician_moments():
    beta = 1e-3
    spec0 = LinkFadingSpec(kappa=0.0, pathloss=beta, rx_count=1, tx_count=100_000)
    h = rician_channel(spec0, np.random.default_rng(3))
    assert np.mean(np.abs(h) ** 2) == pytest.approx(beta ** 2, rel=0.02)
    kappa, n = 2.0, 100_000
    spec = LinkFadingSpec(kappa=kappa, pathloss=beta, rx_count=1, tx_count=n, tx_angle=0.4)
    h = rician_channel(spec, np.random.default_rng(4)).ravel()
    los = beta * math.sqrt(kappa / (kappa + 1)) * los_component(1, n, 0.0, 0.4).ravel()
    # de-rotate by the LoS phase so every entry has the same mean
    z = h * np.conj(los) / np.abs(los)
    sigma = beta * math.sqrt(1 / (kappa + 1))
    assert abs(z.mean() - abs(los[0])) < 3 * sigma / math.sqrt(n)


def test_target_rows_equal_up_to_phase():
    h = target_link(4, 6, -0.3, 2e-9, np.random.default_rng(8))
    np.testing.assert_allclose(np.abs(h), math.sqrt(2e-9), rtol=1e-12)
    for i in range(4):
        for j in range(4):
            ratio = h[i] / h[j]
            np.testing.assert_allclose(ratio, ratio[0], rtol=1e-10)
            assert abs(ratio[0]) == pytest.approx(1.0)


def test_pure_los_direct_link_rank_one_and_repeatable():
    cfg = ScenarioConfig(kappa_direct=math.inf)
    a, b = _channel_set(cfg, trial=4), _channel_set(cfg, trial=4)
    s = np.linalg.svd(a.bu, compute_uv=False)
    assert s[1] < 1e-10 * s[0]
    for name, mat in a.links().items():
        assert np.array_equal(mat, b[name])


def test_direct_link_power_moment():
    # fixed geometry, 10^4 fading draws: E||H_bu||^2 / (M L) = beta^2
    from dynirs.scenario import Layout

    cfg = ScenarioConfig()
    lay = Layout.from_positions({"bs": (0, 0), "ue": (60, 20), "radar": (100, -40),
                                 "target": (150, 10), "irs": (50, -20)})
    beta = pathloss(lay.distance("bs", "ue"), cfg.pathloss_exponent, cfg.wavelength)
    p = [np.linalg.norm(build_channel_set(lay, cfg, np.random.default_rng(i)).bu) ** 2 / 16
         for i in range(10_000)]
    assert np.mean(p) == pytest.approx(beta ** 2, rel=0.02)
