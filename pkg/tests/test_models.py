"""Radio/framing/compute model tests: frozen hand-computed values plus
seeded property checks."""

import math

import numpy as np
import pytest

from oranplan import models
from oranplan.errors import InfeasibleError, ParameterError


def test_symbol_duration_matches_14_symbol_slot():
    assert models.symbol_duration(0) == pytest.approx(1e-3 / 14)
    assert models.symbol_duration(1) == pytest.approx(1e-3 / 28)


def test_ru_max_throughput_reference_value():
    # Hand arithmetic: 12*273 = 3276 subcarrier-PRBs; Ts = 1e-3/28 s, so
    # 3276/Ts = 91,728,000 symbol-rate units; times 4*8*0.92578 = 29.62496
    # gives 2.71745e9; times (1 - 0.14) = 2.33700e9.
    cfg = models.RadioConfig(carriers=1, scaling=1.0, mimo_layers=4, modulation_order=8,
                             capability_mismatch=1.0, max_code_rate=0.92578,
                             numerology=1, prb_count=273, overhead=0.14)
    expected = 4 * 8 * 0.92578 * (3276 * 28000) * 0.86
    got = models.ru_max_throughput(cfg)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(2.337e9, rel=5e-4)


def test_ru_max_throughput_linear_in_layers_scaling_mismatch():
    base = models.RadioConfig()
    for field, half in (("mimo_layers", 2), ("scaling", 0.5), ("capability_mismatch", 0.5)):
        import dataclasses
        cfg = dataclasses.replace(base, **{field: half})
        assert models.ru_max_throughput(cfg) == pytest.approx(models.ru_max_throughput(base) / 2)


def test_ru_max_throughput_increasing_in_prb_and_layers():
    import dataclasses
    base = models.RadioConfig()
    more_prb = dataclasses.replace(base, prb_count=base.prb_count + 10)
    more_layers = dataclasses.replace(base, mimo_layers=base.mimo_layers + 1)
    assert models.ru_max_throughput(more_prb) > models.ru_max_throughput(base)
    assert models.ru_max_throughput(more_layers) > models.ru_max_throughput(base)


def test_ru_max_throughput_rejects_bad_field_by_name():
    cfg = models.RadioConfig(overhead=1.5)
    with pytest.raises(ParameterError, match="overhead"):
        models.ru_max_throughput(cfg)
    with pytest.raises(ParameterError, match="numerology"):
        models.ru_max_throughput(models.RadioConfig(numerology=9))


def test_path_loss_reference_values():
    assert models.path_loss("macro", 1.0) == pytest.approx(128.1, abs=1e-12)
    assert models.path_loss("macro", 2.0) == pytest.approx(139.4187, abs=5e-5)
    assert models.path_loss("small", 0.5) == pytest.approx(27.9691, abs=5e-5)


def test_path_loss_strictly_increasing():
    rng = np.random.default_rng(42)
    for kind in ("macro", "small"):
        for _ in range(50):
            d1, d2 = sorted(rng.uniform(0.05, 10.0, size=2))
            if d1 == d2:
                continue
            assert models.path_loss(kind, d1) < models.path_loss(kind, d2)


def test_path_loss_domain_error():
    with pytest.raises(ParameterError):
        models.path_loss("macro", 0.0)
    with pytest.raises(ParameterError):
        models.path_loss("macro", -1.0)
    with pytest.raises(ParameterError):
        models.path_loss("femto", 1.0)


def test_ue_throughput_unit_sinr():
    # Noise over 1 MHz at -174 dBm/Hz totals -114 dBm; a 114 dB loss on a
    # 0 dBm transmitter gives SINR exactly 1, so capacity is B * log2(2).
    thr = models.ue_throughput(1e6, 0.0, -174.0, 114.0)
    assert thr == pytest.approx(1e6, rel=1e-9)


def test_ue_throughput_monotone_in_power_and_loss():
    base = models.ue_throughput(1e6, 30.0, -174.0, 100.0)
    assert models.ue_throughput(1e6, 33.0, -174.0, 100.0) > base
    assert models.ue_throughput(1e6, 30.0, -174.0, 103.0) < base


def test_ue_throughput_with_interferer_reference():
    # Independent step-by-step dB -> linear oracle.
    bw, p_tx, noise = 100e6, 46.0, -174.0
    own = models.path_loss("macro", 0.5)
    other = models.path_loss("macro", 1.0)
    sig = 10 ** ((p_tx - own) / 10.0)
    interf = 10 ** ((p_tx - other) / 10.0)
    noise_mw = 10 ** (noise / 10.0) * bw
    expected = bw * math.log2(1.0 + sig / (noise_mw + interf))
    got = models.ue_throughput(bw, p_tx, noise, own, [(other, p_tx)])
    assert got == pytest.approx(expected, rel=1e-12)


def test_max_coverage_distance_cap_and_monotonicity():
    kw = dict(bandwidth=100e6, tx_power_dbm=46.0, noise_dbm_hz=-174.0, kind="macro")
    assert models.max_coverage_distance(1.0, **kw) == pytest.approx(1.0)  # trivially low rate
    d_hi = models.max_coverage_distance(50e6, **kw)
    d_lo = models.max_coverage_distance(5e9, **kw, cap_km=50.0)
    assert d_lo <= 50.0
    assert models.max_coverage_distance(6e9, **kw, cap_km=50.0) <= d_lo + 1e-9


def test_max_coverage_distance_bisection_soundness():
    kw = dict(bandwidth=100e6, tx_power_dbm=30.0, noise_dbm_hz=-174.0, kind="macro")
    rate = 2.5e9
    d = models.max_coverage_distance(rate, cap_km=60.0, **kw)
    assert d < 60.0  # the cap must not bind for this check
    at_d = models.ue_throughput(kw["bandwidth"], kw["tx_power_dbm"], kw["noise_dbm_hz"],
                                models.path_loss("macro", d))
    beyond = models.ue_throughput(kw["bandwidth"], kw["tx_power_dbm"], kw["noise_dbm_hz"],
                                  models.path_loss("macro", d + 2e-3))
    assert at_d >= rate
    assert beyond < rate


def test_max_coverage_distance_unreachable():
    with pytest.raises(InfeasibleError):
        models.max_coverage_distance(1e15, 100e6, 30.0, -174.0, "macro")


def test_bbu_gops_reference_and_zero():
    spec = models.ComputeSpec(antennas=4, modulation_bits=6, code_rate=1.0, layers=2, prb=100)
    assert models.bbu_gops(spec) == pytest.approx(320.0, rel=1e-12)
    assert models.bbu_gops(models.ComputeSpec(prb=0)) == 0.0


def test_split_gops_paper_total_exact():
    assert models.split_gops(1800.0) == (720.0, 900.0, 180.0)


def test_split_gops_conserves_total_exactly():
    rng = np.random.default_rng(7)
    for _ in range(100):
        total = float(rng.uniform(0, 1e5))
        a = rng.uniform(0.05, 0.9)
        b = rng.uniform(0.05, 1.0 - a - 0.01)
        parts = models.split_gops(total, (a, b, 1.0 - a - b))
        assert sum(parts) == total  # exact, by construction of the last part


def test_split_gops_edges():
    assert models.split_gops(0.0) == (0.0, 0.0, 0.0)
    assert models.split_gops(123.0, (1.0, 0.0, 0.0)) == (123.0, 0.0, 0.0)
    with pytest.raises(ParameterError):
        models.split_gops(1.0, (0.5, 0.4, 0.2))


def test_burst_frames_reference():
    eth = models.EthernetModel(payload_bits=12000, frame_bits=12336, burst_interval=0.5e-3)
    count, actual = models.burst_frames(1.111e9, eth)
    assert count == 47
    assert actual == pytest.approx(47 * 12336 / 0.5e-3, rel=1e-12)
    assert actual == pytest.approx(1.1596e9, rel=5e-4)


def test_burst_frames_edges():
    eth = models.EthernetModel()
    assert models.burst_frames(0.0, eth) == (0, 0.0)
    # Exactly one payload per interval sits on the ceiling boundary.
    rate = eth.payload_bits / eth.burst_interval
    count, actual = models.burst_frames(rate, eth)
    assert count == 1
    assert actual == pytest.approx(eth.frame_bits / eth.burst_interval)


def test_burst_quantization_bounds():
    eth = models.EthernetModel()
    rng = np.random.default_rng(3)
    step = eth.frame_bits / eth.burst_interval
    for _ in range(200):
        rate = float(rng.uniform(1e3, 20e9))
        _, actual = models.burst_frames(rate, eth)
        scaled = rate * eth.frame_bits / eth.payload_bits
        assert scaled <= actual + 1e-6
        assert actual < scaled + step


def test_physical_constants_ordering():
    c = models.PhysicalConstants()
    assert c.air_speed > c.fiber_speed
    with pytest.raises(ParameterError):
        models.PhysicalConstants(fiber_speed=4e8)
