import numpy as np
import pytest
from hypothesis import given, strategies as st

from ci_linkperf.link_metrics import (FIG7_POWER_MODEL, BlockConfig, PowerModel,
                                      block_error_rate, dbm_to_watts, power_efficiency,
                                      throughput, throughput_from_error_rate, total_power)


def test_dbm():
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(35.0) == pytest.approx(3.16227766, rel=1e-8)


@pytest.mark.parametrize("M,bits", [(2, 100), (4, 200), (16, 400)])
def test_block_from_symbols(M, bits):
    cfg = BlockConfig.from_symbols(M, 100, 5)
    assert cfg.block_bits == bits and cfg.correctable == 5 and cfg.block_length == 100


@pytest.mark.parametrize("kw", [dict(block_bits=0), dict(block_bits=4, correctable=-1),
                                dict(block_bits=4, correctable=5),
                                dict(block_bits=10, bits_per_symbol=2, block_length=4)])
def test_block_rejects(kw):
    with pytest.raises(ValueError):
        BlockConfig(**kw)


@given(st.floats(0.0, 1.0), st.integers(1, 300))
def test_bler_no_correction(p, n):
    assert block_error_rate(p, BlockConfig(n)) == pytest.approx(1 - (1 - p) ** n, abs=1e-12)


def test_bler_limits_and_order():
    cfg = BlockConfig(200, 5)
    assert block_error_rate(0.0, cfg) == 0.0
    assert block_error_rate(1.0, cfg) == 1.0
    p = np.geomspace(1e-5, 0.5, 30)
    b = block_error_rate(p, cfg)
    assert np.all(np.diff(b) >= 0)
    assert np.all(block_error_rate(p, BlockConfig(200, 10)) <= b)


@pytest.mark.parametrize("p", [-0.1, 1.1, float("nan")])
def test_bler_rejects(p):
    with pytest.raises(ValueError):
        block_error_rate(p, BlockConfig(10))


@pytest.mark.parametrize("M", [2, 4, 8, 16])
def test_throughput_ceiling(M):
    assert throughput_from_error_rate(0.0, M, 100, 5, 4) == pytest.approx(100 * 4 * np.log2(M))
    assert throughput(1.0, M, 100, 4) == 0.0


def test_throughput_levels():
    bit = throughput_from_error_rate(0.02, 4, 100, 5, 4, "bit")
    sym = throughput_from_error_rate(0.02, 4, 100, 5, 4, "symbol")
    assert bit < sym
    with pytest.raises(ValueError):
        throughput_from_error_rate(0.02, 4, 100, 5, 4, "frame")


def test_total_power_reference():
    P = dbm_to_watts(35.0)
    assert total_power(P, FIG7_POWER_MODEL, 4) == pytest.approx(7.2585, abs=5e-4)
    assert total_power(0.0, PowerModel(), 8) == 0.0
    assert total_power(P, FIG7_POWER_MODEL, 64) > total_power(P, FIG7_POWER_MODEL, 4)


@pytest.mark.parametrize("kw", [dict(eta_pa=0.0), dict(eta_pa=1.5), dict(P_D=-1.0),
                                dict(loss_dc=1.0), dict(loss_cool=-0.1)])
def test_power_model_rejects(kw):
    with pytest.raises(ValueError):
        PowerModel(**kw)


def test_power_efficiency():
    assert power_efficiency(800.0, 8.0) == 100.0
    assert np.allclose(power_efficiency([1.0, 2.0], [1.0, 4.0]), [1.0, 0.5])
    with pytest.raises(ValueError):
        power_efficiency(1.0, 0.0)
    with pytest.raises(ValueError):
        total_power(-1.0, FIG7_POWER_MODEL, 4)
