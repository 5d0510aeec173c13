import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from desknav.errors import ContractError, ValidationError
from desknav.perception import (
    NullProvider, OracleParams, PerceptionOutput, collision_probability, make_provider,
    oracle_perception,
)
from desknav.world import LaserScan, ScanParams

PARAMS = ScanParams()


def _scan(ranges, params=PARAMS):
    ranges = np.asarray(ranges, dtype=float)
    return LaserScan(ranges, ranges < params.max_range, params)


def _mirror(ranges):
    # beam i sits at -pi + i deg; its mirror (-bearing) is index (360 - i) % 360
    idx = (360 - np.arange(360)) % 360
    return np.asarray(ranges)[idx]


@pytest.mark.parametrize("d,expected", [(0.2, 1.0), (0.3, 1.0), (0.9, 0.5), (1.5, 0.0), (3.0, 0.0)])
def test_ramp_examples(d, expected):
    assert collision_probability(d, 0.3, 1.5) == pytest.approx(expected, abs=1e-12)


def test_ramp_is_monotone():
    ds = np.linspace(0, 3, 301)
    ps = [collision_probability(d, 0.3, 1.5) for d in ds]
    assert all(a >= b for a, b in zip(ps, ps[1:]))


def test_p_t_uses_frontal_cone_only():
    r = np.full(360, 3.5)
    r[180 + 45] = 0.2  # 45 deg left, outside the 30 deg cone
    assert oracle_perception(_scan(r)).p_t == 0.0
    r[180 + 20] = 0.9
    assert oracle_perception(_scan(r)).p_t == pytest.approx(0.5)


def test_symmetric_scan_steers_straight():
    rng = np.random.default_rng(0)
    half = rng.uniform(0.5, 3.0, 360)
    r = np.minimum(half, _mirror(half))
    assert np.array_equal(r, _mirror(r))
    assert oracle_perception(_scan(r)).s_k == 0.0


def test_open_left_steers_left():
    r = np.full(360, 1.0)
    r[180 + 60:180 + 90] = 3.0
    out = oracle_perception(_scan(r))
    assert out.s_k > 0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.05, 3.5), min_size=360, max_size=360))
def test_mirror_negates_steering(ranges):
    a = oracle_perception(_scan(ranges))
    b = oracle_perception(_scan(_mirror(ranges)))
    assert b.s_k == -a.s_k
    assert b.p_t == a.p_t


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 3.5), min_size=360, max_size=360),
       st.floats(0.05, 1.5), st.floats(0.1, 2.0), st.sampled_from([3, 5, 9, 15]))
def test_outputs_stay_in_bounds(ranges, cone, d_stop, sectors):
    params = OracleParams(cone, d_stop, d_stop + 0.5, sectors)
    out = oracle_perception(_scan(ranges), params)
    assert 0.0 <= out.p_t <= 1.0 and -1.0 <= out.s_k <= 1.0
    assert not (math.isnan(out.p_t) or math.isnan(out.s_k))


def test_empty_cone_is_a_contract_error():
    rear = ScanParams(beam_count=90, angle_min=math.radians(135), angle_max=math.radians(225))
    with pytest.raises(ContractError):
        oracle_perception(_scan(np.ones(90), rear))


def test_output_bounds_validated():
    with pytest.raises(ValidationError):
        PerceptionOutput(1.2, 0.0)
    with pytest.raises(ValidationError):
        PerceptionOutput(0.5, float("nan"))


def test_params_validated():
    with pytest.raises(ValidationError):
        OracleParams(d_stop=1.0, d_free=0.5)
    with pytest.raises(ValidationError):
        OracleParams(sector_count=4)


def test_providers():
    scan = _scan(np.full(360, 0.1))
    assert make_provider("oracle")(scan).p_t == 1.0
    null = make_provider("none")
    assert isinstance(null, NullProvider)
    assert (null(scan).p_t, null(scan).s_k) == (0.0, 0.0)
    with pytest.raises(ValidationError):
        make_provider("cnn")
