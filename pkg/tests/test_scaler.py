"""Scaling triggers, global configuration selection, reconfiguration diffs."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from archscale import (
    ScalerParams,
    Trigger,
    delta_vector_is_canonical,
    diff_reconfiguration,
    local_target_instances,
    scaling_trigger,
    select_global_configuration,
    system_mcl,
)

PARAMS = ScalerParams(K=Fraction(20), k=Fraction(10), monitoring_period=300)


def test_trigger_up():
    assert scaling_trigger(Fraction(100), Fraction(60), PARAMS) is Trigger.UP


def test_trigger_hysteresis_band():
    assert scaling_trigger(Fraction(100), Fraction(125), PARAMS) is Trigger.NONE


def test_trigger_down():
    assert scaling_trigger(Fraction(10), Fraction(210), PARAMS) is Trigger.DOWN


@settings(max_examples=200, derandomize=True)
@given(inbound=st.integers(0, 1000), total=st.integers(0, 1000))
def test_trigger_directions_exclusive(inbound, total):
    trig = scaling_trigger(Fraction(inbound), Fraction(total), PARAMS)
    gap = inbound + 20 - total
    if gap > 10:
        assert trig is Trigger.UP
    elif -gap > 10:
        assert trig is Trigger.DOWN
    else:
        assert trig is Trigger.NONE


def test_params_invariants():
    with pytest.raises(ValueError):
        ScalerParams(K=Fraction(-1))
    with pytest.raises(ValueError):
        ScalerParams(monitoring_period=0)


def test_select_base_when_demand_low(reference_ladder, reference_table):
    config, deltas, mcl = select_global_configuration(
        Fraction(30), PARAMS, reference_ladder, reference_table)
    assert deltas == (0, 0, 0, 0)
    assert config.counts == reference_ladder.base.counts
    assert mcl >= 50


def test_select_scale2_at_demand_200(reference_ladder, reference_table):
    config, deltas, mcl = select_global_configuration(
        Fraction(180), PARAMS, reference_ladder, reference_table)
    assert deltas == (1, 1, 0, 0)
    assert mcl >= 200
    expected = reference_ladder.base + reference_ladder.scale(2)
    assert config.counts == expected.counts


def test_select_stacks_largest_scale(reference_ladder, reference_table):
    config, deltas, mcl = select_global_configuration(
        Fraction(780), PARAMS, reference_ladder, reference_table)
    assert delta_vector_is_canonical(deltas)
    assert deltas[3] >= 1  # at least one full largest-scale stack beyond the first
    assert mcl >= 800
    assert deltas == (3, 3, 2, 2)  # two full stacks plus scale 2


@settings(max_examples=400, derandomize=True)
@given(inbound=st.integers(0, 5000))
def test_select_invariant_and_sufficiency(inbound, reference_ladder, reference_table):
    config, deltas, mcl = select_global_configuration(
        Fraction(inbound), PARAMS, reference_ladder, reference_table)
    assert delta_vector_is_canonical(deltas)
    assert Fraction(mcl) >= inbound + 20
    assert system_mcl(config, reference_table) == mcl
    again = select_global_configuration(Fraction(inbound), PARAMS, reference_ladder, reference_table)
    assert again[1] == deltas


def test_canonical_predicate():
    assert delta_vector_is_canonical((0, 0, 0, 0))
    assert delta_vector_is_canonical((1, 1, 0, 0))
    assert delta_vector_is_canonical((3, 3, 2, 2))
    assert delta_vector_is_canonical((2, 2, 2, 2))
    assert not delta_vector_is_canonical((0, 1, 0, 0))
    assert not delta_vector_is_canonical((3, 1, 1, 1))
    assert not delta_vector_is_canonical((1, -1, 0, 0))


def test_diff_single_deploy():
    plan = diff_reconfiguration((1, 1, 0, 0), (1, 1, 1, 0))
    assert [(s.delta_index, s.deploy) for s in plan] == [(2, True)]


def test_diff_multi_undeploy():
    plan = diff_reconfiguration((1, 1, 1, 1), (1, 0, 0, 0))
    assert [(s.delta_index, s.deploy) for s in plan] == [(1, False), (2, False), (3, False)]


def test_diff_equal_is_empty():
    assert len(diff_reconfiguration((2, 1, 1, 1), (2, 1, 1, 1))) == 0


def test_diff_length_mismatch():
    with pytest.raises(ValueError):
        diff_reconfiguration((1, 0), (1, 0, 0))


@settings(max_examples=200, derandomize=True)
@given(
    deployed=st.lists(st.integers(0, 4), min_size=4, max_size=4),
    target=st.lists(st.integers(0, 4), min_size=4, max_size=4),
)
def test_diff_reaches_target(deployed, target):
    plan = diff_reconfiguration(tuple(deployed), tuple(target))
    state = list(deployed)
    last_index = -1
    for step in plan:
        assert step.delta_index >= last_index
        last_index = step.delta_index
        state[step.delta_index] += 1 if step.deploy else -1
    assert state == target


def test_local_target_formula():
    assert local_target_instances(Fraction(100), ScalerParams(K=Fraction(10)), Fraction(37), 1, 2) == 3


def test_local_target_base_floor():
    assert local_target_instances(Fraction(0), PARAMS, Fraction(100), 1, 3) == 1


def test_local_target_scale_down_clamp():
    params = ScalerParams(K=Fraction(10))
    assert local_target_instances(Fraction(90), params, Fraction(100), 1, 3) == 1


def test_local_target_rejects_infinite():
    from archscale import INFINITE
    with pytest.raises(ValueError):
        local_target_instances(Fraction(10), PARAMS, INFINITE, 1, 1)


@settings(max_examples=200, derandomize=True)
@given(inbound=st.integers(0, 3000), base_n=st.integers(1, 4))
def test_local_never_below_base(inbound, base_n):
    target = local_target_instances(Fraction(inbound), PARAMS, Fraction(91), base_n, base_n + 2)
    assert target >= base_n
    assert target >= 1
