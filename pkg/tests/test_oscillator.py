import math

import numpy as np
import pytest

from hannay_fiber.errors import InvalidInputError, UnstableRegimeError
from hannay_fiber.oscillator import (ActionAngleState, OscillatorParams, action_angle_to_pq,
                                     choose_chart, frequency, hamilton_rhs,
                                     pq_to_action_angle)


@pytest.mark.parametrize("params, omega", [((2, 0, 2), 2.0), ((1, 1, 1), 0.0),
                                           ((2, 1, 2), math.sqrt(3.0))])
def test_frequency_examples(params, omega):
    assert frequency(OscillatorParams(*params)) == pytest.approx(omega, abs=1e-15)


def test_frequency_unstable_carries_discriminant():
    with pytest.raises(UnstableRegimeError) as info:
        frequency(OscillatorParams(1.0, 2.0, 1.0))
    assert info.value.discriminant == pytest.approx(-3.0)


def test_stability_classes():
    assert OscillatorParams(1, 0, 1).stability == "stable"
    assert OscillatorParams(1, 1, 1).stability == "critical"
    assert OscillatorParams(1, 2, 1).stability == "unstable"


def test_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        OscillatorParams(float("nan"), 0, 1)


def test_action_angle_examples():
    p = OscillatorParams(1.0, 0.0, 1.0)
    q, pp = action_angle_to_pq(ActionAngleState(0.0, 0.7), p)
    assert (q, pp) == (0.0, 0.0)
    q, pp = action_angle_to_pq(ActionAngleState(1.0, 0.0), p)
    assert q == pytest.approx(math.sqrt(2.0), abs=1e-15)
    assert pp == pytest.approx(0.0, abs=1e-15)
    assert p.energy(q, pp) == pytest.approx(1.0, rel=1e-12)
    q, pp = action_angle_to_pq(ActionAngleState(1.0, math.pi / 2), p)
    assert q == pytest.approx(0.0, abs=1e-15)
    assert pp == pytest.approx(-math.sqrt(2.0), abs=1e-15)


@pytest.mark.parametrize("chart", ["gamma", "alpha"])
def test_energy_identity_and_round_trip(chart):
    rng = np.random.default_rng(1)
    for _ in range(200):
        a, g = rng.uniform(0.5, 2.0, size=2)
        b = rng.uniform(-0.9, 0.9) * math.sqrt(a * g)
        p = OscillatorParams(a, b, g)
        w = frequency(p)
        state = ActionAngleState(rng.uniform(0.1, 2.0), rng.uniform(-math.pi, math.pi))
        q, pp = action_angle_to_pq(state, p, chart)
        assert p.energy(q, pp) == pytest.approx(state.action * w, rel=1e-12)
        action, angle = pq_to_action_angle(q, pp, p, chart)
        assert action == pytest.approx(state.action, rel=1e-12)
        assert math.remainder(angle - state.angle, 2 * math.pi) == pytest.approx(0, abs=1e-12)


def test_angle_advances_at_omega():
    # Hamilton's equations move the angle at rate omega in either chart
    p = OscillatorParams(1.3, 0.4, 0.8)
    w = frequency(p)
    for chart in ("gamma", "alpha"):
        q, pp = action_angle_to_pq(ActionAngleState(1.0, 0.2), p, chart)
        dq, dp = hamilton_rhs(p, q, pp)
        h = 1e-6
        _, th_p = pq_to_action_angle(q + h * dq, pp + h * dp, p, chart)
        _, th_m = pq_to_action_angle(q - h * dq, pp - h * dp, p, chart)
        assert (th_p - th_m) / (2 * h) == pytest.approx(w, rel=1e-8)


def test_negative_cone_gives_signed_action():
    p = OscillatorParams(-1.0, 0.2, -1.5)
    q, pp = action_angle_to_pq(ActionAngleState(-0.5, 0.3), p)
    action, _ = pq_to_action_angle(q, pp, p)
    assert action == pytest.approx(-0.5, rel=1e-12)
    with pytest.raises(InvalidInputError):
        action_angle_to_pq(ActionAngleState(0.5, 0.3), p)


def test_chart_selection_and_errors():
    assert choose_chart(OscillatorParams(1.0, 0.0, 1.0)) == "gamma"
    assert choose_chart(OscillatorParams(1.0, 0.01, 0.05)) == "alpha"
    with pytest.raises(UnstableRegimeError):
        action_angle_to_pq(ActionAngleState(1.0, 0.0), OscillatorParams(1.0, 1.0, 1.0))
