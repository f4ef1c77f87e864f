"""Pulse sequences: the bare gate, its error response, and the composites."""

import io

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import USQ, Y20, Y23, ZHAT
from pulseforge import (
    Channel,
    ErrorKind,
    ErrorModel,
    PulseSegment,
    PulseSequence,
    bb1_sequence,
    corpse_sequence,
    export_sequence_table,
    gate_fidelity,
    propagator,
    segment_propagator,
    sequence_table,
    sequential_gate,
    sequential_segments,
)

PI = np.pi
IDEAL = ErrorModel.ideal()


def test_sequential_gate_matrix():
    u = sequential_gate()
    assert np.max(np.abs(u - USQ)) <= 1e-12
    assert np.max(np.abs(u @ u.conj().T - np.eye(3))) <= 1e-12


def test_sequential_gate_maps_zero_to_superposition():
    out = sequential_gate() @ np.array([1, 0, 0], dtype=complex)
    expected = np.array([1, 0, -1], dtype=complex) / np.sqrt(2)
    assert np.max(np.abs(out - expected)) <= 1e-12


def test_sequential_segments_layout():
    seq = sequential_segments()
    assert len(seq.segments) == 2
    first, second = seq.segments
    assert first.channel is Channel.MW
    assert first.tau == pytest.approx(PI / 2)
    assert first.theta == pytest.approx(PI / 2)
    assert second.channel is Channel.RF
    assert second.tau == pytest.approx(PI)
    assert second.theta == pytest.approx(PI / 2)
    assert seq.duration == pytest.approx(1.5 * PI, abs=1e-15)


def test_sequential_segments_reproduce_gate():
    u = propagator(sequential_segments(), IDEAL)
    assert np.max(np.abs(u - sequential_gate())) <= 1e-10


def test_segment_order_matters():
    seq = sequential_segments()
    flipped = PulseSequence(tuple(reversed(seq.segments)), label="flipped")
    u = propagator(flipped, IDEAL)
    assert np.max(np.abs(u - sequential_gate())) > 0.1


def test_segment_propagator_ideal_mw():
    seg = PulseSegment(Channel.MW, PI / 2, PI / 2)
    expected = scipy.linalg.expm(1j * (PI / 4) * Y20)
    assert np.max(np.abs(segment_propagator(seg, IDEAL) - expected)) <= 1e-12


def test_segment_propagator_ideal_rf_phase():
    # A phase-0 area-pi RF segment is a bare x rotation on the (2, 3) block.
    seg = PulseSegment(Channel.RF, PI, 0.0)
    x23 = np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex)
    expected = scipy.linalg.expm(1j * (PI / 2) * x23)
    assert np.max(np.abs(segment_propagator(seg, IDEAL) - expected)) <= 1e-12


@pytest.mark.parametrize("eps", [-0.5, -0.2, 0.1, 0.3])
def test_sequential_ple_closed_form(eps):
    # Amplitude miscalibration stretches both areas by the same factor.
    u = propagator(sequential_segments(), ErrorModel.pulse_length(eps))
    expected = scipy.linalg.expm(1j * (PI / 2) * (1 + eps) * Y23) @ scipy.linalg.expm(
        1j * (PI / 4) * (1 + eps) * Y20
    )
    assert np.max(np.abs(u - expected)) <= 1e-10


@pytest.mark.parametrize("eps", [-0.4, 0.25])
def test_sequential_ore_closed_form(eps):
    # Detuning adds the diagonal generator inside each segment exponent.
    u = propagator(sequential_segments(), ErrorModel.off_resonance(eps))
    um = scipy.linalg.expm(-1j * (PI / 6) * eps * ZHAT + 1j * (PI / 4) * Y20)
    ur = scipy.linalg.expm(-1j * (PI / 3) * eps * ZHAT + 1j * (PI / 2) * Y23)
    assert np.max(np.abs(u - ur @ um)) <= 1e-10


def test_error_model_validation():
    with pytest.raises(ValueError):
        ErrorModel(ErrorKind.PLE, 1.5)
    with pytest.raises(ValueError):
        ErrorModel(ErrorKind.NONE, 0.3)
    with pytest.raises(ValueError):
        ErrorModel(ErrorKind.ORE, float("nan"))
    assert ErrorModel.pulse_length(0.2).fraction == 0.2
    assert ErrorModel.off_resonance(-0.3).kind is ErrorKind.ORE
    assert ErrorModel.ideal().fraction == 0.0


def test_segment_validation():
    with pytest.raises(ValueError):
        PulseSegment(Channel.MW, -0.1, 0.0)
    with pytest.raises(ValueError):
        PulseSegment(Channel.MW, float("inf"), 0.0)


def test_propagator_empty_sequence_rejected():
    with pytest.raises(ValueError):
        propagator(PulseSequence((), label="empty"), IDEAL)


def test_bb1_structure():
    seq = bb1_sequence()
    assert seq.label == "bb1"
    assert len(seq.segments) == 10
    channels = [s.channel for s in seq.segments]
    assert channels == [Channel.MW] * 5 + [Channel.RF] * 5
    areas = np.array([s.tau for s in seq.segments]) / PI
    assert np.allclose(areas, [0.25, 1, 2, 1, 0.25, 0.5, 1, 2, 1, 0.5], atol=1e-12)
    # Palindromic phase pattern per channel: base, phi, psi, phi, base.
    for block in (seq.segments[:5], seq.segments[5:]):
        assert block[0].theta == pytest.approx(PI / 2)
        assert block[4].theta == pytest.approx(PI / 2)
        assert block[1].theta == pytest.approx(block[3].theta)


def test_bb1_phase_values():
    # phi = base + arccos(-tau / 4pi), psi = base + 3 (phi - base); the
    # exact values round to the conventional two-decimal multiples of pi.
    seq = bb1_sequence()
    mw_phi = seq.segments[1].theta / PI
    mw_psi = seq.segments[2].theta / PI
    rf_phi = seq.segments[6].theta / PI
    rf_psi = seq.segments[7].theta / PI
    assert mw_phi == pytest.approx(0.5 + np.arccos(-1 / 8) / PI, abs=1e-12)
    assert mw_psi == pytest.approx(0.5 + 3 * np.arccos(-1 / 8) / PI, abs=1e-12)
    assert rf_phi == pytest.approx(0.5 + np.arccos(-1 / 4) / PI, abs=1e-12)
    assert rf_psi == pytest.approx(0.5 + 3 * np.arccos(-1 / 4) / PI, abs=1e-12)
    assert (round(mw_phi, 2), round(mw_psi, 2)) == (1.04, 2.12)
    assert (round(rf_phi, 2), round(rf_psi, 2)) == (1.08, 2.24)


def test_bb1_duration():
    assert bb1_sequence().duration == pytest.approx(9.5 * PI, abs=1e-12)


def test_bb1_ideal_collapses_to_gate():
    u = propagator(bb1_sequence(), IDEAL)
    assert np.max(np.abs(u - sequential_gate())) <= 1e-10


def test_bb1_beats_sequential_under_stretch():
    err = ErrorModel.pulse_length(0.3)
    f_seq = gate_fidelity(propagator(sequential_segments(), err), sequential_gate())
    f_bb1 = gate_fidelity(propagator(bb1_sequence(), err), sequential_gate())
    assert f_bb1 > f_seq
    assert f_bb1 > 0.99


def test_bb1_tolerates_half_scale_error():
    err = ErrorModel.pulse_length(-0.5)
    f = gate_fidelity(propagator(bb1_sequence(), err), sequential_gate())
    assert f >= 0.9


def test_corpse_structure():
    seq = corpse_sequence()
    assert seq.label == "corpse"
    assert len(seq.segments) == 6
    channels = [s.channel for s in seq.segments]
    assert channels == [Channel.MW] * 3 + [Channel.RF] * 3
    # kappa = arcsin(sin(theta/2) / 2); areas theta/2 - kappa,
    # 2pi - 2 kappa, 2pi + theta/2 - kappa.
    for block, theta in ((seq.segments[:3], PI / 2), (seq.segments[3:], PI)):
        kappa = np.arcsin(np.sin(theta / 2) / 2)
        expected = (theta / 2 - kappa, 2 * PI - 2 * kappa, 2 * PI + theta / 2 - kappa)
        got = tuple(s.tau for s in block)
        assert np.allclose(got, expected, atol=1e-12)
        assert [s.theta for s in block] == pytest.approx([PI / 2, -PI / 2, PI / 2])


def test_corpse_area_values():
    seq = corpse_sequence()
    mw = np.array([s.tau for s in seq.segments[:3]]) / PI
    rf = np.array([s.tau for s in seq.segments[3:]]) / PI
    # The RF block closes in exact thirds; the MW block does not.
    assert np.allclose(rf, [1 / 3, 5 / 3, 7 / 3], atol=1e-12)
    assert np.allclose(
        mw,
        [0.13497327191869207, 1.7699465438373843, 2.134973271918692],
        atol=1e-12,
    )
    # Within half a unit in the second decimal of the commonly quoted
    # two-decimal table entries.
    assert np.allclose(mw, [0.14, 1.77, 2.14], atol=0.0051)
    assert np.allclose(rf, [0.33, 1.67, 2.33], atol=0.0051)


def test_corpse_ideal_collapses_to_gate():
    u = propagator(corpse_sequence(), IDEAL)
    assert np.max(np.abs(u - sequential_gate())) <= 1e-10


def test_corpse_duration_ratio():
    ratio = corpse_sequence().duration / sequential_segments().duration
    assert ratio == pytest.approx(5.582150947338734, abs=1e-12)
    assert 5.58 <= ratio <= 5.60


def test_corpse_detuning_tradeoff():
    # The composite trades detuning robustness away near eps = 0.3.
    err = ErrorModel.off_resonance(0.3)
    f_seq = gate_fidelity(propagator(sequential_segments(), err), sequential_gate())
    f_cor = gate_fidelity(propagator(corpse_sequence(), err), sequential_gate())
    assert f_cor < f_seq


def test_bb1_quadratic_suppression_slope():
    # log-log slope of infidelity vs eps in the small-error regime: a
    # composite that cancels the first two orders shows slope >= 5.5
    # against the bare gate's 2.
    eps = np.array([0.01, 0.02, 0.04])
    target = sequential_gate()
    inf = np.array(
        [
            1.0
            - gate_fidelity(
                propagator(bb1_sequence(), ErrorModel.pulse_length(e)), target
            )
            for e in eps
        ]
    )
    slope = np.polyfit(np.log(eps), np.log(inf), 1)[0]
    assert slope == pytest.approx(5.998147791814855, abs=1e-9)
    assert 5.5 < slope < 6.5


@settings(max_examples=50, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.sampled_from([ErrorKind.NONE, ErrorKind.PLE, ErrorKind.ORE]),
)
def test_propagator_unitarity(seed, kind):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    segments = tuple(
        PulseSegment(
            Channel.MW if rng.integers(2) else Channel.RF,
            float(rng.uniform(0, 3 * PI)),
            float(rng.uniform(-2 * PI, 2 * PI)),
        )
        for _ in range(n)
    )
    frac = 0.0 if kind is ErrorKind.NONE else float(rng.uniform(-1, 1))
    u = propagator(PulseSequence(segments, label="random"), ErrorModel(kind, frac))
    assert np.max(np.abs(u @ u.conj().T - np.eye(3))) <= 1e-10


@pytest.mark.parametrize("builder", [sequential_segments, bb1_sequence, corpse_sequence])
def test_stretch_response_is_even(builder):
    target = sequential_gate()
    for eps in (0.1, 0.35, 0.6):
        fp = gate_fidelity(
            propagator(builder(), ErrorModel.pulse_length(eps)), target
        )
        fm = gate_fidelity(
            propagator(builder(), ErrorModel.pulse_length(-eps)), target
        )
        assert fp == pytest.approx(fm, abs=1e-9)


def test_sequence_table_round_trip():
    seq = bb1_sequence()
    text = sequence_table(seq)
    lines = text.strip().splitlines()
    assert lines[0] == "idx,channel,tau_over_pi,theta_over_pi"
    assert len(lines) == 1 + len(seq.segments)
    row = lines[3].split(",")
    assert row[0] == "2"
    assert row[1] == "MW"
    assert float(row[2]) == pytest.approx(2.0, abs=1e-9)
    assert float(row[3]) == pytest.approx(seq.segments[2].theta / PI, rel=1e-8)


def test_export_sequence_table_stream_and_path(tmp_path):
    buf = io.StringIO()
    export_sequence_table(corpse_sequence(), buf)
    assert buf.getvalue().startswith("idx,channel")
    out = tmp_path / "table.csv"
    export_sequence_table(corpse_sequence(), out)
    assert out.read_text() == buf.getvalue()


def test_export_sequence_table_bad_path():
    with pytest.raises(OSError):
        export_sequence_table(corpse_sequence(), "/nonexistent-dir/t.csv")
