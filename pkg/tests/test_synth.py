import numpy as np
import pytest

from eegrank import synth
from eegrank.metrics import welch_t_test
from eegrank.planner import build_plan
from eegrank.synth import (
    CHANNELS_32,
    UserProfile,
    expert_profile,
    novice_profile,
    p300_template,
    simulate_recording,
    simulate_session,
)


def plan_for(rate=5, seed=0, query_id="q1"):
    return build_plan(
        [f"t{i}" for i in range(50)],
        [f"d{i}" for i in range(950)],
        rate,
        seed=seed,
        query_id=query_id,
    )


class TestTemplate:
    def test_peak_value(self):
        assert p300_template(0.4, amp=7.5, latency=0.4, width=0.075) == 7.5

    def test_zero_amplitude(self):
        t = np.linspace(0, 1, 50)
        assert np.all(p300_template(t, 0.0, 0.4, 0.075) == 0.0)

    def test_value_at_one_width(self):
        v = p300_template(0.4 + 0.075, amp=2.0, latency=0.4, width=0.075)
        assert v == pytest.approx(2.0 * np.exp(-0.5), rel=1e-12)
        v2 = p300_template(0.4 - 0.075, amp=2.0, latency=0.4, width=0.075)
        assert v2 == pytest.approx(v, rel=1e-12)

    def test_bad_width(self):
        with pytest.raises(ValueError):
            p300_template(0.1, 1.0, 0.4, 0.0)


class TestProfiles:
    def test_presets(self):
        expert = expert_profile()
        novice = novice_profile()
        assert expert.p300_amp_uv == 8.0
        assert expert.latency_jitter_sd_s == 0.03
        assert novice.p300_amp_uv == 4.0
        assert novice.latency_jitter_sd_s == 0.06
        assert expert.noise_sd_uv == novice.noise_sd_uv == 5.0

    def test_topography_peaks_at_pz(self):
        profile = expert_profile()
        assert profile.topography[CHANNELS_32.index("Pz")] == 1.0
        assert max(profile.topography) == 1.0

    def test_json_roundtrip(self, tmp_path):
        profile = UserProfile(p300_amp_uv=3.0, seed=9, name="custom")
        profile.save(tmp_path / "p.json")
        assert UserProfile.load(tmp_path / "p.json") == profile

    def test_validation(self):
        with pytest.raises(ValueError):
            UserProfile(p300_amp_uv=-1.0)
        with pytest.raises(ValueError):
            UserProfile(noise_sd_uv=0.0)
        with pytest.raises(ValueError):
            UserProfile(topography=[0.5] * 32)  # no weight equal to 1


class TestSimulateRecording:
    def test_shape_and_rolls(self):
        plan = plan_for(5)
        rec, markers = simulate_recording(plan, expert_profile(seed=1))
        assert rec.sample_rate_hz == 1000
        assert rec.n_channels == 32
        assert len(markers) == 1000
        assert markers[0].onset_sample >= 2000
        assert markers[-1].onset_sample + 2000 <= rec.n_samples

    def test_5hz_marker_spacing_200_samples(self):
        plan = plan_for(5)
        _, markers = simulate_recording(plan, expert_profile(seed=1))
        onsets = [m.onset_sample for m in markers]
        for b in range(5):
            block = onsets[b * 200 : (b + 1) * 200]
            assert all(o2 - o1 == 200 for o1, o2 in zip(block, block[1:]))

    def test_10hz_marker_spacing_100_samples(self):
        plan = plan_for(10)
        _, markers = simulate_recording(plan, expert_profile(seed=1))
        onsets = [m.onset_sample for m in markers]
        assert onsets[1] - onsets[0] == 100

    def test_bitwise_determinism(self):
        plan = plan_for(5, seed=3)
        profile = expert_profile(seed=4)
        rec1, m1 = simulate_recording(plan, profile)
        rec2, m2 = simulate_recording(plan, profile)
        assert np.array_equal(rec1.samples, rec2.samples)
        assert m1 == m2

    def test_query_id_changes_noise(self):
        profile = expert_profile(seed=4)
        rec1, _ = simulate_recording(plan_for(5, seed=3, query_id="q1"), profile)
        rec2, _ = simulate_recording(plan_for(5, seed=3, query_id="q2"), profile)
        assert not np.array_equal(rec1.samples, rec2.samples)

    def test_marker_labels_follow_plan(self):
        plan = plan_for(5, seed=6)
        _, markers = simulate_recording(plan, expert_profile(seed=1))
        flat = [(i, t) for block in plan.blocks for i, t in block]
        assert [(m.image_id, m.is_target) for m in markers] == flat


class TestSignalContent:
    def test_averaged_target_trace_peaks_near_400ms(self):
        # high-SNR profile: average the Pz channel over target epochs and
        # locate the post-stimulus peak
        plan = plan_for(5, seed=11)
        profile = UserProfile(p300_amp_uv=10.0, noise_sd_uv=2.0, seed=2)
        rec, markers = simulate_recording(plan, profile)
        pz = CHANNELS_32.index("Pz")
        window = 1000  # 1 s after onset at 1000 Hz
        traces = [
            rec.samples[pz, m.onset_sample : m.onset_sample + window]
            for m in markers
            if m.is_target
        ]
        avg = np.mean(traces, axis=0)
        peak_ms = int(np.argmax(avg))
        assert 340 <= peak_ms <= 460

    def test_zero_amplitude_indistinguishable(self):
        # mean parietal 300-500 ms amplitude should not separate the classes;
        # p-values across seeds should look uniform, not small
        pz = CHANNELS_32.index("Pz")
        pvals = []
        for seed in range(8):
            plan = plan_for(5, seed=seed)
            profile = UserProfile(p300_amp_uv=0.0, seed=seed)
            rec, markers = simulate_recording(plan, profile)
            means = np.array(
                [rec.samples[pz, m.onset_sample + 300 : m.onset_sample + 500].mean() for m in markers]
            )
            labels = np.array([m.is_target for m in markers])
            _, p = welch_t_test(means[labels], means[~labels])
            pvals.append(p)
        assert sum(1 for p in pvals if p < 0.05) <= 2
        assert max(pvals) > 0.3


class TestSimulateSession:
    def test_button_events_logged_and_plausible(self):
        plan = plan_for(5, seed=2)
        session = simulate_session(plan, expert_profile(seed=3))
        assert session.log.mode == "rsvp"
        shows = [e for e in session.log.events if e.kind == "show"]
        buttons = [e for e in session.log.events if e.kind == "button"]
        assert len(shows) == 1000
        # ~90% of the 50 targets, all pressed at least 100 ms after their stimulus
        assert 30 <= len(buttons) <= 50
        onset_ms = {e.image_id: e.t_ms for e in shows}
        for b in buttons:
            assert b.t_ms >= onset_ms[b.image_id] + 100

    def test_recording_matches_simulate_recording(self):
        plan = plan_for(10, seed=5)
        profile = novice_profile(seed=6)
        rec, markers = simulate_recording(plan, profile)
        session = simulate_session(plan, profile)
        assert np.array_equal(session.recording.samples, rec.samples)
        assert session.markers == markers
