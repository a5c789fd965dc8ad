"""Synthetic oddball-session EEG with P300-like target responses.

The generator stands in for human acquisition: it renders a 32-channel,
1000 Hz recording for an RSVP plan, with background noise (white + alpha
rhythm + low-frequency drift) on every channel and a parietal-weighted
Gaussian bump added after each *target* stimulus. Amplitude and latency are
jittered per event, which is the variability the downstream classifier has
to survive. Everything is driven by seeded, component-separated RNG streams,
so identical (plan, profile) pairs render bitwise identical recordings.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .dataio import AnnotationEvent, AnnotationLog, EventMarker, RawRecording, RsvpPlan
from .planner import timeline_ms

ACQUISITION_RATE_HZ = 1000
PREROLL_S = 2.5
POSTROLL_S = 2.5

# actiCAP-style 32-channel 10-20 montage with rough 2-D scalp positions
# (x: left- to right+, y: back- to front+), used for response topographies.
CHANNEL_POSITIONS: dict[str, tuple[float, float]] = {
    "Fp1": (-0.3, 0.95), "Fp2": (0.3, 0.95),
    "F7": (-0.8, 0.55), "F3": (-0.4, 0.55), "Fz": (0.0, 0.55),
    "F4": (0.4, 0.55), "F8": (0.8, 0.55),
    "FC5": (-0.65, 0.3), "FC1": (-0.25, 0.3), "FC2": (0.25, 0.3), "FC6": (0.65, 0.3),
    "T7": (-0.95, 0.0), "C3": (-0.45, 0.0), "Cz": (0.0, 0.0),
    "C4": (0.45, 0.0), "T8": (0.95, 0.0),
    "TP9": (-0.95, -0.3), "CP5": (-0.65, -0.3), "CP1": (-0.25, -0.3),
    "CP2": (0.25, -0.3), "CP6": (0.65, -0.3), "TP10": (0.95, -0.3),
    "P7": (-0.8, -0.55), "P3": (-0.4, -0.55), "Pz": (0.0, -0.55),
    "P4": (0.4, -0.55), "P8": (0.8, -0.55),
    "PO9": (-0.55, -0.8), "O1": (-0.3, -0.9), "Oz": (0.0, -0.92),
    "O2": (0.3, -0.9), "PO10": (0.55, -0.8),
}
CHANNELS_32 = list(CHANNEL_POSITIONS)


def _gaussian_weights(center_label: str, sigma: float) -> list[float]:
    cx, cy = CHANNEL_POSITIONS[center_label]
    weights = []
    for x, y in CHANNEL_POSITIONS.values():
        d2 = (x - cx) ** 2 + (y - cy) ** 2
        weights.append(float(np.exp(-d2 / (2 * sigma**2))))
    return weights


def default_topography() -> list[float]:
    """Parietal-midline response weights, 1.0 at Pz, falling off with scalp distance."""
    return _gaussian_weights("Pz", sigma=0.45)


def alpha_topography() -> list[float]:
    """Occipital alpha weighting, strongest at Oz."""
    return _gaussian_weights("Oz", sigma=0.5)


@dataclass
class UserProfile:
    """Synthetic-user parameters: response strength, variability, and noise floor."""

    p300_amp_uv: float = 8.0
    p300_latency_s: float = 0.4
    p300_width_s: float = 0.075
    latency_jitter_sd_s: float = 0.05
    amp_jitter_rel_sd: float = 0.3
    noise_sd_uv: float = 5.0
    alpha_amp_uv: float = 8.0
    drift_sd_uv: float = 4.0
    button_press_prob: float = 0.9
    button_latency_s: float = 0.45
    button_jitter_sd_s: float = 0.1
    topography: list[float] = field(default_factory=default_topography)
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        if self.p300_amp_uv < 0:
            raise ValueError("p300_amp_uv must be >= 0")
        if self.p300_width_s <= 0:
            raise ValueError("p300_width_s must be > 0")
        for sd_name in ("latency_jitter_sd_s", "amp_jitter_rel_sd", "drift_sd_uv"):
            if getattr(self, sd_name) < 0:
                raise ValueError(f"{sd_name} must be >= 0")
        if self.noise_sd_uv <= 0:
            raise ValueError("noise_sd_uv must be > 0")
        if len(self.topography) != len(CHANNELS_32):
            raise ValueError(f"topography needs {len(CHANNELS_32)} weights")
        if not all(0 <= w <= 1 for w in self.topography):
            raise ValueError("topography weights must lie in [0, 1]")
        if max(self.topography) != 1.0:
            raise ValueError("topography needs at least one weight equal to 1")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "p300_amp_uv": self.p300_amp_uv,
            "p300_latency_s": self.p300_latency_s,
            "p300_width_s": self.p300_width_s,
            "latency_jitter_sd_s": self.latency_jitter_sd_s,
            "amp_jitter_rel_sd": self.amp_jitter_rel_sd,
            "noise_sd_uv": self.noise_sd_uv,
            "alpha_amp_uv": self.alpha_amp_uv,
            "drift_sd_uv": self.drift_sd_uv,
            "button_press_prob": self.button_press_prob,
            "button_latency_s": self.button_latency_s,
            "button_jitter_sd_s": self.button_jitter_sd_s,
            "topography": self.topography,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "UserProfile":
        return cls(**obj)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "UserProfile":
        return cls.from_dict(json.loads(Path(path).read_text()))


def load_preset(name: str) -> UserProfile:
    """Load a bundled profile preset (``expert`` or ``novice``)."""
    ref = resources.files("eegrank").joinpath(f"profiles/{name}.json")
    return UserProfile.from_dict(json.loads(ref.read_text()))


def expert_profile(seed: int = 0) -> UserProfile:
    return replace(load_preset("expert"), seed=seed)


def novice_profile(seed: int = 0) -> UserProfile:
    return replace(load_preset("novice"), seed=seed)


def p300_template(
    t_s: float | np.ndarray, amp: float, latency: float, width: float
) -> float | np.ndarray:
    """Gaussian response bump: amp * exp(-(t - latency)^2 / (2 width^2))."""
    if width <= 0:
        raise ValueError("width must be > 0")
    t = np.asarray(t_s, dtype=np.float64)
    out = amp * np.exp(-((t - latency) ** 2) / (2 * width**2))
    return float(out) if np.isscalar(t_s) else out


@dataclass(eq=False)
class SimulatedSession:
    recording: RawRecording
    markers: list[EventMarker]
    log: AnnotationLog  # RSVP show/button stream; classification never reads it


def _session_rngs(plan: RsvpPlan, profile: UserProfile) -> list[np.random.Generator]:
    """Four independent component streams (noise, alpha, drift, events)."""
    qhash = int.from_bytes(hashlib.sha256(plan.query_id.encode()).digest()[:8], "little")
    ss = np.random.SeedSequence([profile.seed & 0xFFFFFFFF, plan.seed & 0xFFFFFFFF, qhash])
    return [np.random.default_rng(child) for child in ss.spawn(4)]


def _pink_drift(rng: np.random.Generator, n_samples: int, sd_uv: float) -> np.ndarray:
    """Low-frequency 1/f-shaped drift, synthesized at 4 Hz and interpolated up."""
    low_rate = 4
    m = n_samples * low_rate // ACQUISITION_RATE_HZ + 2
    white = rng.standard_normal(m)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(m, d=1 / low_rate)
    shaping = 1.0 / np.sqrt(np.maximum(freqs, 0.05))
    shaping[0] = 0.0  # no DC: drift wanders, it does not offset
    shaped = np.fft.irfft(spectrum * shaping, n=m)
    rms = float(np.sqrt(np.mean(shaped**2)))
    if rms > 0:
        shaped *= sd_uv / rms
    t_low = np.arange(m) / low_rate
    t_high = np.arange(n_samples) / ACQUISITION_RATE_HZ
    return np.interp(t_high, t_low, shaped)


def simulate_recording(
    plan: RsvpPlan, profile: UserProfile
) -> tuple[RawRecording, list[EventMarker]]:
    """Render a 32-channel 1000 Hz session recording plus its stimulus markers.

    The recording carries >= 2 s pre/post-roll and the plan's inter-block rest
    gaps. Markers land on the exact stimulus onsets (200 ms spacing at 5 Hz,
    100 ms at 10 Hz).
    """
    rec, markers, _ = _render(plan, profile, want_log=False)
    return rec, markers


def simulate_session(plan: RsvpPlan, profile: UserProfile) -> SimulatedSession:
    """Like :func:`simulate_recording`, also logging show and button-press events."""
    rec, markers, log = _render(plan, profile, want_log=True)
    return SimulatedSession(recording=rec, markers=markers, log=log)


def _render(plan: RsvpPlan, profile: UserProfile, want_log: bool):
    onsets_ms = timeline_ms(plan)
    preroll_ms = round(PREROLL_S * 1000)
    n_samples = preroll_ms + onsets_ms[-1] + 1000 // plan.rate_hz + round(POSTROLL_S * 1000)
    n_channels = len(CHANNELS_32)
    noise_rng, alpha_rng, drift_rng, event_rng = _session_rngs(plan, profile)

    data = noise_rng.standard_normal((n_channels, n_samples), dtype=np.float32)
    data *= np.float32(profile.noise_sd_uv)

    t = np.arange(n_samples, dtype=np.float64) / ACQUISITION_RATE_HZ
    alpha_weights = alpha_topography()
    phases = alpha_rng.uniform(0, 2 * np.pi, size=n_channels)
    for c in range(n_channels):
        amp = profile.alpha_amp_uv * alpha_weights[c]
        if amp > 0:
            data[c] += (amp * np.sin(2 * np.pi * 10.0 * t + phases[c])).astype(np.float32)

    if profile.drift_sd_uv > 0:
        for c in range(n_channels):
            data[c] += _pink_drift(drift_rng, n_samples, profile.drift_sd_uv).astype(np.float32)

    flat = [(image_id, is_t, b) for b, block in enumerate(plan.blocks) for image_id, is_t in block]
    markers = [
        EventMarker(
            onset_sample=preroll_ms + onset_ms,
            image_id=image_id,
            is_target=is_t,
            block_index=b,
            query_id=plan.query_id,
        )
        for onset_ms, (image_id, is_t, b) in zip(onsets_ms, flat)
    ]

    topo = np.asarray(profile.topography, dtype=np.float64)
    width = profile.p300_width_s
    half_support = round(4 * width * ACQUISITION_RATE_HZ)
    button_presses: list[tuple[int, str]] = []  # (t_ms from presentation start, image_id)
    for m in markers:
        if not m.is_target:
            continue
        amp = profile.p300_amp_uv * max(0.0, 1.0 + event_rng.normal(0, profile.amp_jitter_rel_sd))
        latency = profile.p300_latency_s + event_rng.normal(0, profile.latency_jitter_sd_s)
        center = m.onset_sample + round(latency * ACQUISITION_RATE_HZ)
        lo = max(m.onset_sample, center - half_support)
        hi = min(n_samples, center + half_support + 1)
        if amp > 0 and lo < hi:
            t_rel = (np.arange(lo, hi) - m.onset_sample) / ACQUISITION_RATE_HZ
            bump = p300_template(t_rel, amp, latency, width)
            data[:, lo:hi] += (topo[:, None] * bump[None, :]).astype(np.float32)
        if event_rng.uniform() < profile.button_press_prob:
            press_s = profile.button_latency_s + event_rng.normal(0, profile.button_jitter_sd_s)
            press_ms = (m.onset_sample - preroll_ms) + max(100, round(press_s * 1000))
            button_presses.append((press_ms, m.image_id))

    rec = RawRecording(ACQUISITION_RATE_HZ, list(CHANNELS_32), data)

    log = None
    if want_log:
        events = [
            AnnotationEvent(t_ms=onset_ms, kind="show", image_id=image_id, page=b)
            for onset_ms, (image_id, _, b) in zip(onsets_ms, flat)
        ]
        events += [
            AnnotationEvent(t_ms=t_ms, kind="button", image_id=image_id)
            for t_ms, image_id in button_presses
        ]
        events.sort(key=lambda e: e.t_ms)
        duration_s = (onsets_ms[-1] + 1000 // plan.rate_hz + 2000) / 1000
        log = AnnotationLog(
            session_id=f"{plan.query_id}-rsvp",
            mode="rsvp",
            rate_hz=plan.rate_hz,
            duration_s=duration_s,
            events=events,
        )
    return rec, markers, log
