"""Audio personalization: spectral filters, audiograms, simulated listeners.

A per-bin gain filter (dB over a uniform 0-8 kHz grid) is applied to mono
audio by short-time spectral multiplication.  A hearing or distortion
profile measured at the seven clinical audiometry frequencies interpolates
(linearly in log-frequency) into such a filter; its negation is the
classic coarse compensation baseline.  The simulated listener scores a
candidate filter by how close the doubly-filtered clip is to the clean
reference in log-spectral distance, mapped onto a 0-10 half-point scale.
"""

from __future__ import annotations

import io
import wave
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.signal

from .dms import DimensionFact
from .rng import stream

CLINICAL_FREQUENCIES_HZ = (500.0, 1000.0, 2000.0, 3000.0, 4000.0, 6000.0, 8000.0)
GRID_TOP_HZ = 8000.0
ENGINE_DB_SPAN = 30.0   # normalized [-1, 1] maps onto +-30 dB
FILTER_DB_LIMIT = 60.0
MIN_SAMPLE_RATE = 16000

STFT_WINDOW = 1024
STFT_HOP = 256

_TAG_CORRUPTION = 0x31
_TAG_CLIP = 0x32
_SPECTRUM_FLOOR = 1e-8


class ProfileFormatError(ValueError):
    """A hearing-profile file violates the 7-line clinical format."""


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray  # mono, float, nominally within [-1, 1]
    sample_rate: int

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float).ravel())

    @property
    def duration(self) -> float:
        return self.samples.shape[0] / self.sample_rate


@dataclass(frozen=True)
class SpectralFilter:
    """Per-bin gains in dB on ``n_bins`` frequencies uniformly spanning 0-8 kHz."""

    gains_db: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gains_db, dtype=float).ravel()
        if g.shape[0] < 2:
            raise ValueError("a filter needs at least 2 bins")
        if np.max(np.abs(g)) > FILTER_DB_LIMIT:
            raise ValueError(f"gains must stay within +-{FILTER_DB_LIMIT} dB")
        object.__setattr__(self, "gains_db", g)

    @property
    def n_bins(self) -> int:
        return self.gains_db.shape[0]

    @property
    def bin_frequencies(self) -> np.ndarray:
        return np.linspace(0.0, GRID_TOP_HZ, self.n_bins)

    @classmethod
    def from_normalized(cls, h: np.ndarray, span_db: float = ENGINE_DB_SPAN) -> "SpectralFilter":
        return cls(np.asarray(h, dtype=float) * span_db)

    def to_normalized(self, span_db: float = ENGINE_DB_SPAN) -> np.ndarray:
        return self.gains_db / span_db


@dataclass(frozen=True)
class HearingProfile:
    """Seven (frequency, gain) measurements at the clinical audiogram frequencies."""

    gains_db: np.ndarray  # aligned with CLINICAL_FREQUENCIES_HZ
    source: str = "hearing-loss"

    def __post_init__(self):
        g = np.asarray(self.gains_db, dtype=float).ravel()
        if g.shape[0] != 7:
            raise ProfileFormatError(f"expected 7 measurements, got {g.shape[0]}")
        if np.any(g < -120.0) or np.any(g > 30.0):
            raise ProfileFormatError("gains must lie within [-120, 30] dB")
        object.__setattr__(self, "gains_db", g)

    @property
    def frequencies_hz(self) -> np.ndarray:
        return np.array(CLINICAL_FREQUENCIES_HZ)


def parse_profile(text: str, source: str = "hearing-loss") -> HearingProfile:
    """Parse the plain-text profile format: 7 lines of ``frequency_hz,gain_db``."""
    entries: dict[float, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ProfileFormatError(f"line {lineno}: expected 'frequency_hz,gain_db', got {raw!r}")
        try:
            freq, gain = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ProfileFormatError(f"line {lineno}: {exc}") from exc
        if freq not in CLINICAL_FREQUENCIES_HZ:
            raise ProfileFormatError(f"line {lineno}: {freq:g} Hz is not a clinical frequency")
        if freq in entries:
            raise ProfileFormatError(f"line {lineno}: duplicate measurement at {freq:g} Hz")
        entries[freq] = gain
    missing = [f for f in CLINICAL_FREQUENCIES_HZ if f not in entries]
    if missing:
        raise ProfileFormatError(f"missing measurement at {missing[0]:g} Hz")
    return HearingProfile(np.array([entries[f] for f in CLINICAL_FREQUENCIES_HZ]), source)


def load_profile(path: str | Path, source: str = "hearing-loss") -> HearingProfile:
    return parse_profile(Path(path).read_text(), source)


def profile_to_text(profile: HearingProfile) -> str:
    lines = ["# frequency_hz,gain_db"]
    lines += [f"{int(f)},{g:g}" for f, g in zip(profile.frequencies_hz, profile.gains_db)]
    return "\n".join(lines) + "\n"


def _interp_log_frequency(bin_freqs: np.ndarray, knot_freqs: np.ndarray, knot_gains: np.ndarray) -> np.ndarray:
    # flat extension outside [500, 8000]; log-frequency interpolation between knots
    clipped = np.clip(bin_freqs, knot_freqs[0], knot_freqs[-1])
    return np.interp(np.log(clipped), np.log(knot_freqs), knot_gains)


def audiogram_baseline(profile: HearingProfile, n_bins: int) -> SpectralFilter:
    """Coarse compensation: the negated profile interpolated across the bin grid."""
    bins = np.linspace(0.0, GRID_TOP_HZ, n_bins)
    gains = _interp_log_frequency(bins, profile.frequencies_hz, -profile.gains_db)
    return SpectralFilter(np.clip(gains, -FILTER_DB_LIMIT, FILTER_DB_LIMIT))


def corruption_from_profile(profile: HearingProfile, n_bins: int) -> SpectralFilter:
    """The profile itself as a corrupting filter (hearing loss applied to audio)."""
    bins = np.linspace(0.0, GRID_TOP_HZ, n_bins)
    gains = _interp_log_frequency(bins, profile.frequencies_hz, profile.gains_db)
    return SpectralFilter(np.clip(gains, -FILTER_DB_LIMIT, FILTER_DB_LIMIT))


def random_corruption(n_bins: int, seed: int, knots: int | None = None) -> SpectralFilter:
    """Cheap-speaker style distortion with every gain drawn i.i.d. from [-30, 30] dB.

    By default each bin gets its own draw, so the curve varies faster than
    the seven clinical measurements can capture; passing ``knots`` instead
    draws that many log-spaced anchor gains and interpolates between them.
    """
    gen = stream(seed, _TAG_CORRUPTION)
    if knots is None:
        return SpectralFilter(gen.uniform(-30.0, 30.0, size=n_bins))
    if knots < 2:
        raise ValueError("need at least 2 knots")
    knot_freqs = np.geomspace(CLINICAL_FREQUENCIES_HZ[0], GRID_TOP_HZ, knots)
    knot_gains = gen.uniform(-30.0, 30.0, size=knots)
    bins = np.linspace(0.0, GRID_TOP_HZ, n_bins)
    return SpectralFilter(_interp_log_frequency(bins, knot_freqs, knot_gains))


def measured_profile(corruption: SpectralFilter, source: str = "random-distortion") -> HearingProfile:
    """What an audiogram-style measurement of a corruption reads at the 7 clinical bins."""
    gains = corruption.gains_db[clinical_bin_indices(corruption.n_bins)]
    return HearingProfile(np.clip(gains, -120.0, 30.0), source)


def clinical_bin_indices(n_bins: int) -> list[int]:
    """Bin index nearest each clinical frequency on an n_bins grid."""
    return [int(round(f * (n_bins - 1) / GRID_TOP_HZ)) for f in CLINICAL_FREQUENCIES_HZ]


def _check_clip(clip: AudioClip) -> None:
    if clip.samples.shape[0] == 0:
        raise ValueError("empty clip")
    if clip.sample_rate < MIN_SAMPLE_RATE:
        raise ValueError(f"sample rate {clip.sample_rate} below the supported minimum {MIN_SAMPLE_RATE}")


def _stft(clip: AudioClip):
    return scipy.signal.stft(
        clip.samples,
        fs=clip.sample_rate,
        window="hann",
        nperseg=STFT_WINDOW,
        noverlap=STFT_WINDOW - STFT_HOP,
        boundary="zeros",
        padded=True,
    )


def apply_filter(clip: AudioClip, filt: SpectralFilter) -> AudioClip:
    """Filter by short-time spectral multiplication; output length equals input length."""
    _check_clip(clip)
    freqs, _, z = _stft(clip)
    gains_db = np.interp(freqs, filt.bin_frequencies, filt.gains_db)
    z = z * (10.0 ** (gains_db / 20.0))[:, None]
    _, out = scipy.signal.istft(
        z,
        fs=clip.sample_rate,
        window="hann",
        nperseg=STFT_WINDOW,
        noverlap=STFT_WINDOW - STFT_HOP,
        boundary=True,
    )
    n = clip.samples.shape[0]
    if out.shape[0] < n:
        out = np.pad(out, (0, n - out.shape[0]))
    return AudioClip(out[:n], clip.sample_rate)


def log_spectral_distance(a: AudioClip, b: AudioClip) -> float:
    """RMS dB-spectrum difference over 100 Hz - 8 kHz, all frames."""
    if a.sample_rate != b.sample_rate or a.samples.shape != b.samples.shape:
        raise ValueError("clips must share sample rate and length")
    freqs, _, za = _stft(a)
    _, _, zb = _stft(b)
    band = (freqs >= 100.0) & (freqs <= GRID_TOP_HZ)
    da = 20.0 * np.log10(np.maximum(np.abs(za[band]), _SPECTRUM_FLOOR))
    db = 20.0 * np.log10(np.maximum(np.abs(zb[band]), _SPECTRUM_FLOOR))
    return float(np.sqrt(np.mean((da - db) ** 2)))


def _band_db(clip: AudioClip) -> np.ndarray:
    freqs, _, z = _stft(clip)
    band = (freqs >= 100.0) & (freqs <= GRID_TOP_HZ)
    return 20.0 * np.log10(np.maximum(np.abs(z[band]), _SPECTRUM_FLOOR))


@dataclass(frozen=True)
class ListenerModel:
    """Deterministic stand-in for a human rater.

    Hears the corrupted rendering of the reference clip through a candidate
    filter and scores 10 * d0 / (d0 + D) where D is the log-spectral
    distance to the clean reference, rounded to the nearest half point.
    """

    clean_reference: AudioClip
    corruption: SpectralFilter
    d0: float = 10.0

    def __post_init__(self):
        _check_clip(self.clean_reference)
        if self.clean_reference.duration < 1.0 - 1e-9:
            raise ValueError("reference clip must be at least 1 s long")
        if self.d0 <= 0:
            raise ValueError("d0 must be positive")
        # rendering the corruption and the reference spectrum dominate the
        # cost of a score, so both are fixed at construction
        object.__setattr__(self, "_corrupted", apply_filter(self.clean_reference, self.corruption))
        object.__setattr__(self, "_reference_db", _band_db(self.clean_reference))

    @property
    def corrupted(self) -> AudioClip:
        return self._corrupted


def simulated_score(listener: ListenerModel, candidate: SpectralFilter) -> float:
    heard = apply_filter(listener.corrupted, candidate)
    d = float(np.sqrt(np.mean((_band_db(heard) - listener._reference_db) ** 2)))
    raw = 10.0 * listener.d0 / (listener.d0 + d)
    return float(np.round(raw * 2.0) / 2.0)


def dimension_query_audio(listener: ListenerModel, j: int) -> DimensionFact:
    """Audiogram-style revelation: the ideal compensation gain at a clinical bin."""
    indices = clinical_bin_indices(listener.corruption.n_bins)
    if j not in indices:
        raise ValueError(f"bin {j} is not at a clinical frequency (expected one of {indices})")
    value = -listener.corruption.gains_db[j] / ENGINE_DB_SPAN
    return DimensionFact(j, float(np.clip(value, -1.0, 1.0)))


def render_wav(clip: AudioClip, destination=None) -> bytes:
    """Serialize as 16-bit PCM RIFF/WAVE; returns the bytes, optionally also writing them."""
    pcm = np.round(np.clip(clip.samples, -1.0, 1.0) * 32767.0).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(clip.sample_rate)
        w.writeframes(pcm.tobytes())
    data = buf.getvalue()
    if destination is not None:
        if isinstance(destination, (str, Path)):
            Path(destination).write_bytes(data)
        else:
            destination.write(data)
    return data


def load_wav(source) -> AudioClip:
    """Read a mono 16-bit PCM WAV (as produced by render_wav)."""
    raw = Path(source).read_bytes() if isinstance(source, (str, Path)) else source.read()
    with wave.open(io.BytesIO(raw), "rb") as w:
        if w.getnchannels() != 1 or w.getsampwidth() != 2:
            raise ValueError("expected mono 16-bit PCM")
        frames = w.readframes(w.getnframes())
        rate = w.getframerate()
    samples = np.frombuffer(frames, dtype="<i2").astype(float) / 32767.0
    return AudioClip(samples, rate)


BUILTIN_CLIP_IDS = ("speechish", "chirp", "tone440", "noise")


@lru_cache(maxsize=None)
def builtin_clip(clip_id: str, sample_rate: int = 16000, duration: float = 1.5) -> AudioClip:
    """Deterministic synthetic test clips (no bundled recordings)."""
    n = int(round(sample_rate * duration))
    t = np.arange(n) / sample_rate
    if clip_id == "tone440":
        x = 0.5 * np.sin(2.0 * np.pi * 440.0 * t)
    elif clip_id == "chirp":
        x = 0.5 * scipy.signal.chirp(t, f0=100.0, f1=7500.0, t1=t[-1], method="logarithmic")
    elif clip_id == "noise":
        x = stream(0, _TAG_CLIP).standard_normal(n)
        x *= 0.7 / np.max(np.abs(x))
    elif clip_id == "speechish":
        # harmonic stack with slow vibrato and a broadband floor, speech-like spectrum
        f0 = 140.0 * (1.0 + 0.02 * np.sin(2.0 * np.pi * 3.0 * t))
        phase = 2.0 * np.pi * np.cumsum(f0) / sample_rate
        x = np.zeros(n)
        for k, amp in enumerate((0.5, 0.35, 0.25, 0.18, 0.12, 0.08, 0.05, 0.03), start=1):
            x += amp * np.sin(k * phase)
        x += 0.02 * stream(1, _TAG_CLIP).standard_normal(n)
        x *= 0.4 / np.max(np.abs(x))
    else:
        raise KeyError(f"unknown clip id {clip_id!r}; expected one of {BUILTIN_CLIP_IDS}")
    return AudioClip(x, sample_rate)
