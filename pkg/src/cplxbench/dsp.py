"""STFT analysis/synthesis, SNR mixing, SI-SDR, and the synthetic corpus.

All audio is mono float64 at 16 kHz. The STFT uses a periodic Hann window
with centered reflect padding; the inverse applies the same window again
and normalizes by the summed squared window, which reconstructs the input
exactly (up to float rounding) for any hop not larger than the window.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass, field

import numpy as np

from .cplx import ComplexPair
from .tensor import Tensor

SAMPLE_RATE = 16_000

# SI-SDR is unbounded at perfect reconstruction; the ratio is floored and
# capped so scores live in [-SI_SDR_CAP_DB, SI_SDR_CAP_DB].
SI_SDR_CAP_DB = 140.0
_CAP_FACTOR = 10.0 ** (-SI_SDR_CAP_DB / 10.0)


def hann_periodic(n):
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


@dataclass(frozen=True)
class Framing:
    """STFT geometry: window length, hop, and the analysis window."""

    window_len: int
    hop: int
    sample_rate: int = SAMPLE_RATE
    window: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not (0 < self.hop <= self.window_len):
            raise ValueError(f"need 0 < hop <= window_len, got hop={self.hop}, "
                             f"window_len={self.window_len}")
        if self.window is None:
            object.__setattr__(self, "window", hann_periodic(self.window_len))

    @property
    def bins(self):
        return self.window_len // 2 + 1

    def n_frames(self, n_samples):
        """Centered framing: 1 + floor(n / hop)."""
        return 1 + n_samples // self.hop


# the two framings every shipped model references; window/hop values are
# inferred from the cost arithmetic and recorded in each report's notes
FRAMING_WIDE = Framing(window_len=512, hop=128)    # 257 bins
FRAMING_NARROW = Framing(window_len=320, hop=160)  # 161 bins


@dataclass
class Spectrogram:
    """Complex spectrogram [frames x bins] plus its framing."""

    pair: ComplexPair
    framing: Framing

    def __post_init__(self):
        if self.pair.shape[-1] != self.framing.bins:
            raise ValueError(f"{self.pair.shape[-1]} bins inconsistent with framing "
                             f"({self.framing.bins})")

    @property
    def n_frames(self):
        return self.pair.shape[-2]


def stft(waveform, framing: Framing) -> Spectrogram:
    """Hann-windowed, centered (reflect-padded) short-time Fourier transform.

    Args:
        waveform: 1-D float array, at least one window long.
        framing: analysis geometry.

    Returns:
        Spectrogram with a [frames x bins] ComplexPair.
    """
    x = np.asarray(waveform, dtype=np.float64)
    if x.ndim != 1 or x.size < framing.window_len:
        raise ValueError(f"waveform must be 1-D with >= {framing.window_len} samples")
    half = framing.window_len // 2
    xp = np.pad(x, (half, half), mode="reflect")
    T = framing.n_frames(x.size)
    idx = np.arange(framing.window_len)[None, :] + framing.hop * np.arange(T)[:, None]
    frames = xp[idx] * framing.window[None, :]
    spec = np.fft.rfft(frames, axis=1)
    return Spectrogram(ComplexPair.from_complex(spec), framing)


def istft(spec: Spectrogram, length=None):
    """Overlap-add inverse STFT with squared-window normalization."""
    z = spec.pair.to_complex()
    framing = spec.framing
    T = z.shape[0]
    frames = np.fft.irfft(z, n=framing.window_len, axis=1) * framing.window[None, :]
    total = (T - 1) * framing.hop + framing.window_len
    out = np.zeros(total)
    norm = np.zeros(total)
    wsq = framing.window * framing.window
    for t in range(T):
        lo = t * framing.hop
        out[lo:lo + framing.window_len] += frames[t]
        norm[lo:lo + framing.window_len] += wsq
    out /= np.maximum(norm, 1e-10)
    half = framing.window_len // 2
    if length is None:
        length = (T - 1) * framing.hop
    return out[half:half + length]


def spectral_frame_energy(spec: Spectrogram):
    """Per-frame windowed energy recovered from rfft coefficients.

    Parseval over the real FFT: bins 1..N/2-1 appear twice in the full
    spectrum, so they are double-weighted.
    """
    z = spec.pair.to_complex()
    n = spec.framing.window_len
    w = np.full(z.shape[-1], 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return (np.abs(z) ** 2 * w).sum(axis=-1) / n


def power(x):
    x = np.asarray(x, dtype=np.float64)
    return float(np.mean(x * x))


@dataclass
class MixtureExample:
    """A clean/noise pair mixed at an exact SNR."""

    clean: np.ndarray
    noise: np.ndarray  # already scaled; mixed == clean + noise
    snr_db: float
    mixed: np.ndarray
    seed: int

    def realized_snr_db(self):
        return 10.0 * np.log10(power(self.clean) / power(self.noise))


def mix_at_snr(clean, noise, snr_db, seed=0) -> MixtureExample:
    """Scale noise so clean-to-noise power ratio is exactly snr_db.

    Noise shorter than the clean signal is looped; longer noise is
    truncated.
    """
    clean = np.asarray(clean, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if noise.size < clean.size:
        reps = int(np.ceil(clean.size / noise.size))
        noise = np.tile(noise, reps)
    noise = noise[:clean.size]
    p_c, p_n = power(clean), power(noise)
    if p_c == 0.0 or p_n == 0.0:
        raise ValueError("mix_at_snr needs nonzero-energy clean and noise")
    scale = np.sqrt(p_c / (p_n * 10.0 ** (snr_db / 10.0)))
    scaled = noise * scale
    return MixtureExample(clean=clean, noise=scaled, snr_db=float(snr_db),
                          mixed=clean + scaled, seed=seed)


def si_sdr(estimate, reference):
    """Scale-invariant signal-to-distortion ratio in dB.

    Projects the estimate onto the reference (alpha = <e,r>/<r,r>) and
    returns 10 log10(|alpha r|^2 / |e - alpha r|^2). The ratio is
    symmetrically floored/capped so the score lies in +-SI_SDR_CAP_DB, with
    the cap value reached exactly at perfect reconstruction.
    """
    e = np.asarray(estimate, dtype=np.float64)
    r = np.asarray(reference, dtype=np.float64)
    if e.shape != r.shape:
        raise ValueError(f"length mismatch: {e.shape} vs {r.shape}")
    rr = float(np.dot(r, r))
    if rr == 0.0:
        raise ValueError("si_sdr needs a nonzero reference")
    alpha = float(np.dot(e, r)) / rr
    target = alpha * r
    num = float(np.dot(target, target))
    den = float(np.dot(e - target, e - target))
    return 10.0 * np.log10((num + den * _CAP_FACTOR) / (den + num * _CAP_FACTOR))


# -- synthetic desk-scale corpus ---------------------------------------------


def _synth_voiced(rng, n, sample_rate):
    """Harmonic tone stack with slow amplitude modulation."""
    t = np.arange(n) / sample_rate
    f0 = rng.uniform(80.0, 300.0)
    n_harm = int(rng.integers(3, 9))
    sig = np.zeros(n)
    for k in range(1, n_harm + 1):
        amp = rng.uniform(0.6, 1.0) / k
        phase = rng.uniform(0.0, 2.0 * np.pi)
        sig += amp * np.sin(2.0 * np.pi * f0 * k * t + phase)
    f_am = rng.uniform(2.0, 8.0)
    depth = rng.uniform(0.5, 0.9)
    env = 0.5 * (1.0 + depth * np.sin(2.0 * np.pi * f_am * t + rng.uniform(0, 2 * np.pi)))
    sig *= env
    return sig / np.sqrt(power(sig))


def _synth_tilted_noise(rng, n, sample_rate):
    """White noise shaped by a random spectral tilt (dB per octave)."""
    white = rng.normal(size=n)
    spec = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    freqs[0] = freqs[1]
    tilt_db_oct = rng.uniform(-6.0, 3.0)
    gain = (freqs / 1000.0) ** (tilt_db_oct / (20.0 * np.log10(2.0)))
    shaped = np.fft.irfft(spec * gain, n=n)
    return shaped / np.sqrt(power(shaped))


def synth_example(seed, index, duration_s, snr_db=None, sample_rate=SAMPLE_RATE):
    """One deterministic mixture; same (seed, index) gives identical bytes."""
    rng = np.random.default_rng([seed, index])
    n = int(round(duration_s * sample_rate))
    clean = _synth_voiced(rng, n, sample_rate)
    noise = _synth_tilted_noise(rng, n, sample_rate)
    if snr_db is None:
        snr_db = rng.uniform(-5.0, 5.0)
    return mix_at_snr(clean, noise, snr_db, seed=index)


def synth_dataset(seed, n_examples, duration_s, sample_rate=SAMPLE_RATE):
    """Deterministic corpus with SNR uniform in [-5, 5] dB."""
    if n_examples < 1:
        raise ValueError("n_examples must be >= 1")
    return [synth_example(seed, i, duration_s, sample_rate=sample_rate)
            for i in range(n_examples)]


def synth_eval_corpus(seed, per_snr, duration_s, snrs=(-5.0, 0.0, 5.0),
                      sample_rate=SAMPLE_RATE):
    """Evaluation buckets at fixed SNR levels.

    Returns a dict snr_db -> list of MixtureExample; indices are offset per
    bucket so buckets never share source material.
    """
    out = {}
    for b, snr in enumerate(snrs):
        out[float(snr)] = [
            synth_example(seed, b * per_snr + i, duration_s, snr_db=float(snr),
                          sample_rate=sample_rate)
            for i in range(per_snr)
        ]
    return out


# -- optional 16-bit PCM WAV I/O ---------------------------------------------


def write_wav(path, waveform, sample_rate=SAMPLE_RATE):
    x = np.asarray(waveform, dtype=np.float64)
    peak = np.max(np.abs(x)) or 1.0
    scaled = np.clip(x / max(peak, 1.0), -1.0, 1.0)
    pcm = (scaled * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(sample_rate)
        fh.writeframes(pcm.tobytes())


def read_wav(path):
    with wave.open(str(path), "rb") as fh:
        if fh.getnchannels() != 1 or fh.getsampwidth() != 2:
            raise ValueError("expected mono 16-bit PCM")
        rate = fh.getframerate()
        pcm = np.frombuffer(fh.readframes(fh.getnframes()), dtype="<i2")
    return pcm.astype(np.float64) / 32767.0, rate
