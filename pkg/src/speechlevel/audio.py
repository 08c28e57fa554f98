"""Waveform I/O, frame decomposition, and the synthetic evaluation corpus.

Audio is mono PCM. Samples live in [-1, 1] as float64; the canonical rate for
the rest of the pipeline is 16 kHz with 20 ms Hamming frames every 10 ms.

The corpus generator produces speakers in three articulation bands (fast,
medium, very slow syllable repetition with matching pause structure) so that
downstream classifiers have a real temporal signal to find. Scores are drawn
per speaker and written to a manifest CSV next to the WAV files.
"""

import csv
import wave
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, SpeechLevelWarning
from .seeding import stream

CANONICAL_RATE = 16_000


@dataclass(frozen=True)
class Waveform:
    """Mono audio: float64 samples in [-1, 1] plus sample rate."""

    samples: np.ndarray
    sample_rate: int

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class FrameGrid:
    """Frame length / hop in samples plus an analysis window of the same length."""

    frame_length: int
    hop_length: int
    window: np.ndarray

    @classmethod
    def from_ms(cls, sample_rate: int, frame_ms: float = 20.0, hop_ms: float = 10.0,
                kind: str = "hamming") -> "FrameGrid":
        flen = int(round(sample_rate * frame_ms / 1000.0))
        hop = int(round(sample_rate * hop_ms / 1000.0))
        if kind == "hamming":
            # symmetric: 0.54 - 0.46 cos(2 pi n / (N-1))
            win = np.hamming(flen)
        elif kind == "rect":
            win = np.ones(flen)
        else:
            raise ValueError(f"unknown window kind {kind!r}")
        return cls(flen, hop, win)

    def n_frames(self, n_samples: int) -> int:
        if n_samples < self.frame_length:
            raise DataError(
                f"signal of {n_samples} samples is shorter than one "
                f"{self.frame_length}-sample frame")
        return 1 + (n_samples - self.frame_length) // self.hop_length

    def frame_times(self, n_samples: int) -> np.ndarray:
        """Center time (seconds at the canonical rate caller knows) is up to the
        caller; this returns frame start offsets in samples."""
        t = self.n_frames(n_samples)
        return np.arange(t) * self.hop_length


def load_wav(path) -> Waveform:
    """Read a RIFF PCM 16-bit mono file into a Waveform.

    int16 -32768 maps to exactly -1.0. Non-16kHz files load with a warning;
    anything not 16-bit mono PCM is rejected.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such audio file: {path}")
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            rate = wf.getframerate()
            n = wf.getnframes()
            raw = wf.readframes(n)
    except (wave.Error, EOFError) as exc:
        raise DataError(f"cannot parse {path}: {exc}") from exc
    if n_channels != 1:
        raise DataError(f"{path}: expected mono, got {n_channels} channels")
    if sampwidth != 2:
        raise DataError(f"{path}: unsupported encoding ({8 * sampwidth}-bit)")
    if rate != CANONICAL_RATE:
        warnings.warn(f"{path}: sample rate {rate} != {CANONICAL_RATE}",
                      SpeechLevelWarning, stacklevel=2)
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return Waveform(samples, rate)


def save_wav(path, w: Waveform) -> None:
    """Write a Waveform as RIFF PCM 16-bit mono."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pcm = np.clip(np.round(w.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(w.sample_rate)
        wf.writeframes(pcm.tobytes())


def frame_signal(w: Waveform, grid: FrameGrid) -> np.ndarray:
    """Slice a waveform into windowed frames, shape (n_frames, frame_length)."""
    x = np.asarray(w.samples, dtype=np.float64)
    t = grid.n_frames(len(x))
    idx = np.arange(grid.frame_length)[None, :] + \
        (np.arange(t) * grid.hop_length)[:, None]
    return x[idx] * grid.window[None, :]


# ---------------------------------------------------------------------------
# synthetic corpus

@dataclass(frozen=True)
class ClassProfile:
    """Articulation band for one intelligibility class.

    syllable_rate_hz sets the burst repetition rate (the dominant envelope
    modulation), duty the voiced fraction of each syllable period, pause_s the
    inter-word silence range, and disfluency_rate the per-word probability of
    an inserted low-energy noise burst.
    """

    name: str
    score_range: tuple[int, int]
    syllable_rate_hz: tuple[float, float]
    duty: float
    word_syllables: tuple[int, int]
    pause_s: tuple[float, float]
    disfluency_rate: float
    f0_wobble: float
    target_s: tuple[float, float]


DEFAULT_PROFILES = (
    ClassProfile("H", (67, 100), (4.0, 6.0), 0.55, (3, 5), (0.05, 0.18),
                 0.00, 0.010, (2.0, 3.0)),
    ClassProfile("M", (34, 66), (2.0, 3.0), 0.45, (2, 4), (0.20, 0.50),
                 0.15, 0.030, (2.6, 3.6)),
    ClassProfile("L", (0, 33), (0.7, 1.4), 0.35, (1, 2), (0.60, 1.30),
                 0.50, 0.080, (3.2, 4.2)),
)


def _speaker_voice(rng):
    """Random but fixed-per-speaker voice description."""
    f0 = rng.uniform(85.0, 240.0)
    formants = np.array([rng.uniform(300, 850),
                         rng.uniform(900, 2200),
                         rng.uniform(2300, 3200)])
    bws = rng.uniform(90.0, 220.0, size=3)
    tilt = rng.uniform(0.8, 1.4)
    return f0, formants, bws, tilt


def _harmonic_gains(f0, formants, bws, tilt, f_max=4000.0):
    ks = np.arange(1, max(2, int(f_max / f0)) + 1)
    freqs = ks * f0
    gain = np.zeros_like(freqs)
    for fc, bw in zip(formants, bws):
        gain += 1.0 / (1.0 + ((freqs - fc) / bw) ** 2)
    gain *= 1.0 / ks ** tilt
    return ks, gain / (np.max(gain) + 1e-12)


def _syllable(rng, sr, voiced_s, f0, formants, bws, tilt, wobble):
    n = max(8, int(round(voiced_s * sr)))
    t = np.arange(n) / sr
    # slow random drift plus vibrato; heavier wobble for poor articulation
    drift = rng.normal(0.0, wobble)
    vib = 0.012 * np.sin(2 * np.pi * rng.uniform(4.5, 6.5) * t + rng.uniform(0, 2 * np.pi))
    f0_track = f0 * (1.0 + wobble * np.sin(2 * np.pi * rng.uniform(0.5, 1.5) * t)
                     + drift + vib)
    phase = 2 * np.pi * np.cumsum(f0_track) / sr
    ks, gains = _harmonic_gains(f0, formants, bws, tilt)
    sig = np.zeros(n)
    for k, g in zip(ks, gains):
        if g < 1e-3:
            continue
        sig += g * np.sin(k * phase + rng.uniform(0, 2 * np.pi))
    env = np.hanning(n) ** 0.8
    return sig * env * rng.uniform(0.75, 1.0)


def _disfluency_burst(rng, sr):
    n = int(rng.uniform(0.10, 0.30) * sr)
    burst = rng.normal(0.0, 1.0, size=n)
    env = np.hanning(n)
    return burst * env * rng.uniform(0.04, 0.10)


INTERFERENCE_RATE = 0.75


def _interference(rng, sr, seconds):
    """A speech-loud hum plus hiss whose statistics carry no class cue.

    The tone drifts in pitch and the whole patch is amplitude-modulated at
    a random syllable-like rate, so utterance-level pitch and rhythm
    statistics are corrupted rather than merely diluted.
    """
    n = int(seconds * sr)
    t = np.arange(n) / sr
    f0 = rng.uniform(70.0, 260.0)
    drift = 1.0 + 0.25 * np.sin(2 * np.pi * rng.uniform(0.4, 1.2) * t
                                + rng.uniform(0, 2 * np.pi))
    phase = 2 * np.pi * f0 * np.cumsum(drift) / sr
    sig = np.zeros(n)
    for k in range(1, 6):
        sig += np.sin(k * phase + rng.uniform(0, 2 * np.pi)) / k
    sig += 0.6 * rng.normal(0.0, 1.0, size=n)
    depth = rng.uniform(0.5, 0.9)
    am_hz = rng.uniform(1.5, 16.0)
    sig *= 1.0 - depth + depth * 0.5 * (1.0 + np.sin(
        2 * np.pi * am_hz * t + rng.uniform(0, 2 * np.pi)))
    ramp = max(8, min(n // 8, int(0.04 * sr)))
    env = np.ones(n)
    env[:ramp] = np.linspace(0.0, 1.0, ramp)
    env[n - ramp:] = np.linspace(1.0, 0.0, ramp)
    return sig * env / (np.max(np.abs(sig)) + 1e-12)


def synth_utterance(rng, profile: ClassProfile, score_pos: float,
                    voice, sr: int = CANONICAL_RATE) -> Waveform:
    """One utterance for a speaker at relative position score_pos in its class.

    Besides the scored speech content, most utterances contain one or two
    class-neutral interference patches (see INTERFERENCE_RATE).
    """
    f0, formants, bws, tilt = voice
    lo, hi = profile.syllable_rate_hz
    rate = (lo + score_pos * (hi - lo)) * rng.uniform(0.92, 1.08)
    period = 1.0 / rate
    voiced_s = profile.duty * period
    gap_s = period - voiced_s
    target = rng.uniform(*profile.target_s)

    pieces = [np.zeros(int(rng.uniform(0.15, 0.30) * sr))]
    total = pieces[0].size / sr
    made_word = False
    while True:
        n_syl = int(rng.integers(profile.word_syllables[0],
                                 profile.word_syllables[1] + 1))
        word_s = n_syl * period
        if made_word and total + word_s > target:
            break
        for s in range(n_syl):
            pieces.append(_syllable(rng, sr, voiced_s, f0, formants, bws,
                                    tilt, profile.f0_wobble))
            if s < n_syl - 1:
                pieces.append(np.zeros(int(gap_s * sr)))
        total += word_s
        made_word = True
        if rng.uniform() < profile.disfluency_rate:
            burst = _disfluency_burst(rng, sr)
            pieces.append(burst)
            total += burst.size / sr
        if total >= target:
            break
        pause = np.zeros(int(rng.uniform(*profile.pause_s) * sr))
        pieces.append(pause)
        total += pause.size / sr
    pieces.append(np.zeros(int(rng.uniform(0.10, 0.20) * sr)))

    # most utterances carry one or two interference patches at random spots;
    # their presence and length are independent of the class, so they are
    # pure nuisance for any whole-utterance average
    if rng.uniform() < INTERFERENCE_RATE:
        speech_peak = max(float(np.max(np.abs(p))) for p in pieces if p.size)
        for _ in range(1 + int(rng.uniform() < 0.5)):
            headroom = 5.8 - sum(p.size for p in pieces) / sr
            seconds = min(rng.uniform(0.5, 1.2), headroom)
            if seconds < 0.3:
                break
            hum = _interference(rng, sr, seconds)
            hum *= speech_peak * rng.uniform(0.9, 1.3)
            pieces.insert(int(rng.integers(1, len(pieces))), hum)

    sig = np.concatenate(pieces)
    peak = np.max(np.abs(sig)) + 1e-12
    sig = sig / peak * 0.22 * rng.uniform(0.85, 1.0)
    # constant noise floor so there is something for noise estimators to see
    snr_db = rng.uniform(28.0, 38.0)
    speech_rms = np.sqrt(np.mean(sig ** 2)) + 1e-12
    noise = rng.normal(0.0, speech_rms * 10 ** (-snr_db / 20.0), size=sig.size)
    return Waveform(sig + noise, sr)


def synth_corpus(out_dir, profiles=DEFAULT_PROFILES, n_speakers: int = 4,
                 utt_per_speaker: int = 10, seed: int = 0,
                 sample_rate: int = CANONICAL_RATE):
    """Generate WAVs plus manifest.csv under out_dir.

    n_speakers is per class. Returns the manifest rows as a list of
    (relative path, speaker_id, score). Same arguments -> byte-identical tree.
    """
    if len(profiles) == 0:
        raise DataError("empty class profile set")
    if n_speakers < 1 or utt_per_speaker < 1:
        raise DataError("need at least one speaker and one utterance per speaker")
    out_dir = Path(out_dir)
    (out_dir / "wav").mkdir(parents=True, exist_ok=True)

    rows = []
    for profile in profiles:
        for i in range(n_speakers):
            spk = f"{profile.name}{i:02d}"
            srng = stream(seed, "speaker", spk)
            lo, hi = profile.score_range
            score = int(srng.integers(lo, hi + 1))
            pos = 0.5 if hi == lo else (score - lo) / (hi - lo)
            voice = _speaker_voice(srng)
            for j in range(utt_per_speaker):
                urng = stream(seed, "utt", spk, j)
                w = synth_utterance(urng, profile, pos, voice, sample_rate)
                rel = f"wav/{spk}_{j:03d}.wav"
                save_wav(out_dir / rel, w)
                rows.append((rel, spk, score))

    with open(out_dir / "manifest.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "speaker_id", "score"])
        writer.writerows(rows)
    return rows
