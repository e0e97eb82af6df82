#!/usr/bin/env python3
"""Independent MFCC reference used to freeze tests/golden/sine440_mfcc_ref.txt.

Implements the exact front-end definition with numpy only:
pre-emphasis 0.97 over the whole signal (y[0] = x[0] - 0.97*x[0]),
25 ms symmetric Hamming windows every 10 ms, 256-point FFT power
spectrum, 23 triangular mel filters between 20 Hz and Nyquist with
weights interpolated in the mel domain, log with floor 1e-10, and an
orthonormal DCT-II keeping all 23 coefficients.

Run from the repository root:
    python3 tests/oracles/mfcc_reference.py > tests/golden/sine440_mfcc_ref.txt
"""

import numpy as np


def mel(f):
    return 2595.0 * np.log10(1.0 + f / 700.0)


def mel_inv(m):
    return 700.0 * (10.0 ** (m / 2595.0) - 1.0)


def mfcc(x, sample_rate=8000, frame_ms=25.0, shift_ms=10.0, num_mel=23,
         num_ceps=23, preemph=0.97, low_freq=20.0, high_freq=None,
         log_floor=1e-10, nfft=256):
    if high_freq is None:
        high_freq = sample_rate / 2.0
    frame_len = int(round(sample_rate * frame_ms / 1000.0))
    shift = int(round(sample_rate * shift_ms / 1000.0))

    y = np.empty_like(x)
    y[0] = x[0] - preemph * x[0]
    y[1:] = x[1:] - preemph * x[:-1]

    n = 1 + (len(y) - frame_len) // shift
    window = 0.54 - 0.46 * np.cos(2.0 * np.pi * np.arange(frame_len) / (frame_len - 1))

    bin_freqs = np.arange(nfft // 2 + 1) * sample_rate / nfft
    bin_mels = mel(bin_freqs)
    centers = np.linspace(mel(low_freq), mel(high_freq), num_mel + 2)
    fbank = np.zeros((num_mel, nfft // 2 + 1))
    for k in range(num_mel):
        lo, mid, hi = centers[k], centers[k + 1], centers[k + 2]
        rising = (bin_mels - lo) / (mid - lo)
        falling = (hi - bin_mels) / (hi - mid)
        fbank[k] = np.maximum(0.0, np.minimum(rising, falling))

    # orthonormal DCT-II
    j = np.arange(num_mel)
    dct = np.cos(np.pi * np.outer(np.arange(num_ceps), j + 0.5) / num_mel)
    dct *= np.sqrt(2.0 / num_mel)
    dct[0] *= 1.0 / np.sqrt(2.0)

    out = np.zeros((n, num_ceps))
    for t in range(n):
        frame = y[t * shift:t * shift + frame_len] * window
        spec = np.fft.rfft(frame, nfft)
        power = spec.real ** 2 + spec.imag ** 2
        logmel = np.log(np.maximum(fbank @ power, log_floor))
        out[t] = dct @ logmel
    return out


def sine_fixture(freq=440.0, seconds=0.5, sample_rate=8000, amplitude=0.5):
    n = int(seconds * sample_rate)
    t = np.arange(n) / sample_rate
    x = amplitude * np.sin(2.0 * np.pi * freq * t)
    # snap to the 16-bit grid the wav layer would produce
    return np.rint(x * 32767.0) / 32768.0


if __name__ == "__main__":
    feats = mfcc(sine_fixture())
    print(feats.shape[0], feats.shape[1])
    for row in feats:
        print(" ".join("%.12e" % v for v in row))
