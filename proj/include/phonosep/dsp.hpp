#pragma once

// Time-frequency front-end: resampling to 8192 Hz, STFT with window 1024 and
// hop 768 keeping 512 bins, patch extraction of 128 frames, soft-mask
// application and inverse STFT via window-sum-normalized overlap-add.

#include "phonosep/wav.hpp"

#include <complex>
#include <vector>

namespace phonosep {

namespace stft_params {
constexpr int kSampleRate = 8192;
constexpr int kWindow = 1024;
constexpr int kHop = 768;
constexpr int kBins = 512;        // raw 513 bins, Nyquist dropped
constexpr int kPatchFrames = 128;
}  // namespace stft_params

// Row-major float matrix shared by the pipeline modules.
struct Mat {
    int rows = 0, cols = 0;
    std::vector<float> v;

    Mat() = default;
    Mat(int r, int c, float fill = 0.0f) : rows(r), cols(c), v((size_t)r * c, fill) {}
    float& at(int r, int c) { return v[(size_t)r * cols + c]; }
    float at(int r, int c) const { return v[(size_t)r * cols + c]; }
};

struct ComplexSpectrogram {
    int frames = 0;
    int bins = stft_params::kBins;
    int sample_rate = stft_params::kSampleRate;
    int window = stft_params::kWindow;
    int hop = stft_params::kHop;
    std::int64_t orig_samples = 0;  // for inversion length
    std::vector<std::complex<float>> v;

    std::complex<float>& at(int f, int b) { return v[(size_t)f * bins + b]; }
    std::complex<float> at(int f, int b) const { return v[(size_t)f * bins + b]; }
};

struct MagnitudePatch {
    int offset_frames = 0;  // source frame offset within the track
    Mat mag;                // kPatchFrames x kBins, nonnegative
};

// Band-limited windowed-sinc downsampling (64 taps per output phase).
// Rejects upsampling. An input already at the target rate is returned as-is.
AudioClip resample(const AudioClip& audio, int target_rate = stft_params::kSampleRate);

ComplexSpectrogram stft(const AudioClip& audio);
AudioClip istft(const ComplexSpectrogram& spec);

Mat magnitude(const ComplexSpectrogram& spec);

// Non-overlapping contiguous 128-frame patches; the final patch is
// zero-padded at the track tail.
std::vector<MagnitudePatch> extract_patches(const ComplexSpectrogram& spec);
std::vector<MagnitudePatch> extract_patches(const Mat& mag);

// Reassemble patches into a frames x bins magnitude matrix, discarding the
// tail padding.
Mat reassemble_patches(const std::vector<MagnitudePatch>& patches, int frames);

// Elementwise product; mask entries must lie in [0,1].
Mat apply_mask(const Mat& mixture_mag, const Mat& mask);

// Average-pool columns in groups of `pool`, which must divide the width.
Mat pool_bins(const Mat& mag, int pool);

// Combine a (masked) magnitude with the phase of a reference spectrogram.
ComplexSpectrogram with_magnitude(const ComplexSpectrogram& phase_source, const Mat& mag);

}  // namespace phonosep
