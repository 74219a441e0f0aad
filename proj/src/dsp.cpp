#include "phonosep/dsp.hpp"

#include "phonosep/fft.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace phonosep {

namespace {
constexpr double kPi = 3.14159265358979323846;

std::vector<double> hann_window(int n) {
    std::vector<double> w((size_t)n);
    for (int i = 0; i < n; ++i) w[(size_t)i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / n));
    return w;
}
}  // namespace

AudioClip resample(const AudioClip& audio, int target_rate) {
    if (audio.sample_rate < target_rate)
        throw std::invalid_argument("resample: upsampling is out of pipeline scope (" +
                                    std::to_string(audio.sample_rate) + " -> " +
                                    std::to_string(target_rate) + " Hz)");
    if (audio.sample_rate == target_rate) return audio;

    const int taps = 64;
    const int half = taps / 2;
    const double ratio = (double)audio.sample_rate / target_rate;
    // cutoff slightly below the target Nyquist
    const double cutoff = 0.45 * target_rate / audio.sample_rate;

    std::int64_t n_out = (std::int64_t)std::llround((double)audio.samples.size() / ratio);
    AudioClip out;
    out.sample_rate = target_rate;
    out.samples.resize((size_t)n_out);

    float peak = 0.0f;
    for (float s : audio.samples) peak = std::max(peak, std::abs(s));
    if (peak > 10.0f)
        std::cerr << "resample: input peak " << peak << " looks un-normalized\n";

#pragma omp parallel for
    for (std::int64_t n = 0; n < n_out; ++n) {
        double center = (double)n * ratio;
        std::int64_t k0 = (std::int64_t)std::floor(center) - half + 1;
        double acc = 0, wsum = 0;
        for (int i = 0; i < taps; ++i) {
            std::int64_t k = k0 + i;
            double t = (double)k - center;
            double sinc = t == 0.0 ? 2.0 * cutoff
                                   : std::sin(2.0 * kPi * cutoff * t) / (kPi * t);
            double win = 0.5 * (1.0 + std::cos(kPi * t / half));  // Hann over the tap span
            if (std::abs(t) > half) win = 0.0;
            double h = sinc * win;
            wsum += h;
            if (k >= 0 && k < (std::int64_t)audio.samples.size()) acc += h * audio.samples[(size_t)k];
        }
        out.samples[(size_t)n] = (float)(wsum != 0.0 ? acc / wsum : 0.0);
    }
    return out;
}

ComplexSpectrogram stft(const AudioClip& audio) {
    using namespace stft_params;
    if (audio.sample_rate != kSampleRate)
        throw std::invalid_argument("stft: audio must be at 8192 Hz, got " +
                                    std::to_string(audio.sample_rate));
    ComplexSpectrogram spec;
    spec.orig_samples = (std::int64_t)audio.samples.size();
    spec.frames = std::max<std::int64_t>(
        1, (spec.orig_samples + kHop - 1) / kHop);
    spec.v.assign((size_t)spec.frames * kBins, {0.0f, 0.0f});

    static const std::vector<double> win = hann_window(kWindow);
#pragma omp parallel for
    for (int f = 0; f < spec.frames; ++f) {
        std::vector<std::complex<double>> buf((size_t)kWindow);
        std::int64_t start = (std::int64_t)f * kHop;
        for (int i = 0; i < kWindow; ++i) {
            std::int64_t t = start + i;
            double s = (t < spec.orig_samples) ? audio.samples[(size_t)t] : 0.0;
            buf[(size_t)i] = s * win[(size_t)i];
        }
        fft(buf, false);
        for (int b = 0; b < kBins; ++b)
            spec.at(f, b) = {(float)buf[(size_t)b].real(), (float)buf[(size_t)b].imag()};
    }
    return spec;
}

AudioClip istft(const ComplexSpectrogram& spec) {
    using namespace stft_params;
    std::int64_t total = (std::int64_t)(spec.frames - 1) * kHop + kWindow;
    std::vector<double> acc((size_t)total, 0.0), wsum((size_t)total, 0.0);
    static const std::vector<double> win = hann_window(kWindow);

    for (int f = 0; f < spec.frames; ++f) {
        std::vector<std::complex<double>> buf((size_t)kWindow, {0.0, 0.0});
        for (int b = 0; b < kBins; ++b) {
            std::complex<double> c((double)spec.at(f, b).real(), (double)spec.at(f, b).imag());
            buf[(size_t)b] = c;
            if (b > 0) buf[(size_t)(kWindow - b)] = std::conj(c);
        }
        // dropped Nyquist bin re-inserted as zero (index kBins stays 0)
        fft(buf, true);
        std::int64_t start = (std::int64_t)f * kHop;
        for (int i = 0; i < kWindow; ++i) {
            acc[(size_t)(start + i)] += buf[(size_t)i].real() * win[(size_t)i];
            wsum[(size_t)(start + i)] += win[(size_t)i] * win[(size_t)i];
        }
    }

    std::int64_t n = spec.orig_samples > 0 ? spec.orig_samples : total;
    AudioClip out;
    out.sample_rate = spec.sample_rate;
    out.samples.resize((size_t)n, 0.0f);
    for (std::int64_t i = 0; i < n && i < total; ++i)
        out.samples[(size_t)i] = (float)(wsum[(size_t)i] > 1e-8 ? acc[(size_t)i] / wsum[(size_t)i] : 0.0);
    return out;
}

Mat magnitude(const ComplexSpectrogram& spec) {
    Mat m(spec.frames, spec.bins);
    for (int f = 0; f < spec.frames; ++f)
        for (int b = 0; b < spec.bins; ++b) m.at(f, b) = std::abs(spec.at(f, b));
    return m;
}

std::vector<MagnitudePatch> extract_patches(const Mat& mag) {
    using namespace stft_params;
    int n_patches = std::max(1, (mag.rows + kPatchFrames - 1) / kPatchFrames);
    std::vector<MagnitudePatch> patches((size_t)n_patches);
    for (int p = 0; p < n_patches; ++p) {
        MagnitudePatch& patch = patches[(size_t)p];
        patch.offset_frames = p * kPatchFrames;
        patch.mag = Mat(kPatchFrames, mag.cols);
        for (int f = 0; f < kPatchFrames; ++f) {
            int src = patch.offset_frames + f;
            if (src >= mag.rows) break;  // tail stays zero-padded
            for (int b = 0; b < mag.cols; ++b) patch.mag.at(f, b) = mag.at(src, b);
        }
    }
    return patches;
}

std::vector<MagnitudePatch> extract_patches(const ComplexSpectrogram& spec) {
    return extract_patches(magnitude(spec));
}

Mat reassemble_patches(const std::vector<MagnitudePatch>& patches, int frames) {
    if (patches.empty()) throw std::invalid_argument("reassemble_patches: no patches");
    int cols = patches[0].mag.cols;
    Mat out(frames, cols);
    for (const auto& p : patches)
        for (int f = 0; f < p.mag.rows; ++f) {
            int dst = p.offset_frames + f;
            if (dst >= frames) break;
            for (int b = 0; b < cols; ++b) out.at(dst, b) = p.mag.at(f, b);
        }
    return out;
}

Mat apply_mask(const Mat& mixture_mag, const Mat& mask) {
    if (mixture_mag.rows != mask.rows || mixture_mag.cols != mask.cols)
        throw std::invalid_argument("apply_mask: shape mismatch");
    for (float m : mask.v)
        if (m < 0.0f || m > 1.0f)
            throw std::invalid_argument("apply_mask: mask entry outside [0,1]");
    Mat out(mixture_mag.rows, mixture_mag.cols);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = mixture_mag.v[i] * mask.v[i];
    return out;
}

Mat pool_bins(const Mat& mag, int pool) {
    if (pool <= 0 || mag.cols % pool != 0)
        throw std::invalid_argument("pool_bins: pool must divide the column count");
    if (pool == 1) return mag;
    Mat out(mag.rows, mag.cols / pool);
    for (int r = 0; r < mag.rows; ++r)
        for (int c = 0; c < out.cols; ++c) {
            float acc = 0;
            for (int k = 0; k < pool; ++k) acc += mag.at(r, c * pool + k);
            out.at(r, c) = acc / (float)pool;
        }
    return out;
}

ComplexSpectrogram with_magnitude(const ComplexSpectrogram& phase_source, const Mat& mag) {
    if (phase_source.frames != mag.rows || phase_source.bins != mag.cols)
        throw std::invalid_argument("with_magnitude: shape mismatch");
    ComplexSpectrogram out = phase_source;
    for (int f = 0; f < out.frames; ++f)
        for (int b = 0; b < out.bins; ++b) {
            std::complex<float> c = phase_source.at(f, b);
            float a = std::abs(c);
            out.at(f, b) = a > 0.0f ? c * (mag.at(f, b) / a)
                                    : std::complex<float>(mag.at(f, b), 0.0f);
        }
    return out;
}

}  // namespace phonosep
