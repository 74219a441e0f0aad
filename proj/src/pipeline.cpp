#include "phonosep/pipeline.hpp"

#include <random>
#include <stdexcept>

namespace phonosep {

Mat track_activations(const AnnotationSequence* annotations, const Lexicon& lexicon,
                      int padded_frames) {
    if (!annotations) {
        Mat z(padded_frames, PhonemeVocabulary::kSize);
        for (int r = 0; r < padded_frames; ++r) z.at(r, PhonemeVocabulary::kNonPhoneme) = 1.0f;
        return z;
    }
    return build_activation_matrix(*annotations, lexicon, padded_frames);
}

SeparationResult separate(const AudioClip& mixture, const AnnotationSequence* annotations,
                          const Lexicon& lexicon, UNet<float>* model,
                          const SeparationOptions& options) {
    AudioClip work = resample(mixture);
    ComplexSpectrogram spec = stft(work);
    Mat mag = magnitude(spec);

    Mat mask(spec.frames, stft_params::kBins);
    if (options.mask_override) {
        float v = *options.mask_override;
        if (v < 0.0f || v > 1.0f)
            throw std::invalid_argument("separate: mask override must lie in [0,1]");
        std::fill(mask.v.begin(), mask.v.end(), v);
    } else {
        if (!model) throw std::invalid_argument("separate: model required without a mask override");
        const UNetConfig& cfg = model->config();
        if (cfg.input_frames != stft_params::kPatchFrames)
            throw std::invalid_argument("separate: model patch length must be 128 frames");
        if (stft_params::kBins % cfg.input_bins != 0)
            throw std::invalid_argument("separate: model bins must divide 512");
        int pool = stft_params::kBins / cfg.input_bins;

        std::vector<MagnitudePatch> patches = extract_patches(spec);
        int padded_frames = (int)patches.size() * stft_params::kPatchFrames;
        Mat z_full;
        if (model->conditioned()) {
            if (!annotations)
                throw std::invalid_argument("separate: conditioned model requires annotations");
            z_full = track_activations(annotations, lexicon, padded_frames);
        }

        std::mt19937 rng(0);  // eval mode, dropout inactive
        for (const MagnitudePatch& patch : patches) {
            Mat pooled = pool_bins(patch.mag, pool);
            std::vector<float> xv(pooled.v.begin(), pooled.v.end());
            Tensor<float> x = Tensor<float>::from_data(
                {1, cfg.input_frames, cfg.input_bins, 1}, std::move(xv));
            Tensor<float> z;
            if (model->conditioned()) {
                std::vector<float> zv((size_t)cfg.input_frames * PhonemeVocabulary::kSize);
                for (int r = 0; r < cfg.input_frames; ++r)
                    for (int p = 0; p < PhonemeVocabulary::kSize; ++p)
                        zv[(size_t)r * PhonemeVocabulary::kSize + p] =
                            z_full.at(patch.offset_frames + r, p);
                z = Tensor<float>::from_data({1, cfg.input_frames, PhonemeVocabulary::kSize},
                                             std::move(zv));
            }
            Tensor<float> m = model->forward(x, z, false, rng);
            for (int r = 0; r < cfg.input_frames; ++r) {
                int row = patch.offset_frames + r;
                if (row >= spec.frames) break;
                for (int c = 0; c < cfg.input_bins; ++c) {
                    float mv = m.data()[(size_t)r * cfg.input_bins + c];
                    for (int k = 0; k < pool; ++k) mask.at(row, c * pool + k) = mv;
                }
            }
        }
    }

    Mat vocal_mag = apply_mask(mag, mask);
    AudioClip vocals = istft(with_magnitude(spec, vocal_mag));

    AudioClip accompaniment;
    accompaniment.sample_rate = work.sample_rate;
    accompaniment.samples.resize(work.samples.size());
    for (size_t i = 0; i < work.samples.size(); ++i)
        accompaniment.samples[i] = work.samples[i] - vocals.samples[i];

    return {std::move(vocals), std::move(accompaniment), std::move(mask)};
}

}  // namespace phonosep
