#pragma once

// End-to-end separation: mixture audio (plus optional word annotations) to
// vocal and accompaniment estimates via the masked-spectrogram model.

#include "phonosep/phoneme.hpp"
#include "phonosep/unet.hpp"

#include <optional>

namespace phonosep {

struct SeparationOptions {
    // Constant mask in [0,1] replacing the model output (pipeline smoke
    // tests); the model may be absent when set.
    std::optional<float> mask_override;
};

struct SeparationResult {
    AudioClip vocals;
    AudioClip accompaniment;  // mixture minus vocals at the working rate
    Mat mask;                 // frames x 512
};

// The model's frequency extent may be a divisor of the 512 STFT bins; the
// input is then average-pooled in frequency and the mask expanded back by
// repetition. Annotations may be null for unconditioned models.
SeparationResult separate(const AudioClip& mixture, const AnnotationSequence* annotations,
                          const Lexicon& lexicon, UNet<float>* model,
                          const SeparationOptions& options = {});

// Rasterize annotations for a whole track, padded to a whole number of
// patches; frames past the words carry NON_PHONEME only.
Mat track_activations(const AnnotationSequence* annotations, const Lexicon& lexicon,
                      int padded_frames);

}  // namespace phonosep
