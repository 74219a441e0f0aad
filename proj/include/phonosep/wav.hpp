#pragma once

// Minimal WAV reader/writer: 16-bit PCM and 32-bit float, mono or stereo.
// Stereo is averaged to mono on load.

#include <string>
#include <vector>

namespace phonosep {

struct AudioClip {
    std::vector<float> samples;  // mono
    int sample_rate = 0;

    double duration() const {
        return sample_rate > 0 ? (double)samples.size() / sample_rate : 0.0;
    }
};

AudioClip load_wav(const std::string& path);
void save_wav(const std::string& path, const AudioClip& clip, int bits = 16);

}  // namespace phonosep
