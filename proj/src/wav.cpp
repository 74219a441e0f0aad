#include "phonosep/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace phonosep {

namespace {

template <typename T>
T read_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= (T)buf[i] << (8 * i);
    return v;
}

template <typename T>
void write_le(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) buf[i] = (unsigned char)((std::make_unsigned_t<T>)v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

}  // namespace

AudioClip load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open wav file: " + path);
    char riff[4], wave[4];
    in.read(riff, 4);
    read_le<std::uint32_t>(in);
    in.read(wave, 4);
    if (std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(wave, "WAVE", 4) != 0)
        throw std::runtime_error("not a RIFF/WAVE file: " + path);

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::vector<char> data;
    while (in) {
        char id[4];
        in.read(id, 4);
        if (!in) break;
        std::uint32_t size = read_le<std::uint32_t>(in);
        if (std::memcmp(id, "fmt ", 4) == 0) {
            format = read_le<std::uint16_t>(in);
            channels = read_le<std::uint16_t>(in);
            rate = read_le<std::uint32_t>(in);
            read_le<std::uint32_t>(in);
            read_le<std::uint16_t>(in);
            bits = read_le<std::uint16_t>(in);
            if (size > 16) in.seekg(size - 16, std::ios::cur);
        } else if (std::memcmp(id, "data", 4) == 0) {
            data.resize(size);
            in.read(data.data(), size);
        } else {
            in.seekg(size + (size & 1), std::ios::cur);
        }
    }
    if (channels == 0 || rate == 0 || data.empty())
        throw std::runtime_error("malformed wav file: " + path);

    AudioClip clip;
    clip.sample_rate = (int)rate;
    size_t frame_count;
    if (format == 1 && bits == 16) {
        frame_count = data.size() / (2 * channels);
        clip.samples.resize(frame_count);
        const std::int16_t* p = reinterpret_cast<const std::int16_t*>(data.data());
        for (size_t i = 0; i < frame_count; ++i) {
            double acc = 0;
            for (int c = 0; c < channels; ++c) acc += p[i * channels + c] / 32768.0;
            clip.samples[i] = (float)(acc / channels);
        }
    } else if (format == 3 && bits == 32) {
        frame_count = data.size() / (4 * channels);
        clip.samples.resize(frame_count);
        const float* p = reinterpret_cast<const float*>(data.data());
        for (size_t i = 0; i < frame_count; ++i) {
            double acc = 0;
            for (int c = 0; c < channels; ++c) acc += p[i * channels + c];
            clip.samples[i] = (float)(acc / channels);
        }
    } else {
        throw std::runtime_error("unsupported wav format (need 16-bit PCM or 32-bit float): " + path);
    }
    return clip;
}

void save_wav(const std::string& path, const AudioClip& clip, int bits) {
    if (bits != 16 && bits != 32) throw std::invalid_argument("save_wav: bits must be 16 or 32");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write wav file: " + path);
    std::uint32_t n = (std::uint32_t)clip.samples.size();
    std::uint16_t block = (std::uint16_t)(bits / 8);
    std::uint32_t data_size = n * block;

    out.write("RIFF", 4);
    write_le<std::uint32_t>(out, 36 + data_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_le<std::uint32_t>(out, 16);
    write_le<std::uint16_t>(out, bits == 16 ? 1 : 3);
    write_le<std::uint16_t>(out, 1);
    write_le<std::uint32_t>(out, (std::uint32_t)clip.sample_rate);
    write_le<std::uint32_t>(out, (std::uint32_t)clip.sample_rate * block);
    write_le<std::uint16_t>(out, block);
    write_le<std::uint16_t>(out, (std::uint16_t)bits);
    out.write("data", 4);
    write_le<std::uint32_t>(out, data_size);
    if (bits == 16) {
        for (float s : clip.samples) {
            double v = std::max(-1.0, std::min(1.0, (double)s));
            write_le<std::int16_t>(out, (std::int16_t)std::lround(v * 32767.0));
        }
    } else {
        for (float s : clip.samples) {
            std::uint32_t u;
            std::memcpy(&u, &s, 4);
            write_le<std::uint32_t>(out, u);
        }
    }
}

}  // namespace phonosep
