#include "regiontag/audio_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "regiontag/error.hpp"

namespace regiontag {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T read_le(const std::vector<char>& buf, std::size_t pos) {
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    return v;
}

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) data_error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_header(std::ostream& out, const MultichannelClip& clip, std::uint16_t format,
                  std::uint16_t bits) {
    const auto channels = static_cast<std::uint16_t>(clip.num_channels());
    const auto rate = static_cast<std::uint32_t>(std::lround(clip.sample_rate));
    const std::uint32_t block = channels * (bits / 8u);
    const auto data_bytes = static_cast<std::uint32_t>(clip.length() * block);
    out.write("RIFF", 4);
    put<std::uint32_t>(out, 36 + data_bytes);
    out.write("WAVEfmt ", 8);
    put<std::uint32_t>(out, 16);
    put<std::uint16_t>(out, format);
    put<std::uint16_t>(out, channels);
    put<std::uint32_t>(out, rate);
    put<std::uint32_t>(out, rate * block);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(block));
    put<std::uint16_t>(out, bits);
    out.write("data", 4);
    put<std::uint32_t>(out, data_bytes);
}

}  // namespace

MultichannelClip read_wav(const std::string& path) {
    const std::vector<char> buf = slurp(path);
    if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 || std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
        data_error(path + ": not a RIFF/WAVE file");
    }
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= buf.size()) {
        const std::string id(buf.data() + pos, 4);
        const auto size = read_le<std::uint32_t>(buf, pos + 4);
        const std::size_t body = pos + 8;
        if (body + size > buf.size()) data_error(path + ": truncated chunk '" + id + "'");
        if (id == "fmt ") {
            if (size < 16) data_error(path + ": fmt chunk too small");
            format = read_le<std::uint16_t>(buf, body);
            channels = read_le<std::uint16_t>(buf, body + 2);
            rate = read_le<std::uint32_t>(buf, body + 4);
            bits = read_le<std::uint16_t>(buf, body + 14);
            if (format == kFormatExtensible) {
                if (size < 40) data_error(path + ": extensible fmt chunk too small");
                format = read_le<std::uint16_t>(buf, body + 24);  // first two bytes of the subformat GUID
            }
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) data_error(path + ": data chunk before fmt chunk");
            if (channels == 0) data_error(path + ": zero channels");
            const bool pcm16 = format == kFormatPcm && bits == 16;
            const bool f32 = format == kFormatFloat && bits == 32;
            if (!pcm16 && !f32) data_error(path + ": only 16-bit PCM and 32-bit float WAV are supported");
            const std::size_t bytes_per_sample = bits / 8u;
            const std::size_t frames = size / (bytes_per_sample * channels);
            MultichannelClip clip = MultichannelClip::zeros(channels, frames, rate);
            for (std::size_t i = 0; i < frames; ++i) {
                for (std::size_t c = 0; c < channels; ++c) {
                    const std::size_t at = body + (i * channels + c) * bytes_per_sample;
                    clip.channels[c][i] = pcm16 ? read_le<std::int16_t>(buf, at) / 32768.0
                                                : static_cast<double>(read_le<float>(buf, at));
                }
            }
            return clip;
        }
        pos = body + size + (size & 1u);
    }
    data_error(path + ": no data chunk");
}

MultichannelClip read_array_wav(const std::string& path, double sample_rate) {
    MultichannelClip clip = read_wav(path);
    if (clip.num_channels() != kNumMics) {
        data_error(path + ": expected 4 channels, got " + std::to_string(clip.num_channels()));
    }
    if (std::abs(clip.sample_rate - sample_rate) > 0.5) {
        data_error(path + ": expected " + std::to_string(std::lround(sample_rate)) + " Hz, got " +
                   std::to_string(std::lround(clip.sample_rate)) + " Hz (resampling is not supported)");
    }
    clip.validate();
    return clip;
}

void write_wav(const std::string& path, const MultichannelClip& clip) {
    std::ofstream out(path, std::ios::binary);
    if (!out) data_error("cannot write " + path);
    write_header(out, clip, kFormatFloat, 32);
    for (std::size_t i = 0; i < clip.length(); ++i) {
        for (const auto& ch : clip.channels) put<float>(out, static_cast<float>(ch[i]));
    }
    if (!out) data_error("write failed: " + path);
}

void write_wav_pcm16(const std::string& path, const MultichannelClip& clip) {
    std::ofstream out(path, std::ios::binary);
    if (!out) data_error("cannot write " + path);
    write_header(out, clip, kFormatPcm, 16);
    for (std::size_t i = 0; i < clip.length(); ++i) {
        for (const auto& ch : clip.channels) {
            const double v = std::clamp(ch[i], -1.0, 32767.0 / 32768.0);
            put<std::int16_t>(out, static_cast<std::int16_t>(std::lround(v * 32768.0)));
        }
    }
    if (!out) data_error("write failed: " + path);
}

void write_feature_dump(const std::string& path, const std::vector<FeaturePlane>& planes) {
    if (planes.empty()) usage_error("feature dump needs at least one plane");
    const int frames = planes.front().frames;
    const int bins = planes.front().bins;
    for (const auto& p : planes) {
        if (p.frames != frames || p.bins != bins) usage_error("feature planes differ in shape");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) data_error("cannot write " + path);
    out.write("RTFD", 4);
    put<std::uint32_t>(out, kFeatureDumpVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(planes.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(frames));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(bins));
    for (const auto& p : planes) put<std::uint8_t>(out, static_cast<std::uint8_t>(p.kind));
    for (const auto& p : planes) {
        for (double v : p.values) put<float>(out, static_cast<float>(v));
    }
    if (!out) data_error("write failed: " + path);
}

std::vector<FeaturePlane> read_feature_dump(const std::string& path) {
    const std::vector<char> buf = slurp(path);
    if (buf.size() < 20 || std::memcmp(buf.data(), "RTFD", 4) != 0) data_error(path + ": not a feature dump");
    const auto version = read_le<std::uint32_t>(buf, 4);
    if (version != kFeatureDumpVersion) data_error(path + ": unsupported feature dump version");
    const auto k = read_le<std::uint32_t>(buf, 8);
    const auto frames = read_le<std::uint32_t>(buf, 12);
    const auto bins = read_le<std::uint32_t>(buf, 16);
    const std::size_t plane_size = static_cast<std::size_t>(frames) * bins;
    if (buf.size() != 20 + k + k * plane_size * sizeof(float)) data_error(path + ": feature dump size mismatch");
    std::vector<FeaturePlane> planes;
    std::size_t pos = 20 + k;
    for (std::uint32_t i = 0; i < k; ++i) {
        const auto kind_byte = static_cast<std::uint8_t>(buf[20 + i]);
        if (kind_byte > static_cast<std::uint8_t>(PlaneKind::EMBED)) data_error(path + ": unknown plane kind");
        FeaturePlane p(static_cast<int>(frames), static_cast<int>(bins), static_cast<PlaneKind>(kind_byte));
        for (auto& v : p.values) {
            v = read_le<float>(buf, pos);
            pos += sizeof(float);
        }
        planes.push_back(std::move(p));
    }
    return planes;
}

}  // namespace regiontag
