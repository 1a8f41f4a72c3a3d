#pragma once

#include <string>
#include <vector>

#include "regiontag/dsp.hpp"

namespace regiontag {

/// Reads a RIFF/WAVE file holding 16-bit PCM or 32-bit IEEE float samples
/// (plain or WAVE_FORMAT_EXTENSIBLE). Samples are scaled to [-1, 1).
MultichannelClip read_wav(const std::string& path);

/// Reads a WAV and checks it is 4-channel at `sample_rate` Hz. No resampling.
MultichannelClip read_array_wav(const std::string& path, double sample_rate = 24000.0);

/// Writes 32-bit float WAV.
void write_wav(const std::string& path, const MultichannelClip& clip);
/// Writes 16-bit PCM WAV (clipped to [-1, 1]).
void write_wav_pcm16(const std::string& path, const MultichannelClip& clip);

/// Feature dump container, little-endian:
///   char[4] "RTFD" | u32 version (=1) | u32 k | u32 T | u32 F | u8 kind[k] | f32 payload[k*T*F]
/// The payload is plane-major then row-major (plane, frame, bin).
inline constexpr std::uint32_t kFeatureDumpVersion = 1;

void write_feature_dump(const std::string& path, const std::vector<FeaturePlane>& planes);
std::vector<FeaturePlane> read_feature_dump(const std::string& path);

}  // namespace regiontag
