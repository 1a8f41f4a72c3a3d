#include "regiontag/scene.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "regiontag/audio_io.hpp"
#include "regiontag/error.hpp"
#include "regiontag/fft.hpp"

namespace regiontag {

namespace {

constexpr std::array<std::string_view, kNumClasses> kClassNames{
    "female_speech", "male_speech", "clapping",    "telephone", "laughter", "domestic_sounds", "walk",
    "door",          "music",       "musical_instrument", "water_tap", "bell", "knock"};

// f0, partials, ratio exponent, decay, noise lo, noise hi, noise mix, am rate, am depth, pulsed
constexpr std::array<ClassRecipe, kNumClasses> kRecipes{{
    {220.0, 10, 1.0, 0.75, 300.0, 3000.0, 0.25, 4.0, 0.7, false},     // female speech
    {110.0, 16, 1.0, 0.82, 200.0, 2200.0, 0.25, 3.5, 0.7, false},     // male speech
    {0.0, 0, 1.0, 0.0, 1200.0, 7000.0, 1.0, 7.0, 1.0, true},          // clapping
    {440.0, 3, 1.0, 0.5, 0.0, 0.0, 0.0, 1.0, 1.0, false},             // telephone
    {320.0, 6, 1.0, 0.7, 600.0, 4500.0, 0.5, 6.0, 0.9, false},        // laughter
    {60.0, 6, 1.0, 0.8, 40.0, 700.0, 0.7, 0.5, 0.2, false},           // domestic sounds
    {0.0, 0, 1.0, 0.0, 80.0, 1500.0, 1.0, 1.8, 1.0, true},            // walk
    {90.0, 4, 1.0, 0.6, 150.0, 2500.0, 0.7, 0.8, 0.6, false},         // door
    {262.0, 8, 1.0, 0.8, 0.0, 0.0, 0.0, 0.0, 0.0, false},             // music
    {587.0, 12, 1.0, 0.88, 0.0, 0.0, 0.0, 0.3, 0.3, false},           // musical instrument
    {0.0, 0, 1.0, 0.0, 2500.0, 9000.0, 1.0, 0.0, 0.0, false},         // water tap
    {1250.0, 5, 1.4, 0.7, 0.0, 0.0, 0.0, 0.6, 1.0, true},             // bell
    {0.0, 0, 1.0, 0.0, 300.0, 1400.0, 1.0, 3.0, 1.0, true},           // knock
}};

void check_class(int class_id) {
    if (class_id < 0 || class_id >= kNumClasses) {
        data_error("unknown sound class " + std::to_string(class_id));
    }
}

int next_pow2(std::size_t n) {
    int p = 1;
    while (static_cast<std::size_t>(p) < n) p <<= 1;
    return p;
}

void peak_normalize(std::vector<double>& x, double peak) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    if (m > 0.0) {
        for (double& v : x) v *= peak / m;
    }
}

double rms(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return x.empty() ? 0.0 : std::sqrt(s / static_cast<double>(x.size()));
}

std::vector<double> band_noise(std::size_t len, double lo, double hi, double fs, std::mt19937_64& rng) {
    const int n = next_pow2(len);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = gauss(rng);
    const RealFft fft(n);
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(fft.bins()));
    fft.forward(x, spec);
    const double edge = 0.1 * (hi - lo) + 20.0;  // raised-cosine skirts
    for (int k = 0; k < fft.bins(); ++k) {
        const double f = k * fs / n;
        double g = 0.0;
        if (f >= lo && f <= hi) {
            g = 1.0;
        } else if (f > lo - edge && f < lo) {
            g = 0.5 - 0.5 * std::cos(std::numbers::pi * (f - (lo - edge)) / edge);
        } else if (f > hi && f < hi + edge) {
            g = 0.5 + 0.5 * std::cos(std::numbers::pi * (f - hi) / edge);
        }
        spec[k] *= g;
    }
    fft.inverse(spec, x);
    x.resize(len);
    return x;
}

double blackman(double x, double half_width) {
    if (std::abs(x) >= half_width) return 0.0;
    const double r = std::numbers::pi * x / half_width;
    return 0.42 + 0.5 * std::cos(r) + 0.08 * std::cos(2.0 * r);
}

double sinc(double x) {
    if (x == 0.0) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string_view class_name(int class_id) {
    check_class(class_id);
    return kClassNames[static_cast<std::size_t>(class_id)];
}

const ClassRecipe& class_recipe(int class_id) {
    check_class(class_id);
    return kRecipes[static_cast<std::size_t>(class_id)];
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::vector<double> event_bank(int class_id, double duration, std::uint64_t seed, double sample_rate) {
    check_class(class_id);
    if (!(duration >= 0.2 && duration <= 10.0)) usage_error("event duration must be in [0.2, 10] s");
    const ClassRecipe& r = kRecipes[static_cast<std::size_t>(class_id)];
    const auto len = static_cast<std::size_t>(std::llround(duration * sample_rate));
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(class_id)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double nyquist = sample_rate / 2.0;

    std::vector<double> comb(len, 0.0);
    if (r.harmonics > 0 && r.f0_hz > 0.0) {
        const double f0 = r.f0_hz * (1.0 + 0.06 * (unit(rng) - 0.5));
        const double vib_rate = 3.0 + 3.0 * unit(rng);
        double amp = 1.0;
        for (int h = 1; h <= r.harmonics; ++h, amp *= r.harmonic_decay) {
            const double fh = f0 * std::pow(static_cast<double>(h), r.partial_ratio);
            if (fh >= 0.9 * nyquist) break;
            const double phase0 = 2.0 * std::numbers::pi * unit(rng);
            for (std::size_t i = 0; i < len; ++i) {
                const double t = static_cast<double>(i) / sample_rate;
                const double vib = 0.004 * std::sin(2.0 * std::numbers::pi * vib_rate * t);
                comb[i] += amp * std::sin(2.0 * std::numbers::pi * fh * t * (1.0 + vib) + phase0);
            }
        }
    }
    std::vector<double> noise(len, 0.0);
    if (r.noise_mix > 0.0) noise = band_noise(len, r.noise_lo_hz, r.noise_hi_hz, sample_rate, rng);

    const double comb_rms = rms(comb);
    const double noise_rms = rms(noise);
    std::vector<double> x(len, 0.0);
    for (std::size_t i = 0; i < len; ++i) {
        const double c = comb_rms > 0.0 ? comb[i] / comb_rms : 0.0;
        const double n = noise_rms > 0.0 ? noise[i] / noise_rms : 0.0;
        x[i] = (1.0 - r.noise_mix) * c + r.noise_mix * n;
    }

    // envelope
    std::vector<double> env(len, 1.0);
    if (r.pulsed && r.am_rate_hz > 0.0) {
        std::fill(env.begin(), env.end(), 0.0);
        const double period = 1.0 / r.am_rate_hz;
        const double tau = 0.035;
        for (double start = 0.02 * unit(rng); start < duration; start += period * (0.8 + 0.4 * unit(rng))) {
            const auto s0 = static_cast<std::size_t>(start * sample_rate);
            const auto span = static_cast<std::size_t>(6.0 * tau * sample_rate);
            for (std::size_t i = s0; i < std::min(len, s0 + span); ++i) {
                env[i] += std::exp(-static_cast<double>(i - s0) / (tau * sample_rate));
            }
        }
    } else if (r.am_depth > 0.0 && r.am_rate_hz > 0.0) {
        const double phase0 = 2.0 * std::numbers::pi * unit(rng);
        for (std::size_t i = 0; i < len; ++i) {
            const double t = static_cast<double>(i) / sample_rate;
            env[i] = 1.0 - r.am_depth * (0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * r.am_rate_hz * t + phase0));
        }
    }
    const auto fade = std::min(len / 2, static_cast<std::size_t>(0.01 * sample_rate));
    for (std::size_t i = 0; i < fade; ++i) {
        const double g = static_cast<double>(i) / static_cast<double>(fade);
        env[i] *= g;
        env[len - 1 - i] *= g;
    }
    for (std::size_t i = 0; i < len; ++i) x[i] *= env[i];
    peak_normalize(x, 0.5);
    return x;
}

WavBank WavBank::load(const std::string& directory, double sample_rate) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(directory)) data_error("event bank directory not found: " + directory);
    WavBank bank;
    bank.sample_rate = sample_rate;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(directory)) {
        if (entry.is_regular_file() && entry.path().extension() == ".wav") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        const std::string stem = path.stem().string();
        const auto us = stem.find('_');
        int cls = -1;
        const auto res = std::from_chars(stem.data(), stem.data() + (us == std::string::npos ? stem.size() : us), cls);
        if (res.ec != std::errc{} || cls < 0 || cls >= kNumClasses) continue;
        MultichannelClip clip = read_wav(path.string());
        if (clip.num_channels() != 1) data_error(path.string() + ": event bank files must be mono");
        if (std::abs(clip.sample_rate - sample_rate) > 0.5) data_error(path.string() + ": sample rate mismatch");
        bank.clips[static_cast<std::size_t>(cls)].push_back(std::move(clip.channels.front()));
    }
    return bank;
}

std::vector<double> WavBank::event(int class_id, double duration, std::uint64_t seed) const {
    check_class(class_id);
    const auto& pool = clips[static_cast<std::size_t>(class_id)];
    if (pool.empty()) data_error("event bank has no recordings for class " + std::to_string(class_id));
    const auto& src = pool[mix_seed(seed, 17) % pool.size()];
    if (src.empty()) data_error("empty recording in event bank");
    const auto len = static_cast<std::size_t>(std::llround(duration * sample_rate));
    std::vector<double> x(len);
    for (std::size_t i = 0; i < len; ++i) x[i] = src[i % src.size()];
    peak_normalize(x, 0.5);
    return x;
}

void SceneSpec::validate() const {
    if (!(clip_length > 0.0)) usage_error("clip length must be positive");
    if (events.empty()) usage_error("scene needs at least one event");
    for (std::size_t i = 0; i < events.size(); ++i) {
        const EventSpec& e = events[i];
        const std::string where = "event " + std::to_string(i) + ": ";
        check_class(e.class_id);
        if (!(e.onset >= 0.0) || !(e.duration > 0.0) || e.onset + e.duration > clip_length + 1e-9) {
            data_error(where + "outside clip bounds");
        }
        if (!(e.distance >= 0.3)) data_error(where + "distance must be at least 0.3 m");
        if (!(e.gain >= 0.0)) data_error(where + "gain must be non-negative");
        if (!(e.elevation >= -90.0 && e.elevation <= 90.0)) data_error(where + "elevation out of range");
    }
}

std::vector<AnnotatedEvent> SceneAnnotation::events_between(double start, double end) const {
    std::map<int, AnnotatedEvent> seen;
    const int first = std::max(0, static_cast<int>(std::floor(start / frame_hop + 1e-9)));
    const int last = std::min(static_cast<int>(frames.size()), static_cast<int>(std::ceil(end / frame_hop - 1e-9)));
    for (int f = first; f < last; ++f) {
        for (const auto& e : frames[static_cast<std::size_t>(f)]) seen.emplace(e.event_index, e);
    }
    std::vector<AnnotatedEvent> out;
    out.reserve(seen.size());
    for (auto& [idx, e] : seen) out.push_back(e);
    return out;
}

MultichannelClip spatialize(std::span<const double> signal, const EventSpec& event, const ArrayGeometry& geom) {
    constexpr int kTaps = 32;
    constexpr double kHalf = kTaps / 2.0;
    const DirectionOfArrival doa = DirectionOfArrival::make(event.azimuth, event.elevation);
    const Vec3 u = doa.unit_vector();
    const double amplitude = event.gain / event.distance;
    const auto len = signal.size();
    MultichannelClip out = MultichannelClip::zeros(kNumMics, len, geom.sample_rate);
    if (amplitude == 0.0) return out;
    for (int m = 0; m < kNumMics; ++m) {
        // mics closer to the source hear it earlier: y_m(t) = s(t + m.u / c)
        const double advance = geom.mic_positions[m].dot(u) / geom.sound_speed * geom.sample_rate;
        const double base = std::floor(advance);
        const double frac = advance - base;
        const auto shift = static_cast<long>(base);
        std::array<double, kTaps> h{};
        for (int j = -kTaps / 2 + 1; j <= kTaps / 2; ++j) {
            const double x = frac - j;
            h[static_cast<std::size_t>(j + kTaps / 2 - 1)] = sinc(x) * blackman(x, kHalf);
        }
        auto& y = out.channels[static_cast<std::size_t>(m)];
        for (std::size_t n = 0; n < len; ++n) {
            double acc = 0.0;
            for (int j = -kTaps / 2 + 1; j <= kTaps / 2; ++j) {
                const long idx = static_cast<long>(n) + shift + j;
                if (idx < 0 || idx >= static_cast<long>(len)) continue;
                acc += signal[static_cast<std::size_t>(idx)] * h[static_cast<std::size_t>(j + kTaps / 2 - 1)];
            }
            y[n] = amplitude * acc;
        }
    }
    return out;
}

SceneAnnotation annotate_scene(const SceneSpec& spec) {
    spec.validate();
    SceneAnnotation ann;
    ann.frame_hop = kAnnotationHop;
    const auto n_frames = static_cast<std::size_t>(std::ceil(spec.clip_length / kAnnotationHop - 1e-9));
    ann.frames.assign(n_frames, {});
    for (std::size_t i = 0; i < spec.events.size(); ++i) {
        const EventSpec& e = spec.events[i];
        const DirectionOfArrival doa = DirectionOfArrival::make(e.azimuth, e.elevation);
        const auto first = static_cast<long>(std::floor(e.onset / kAnnotationHop + 1e-9));
        const auto last = static_cast<long>(std::ceil((e.onset + e.duration) / kAnnotationHop - 1e-9));
        for (long f = std::max(0L, first); f < std::min(last, static_cast<long>(n_frames)); ++f) {
            ann.frames[static_cast<std::size_t>(f)].push_back(
                {e.class_id, static_cast<int>(i), doa.azimuth, doa.elevation, e.distance});
        }
    }
    return ann;
}

RenderedScene render_scene(const SceneSpec& spec, const ArrayGeometry& geom, const WavBank* bank) {
    spec.validate();
    geom.validate();
    const double fs = geom.sample_rate;
    const auto len = static_cast<std::size_t>(std::llround(spec.clip_length * fs));
    RenderedScene out{MultichannelClip::zeros(kNumMics, len, fs), annotate_scene(spec)};

    for (std::size_t i = 0; i < spec.events.size(); ++i) {
        const EventSpec& e = spec.events[i];
        const std::uint64_t event_seed = mix_seed(spec.seed, i);
        const std::vector<double> mono =
            bank ? bank->event(e.class_id, e.duration, event_seed) : event_bank(e.class_id, e.duration, event_seed, fs);
        const MultichannelClip seg = spatialize(mono, e, geom);
        const auto onset = static_cast<std::size_t>(std::llround(e.onset * fs));
        for (int m = 0; m < kNumMics; ++m) {
            auto& dst = out.clip.channels[static_cast<std::size_t>(m)];
            const auto& src = seg.channels[static_cast<std::size_t>(m)];
            for (std::size_t n = 0; n < src.size() && onset + n < len; ++n) dst[onset + n] += src[n];
        }
    }

    if (spec.noise_snr_db) {
        double power = 0.0;
        for (const auto& ch : out.clip.channels) {
            for (double v : ch) power += v * v;
        }
        power /= static_cast<double>(len * kNumMics);
        const double sigma = std::sqrt(power / std::pow(10.0, *spec.noise_snr_db / 10.0));
        std::mt19937_64 rng(mix_seed(spec.seed, 0xD1FFu));
        std::normal_distribution<double> gauss(0.0, 1.0);
        if (sigma > 0.0) {
            for (auto& ch : out.clip.channels) {
                for (double& v : ch) v += sigma * gauss(rng);
            }
        }
    }

    double peak = 0.0;
    for (const auto& ch : out.clip.channels) {
        for (double v : ch) peak = std::max(peak, std::abs(v));
    }
    if (peak > 0.99) {
        const double scale = 0.99 / peak;
        for (auto& ch : out.clip.channels) {
            for (double& v : ch) v *= scale;
        }
    }
    return out;
}

std::string format_annotation(const SceneAnnotation& ann) {
    std::string out = "frame_index,class_index,event_index,azimuth_deg,elevation_deg,distance_m\n";
    for (std::size_t f = 0; f < ann.frames.size(); ++f) {
        for (const auto& e : ann.frames[f]) {
            out += std::to_string(f) + ',' + std::to_string(e.class_id) + ',' + std::to_string(e.event_index) + ',' +
                   format_double(e.azimuth) + ',' + format_double(e.elevation) + ',' + format_double(e.distance) + '\n';
        }
    }
    return out;
}

SceneAnnotation parse_annotation(std::string_view text, std::optional<int> num_frames) {
    SceneAnnotation ann;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.starts_with("frame_index")) continue;
        auto fail = [&](const std::string& why) {
            data_error("annotation line " + std::to_string(line_no) + ": " + why);
        };
        std::array<std::string_view, 6> fields;
        std::string_view rest = line;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const auto comma = rest.find(',');
            if ((comma == std::string_view::npos) != (i + 1 == fields.size())) fail("expected 6 fields");
            fields[i] = rest.substr(0, comma);
            if (comma != std::string_view::npos) rest = rest.substr(comma + 1);
        }
        auto to_int = [&](std::string_view s) {
            int v = 0;
            const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
            if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) fail("bad integer '" + std::string(s) + "'");
            return v;
        };
        auto to_double = [&](std::string_view s) {
            double v = 0.0;
            const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
            if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || !std::isfinite(v)) {
                fail("bad number '" + std::string(s) + "'");
            }
            return v;
        };
        const int frame = to_int(fields[0]);
        AnnotatedEvent e{to_int(fields[1]), to_int(fields[2]), to_double(fields[3]), to_double(fields[4]),
                         to_double(fields[5])};
        if (frame < 0) fail("negative frame index");
        if (e.class_id < 0 || e.class_id >= kNumClasses) fail("class index out of range");
        if (e.elevation < -90.0 || e.elevation > 90.0) fail("elevation out of range");
        if (static_cast<std::size_t>(frame) >= ann.frames.size()) ann.frames.resize(static_cast<std::size_t>(frame) + 1);
        ann.frames[static_cast<std::size_t>(frame)].push_back(e);
    }
    if (num_frames) {
        if (static_cast<std::size_t>(*num_frames) < ann.frames.size()) data_error("annotation has rows past the last frame");
        ann.frames.resize(static_cast<std::size_t>(*num_frames));
    }
    return ann;
}

void write_annotation(const SceneAnnotation& ann, const std::string& path) {
    std::ofstream out(path);
    if (!out) data_error("cannot write " + path);
    out << format_annotation(ann);
    if (!out) data_error("write failed: " + path);
}

SceneAnnotation read_annotation(const std::string& path, std::optional<int> num_frames) {
    std::ifstream in(path);
    if (!in) data_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_annotation(ss.str(), num_frames);
    } catch (const Error& e) {
        throw Error(e.kind(), path + ": " + e.what());
    }
}

int sample_event_count(const SceneParams& params, std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, 0xC0u));
    const double scale = params.clip_length / 60.0;
    std::normal_distribution<double> count(params.events_mean_per_minute * scale, params.events_std_per_minute * scale);
    return std::max(1, static_cast<int>(std::lround(count(rng))));
}

SceneSpec sample_scene(const SceneParams& params, std::uint64_t seed) {
    if (params.num_classes < 1 || params.num_classes > kNumClasses) usage_error("num_classes must be in [1, 13]");
    if (!(params.duration_min >= 0.2 && params.duration_max <= 10.0 && params.duration_min <= params.duration_max)) {
        usage_error("event durations must lie in [0.2, 10] s");
    }
    SceneSpec spec;
    spec.clip_length = params.clip_length;
    spec.noise_snr_db = params.noise_snr_db;
    spec.seed = seed;
    const int n = sample_event_count(params, seed);
    std::mt19937_64 rng(mix_seed(seed, 0xE7u));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    for (int i = 0; i < n; ++i) {
        EventSpec e;
        e.class_id = static_cast<int>(unit(rng) * params.num_classes) % params.num_classes;
        e.duration = std::min(uniform(params.duration_min, params.duration_max), params.clip_length);
        e.onset = uniform(0.0, params.clip_length - e.duration);
        e.azimuth = wrap_azimuth(uniform(-180.0, 180.0));
        e.elevation = uniform(params.elevation_min, params.elevation_max);
        if (!params.distance_levels.empty()) {
            e.distance = params.distance_levels[static_cast<std::size_t>(unit(rng) * params.distance_levels.size()) %
                                                params.distance_levels.size()];
        } else {
            e.distance = uniform(params.distance_min, params.distance_max);
        }
        e.gain = std::pow(10.0, uniform(params.gain_db_min, params.gain_db_max) / 20.0);
        spec.events.push_back(e);
    }
    return spec;
}

}  // namespace regiontag
