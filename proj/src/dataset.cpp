#include "regiontag/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "regiontag/audio_io.hpp"
#include "regiontag/error.hpp"

namespace regiontag {

namespace fs = std::filesystem;

std::string_view query_mode_name(QueryMode mode) {
    switch (mode) {
        case QueryMode::Omni: return "omni";
        case QueryMode::Angular: return "angular";
        case QueryMode::Distance: return "distance";
    }
    return "?";
}

QueryMode parse_query_mode(std::string_view text) {
    for (auto m : {QueryMode::Omni, QueryMode::Angular, QueryMode::Distance}) {
        if (query_mode_name(m) == text) return m;
    }
    usage_error("unknown query mode '" + std::string(text) + "' (expected omni, angular or distance)");
}

std::vector<Manifest::Entry>& Manifest::split(std::string_view name) {
    if (name == "train") return train;
    if (name == "val") return val;
    if (name == "test") return test;
    usage_error("unknown split '" + std::string(name) + "'");
}

const std::vector<Manifest::Entry>& Manifest::split(std::string_view name) const {
    return const_cast<Manifest*>(this)->split(name);
}

Manifest Manifest::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) data_error("cannot open manifest " + path);
    const fs::path base = fs::path(path).parent_path();
    Manifest m;
    std::vector<Entry>* current = nullptr;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream fields(line);
        std::string first;
        if (!(fields >> first)) continue;
        if (first.front() == '[') {
            if (first.back() != ']') data_error(path + ":" + std::to_string(line_no) + ": bad section header");
            current = &m.split(first.substr(1, first.size() - 2));
            continue;
        }
        std::string second;
        if (!(fields >> second) || current == nullptr) {
            data_error(path + ":" + std::to_string(line_no) + ": expected '<wav> <csv>' inside a section");
        }
        auto resolve = [&](const std::string& p) {
            const fs::path fp(p);
            return (fp.is_absolute() ? fp : base / fp).lexically_normal().string();
        };
        current->push_back({resolve(first), resolve(second)});
    }
    return m;
}

void Manifest::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) data_error("cannot write " + path);
    const fs::path base = fs::absolute(fs::path(path)).parent_path();
    auto rel = [&](const std::string& p) { return fs::absolute(p).lexically_normal().lexically_relative(base).string(); };
    out << "# regiontag manifest v1\n";
    for (const char* name : {"train", "val", "test"}) {
        out << '[' << name << "]\n";
        for (const auto& e : split(name)) {
            out << rel(e.wav) << ' ' << rel(e.csv) << '\n';
        }
    }
    if (!out) data_error("write failed: " + path);
}

std::vector<LabeledClip> load_split(const Manifest& manifest, std::string_view split, double sample_rate) {
    std::vector<LabeledClip> clips;
    for (const auto& e : manifest.split(split)) {
        LabeledClip c;
        c.name = fs::path(e.wav).stem().string();
        c.audio = read_array_wav(e.wav, sample_rate);
        const int frames = static_cast<int>(std::ceil(c.audio.duration() / kAnnotationHop - 1e-9));
        c.annotation = read_annotation(e.csv, frames);
        clips.push_back(std::move(c));
    }
    return clips;
}

std::vector<LabeledClip> expand_acs(const std::vector<LabeledClip>& clips, const ArrayGeometry& geom) {
    const auto table = derive_acs_table(geom);
    std::vector<LabeledClip> out;
    out.reserve(clips.size() * table.size());
    for (const auto& c : clips) {
        for (const auto& t : table) {
            AugmentedClip a = apply_acs(c.audio, c.annotation, t);
            out.push_back({c.name + "_acs" + std::to_string(t.id), std::move(a.clip), std::move(a.annotation)});
        }
    }
    return out;
}

Crop transform_crop(const Crop& crop, const AcsTransform& t) {
    Crop out;
    out.audio = crop.audio;
    const auto src = t.source_channels();
    for (std::size_t j = 0; j < src.size(); ++j) out.audio.channels[j] = crop.audio.channels[static_cast<std::size_t>(src[j])];
    out.events = crop.events;
    for (auto& e : out.events) {
        e.azimuth = t.map_azimuth(e.azimuth);
        e.elevation = t.map_elevation(e.elevation);
    }
    return out;
}

std::optional<Crop> sample_crop(const LabeledClip& clip, double seconds, std::uint64_t seed) {
    const double fs = clip.audio.sample_rate;
    const auto len = static_cast<std::size_t>(std::llround(seconds * fs));
    if (len == 0 || len > clip.audio.length()) return std::nullopt;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> start_dist(0, clip.audio.length() - len);
    for (int attempt = 0; attempt < 64; ++attempt) {
        const std::size_t start = start_dist(rng);
        const double t0 = static_cast<double>(start) / fs;
        auto events = clip.annotation.events_between(t0, t0 + seconds);
        if (!events.empty()) return Crop{clip.audio.slice(start, len), std::move(events)};
    }
    return std::nullopt;
}

TaggingQuery sample_query(const Crop& crop, QueryMode mode, const QuerySettings& settings, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    TaggingQuery q;
    if (mode == QueryMode::Omni) return q;
    if (crop.events.empty()) usage_error("cannot draw a query for a crop without events");
    const auto& pick = crop.events[static_cast<std::size_t>(unit(rng) * crop.events.size()) % crop.events.size()];
    if (mode == QueryMode::Distance) {
        q.distance = pick.distance;
        return q;
    }
    const bool centered = unit(rng) < settings.centered_probability;
    const double center = centered ? pick.azimuth : -180.0 + 360.0 * unit(rng);
    q.region = AngularRegion::centered(center, settings.region_width);
    return q;
}

std::vector<unsigned char> query_targets(const std::vector<AnnotatedEvent>& events, QueryMode mode,
                                         const TaggingQuery& query, const QuerySettings& settings, int num_classes) {
    std::vector<unsigned char> t(static_cast<std::size_t>(num_classes), 0);
    for (const auto& e : events) {
        bool in = true;
        if (mode == QueryMode::Angular) {
            if (!query.region) usage_error("angular targets need a region");
            in = region_contains(*query.region, e.azimuth);
        } else if (mode == QueryMode::Distance) {
            if (!query.distance) usage_error("distance targets need a distance");
            in = std::abs(e.distance - *query.distance) <= settings.distance_tolerance + 1e-12;
        }
        if (in && e.class_id < num_classes) t[static_cast<std::size_t>(e.class_id)] = 1;
    }
    return t;
}

Conditioning conditioning_for(const TaggingQuery& query) {
    Conditioning c;
    if (query.region) c.azimuth = query.region->middle();
    c.distance = query.distance;
    return c;
}

std::vector<Crop> sample_crops(const std::vector<LabeledClip>& clips, double seconds, int crops_per_clip,
                               std::uint64_t seed) {
    std::vector<Crop> crops;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        for (int j = 0; j < crops_per_clip; ++j) {
            auto crop = sample_crop(clips[i], seconds, mix_seed(seed, i * 4096 + static_cast<std::size_t>(j)));
            if (crop) crops.push_back(std::move(*crop));
        }
    }
    return crops;
}

std::vector<Example> build_examples(const std::vector<LabeledClip>& clips, const ArrayGeometry& geom,
                                    const FeatureRecipe& recipe, QueryMode mode, const FeatureSettings& features,
                                    const ExampleSettings& settings, std::uint64_t seed) {
    if (clips.empty()) data_error("no clips to build examples from");
    if (recipe.needs_region() && mode != QueryMode::Angular) usage_error("angular features need the angular query mode");
    if (recipe.needs_distance() && mode != QueryMode::Distance) usage_error("distance features need the distance query mode");

    const std::size_t per_clip = static_cast<std::size_t>(settings.crops_per_clip);
    std::array<AcsTransform, kNumAcsTransforms> table{};
    if (settings.acs) table = derive_acs_table(geom);
    std::vector<std::optional<Example>> slots(clips.size() * per_clip);
    std::vector<std::string> errors(clips.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < clips.size(); ++i) {
        try {
            for (std::size_t j = 0; j < per_clip; ++j) {
                const std::uint64_t s = mix_seed(seed, i * 4096 + j);
                auto crop = sample_crop(clips[i], settings.crop_seconds, s);
                if (!crop) continue;
                if (settings.acs) crop = transform_crop(*crop, table[mix_seed(s, 2) % kNumAcsTransforms]);
                const TaggingQuery q = sample_query(*crop, mode, settings.query, mix_seed(s, 1));
                Example ex;
                ex.features = extract_stack(crop->audio, geom, recipe, features, q.region);
                ex.conditioning = conditioning_for(q);
                const auto t = query_targets(crop->events, mode, q, settings.query);
                ex.targets.assign(t.begin(), t.end());
                slots[i * per_clip + j] = std::move(ex);
            }
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (const auto& e : errors) {
        if (!e.empty()) data_error("feature extraction failed: " + e);
    }
    std::vector<Example> out;
    for (auto& s : slots) {
        if (s) out.push_back(std::move(*s));
    }
    if (out.empty()) data_error("no crop with an active event found in the clip pool");
    return out;
}

}  // namespace regiontag
