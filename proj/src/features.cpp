#include "regiontag/features.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "regiontag/directional.hpp"
#include "regiontag/error.hpp"

namespace regiontag {

namespace {

struct TokenName {
    FeatureToken token;
    std::string_view name;
};

constexpr TokenName kTokenNames[] = {
    {FeatureToken::Lps, "lps"},           {FeatureToken::Ipd, "ipd"}, {FeatureToken::GccPhat, "gccphat"},
    {FeatureToken::Df, "df"},             {FeatureToken::Fov, "fov"}, {FeatureToken::AngleEmbed, "angle"},
    {FeatureToken::DistanceEmbed, "distance"},
};

}  // namespace

FeatureRecipe FeatureRecipe::parse(std::string_view text) {
    FeatureRecipe recipe;
    std::string item;
    std::istringstream in{std::string(text)};
    while (std::getline(in, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }), item.end());
        std::transform(item.begin(), item.end(), item.begin(), [](unsigned char c) { return std::tolower(c); });
        if (item == "learned") item = "angle";
        const auto it = std::find_if(std::begin(kTokenNames), std::end(kTokenNames),
                                     [&](const TokenName& t) { return t.name == item; });
        if (it == std::end(kTokenNames)) usage_error("unknown feature '" + item + "'");
        if (recipe.has(it->token)) usage_error("feature '" + item + "' listed twice");
        recipe.tokens.push_back(it->token);
    }
    if (recipe.stack_planes() == 0) usage_error("feature recipe needs at least one spectral or spatial plane");
    if (recipe.has(FeatureToken::AngleEmbed) && recipe.has(FeatureToken::DistanceEmbed)) {
        usage_error("angle and distance embeddings cannot be combined");
    }
    if (recipe.needs_region() && recipe.needs_distance()) usage_error("angular and distance features cannot be combined");
    return recipe;
}

std::string FeatureRecipe::to_string() const {
    std::string out;
    for (const auto token : tokens) {
        if (!out.empty()) out += ',';
        for (const auto& t : kTokenNames) {
            if (t.token == token) out += t.name;
        }
    }
    return out;
}

bool FeatureRecipe::has(FeatureToken token) const {
    return std::find(tokens.begin(), tokens.end(), token) != tokens.end();
}

std::vector<PlaneKind> FeatureRecipe::plane_kinds() const {
    std::vector<PlaneKind> kinds;
    for (const auto token : tokens) {
        switch (token) {
            case FeatureToken::Lps: kinds.push_back(PlaneKind::LPS); break;
            case FeatureToken::Ipd: kinds.insert(kinds.end(), kFeaturePairs.size(), PlaneKind::IPD); break;
            case FeatureToken::GccPhat: kinds.insert(kinds.end(), kFeaturePairs.size(), PlaneKind::GCCPHAT); break;
            case FeatureToken::Df: kinds.push_back(PlaneKind::DF); break;
            case FeatureToken::Fov: kinds.push_back(PlaneKind::FOV); break;
            case FeatureToken::AngleEmbed:
            case FeatureToken::DistanceEmbed: break;
        }
    }
    return kinds;
}

int FeatureRecipe::stack_planes() const { return static_cast<int>(plane_kinds().size()); }

EmbeddingKind FeatureRecipe::embedding() const {
    if (has(FeatureToken::AngleEmbed)) return EmbeddingKind::Angle;
    if (has(FeatureToken::DistanceEmbed)) return EmbeddingKind::Distance;
    return EmbeddingKind::None;
}

bool FeatureRecipe::needs_region() const {
    return has(FeatureToken::Df) || has(FeatureToken::Fov) || has(FeatureToken::AngleEmbed);
}

bool FeatureRecipe::needs_distance() const { return has(FeatureToken::DistanceEmbed); }

std::vector<FeaturePlane> extract_planes(const MultichannelClip& clip, const ArrayGeometry& geom,
                                         const FeatureRecipe& recipe, const FeatureSettings& settings,
                                         const std::optional<AngularRegion>& region) {
    if (clip.num_channels() != kNumMics) data_error("feature extraction needs a 4-channel clip");
    const SpectroTensor spec = stft(clip, settings.n_fft, settings.hop);
    std::vector<FeaturePlane> planes;
    std::optional<DirectionalFeatureBank> bank;
    auto directional = [&]() -> const DirectionalFeatureBank& {
        if (!bank) bank.emplace(spec, geom, kFeaturePairs, settings.steering);
        return *bank;
    };
    for (const auto token : recipe.tokens) {
        switch (token) {
            case FeatureToken::Lps: planes.push_back(lps(spec, 0)); break;
            case FeatureToken::Ipd:
                for (const MicPair pair : kFeaturePairs) planes.push_back(ipd(spec, pair));
                break;
            case FeatureToken::GccPhat:
                for (const MicPair pair : kFeaturePairs) planes.push_back(gcc_phat_plane(spec, pair, settings.gcc_max_lag));
                break;
            case FeatureToken::Df:
                if (!region) usage_error("df feature needs an angular region");
                planes.push_back(directional().evaluate(region->middle()));
                break;
            case FeatureToken::Fov:
                if (!region) usage_error("fov feature needs an angular region");
                planes.push_back(fov_feature(directional(), *region, AngleGrid::make(settings.fov_resolution)));
                break;
            case FeatureToken::AngleEmbed:
            case FeatureToken::DistanceEmbed: break;
        }
    }
    return planes;
}

FeatureStack<float> pack_planes(const std::vector<FeaturePlane>& planes) {
    if (planes.empty()) usage_error("no feature planes to pack");
    FeatureStack<float> stack(static_cast<int>(planes.size()), planes.front().frames, planes.front().bins);
    for (std::size_t p = 0; p < planes.size(); ++p) {
        float* dst = stack.plane(static_cast<int>(p));
        for (std::size_t i = 0; i < planes[p].values.size(); ++i) dst[i] = static_cast<float>(planes[p].values[i]);
    }
    return stack;
}

FeatureStack<float> extract_stack(const MultichannelClip& clip, const ArrayGeometry& geom, const FeatureRecipe& recipe,
                                  const FeatureSettings& settings, const std::optional<AngularRegion>& region) {
    return pack_planes(extract_planes(clip, geom, recipe, settings, region));
}

}  // namespace regiontag
