#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "regiontag/error.hpp"
#include "regiontag/model.hpp"

namespace regiontag {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

class Reader {
public:
    Reader(std::vector<char> buf, std::string path) : buf_(std::move(buf)), path_(std::move(path)) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s(buf_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == buf_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > buf_.size()) data_error(path_ + ": truncated checkpoint");
    }
    std::vector<char> buf_;
    std::string path_;
    std::size_t pos_ = 0;
};

nlohmann::json config_to_json(const ModelConfig& c) {
    return {{"input_planes", c.input_planes},
            {"embedding", static_cast<int>(c.embedding)},
            {"widths", c.widths},
            {"num_classes", c.num_classes},
            {"embed_dim", c.embed_dim},
            {"angle_resolution", c.angle_resolution}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.input_planes = j.at("input_planes").get<int>();
    const int emb = j.at("embedding").get<int>();
    if (emb < 0 || emb > 2) data_error("checkpoint: unknown embedding kind");
    c.embedding = static_cast<EmbeddingKind>(emb);
    c.widths = j.at("widths").get<std::array<int, 3>>();
    c.num_classes = j.at("num_classes").get<int>();
    c.embed_dim = j.at("embed_dim").get<int>();
    c.angle_resolution = j.at("angle_resolution").get<double>();
    return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const CompactCnn<float>& model, const std::string& extra_metadata) {
    const Normalization& n = model.normalization();
    nlohmann::json meta = {{"config", config_to_json(model.config())},
                           {"normalization",
                            {{"plane_mean", n.plane_mean},
                             {"plane_std", n.plane_std},
                             {"distance_mean", n.distance_mean},
                             {"distance_std", n.distance_std}}},
                           {"extra", extra_metadata}};
    const std::string meta_text = meta.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) data_error("cannot write " + path);
    out.write("RTCK", 4);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(meta_text.size()));
    out.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.parameters().size()));
    for (const auto& [name, t] : model.parameters()) {
        put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint8_t>(out, static_cast<std::uint8_t>(t.shape.size()));
        for (int d : t.shape) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
        out.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    }
    if (!out) data_error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) data_error("cannot open checkpoint " + path);
    Reader r({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()}, path);
    if (r.bytes(4) != "RTCK") data_error(path + ": not a checkpoint");
    if (r.get<std::uint32_t>() != kCheckpointVersion) data_error(path + ": unsupported checkpoint version");
    const auto meta_len = r.get<std::uint32_t>();
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(r.bytes(meta_len));
    } catch (const nlohmann::json::exception& e) {
        data_error(path + ": bad checkpoint metadata: " + e.what());
    }
    Checkpoint ck;
    try {
        ck.model = CompactCnn<float>(config_from_json(meta.at("config")));
        Normalization& n = ck.model.normalization();
        const auto& jn = meta.at("normalization");
        n.plane_mean = jn.at("plane_mean").get<std::vector<double>>();
        n.plane_std = jn.at("plane_std").get<std::vector<double>>();
        n.distance_mean = jn.at("distance_mean").get<double>();
        n.distance_std = jn.at("distance_std").get<double>();
        ck.extra_metadata = meta.at("extra").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        data_error(path + ": bad checkpoint metadata: " + e.what());
    }
    const auto count = r.get<std::uint32_t>();
    if (count != ck.model.parameters().size()) data_error(path + ": parameter count mismatch");
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = r.bytes(r.get<std::uint16_t>());
        const auto ndim = r.get<std::uint8_t>();
        std::vector<int> shape;
        for (std::uint8_t d = 0; d < ndim; ++d) shape.push_back(static_cast<int>(r.get<std::uint32_t>()));
        auto& [expected_name, t] = ck.model.parameters()[i];
        if (name != expected_name || shape != t.shape) data_error(path + ": unexpected tensor '" + name + "'");
        const std::string payload = r.bytes(t.data.size() * sizeof(float));
        std::memcpy(t.data.data(), payload.data(), payload.size());
    }
    if (!r.done()) data_error(path + ": trailing bytes in checkpoint");
    return ck;
}

}  // namespace regiontag
