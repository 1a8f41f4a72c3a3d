#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <numeric>
#include <ostream>
#include <sstream>

#include "regiontag/audio_io.hpp"
#include "regiontag/augment.hpp"
#include "regiontag/cli.hpp"
#include "regiontag/dataset.hpp"
#include "regiontag/error.hpp"
#include "regiontag/features.hpp"
#include "regiontag/harness.hpp"
#include "regiontag/scene.hpp"
#include "regiontag/train.hpp"

namespace regiontag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
    std::string geometry;
    int n_fft = kDefaultNfft;
    int hop = kDefaultHop;
    int gcc_max_lag = kDefaultGccMaxLag;
    double fov_resolution = 5.0;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--geometry", c.geometry, "array geometry file (default: built-in tetrahedron)");
    cmd->add_option("--n-fft", c.n_fft, "STFT size");
    cmd->add_option("--hop", c.hop, "STFT hop");
    cmd->add_option("--gcc-max-lag", c.gcc_max_lag, "GCC-PHAT lag range");
    cmd->add_option("--fov-resolution", c.fov_resolution, "FOV angle grid in degrees");
}

ArrayGeometry geometry_of(const Common& c) {
    return c.geometry.empty() ? default_tetrahedral_geometry() : load_geometry(c.geometry);
}

FeatureSettings settings_of(const Common& c) {
    FeatureSettings s;
    s.n_fft = c.n_fft;
    s.hop = c.hop;
    s.gcc_max_lag = c.gcc_max_lag;
    s.fov_resolution = c.fov_resolution;
    return s;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) data_error("cannot create " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) data_error("cannot write " + path);
    f << text;
    if (!f) data_error("write failed: " + path);
}

// every option of the command, parsed or defaulted
json options_json(const CLI::App* cmd) {
    json j = json::object();
    for (const CLI::Option* opt : cmd->get_options()) {
        if (opt->get_name() == "--help" || opt->get_lnames().empty()) continue;
        const std::string key = opt->get_lnames().front();
        const auto& res = opt->results();
        if (opt->get_type_size() == 0) {
            j[key] = opt->count() > 0;
        } else if (!res.empty()) {
            j[key] = res.size() == 1 ? json(res.front()) : json(res);
        } else {
            j[key] = opt->get_default_str();
        }
    }
    return j;
}

void write_run_json(const std::string& dir, const CLI::App* cmd, int jobs) {
    json j;
    j["command"] = cmd->get_name();
    j["jobs"] = jobs;
    j["options"] = options_json(cmd);
    write_text((fs::path(dir) / "run.json").string(), j.dump(2) + "\n");
}

// ---- simulate

struct SimulateOpts {
    std::string out;
    int train = 10, val = 2, test = 2;
    double clip_length = 60.0;
    double events_mean = 25.0, events_std = 3.0;
    int classes = kNumClasses;
    double snr = 30.0;
    bool no_noise = false;
    std::vector<double> distance_levels;
    std::string bank;
    std::uint64_t seed = 0;
    bool acs = false;
};

Manifest write_acs_copies(const Manifest& in, const fs::path& out, const ArrayGeometry& geom);

void cmd_simulate(const SimulateOpts& o, const Common& c, const CLI::App* cmd, int jobs, std::ostream& out) {
    const ArrayGeometry geom = geometry_of(c);
    SceneParams params;
    params.clip_length = o.clip_length;
    params.events_mean_per_minute = o.events_mean;
    params.events_std_per_minute = o.events_std;
    if (o.classes < 1 || o.classes > kNumClasses) usage_error("--classes must be in 1.." + std::to_string(kNumClasses));
    params.num_classes = o.classes;
    params.distance_levels = o.distance_levels;
    params.noise_snr_db = o.no_noise ? std::nullopt : std::optional<double>(o.snr);
    if (o.train < 0 || o.val < 0 || o.test < 0) usage_error("split sizes must be non-negative");
    std::optional<WavBank> bank;
    if (!o.bank.empty()) bank = WavBank::load(o.bank, geom.sample_rate);

    ensure_dir(o.out);
    Manifest manifest;
    struct Job {
        std::string wav, csv;
        std::uint64_t seed;
    };
    std::vector<Job> jobs_list;
    std::uint64_t index = 0;
    for (auto [name, count] : {std::pair<const char*, int>{"train", o.train}, {"val", o.val}, {"test", o.test}}) {
        const fs::path dir = fs::path(o.out) / name;
        ensure_dir(dir.string());
        for (int i = 0; i < count; ++i, ++index) {
            char stem[32];
            std::snprintf(stem, sizeof stem, "clip_%04d", i);
            Job job{(dir / (std::string(stem) + ".wav")).string(), (dir / (std::string(stem) + ".csv")).string(),
                    mix_seed(o.seed, index)};
            manifest.split(name).push_back({job.wav, job.csv});
            jobs_list.push_back(job);
        }
    }
    std::vector<std::string> errors(jobs_list.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < jobs_list.size(); ++i) {
        try {
            const SceneSpec spec = sample_scene(params, jobs_list[i].seed);
            const RenderedScene scene = render_scene(spec, geom, bank ? &*bank : nullptr);
            write_wav(jobs_list[i].wav, scene.clip);
            write_annotation(scene.annotation, jobs_list[i].csv);
        } catch (const std::exception& e) {
            errors[i] = jobs_list[i].wav + ": " + e.what();
        }
    }
    for (const auto& e : errors) {
        if (!e.empty()) data_error(e);
    }
    if (o.acs && !manifest.train.empty()) manifest = write_acs_copies(manifest, o.out, geom);
    const std::string manifest_path = (fs::path(o.out) / "manifest.txt").string();
    manifest.save(manifest_path);
    write_run_json(o.out, cmd, jobs);
    out << "wrote " << jobs_list.size() << " clips, manifest " << manifest_path << "\n";
}

// ---- extract

struct ExtractOpts {
    std::string wav, out, features = "lps,ipd", region;
};

void cmd_extract(const ExtractOpts& o, const Common& c, std::ostream& out) {
    const ArrayGeometry geom = geometry_of(c);
    const FeatureRecipe recipe = FeatureRecipe::parse(o.features);
    std::optional<AngularRegion> region;
    if (!o.region.empty()) region = parse_angular_region(o.region);
    if (recipe.needs_region() && !region) usage_error("features '" + o.features + "' need --region");
    const MultichannelClip clip = read_array_wav(o.wav, geom.sample_rate);
    const auto planes = extract_planes(clip, geom, recipe, settings_of(c), region);
    write_feature_dump(o.out, planes);
    out << "wrote " << planes.size() << " planes";
    if (!planes.empty()) out << " of " << planes.front().frames << "x" << planes.front().bins;
    out << " to " << o.out << "\n";
}

// ---- acs-expand

struct AcsOpts {
    std::string manifest, out;
};

// every training entry replaced by its eight channel-swapped copies, written under out/train
Manifest write_acs_copies(const Manifest& in, const fs::path& out, const ArrayGeometry& geom) {
    const auto table = derive_acs_table(geom);
    const fs::path dir = out / "train";
    ensure_dir(dir.string());
    Manifest result = in;
    result.train.clear();
    std::vector<std::vector<Manifest::Entry>> made(in.train.size());
    std::vector<std::string> errors(in.train.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < in.train.size(); ++i) {
        try {
            const auto& e = in.train[i];
            const MultichannelClip clip = read_array_wav(e.wav, geom.sample_rate);
            const int frames = static_cast<int>(std::ceil(clip.duration() / kAnnotationHop - 1e-9));
            const SceneAnnotation ann = read_annotation(e.csv, frames);
            const std::string stem = fs::path(e.wav).stem().string();
            for (const auto& t : table) {
                const AugmentedClip a = apply_acs(clip, ann, t);
                const std::string base = (dir / (stem + "_acs" + std::to_string(t.id))).string();
                write_wav(base + ".wav", a.clip);
                write_annotation(a.annotation, base + ".csv");
                made[i].push_back({base + ".wav", base + ".csv"});
            }
        } catch (const std::exception& ex) {
            errors[i] = in.train[i].wav + ": " + ex.what();
        }
    }
    for (const auto& e : errors) {
        if (!e.empty()) data_error(e);
    }
    for (auto& m : made) result.train.insert(result.train.end(), m.begin(), m.end());
    return result;
}

void cmd_acs_expand(const AcsOpts& o, const Common& c, std::ostream& out) {
    const Manifest in = Manifest::load(o.manifest);
    if (in.train.empty()) data_error(o.manifest + ": empty train split");
    const Manifest result = write_acs_copies(in, o.out, geometry_of(c));
    const std::string path = (fs::path(o.out) / "manifest.txt").string();
    result.save(path);
    out << "wrote " << result.train.size() << " training clips, manifest " << path << "\n";
}

// ---- train

struct TrainOpts {
    std::string manifest, out, features = "lps,ipd,df", query = "angular";
    TrainConfig cfg;
};

json model_metadata(const TrainOpts& o, const Common& c, const ArrayGeometry& geom) {
    json j;
    j["features"] = FeatureRecipe::parse(o.features).to_string();
    j["query"] = o.query;
    j["region_width"] = o.cfg.query.region_width;
    j["distance_tolerance"] = o.cfg.query.distance_tolerance;
    j["crop_seconds"] = o.cfg.crop_seconds;
    j["n_fft"] = c.n_fft;
    j["hop"] = c.hop;
    j["gcc_max_lag"] = c.gcc_max_lag;
    j["fov_resolution"] = c.fov_resolution;
    j["geometry"] = format_geometry(geom);
    j["seed"] = o.cfg.seed;
    return j;
}

void cmd_train(TrainOpts o, const Common& c, const CLI::App* cmd, int jobs, std::ostream& out) {
    const ArrayGeometry geom = geometry_of(c);
    const FeatureRecipe recipe = FeatureRecipe::parse(o.features);
    const QueryMode mode = parse_query_mode(o.query);
    o.cfg.validate();
    if (recipe.needs_region() && mode != QueryMode::Angular) {
        usage_error("features '" + recipe.to_string() + "' need --query angular");
    }
    if (recipe.needs_distance() && mode != QueryMode::Distance) {
        usage_error("features '" + recipe.to_string() + "' need --query distance");
    }
    ModelConfig mcfg;
    mcfg.input_planes = recipe.stack_planes();
    mcfg.embedding = recipe.embedding();
    if (mcfg.input_planes < 1) usage_error("feature recipe has no input planes");

    const Manifest manifest = Manifest::load(o.manifest);
    if (manifest.train.empty() || manifest.val.empty()) data_error(o.manifest + ": train and val splits must be non-empty");
    const FeatureSettings fset = settings_of(c);
    ExampleSettings ex;
    ex.crop_seconds = o.cfg.crop_seconds;
    ex.query = o.cfg.query;
    ex.acs = o.cfg.acs;
    ex.crops_per_clip = o.cfg.crops_per_clip;
    const auto train_set =
        build_examples(load_split(manifest, "train", geom.sample_rate), geom, recipe, mode, fset, ex, mix_seed(o.cfg.seed, 11));
    ex.acs = false;
    ex.crops_per_clip = o.cfg.val_crops_per_clip;
    const auto val_set =
        build_examples(load_split(manifest, "val", geom.sample_rate), geom, recipe, mode, fset, ex, mix_seed(o.cfg.seed, 12));

    ensure_dir(o.out);
    const std::string log_path = (fs::path(o.out) / "train_log.csv").string();
    std::ofstream log(log_path);
    if (!log) data_error("cannot write " + log_path);
    log << format_log_header() << "\n";
    out << format_log_header() << "\n";
    const TrainResult result = train_model(mcfg, train_set, val_set, o.cfg, [&](const EpochLog& e) {
        log << format_log_line(e) << "\n" << std::flush;
        out << format_log_line(e) << "\n" << std::flush;
    });
    const std::string ckpt = (fs::path(o.out) / "model.rtck").string();
    save_checkpoint(ckpt, result.model, model_metadata(o, c, geom).dump());
    write_run_json(o.out, cmd, jobs);
    out << "best epoch " << result.best_epoch << " val_mAP " << result.best_val_map << ", checkpoint " << ckpt << "\n";
}

// ---- checkpoint context for eval/tag

struct Loaded {
    Checkpoint ckpt;
    json meta;
    FeatureRecipe recipe;
    QueryMode mode = QueryMode::Omni;
    FeatureSettings settings;
    ArrayGeometry geom;
};

Loaded load_model(const std::string& path) {
    Loaded l;
    l.ckpt = load_checkpoint(path);
    try {
        l.meta = json::parse(l.ckpt.extra_metadata);
        l.recipe = FeatureRecipe::parse(l.meta.at("features").get<std::string>());
        l.mode = parse_query_mode(l.meta.at("query").get<std::string>());
        l.settings.n_fft = l.meta.at("n_fft").get<int>();
        l.settings.hop = l.meta.at("hop").get<int>();
        l.settings.gcc_max_lag = l.meta.at("gcc_max_lag").get<int>();
        l.settings.fov_resolution = l.meta.at("fov_resolution").get<double>();
        l.geom = parse_geometry(l.meta.at("geometry").get<std::string>());
    } catch (const json::exception& e) {
        data_error(path + ": checkpoint metadata incomplete (" + e.what() + ")");
    }
    const ModelConfig& mc = l.ckpt.model.config();
    if (l.recipe.stack_planes() != mc.input_planes || l.recipe.embedding() != mc.embedding) {
        data_error(path + ": stored feature recipe does not match the model");
    }
    return l;
}

// ---- eval

struct EvalOpts {
    std::string checkpoint, manifest, split = "test", out, per_class;
    std::vector<std::string> harness{"query"};
    int crops_per_clip = 4;
    std::uint64_t seed = 0;
};

void cmd_eval(const EvalOpts& o, const CLI::App* cmd, int jobs, std::ostream& out) {
    const Loaded l = load_model(o.checkpoint);
    const Manifest manifest = Manifest::load(o.manifest);
    const auto clips = load_split(manifest, o.split, l.geom.sample_rate);
    if (clips.empty()) data_error(o.manifest + ": split '" + o.split + "' is empty");
    const double crop = l.meta.value("crop_seconds", 2.0);

    std::ostringstream csv;
    csv << "mode,features,mAP,EER,n_examples\n";
    std::ostringstream per;
    per << "mode,class,AP\n";
    for (const auto& h : o.harness) {
        ScoreMatrix sm;
        if (h == "query") {
            ExampleSettings ex;
            ex.crop_seconds = crop;
            ex.crops_per_clip = o.crops_per_clip;
            ex.query.region_width = l.meta.value("region_width", 60.0);
            ex.query.distance_tolerance = l.meta.value("distance_tolerance", 0.5);
            sm = evaluate_examples(l.ckpt.model,
                                   build_examples(clips, l.geom, l.recipe, l.mode, l.settings, ex, mix_seed(o.seed, 21)));
        } else {
            const HarnessMode mode = parse_harness(h);
            sm = run_harness(l.ckpt.model, sample_crops(clips, crop, o.crops_per_clip, mix_seed(o.seed, 22)), l.geom,
                             l.recipe, l.settings, mode);
        }
        const AveragePrecision ap = average_precision(sm);
        const double eer = equal_error_rate(sm);
        char row[256];
        std::snprintf(row, sizeof row, "%s,%s,%.6f,%.6f,%zu\n", h.c_str(), l.recipe.to_string().c_str(), ap.mean, eer,
                      sm.rows());
        csv << row;
        for (std::size_t c = 0; c < ap.per_class.size(); ++c) {
            if (std::isnan(ap.per_class[c])) continue;
            per << h << ',' << class_name(static_cast<int>(c)) << ',' << std::setprecision(6) << std::fixed
                << ap.per_class[c] << '\n';
        }
    }
    out << csv.str();
    if (!o.out.empty()) {
        write_text(o.out, csv.str());
        const std::string dir = fs::path(o.out).parent_path().string();
        write_run_json(dir.empty() ? "." : dir, cmd, jobs);
    }
    if (!o.per_class.empty()) write_text(o.per_class, per.str());
}

// ---- tag

struct TagOpts {
    std::string wav, checkpoint, region;
    std::optional<double> distance;
};

void cmd_tag(const TagOpts& o, std::ostream& out) {
    const Loaded l = load_model(o.checkpoint);
    const MultichannelClip clip = read_array_wav(o.wav, l.geom.sample_rate);
    TaggingQuery q;
    if (!o.region.empty()) q.region = parse_angular_region(o.region);
    q.distance = o.distance;
    if ((l.recipe.needs_region() || l.mode == QueryMode::Angular) && !q.region) usage_error("this model needs --region");
    if (l.recipe.needs_distance() && !q.distance) usage_error("this model needs --distance");
    const auto probs = l.ckpt.model.forward(extract_stack(clip, l.geom, l.recipe, l.settings, q.region), conditioning_for(q));
    std::vector<int> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return probs[a] > probs[b]; });
    out << "{\n";
    for (std::size_t i = 0; i < order.size(); ++i) {
        char line[96];
        std::snprintf(line, sizeof line, "  \"%s\": %.6f%s\n", std::string(class_name(order[i])).c_str(),
                      static_cast<double>(probs[order[i]]), i + 1 < order.size() ? "," : "");
        out << line;
    }
    out << "}\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Region-specific audio tagging toolkit"};
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "key = value config file; [command] sections apply to that command");
    app.fallthrough();
    app.require_subcommand(1);
    int jobs = 0;
    app.add_option("--jobs", jobs, "worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);

    Common common;

    SimulateOpts sim;
    auto* simulate = app.add_subcommand("simulate", "render a synthetic dataset with annotations and a manifest");
    simulate->add_option("--out", sim.out, "output directory")->required();
    simulate->add_option("--train", sim.train, "training clips");
    simulate->add_option("--val", sim.val, "validation clips");
    simulate->add_option("--test", sim.test, "test clips");
    simulate->add_option("--clip-length", sim.clip_length, "seconds per clip");
    simulate->add_option("--events-mean", sim.events_mean, "events per minute, mean");
    simulate->add_option("--events-std", sim.events_std, "events per minute, std");
    simulate->add_option("--classes", sim.classes, "number of classes drawn");
    simulate->add_option("--snr", sim.snr, "diffuse noise SNR in dB");
    simulate->add_flag("--no-noise", sim.no_noise, "skip the diffuse noise");
    simulate->add_option("--distance-levels", sim.distance_levels, "discrete source distances in meters");
    simulate->add_option("--bank", sim.bank, "directory of <class>_*.wav event recordings");
    simulate->add_option("--seed", sim.seed, "random seed");
    simulate->add_flag("--acs", sim.acs, "replace the training split with its eight channel-swapped copies");
    add_common(simulate, common);

    ExtractOpts ext;
    auto* extract = app.add_subcommand("extract", "compute feature planes for one clip");
    extract->add_option("--wav", ext.wav, "4-channel WAV")->required();
    extract->add_option("--out", ext.out, "feature dump path")->required();
    extract->add_option("--features", ext.features, "comma separated: lps,ipd,gccphat,df,fov");
    extract->add_option("--region", ext.region, "angular region begin:end in degrees");
    add_common(extract, common);

    AcsOpts acs;
    auto* acs_cmd = app.add_subcommand("acs-expand", "write all eight channel-swapped copies of the training split");
    acs_cmd->add_option("--manifest", acs.manifest, "input manifest")->required();
    acs_cmd->add_option("--out", acs.out, "output directory")->required();
    add_common(acs_cmd, common);

    TrainOpts tr;
    auto* train = app.add_subcommand("train", "train a tagging model");
    train->add_option("--manifest", tr.manifest, "dataset manifest")->required();
    train->add_option("--out", tr.out, "output directory")->required();
    train->add_option("--features", tr.features, "comma separated feature recipe");
    train->add_option("--query", tr.query, "omni, angular or distance");
    train->add_option("--width", tr.cfg.query.region_width, "angular query width in degrees");
    train->add_option("--centered", tr.cfg.query.centered_probability, "chance a training region centers on an event");
    train->add_option("--tolerance", tr.cfg.query.distance_tolerance, "distance query tolerance in meters");
    train->add_option("--lr", tr.cfg.learning_rate, "Adam learning rate");
    train->add_option("--batch-size", tr.cfg.batch_size, "examples per step");
    train->add_option("--epochs", tr.cfg.max_epochs, "maximum epochs");
    train->add_option("--patience", tr.cfg.patience, "early stop patience in epochs");
    train->add_option("--crop", tr.cfg.crop_seconds, "crop length in seconds");
    train->add_option("--crops-per-clip", tr.cfg.crops_per_clip, "training crops per clip");
    train->add_option("--val-crops-per-clip", tr.cfg.val_crops_per_clip, "validation crops per clip");
    train->add_flag("--acs", tr.cfg.acs, "channel swap augmentation");
    train->add_option("--seed", tr.cfg.seed, "random seed");
    add_common(train, common);

    EvalOpts ev;
    auto* eval = app.add_subcommand("eval", "score a checkpoint on a split");
    eval->add_option("--checkpoint", ev.checkpoint, "model checkpoint")->required();
    eval->add_option("--manifest", ev.manifest, "dataset manifest")->required();
    eval->add_option("--split", ev.split, "train, val or test");
    eval->add_option("--harness", ev.harness, "any of query, omni, fixed, location");
    eval->add_option("--crops-per-clip", ev.crops_per_clip, "crops per clip");
    eval->add_option("--seed", ev.seed, "random seed");
    eval->add_option("--out", ev.out, "results CSV");
    eval->add_option("--per-class", ev.per_class, "per-class AP CSV");

    TagOpts tg;
    auto* tag = app.add_subcommand("tag", "print class probabilities for one clip and query");
    tag->add_option("--wav", tg.wav, "4-channel WAV")->required();
    tag->add_option("--checkpoint", tg.checkpoint, "model checkpoint")->required();
    auto* region_opt = tag->add_option("--region", tg.region, "angular region begin:end in degrees");
    tag->add_option("--distance", tg.distance, "queried distance in meters")->excludes(region_opt);

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::Usage);
    }

    try {
        if (jobs > 0) omp_set_num_threads(jobs);
        const int used_jobs = jobs > 0 ? jobs : omp_get_max_threads();
        if (simulate->parsed()) cmd_simulate(sim, common, simulate, used_jobs, out);
        else if (extract->parsed()) cmd_extract(ext, common, out);
        else if (acs_cmd->parsed()) cmd_acs_expand(acs, common, out);
        else if (train->parsed()) cmd_train(tr, common, train, used_jobs, out);
        else if (eval->parsed()) cmd_eval(ev, eval, used_jobs, out);
        else if (tag->parsed()) cmd_tag(tg, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::Data);
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::Internal);
    }
    return 0;
}

}  // namespace regiontag
