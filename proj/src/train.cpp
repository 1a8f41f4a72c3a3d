#include "regiontag/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "regiontag/error.hpp"

namespace regiontag {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) usage_error("learning rate must be positive");
    if (batch_size < 1) usage_error("batch size must be positive");
    if (max_epochs < 1) usage_error("max epochs must be positive");
    if (patience < 1) usage_error("patience must be positive");
    if (!(crop_seconds > 0.0)) usage_error("crop length must be positive");
    if (crops_per_clip < 1 || val_crops_per_clip < 1) usage_error("crops per clip must be positive");
    if (!(query.region_width > 0.0 && query.region_width <= 360.0)) usage_error("region width must be in (0, 360]");
}

std::string format_log_header() { return "epoch,train_loss,val_mAP,val_EER"; }

std::string format_log_line(const EpochLog& log) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f", log.epoch, log.train_loss, log.val_map, log.val_eer);
    return buf;
}

Normalization compute_normalization(const std::vector<Example>& examples, int planes) {
    Normalization n;
    n.plane_mean.assign(static_cast<std::size_t>(planes), 0.0);
    n.plane_std.assign(static_cast<std::size_t>(planes), 1.0);
    for (int p = 0; p < planes; ++p) {
        double sum = 0.0, sq = 0.0;
        std::size_t count = 0;
        for (const auto& ex : examples) {
            if (ex.features.planes != planes) usage_error("example plane count differs from the model's");
            const std::size_t size = static_cast<std::size_t>(ex.features.frames) * ex.features.bins;
            const float* v = ex.features.plane(p);
            for (std::size_t i = 0; i < size; ++i) {
                sum += v[i];
                sq += static_cast<double>(v[i]) * v[i];
            }
            count += size;
        }
        if (count == 0) continue;
        const double mean = sum / static_cast<double>(count);
        const double var = sq / static_cast<double>(count) - mean * mean;
        n.plane_mean[static_cast<std::size_t>(p)] = mean;
        n.plane_std[static_cast<std::size_t>(p)] = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (const auto& ex : examples) {
        if (!ex.conditioning.distance) continue;
        sum += *ex.conditioning.distance;
        sq += *ex.conditioning.distance * *ex.conditioning.distance;
        ++count;
    }
    if (count > 0) {
        n.distance_mean = sum / static_cast<double>(count);
        const double var = sq / static_cast<double>(count) - n.distance_mean * n.distance_mean;
        n.distance_std = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
    return n;
}

double batch_gradient_serial(const CompactCnn<float>& model, const std::vector<Example>& examples,
                             const std::vector<std::size_t>& batch, NamedTensors<float>& grads) {
    grads.fill(0.0f);
    NamedTensors<float> one = model.parameters().zeros_like();
    double loss = 0.0;
    for (std::size_t idx : batch) {
        const Example& ex = examples[idx];
        one.fill(0.0f);
        loss += model.backward(ex.features, ex.conditioning, ex.targets, one);
        grads.axpy(1.0f, one);
    }
    return loss;
}

double batch_gradient_parallel(const CompactCnn<float>& model, const std::vector<Example>& examples,
                               const std::vector<std::size_t>& batch, NamedTensors<float>& grads) {
    const std::size_t n = batch.size();
    std::vector<NamedTensors<float>> per(n);
    std::vector<double> losses(n, 0.0);
    std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < n; ++i) {
        try {
            const Example& ex = examples[batch[i]];
            per[i] = model.parameters().zeros_like();
            losses[i] = model.backward(ex.features, ex.conditioning, ex.targets, per[i]);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (const auto& e : errors) {
        if (!e.empty()) usage_error(e);
    }
    grads.fill(0.0f);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        loss += losses[i];
        grads.axpy(1.0f, per[i]);
    }
    return loss;
}

ScoreMatrix evaluate_examples(const CompactCnn<float>& model, const std::vector<Example>& examples) {
    const int classes = model.config().num_classes;
    std::vector<std::vector<float>> out(examples.size());
    std::vector<std::string> errors(examples.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < examples.size(); ++i) {
        try {
            out[i] = model.forward(examples[i].features, examples[i].conditioning);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (const auto& e : errors) {
        if (!e.empty()) usage_error(e);
    }
    ScoreMatrix sm(classes);
    for (std::size_t i = 0; i < examples.size(); ++i) {
        std::vector<double> s(out[i].begin(), out[i].end());
        std::vector<unsigned char> l(static_cast<std::size_t>(classes));
        for (int c = 0; c < classes; ++c) l[static_cast<std::size_t>(c)] = examples[i].targets[static_cast<std::size_t>(c)] > 0.5f;
        sm.add_row(s, l);
    }
    return sm;
}

namespace {

std::pair<double, double> score(const CompactCnn<float>& model, const std::vector<Example>& set) {
    const ScoreMatrix sm = evaluate_examples(model, set);
    double map = std::numeric_limits<double>::quiet_NaN();
    double eer = std::numeric_limits<double>::quiet_NaN();
    try {
        map = mean_average_precision(sm);
        eer = equal_error_rate(sm);
    } catch (const Error&) {
    }
    return {map, eer};
}

}  // namespace

TrainResult train_model(const ModelConfig& model_config, const std::vector<Example>& train_set,
                        const std::vector<Example>& val_set, const TrainConfig& config,
                        const EpochCallback& on_epoch) {
    config.validate();
    if (train_set.empty()) data_error("empty training set");
    if (val_set.empty()) data_error("empty validation set");
    for (const auto& ex : train_set) {
        if (ex.features.planes != model_config.input_planes) {
            usage_error("feature stack has " + std::to_string(ex.features.planes) + " planes, model expects " +
                        std::to_string(model_config.input_planes));
        }
    }

    TrainResult result;
    result.model = CompactCnn<float>::initialized(model_config, config.seed);
    result.model.normalization() = compute_normalization(train_set, model_config.input_planes);
    CompactCnn<float> best = result.model;
    result.best_val_map = -1.0;

    AdamState<float> adam = AdamState<float>::for_parameters(result.model.parameters());
    AdamConfig adam_cfg;
    adam_cfg.learning_rate = config.learning_rate;
    NamedTensors<float> grads = result.model.parameters().zeros_like();

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(mix_seed(config.seed, 0x7261696eULL));
    int since_best = 0;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                 order.begin() + static_cast<std::ptrdiff_t>(stop));
            loss_sum += batch_gradient_parallel(result.model, train_set, batch, grads);
            const float scale = 1.0f / static_cast<float>(batch.size());
            for (auto& [name, g] : grads) {
                for (auto& v : g.data) v *= scale;
            }
            adam_step(result.model.parameters(), grads, adam, adam_cfg);
        }
        for (const auto& [name, p] : result.model.parameters()) {
            for (float v : p.data) {
                if (!std::isfinite(v)) internal_error("non-finite parameter in " + name + " after epoch " + std::to_string(epoch));
            }
        }
        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = loss_sum / static_cast<double>(train_set.size());
        std::tie(entry.val_map, entry.val_eer) = score(result.model, val_set);
        result.log.push_back(entry);
        if (on_epoch) on_epoch(entry);

        const double m = std::isnan(entry.val_map) ? -1.0 : entry.val_map;
        if (m > result.best_val_map) {
            result.best_val_map = m;
            result.best_epoch = epoch;
            best = result.model;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    result.model = std::move(best);
    return result;
}

}  // namespace regiontag
