#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "regiontag/dataset.hpp"
#include "regiontag/metrics.hpp"
#include "regiontag/model.hpp"

namespace regiontag {

struct TrainConfig {
    double learning_rate = 1e-5;
    int batch_size = 16;
    int max_epochs = 50;
    int patience = 10;
    double crop_seconds = 2.0;
    int crops_per_clip = 4;
    int val_crops_per_clip = 4;
    std::uint64_t seed = 0;
    bool acs = false;
    QuerySettings query;

    void validate() const;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_map = 0.0;
    double val_eer = 0.0;
};

std::string format_log_header();
std::string format_log_line(const EpochLog& log);

struct TrainResult {
    CompactCnn<float> model;
    std::vector<EpochLog> log;
    int best_epoch = 0;
    double best_val_map = 0.0;
};

/// Per-plane mean/std over every training example, plus the distance statistics.
Normalization compute_normalization(const std::vector<Example>& examples, int planes);

/// Sum of the per-example losses over `batch`; `grads` receives the sum of the
/// per-example gradients, accumulated in batch order so both variants agree bit for bit.
double batch_gradient_serial(const CompactCnn<float>& model, const std::vector<Example>& examples,
                             const std::vector<std::size_t>& batch, NamedTensors<float>& grads);
double batch_gradient_parallel(const CompactCnn<float>& model, const std::vector<Example>& examples,
                               const std::vector<std::size_t>& batch, NamedTensors<float>& grads);

ScoreMatrix evaluate_examples(const CompactCnn<float>& model, const std::vector<Example>& examples);

using EpochCallback = std::function<void(const EpochLog&)>;

/// Adam on mean batch loss, early stopping on validation mAP; the returned model holds
/// the parameters of the best validation epoch.
TrainResult train_model(const ModelConfig& model_config, const std::vector<Example>& train_set,
                        const std::vector<Example>& val_set, const TrainConfig& config,
                        const EpochCallback& on_epoch = {});

}  // namespace regiontag
