#pragma once
#include <iosfwd>
#include <string>
#include <vector>

#include "lwsm/checkpoint.hpp"
#include "lwsm/dataset.hpp"
#include "lwsm/model.hpp"

namespace lwsm {

// per-recording predictions (mean over that recording's segments)
struct EvalResult {
    std::vector<std::string> ids;
    std::vector<double> pred;  // clamped to the instrument scale
    std::vector<double> truth;
    double rmse = 0.0;
    double mae = 0.0;
};

EvalResult evaluate(const Model& model, const std::vector<Recording>& recordings);

void write_eval_csv(const std::string& path, const EvalResult& r);
void write_eval_json(const std::string& path, const EvalResult& r, const std::string& split);

struct EpochStats {
    std::size_t epoch = 0;
    double train_mse = 0.0;
    double dev_rmse = 0.0;
    double dev_mae = 0.0;
    double train_mae = 0.0; // segment-level, accumulated during the epoch
};

struct TrainResult {
    std::vector<EpochStats> curve;
    std::size_t best_epoch = 0;
    double best_dev_rmse = 0.0;
    double best_dev_mae = 0.0;
    std::string checkpoint_path; // best-dev snapshot
};

// trains on the manifest's train split, tracks the dev split, writes
// best.ckpt and curve.csv under out_dir
TrainResult train(const ModelConfig& cfg, const std::string& manifest, const std::string& out_dir,
                  std::ostream* log = nullptr);

} // namespace lwsm
