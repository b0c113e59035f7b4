#include "lwsm/train.hpp"

#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "lwsm/errors.hpp"
#include "lwsm/metrics.hpp"

namespace lwsm {

namespace {

std::vector<Segment> collect_segments(const std::vector<Recording>& recs, const ModelConfig& cfg) {
    std::vector<Segment> out;
    for (const auto& r : recs) {
        auto segs = segmentize(r.samples, cfg.sample_rate, cfg.window_s, r.meta.id, r.meta.bdi);
        for (auto& s : segs) out.push_back(std::move(s));
    }
    return out;
}

} // namespace

EvalResult evaluate(const Model& model, const std::vector<Recording>& recordings) {
    const ModelConfig& cfg = model.config();
    EvalResult r;
    for (const auto& rec : recordings) {
        auto segs = segmentize(rec.samples, cfg.sample_rate, cfg.window_s, rec.meta.id, rec.meta.bdi);
        if (segs.empty())
            throw DataError("recording " + rec.meta.id + " is shorter than one window");
        double acc = 0.0;
        for (const auto& s : segs) acc += model.forward(s.samples);
        r.ids.push_back(rec.meta.id);
        r.pred.push_back(clamp_report(acc / static_cast<double>(segs.size())));
        r.truth.push_back(rec.meta.bdi);
    }
    r.rmse = rmse(r.pred, r.truth);
    r.mae = mae(r.pred, r.truth);
    return r;
}

void write_eval_csv(const std::string& path, const EvalResult& r) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "id,prediction,label\n";
    out.precision(17);
    for (std::size_t i = 0; i < r.ids.size(); ++i)
        out << r.ids[i] << ',' << r.pred[i] << ',' << r.truth[i] << "\n";
    if (!out) throw DataError("write failed: " + path);
}

void write_eval_json(const std::string& path, const EvalResult& r, const std::string& split) {
    nlohmann::ordered_json j;
    j["split"] = split;
    j["count"] = r.ids.size();
    j["rmse"] = r.rmse;
    j["mae"] = r.mae;
    auto& recs = j["recordings"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < r.ids.size(); ++i)
        recs.push_back({{"id", r.ids[i]}, {"prediction", r.pred[i]}, {"label", r.truth[i]}});
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw DataError("write failed: " + path);
}

TrainResult train(const ModelConfig& cfg, const std::string& manifest, const std::string& out_dir,
                  std::ostream* log) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    const auto train_recs = load_split(manifest, "train", cfg.sample_rate);
    const auto dev_recs = load_split(manifest, "dev", cfg.sample_rate);
    if (train_recs.empty()) throw TrainingError("no train recordings in " + manifest);
    if (dev_recs.empty()) throw TrainingError("no dev recordings in " + manifest);

    Model model(cfg);
    auto segments = collect_segments(train_recs, cfg);
    if (segments.empty()) throw TrainingError("train recordings are shorter than one window");

    // starting at the label mean removes the large initial bias error
    double label_mean = 0.0;
    for (const auto& s : segments) label_mean += s.score;
    label_mean /= static_cast<double>(segments.size());
    model.store().value(model.head().bias_name())(0) = label_mean;

    AdamConfig adam;
    adam.lr = cfg.lr;

    TrainResult result;
    result.best_dev_rmse = std::numeric_limits<double>::infinity();
    const std::string ckpt = (fs::path(out_dir) / "best.ckpt").string();

    std::vector<std::size_t> order(segments.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng shuffle_rng(Rng::mix(cfg.seed, epoch));
        shuffle(order, shuffle_rng);

        double mse_acc = 0.0, mae_acc = 0.0;
        for (std::size_t idx : order) {
            const Segment& seg = segments[idx];
            Model::Cache cache;
            const double score = model.forward(seg.samples, cache);
            const double err = score - seg.score;
            mse_acc += err * err;
            mae_acc += std::fabs(err);
            model.store().zero_grad();
            model.backward(cache, 2.0 * err);
            model.store().clip_grad(cfg.grad_clip);
            model.store().adam_step(adam);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_mse = mse_acc / static_cast<double>(order.size());
        stats.train_mae = mae_acc / static_cast<double>(order.size());
        const EvalResult dev = evaluate(model, dev_recs);
        stats.dev_rmse = dev.rmse;
        stats.dev_mae = dev.mae;
        result.curve.push_back(stats);

        if (dev.rmse < result.best_dev_rmse) {
            result.best_dev_rmse = dev.rmse;
            result.best_dev_mae = dev.mae;
            result.best_epoch = epoch;
            save_checkpoint(ckpt, model);
        }
        if (log) {
            std::ostringstream line;
            line.precision(6);
            line << "epoch " << epoch << "  train_mse " << stats.train_mse << "  train_mae " << stats.train_mae
                 << "  dev_rmse " << dev.rmse << "  dev_mae " << dev.mae;
            *log << line.str() << std::endl;
        }
    }
    result.checkpoint_path = ckpt;

    std::ofstream curve((fs::path(out_dir) / "curve.csv").string(), std::ios::trunc);
    if (!curve) throw TrainingError("cannot write training curve");
    curve << "epoch,train_mse,train_mae,dev_rmse,dev_mae\n";
    curve.precision(17);
    for (const auto& s : result.curve)
        curve << s.epoch << ',' << s.train_mse << ',' << s.train_mae << ',' << s.dev_rmse << ',' << s.dev_mae
              << "\n";
    return result;
}

} // namespace lwsm
