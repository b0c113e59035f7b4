#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "lwsm/errors.hpp"
#include "lwsm/gradcheck.hpp"
#include "lwsm/synth.hpp"
#include "lwsm/train.hpp"

namespace fs = std::filesystem;
using namespace lwsm;

namespace {

int cmd_synth(const SynthSpec& spec) {
    const std::string manifest = synth_corpus(spec);
    std::cout << "wrote " << (spec.train + spec.dev + spec.test) << " recordings\n";
    std::cout << "manifest: " << manifest << "\n";
    return 0;
}

int cmd_segment(const std::string& manifest, const std::string& out_dir, double window_s,
                std::size_t sample_rate) {
    fs::create_directories(out_dir);
    std::ofstream index((fs::path(out_dir) / "segments.csv").string(), std::ios::trunc);
    if (!index) throw DataError("cannot write segment index");
    index << "id,recording_id,path,split,bdi\n";
    std::size_t total = 0;
    for (const auto& rec : load_split(manifest, "", sample_rate)) {
        auto segs = segmentize(rec.samples, sample_rate, window_s, rec.meta.id, rec.meta.bdi);
        for (std::size_t k = 0; k < segs.size(); ++k) {
            const std::string file = rec.meta.id + "_seg" + std::to_string(k) + ".wav";
            write_wav((fs::path(out_dir) / file).string(), segs[k].samples, sample_rate);
            index << rec.meta.id << "_seg" << k << ',' << rec.meta.id << ',' << file << ',' << rec.meta.split
                  << ',' << rec.meta.bdi << "\n";
            ++total;
        }
    }
    std::cout << "wrote " << total << " segments to " << out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& manifest, const std::string& out_dir,
              bool quiet) {
    const ModelConfig cfg = config_path.empty() ? ModelConfig{} : ModelConfig::load(config_path);
    TrainResult r = train(cfg, manifest, out_dir, quiet ? nullptr : &std::cout);
    std::cout << "best epoch " << r.best_epoch << "  dev_rmse " << r.best_dev_rmse << "  dev_mae "
              << r.best_dev_mae << "\n";
    std::cout << "checkpoint: " << r.checkpoint_path << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& manifest, const std::string& split,
             const std::string& out_dir) {
    Model model = load_checkpoint(ckpt);
    auto recs = load_split(manifest, split, model.config().sample_rate);
    if (recs.empty()) throw DataError("no recordings in split '" + split + "'");
    EvalResult r = evaluate(model, recs);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_eval_csv((fs::path(out_dir) / ("eval_" + split + ".csv")).string(), r);
        write_eval_json((fs::path(out_dir) / ("eval_" + split + ".json")).string(), r, split);
    }
    std::cout << "split " << split << "  recordings " << r.ids.size() << "  rmse " << r.rmse << "  mae "
              << r.mae << "\n";
    return 0;
}

int cmd_gradcheck(bool full, std::uint64_t seed) {
    bool ok = true;
    auto run = [&](const std::string& name, double tol, auto&& setup) {
        ParamStore store;
        Rng rng(seed);
        auto f = setup(store, rng);
        Rng coord_rng(Rng::mix(seed, 1));
        auto report = grad_check(f, store, 1e-5, 6, coord_rng);
        const bool pass = report.max_rel_err < tol;
        ok = ok && pass;
        std::cout << (pass ? "PASS" : "FAIL") << "  " << name << "  max_rel_err " << report.max_rel_err
                  << "\n";
    };

    run("bimamba", 1e-5, [](ParamStore& store, Rng& rng) {
        auto block = std::make_shared<BiMambaBlock>(store, "b.", BiMambaConfig{3, 4, 2, true}, rng);
        store.add("x", random_uniform({3, 6}, -1, 1, rng));
        return [block](ParamStore& s, bool with_grad) {
            BiMambaBlock::Cache cache;
            Tensor y = block->forward(s, s.value("x"), cache);
            double loss = 0.0;
            Tensor dy = y;
            for (std::size_t i = 0; i < y.numel(); ++i) {
                loss += 0.5 * y(i) * y(i);
                dy(i) = y(i);
            }
            if (with_grad) {
                Tensor dx = block->backward(s, cache, dy);
                for (std::size_t i = 0; i < dx.numel(); ++i) s.grad("x")(i) += dx(i);
            }
            return loss;
        };
    });

    run("dualpath", 1e-5, [](ParamStore& store, Rng& rng) {
        DualPathConfig cfg;
        cfg.width = 2;
        cfg.chunk_len = 4;
        cfg.repeats = 1;
        cfg.block.state_dim = 2;
        auto dp = std::make_shared<DualPathModule>(store, "dp.", cfg, rng);
        store.add("x", random_uniform({2, 9}, -1, 1, rng));
        return [dp](ParamStore& s, bool with_grad) {
            DualPathModule::Cache cache;
            Tensor y = dp->forward(s, s.value("x"), cache);
            double loss = 0.0;
            Tensor dy = y;
            for (std::size_t i = 0; i < y.numel(); ++i) {
                loss += 0.5 * y(i) * y(i);
                dy(i) = y(i);
            }
            if (with_grad) {
                Tensor dx = dp->backward(s, cache, dy);
                for (std::size_t i = 0; i < dx.numel(); ++i) s.grad("x")(i) += dx(i);
            }
            return loss;
        };
    });

    run("attention", 1e-5, [](ParamStore& store, Rng& rng) {
        auto ea = std::make_shared<ExternalAttention>(store, "ea.",
                                                      ExternalAttentionConfig{3, SoftmaxPlacement::TimePre, true},
                                                      rng);
        store.add("x", random_uniform({3, 5}, -1, 1, rng));
        return [ea](ParamStore& s, bool with_grad) {
            ExternalAttention::Cache cache;
            Tensor y = ea->forward(s, s.value("x"), cache);
            double loss = 0.0;
            Tensor dy = y;
            for (std::size_t i = 0; i < y.numel(); ++i) {
                loss += 0.5 * y(i) * y(i);
                dy(i) = y(i);
            }
            if (with_grad) {
                Tensor dx = ea->backward(s, cache, dy);
                for (std::size_t i = 0; i < dx.numel(); ++i) s.grad("x")(i) += dx(i);
            }
            return loss;
        };
    });

    run("head", 1e-5, [](ParamStore& store, Rng& rng) {
        auto head = std::make_shared<PredictionHead>(store, "h.", PredictionHeadConfig{8, 3, 4}, rng);
        store.add("x", random_uniform({8, 7}, -1, 1, rng));
        return [head](ParamStore& s, bool with_grad) {
            PredictionHead::Cache cache;
            const double score = head->forward(s, s.value("x"), cache);
            if (with_grad) {
                Tensor dx = head->backward(s, cache, score);
                for (std::size_t i = 0; i < dx.numel(); ++i) s.grad("x")(i) += dx(i);
            }
            return 0.5 * score * score;
        };
    });

    if (full) {
        ModelConfig cfg;
        cfg.seed = seed;
        cfg.encoder_width = 8;
        cfg.encoder_stride = 32;
        cfg.feature_dim = 4;
        cfg.chunk_len = 4;
        cfg.state_dim = 2;
        cfg.head_hidden = 4;
        Model model(cfg);
        Rng srng(Rng::mix(seed, 2));
        std::vector<double> samples(256);
        for (double& v : samples) v = srng.uniform(-0.5, 0.5);
        auto f = [&](ParamStore&, bool with_grad) {
            Model::Cache cache;
            const double score = model.forward(samples, cache);
            const double loss = (score - 20.0) * (score - 20.0);
            if (with_grad) model.backward(cache, 2.0 * (score - 20.0));
            return loss;
        };
        Rng coord_rng(Rng::mix(seed, 3));
        auto report = grad_check(f, model.store(), 1e-5, 3, coord_rng);
        const bool pass = report.max_rel_err < 1e-3;
        ok = ok && pass;
        std::cout << (pass ? "PASS" : "FAIL") << "  full_model  max_rel_err " << report.max_rel_err << "\n";
    }
    return ok ? 0 : 1;
}

int cmd_bench(std::size_t width, std::size_t state_dim, std::size_t chunk_len, std::uint64_t seed) {
    ParamStore store;
    Rng rng(seed);
    DualPathConfig cfg;
    cfg.width = width;
    cfg.chunk_len = chunk_len;
    cfg.repeats = 1;
    cfg.block.state_dim = state_dim;
    DualPathModule dp(store, "dp.", cfg, rng);

    std::vector<double> logl, logt;
    std::cout << "length,seconds\n";
    for (std::size_t l = 4096; l <= 131072; l *= 2) {
        Tensor x = random_uniform({width, l}, -1, 1, rng);
        DualPathModule::Cache cache;
        const auto t0 = std::chrono::steady_clock::now();
        dp.forward(store, x, cache);
        const auto t1 = std::chrono::steady_clock::now();
        const double secs = std::chrono::duration<double>(t1 - t0).count();
        std::cout << l << "," << secs << "\n";
        logl.push_back(std::log(static_cast<double>(l)));
        logt.push_back(std::log(std::max(secs, 1e-9)));
    }
    // least-squares slope of log(time) against log(length)
    const double n = static_cast<double>(logl.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < logl.size(); ++i) {
        sx += logl[i];
        sy += logt[i];
        sxx += logl[i] * logl[i];
        sxy += logl[i] * logt[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    std::cout << "scaling_exponent " << slope << "\n";
    return slope <= 1.3 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"long-sequence speech severity estimator"};
    app.require_subcommand(1);
    std::size_t threads = 1;
    app.add_option("--threads", threads, "worker threads (only 1 is supported)");

    SynthSpec spec;
    auto* synth = app.add_subcommand("synth", "generate a synthetic labelled corpus");
    synth->add_option("--out", spec.out_dir, "output directory")->required();
    synth->add_option("--train", spec.train, "train recordings");
    synth->add_option("--dev", spec.dev, "dev recordings");
    synth->add_option("--test", spec.test, "test recordings");
    synth->add_option("--duration", spec.duration_s, "seconds per recording");
    synth->add_option("--sample-rate", spec.sample_rate, "sample rate");
    synth->add_option("--seed", spec.seed, "corpus seed");

    std::string manifest, out_dir, config_path, ckpt, split = "test";
    double window_s = 50.0;
    std::size_t sample_rate = 8000;
    bool quiet = false;
    auto* segment = app.add_subcommand("segment", "window recordings into segment WAVs");
    segment->add_option("--manifest", manifest, "manifest CSV")->required();
    segment->add_option("--out", out_dir, "output directory")->required();
    segment->add_option("--window", window_s, "window length in seconds");
    segment->add_option("--sample-rate", sample_rate, "target sample rate");

    auto* train_cmd = app.add_subcommand("train", "train a model");
    train_cmd->add_option("--config", config_path, "key=value config file");
    train_cmd->add_option("--manifest", manifest, "manifest CSV")->required();
    train_cmd->add_option("--out", out_dir, "run directory")->required();
    train_cmd->add_flag("--quiet", quiet, "suppress per-epoch logging");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("--checkpoint", ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--manifest", manifest, "manifest CSV")->required();
    eval_cmd->add_option("--split", split, "split to score");
    eval_cmd->add_option("--out", out_dir, "report directory");

    bool full = false;
    std::uint64_t seed = 1;
    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient audit");
    gradcheck_cmd->add_flag("--full", full, "also check the full composition");
    gradcheck_cmd->add_option("--seed", seed, "seed");

    std::size_t bench_width = 8, bench_state = 4, bench_chunk = 64;
    auto* bench = app.add_subcommand("bench", "long-sequence scaling benchmark");
    bench->add_option("--width", bench_width, "feature dim");
    bench->add_option("--state-dim", bench_state, "SSM state dim");
    bench->add_option("--chunk-len", bench_chunk, "chunk length");
    bench->add_option("--seed", seed, "seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (threads != 1) throw ConfigError("--threads: only single-threaded execution is supported");
        if (*synth) return cmd_synth(spec);
        if (*segment) return cmd_segment(manifest, out_dir, window_s, sample_rate);
        if (*train_cmd) return cmd_train(config_path, manifest, out_dir, quiet);
        if (*eval_cmd) return cmd_eval(ckpt, manifest, split, out_dir);
        if (*gradcheck_cmd) return cmd_gradcheck(full, seed);
        if (*bench) return cmd_bench(bench_width, bench_state, bench_chunk, seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
