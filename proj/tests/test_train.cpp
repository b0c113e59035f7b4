#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lwsm/errors.hpp"
#include "lwsm/gradcheck.hpp"
#include "lwsm/synth.hpp"
#include "lwsm/train.hpp"

using namespace lwsm;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
    static fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / "lwsm_test_train";
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.seed = 7;
    cfg.encoder_width = 8;
    cfg.encoder_stride = 32;
    cfg.feature_dim = 4;
    cfg.chunk_len = 4;
    cfg.state_dim = 2;
    cfg.head_hidden = 4;
    cfg.window_s = 2.0;
    cfg.epochs = 2;
    return cfg;
}

std::vector<double> test_samples(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> s(n);
    for (double& v : s) v = rng.uniform(-0.5, 0.5);
    return s;
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("identical configs build identical models") {
    const ModelConfig cfg = tiny_config();
    Model a(cfg), b(cfg);
    auto samples = test_samples(600, 90);
    CHECK(a.forward(samples) == b.forward(samples));
}

TEST_CASE("checkpoint round trip reproduces predictions exactly") {
    const ModelConfig cfg = tiny_config();
    Model model(cfg);
    auto samples = test_samples(700, 91);
    const double before = model.forward(samples);

    const std::string path = (tmp_dir() / "model.ckpt").string();
    save_checkpoint(path, model);
    Model loaded = load_checkpoint(path);
    CHECK(loaded.forward(samples) == before);

    // saving the loaded model reproduces the file byte for byte
    const std::string path2 = (tmp_dir() / "model2.ckpt").string();
    save_checkpoint(path2, loaded);
    CHECK(file_bytes(path) == file_bytes(path2));
}

TEST_CASE("corrupt checkpoints are rejected") {
    const ModelConfig cfg = tiny_config();
    Model model(cfg);
    const std::string path = (tmp_dir() / "corrupt.ckpt").string();
    save_checkpoint(path, model);

    std::string bytes = file_bytes(path);
    bytes[9] ^= 0x5a; // inside the fingerprint field
    std::ofstream(path, std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);

    std::ofstream(path, std::ios::binary) << "JUNK";
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
}

TEST_CASE("full composition passes grad_check") {
    ModelConfig cfg = tiny_config();
    Model model(cfg);
    auto samples = test_samples(256, 92);
    const double target = 20.0;
    auto f = [&](ParamStore&, bool with_grad) {
        Model::Cache cache;
        const double score = model.forward(samples, cache);
        const double loss = (score - target) * (score - target);
        if (with_grad) model.backward(cache, 2.0 * (score - target));
        return loss;
    };
    Rng coord_rng(93);
    auto report = grad_check(f, model.store(), 1e-5, 4, coord_rng);
    for (const auto& e : report.entries) {
        INFO(e.name);
        CHECK(e.max_rel_err < 1e-3);
    }
}

TEST_CASE("f32 mode quantizes the output") {
    ModelConfig cfg = tiny_config();
    cfg.precision = "f32";
    Model model(cfg);
    auto samples = test_samples(600, 94);
    const double score = model.forward(samples);
    CHECK(score == static_cast<double>(static_cast<float>(score)));
    set_precision(Precision::F64);
}

TEST_CASE("short training run: curve, checkpoint, determinism") {
    SynthSpec spec;
    spec.out_dir = (tmp_dir() / "corpus").string();
    spec.train = 3;
    spec.dev = 2;
    spec.test = 2;
    spec.duration_s = 4.0;
    spec.seed = 11;
    const std::string manifest = synth_corpus(spec);

    const ModelConfig cfg = tiny_config();
    const std::string run1 = (tmp_dir() / "run1").string();
    TrainResult r1 = train(cfg, manifest, run1);
    REQUIRE(r1.curve.size() == 2);
    CHECK(r1.best_epoch >= 1);
    CHECK(fs::exists(r1.checkpoint_path));
    CHECK(fs::exists(fs::path(run1) / "curve.csv"));

    double best = std::min(r1.curve[0].dev_rmse, r1.curve[1].dev_rmse);
    CHECK(r1.best_dev_rmse == best);

    // the best checkpoint reproduces the recorded dev numbers
    Model loaded = load_checkpoint(r1.checkpoint_path);
    auto dev = load_split(manifest, "dev", cfg.sample_rate);
    EvalResult ev = evaluate(loaded, dev);
    CHECK(ev.rmse == r1.best_dev_rmse);
    CHECK(ev.mae == r1.best_dev_mae);

    // byte-identical rerun
    const std::string run2 = (tmp_dir() / "run2").string();
    train(cfg, manifest, run2);
    CHECK(file_bytes((fs::path(run1) / "curve.csv").string()) ==
          file_bytes((fs::path(run2) / "curve.csv").string()));
    CHECK(file_bytes((fs::path(run1) / "best.ckpt").string()) ==
          file_bytes((fs::path(run2) / "best.ckpt").string()));

    // eval artifacts
    write_eval_csv((fs::path(run1) / "eval.csv").string(), ev);
    write_eval_json((fs::path(run1) / "eval.json").string(), ev, "dev");
    CHECK(file_bytes((fs::path(run1) / "eval.csv").string()).rfind("id,prediction,label", 0) == 0);
}
