#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <string>

#include "convnet/config.hpp"
#include "convnet/errors.hpp"

using namespace convnet;

namespace {

struct TempPath {
    std::string path;
    explicit TempPath(const std::string& name) : path("cfg_" + name) {}
    ~TempPath() { std::remove(path.c_str()); }
};

const char* kFullConfig =
    "# training run\n"
    "data = batches/data_batch_1.bin\n"
    "data = batches/data_batch_2.bin\n"
    "val_data = batches/val.bin\n"
    "test_data = batches/test.bin\n"
    "val_fraction = 0.2\n"
    "stats = out/stats.tnsc\n"
    "preprocess = gcn-zca\n"
    "grayscale = true\n"
    "rescale_first = false\n"
    "fudge = 0.05\n"
    "model = model1\n"
    "variant = maxout\n"
    "seed = 99\n"
    "max_epochs = 30   # capped for smoke runs\n"
    "early_stop_window = 10\n"
    "base_lr = 0.3\n"
    "momentum = classical\n"
    "batch_size = 50\n"
    "dict_patch = 8\n"
    "dict_alpha = 0.5\n";

} // namespace

TEST_CASE("a full config parses into every field") {
    RunConfig cfg = RunConfig::parse_text(kFullConfig, "full.cfg");
    REQUIRE(cfg.data.size() == 2);
    CHECK(cfg.data[1] == "batches/data_batch_2.bin");
    CHECK(cfg.val_data == std::vector<std::string>{"batches/val.bin"});
    CHECK(cfg.test_data == std::vector<std::string>{"batches/test.bin"});
    CHECK(cfg.val_fraction == 0.2);
    CHECK(cfg.stats_path == "out/stats.tnsc");
    CHECK(cfg.pipeline.kind == "gcn-zca");
    CHECK(cfg.pipeline.to_gray);
    CHECK_FALSE(cfg.pipeline.rescale_first);
    CHECK(cfg.pipeline.fudge == 0.05);
    CHECK(cfg.model == "model1");
    CHECK(cfg.variant == Variant::maxout);
    CHECK(cfg.seed == 99);
    CHECK(cfg.max_epochs == 30);
    CHECK(cfg.early_stop_window == 10);
    REQUIRE(cfg.base_lr.has_value());
    CHECK(*cfg.base_lr == 0.3);
    REQUIRE(cfg.momentum_kind.has_value());
    CHECK(*cfg.momentum_kind == "classical");
    REQUIRE(cfg.batch_size.has_value());
    CHECK(*cfg.batch_size == 50);
    CHECK(cfg.dict_patch == 8);
    CHECK(cfg.dict_alpha == 0.5);
    // untouched keys keep their defaults
    CHECK_FALSE(cfg.lr_floor_factor.has_value());
    CHECK(cfg.dict_centroids == 400);
}

TEST_CASE("comments, blank lines and loose spacing are tolerated") {
    RunConfig cfg = RunConfig::parse_text(
        "\n   \n# opener\nmodel=baseline\n   seed   =   7   # trailing\n\n", "s.cfg");
    CHECK(cfg.model == "baseline");
    CHECK(cfg.seed == 7);
}

TEST_CASE("unknown keys are rejected naming the file and line") {
    try {
        RunConfig::parse_text("model = baseline\nflorp = 3\n", "runs/a.cfg");
        FAIL("expected config_error");
    } catch (const config_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("runs/a.cfg:2") != std::string::npos);
        CHECK(msg.find("florp") != std::string::npos);
    }
}

TEST_CASE("malformed lines are rejected with their location") {
    try {
        RunConfig::parse_text("just some words\n", "b.cfg");
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find("b.cfg:1") != std::string::npos);
    }
    CHECK_THROWS_AS(RunConfig::parse_text("= 3\n", "c.cfg"), config_error);
    CHECK_THROWS_AS(RunConfig::parse_text("model =\n", "d.cfg"), config_error);
    CHECK_THROWS_AS(RunConfig::parse_text("seed = banana\n", "e.cfg"), config_error);
    CHECK_THROWS_AS(RunConfig::parse_text("max_epochs = 1.5\n", "f.cfg"), config_error);
    CHECK_THROWS_AS(RunConfig::parse_text("grayscale = maybe\n", "g.cfg"), config_error);
}

TEST_CASE("config files load from disk and missing files are reported") {
    TempPath tmp("ok.cfg");
    {
        std::ofstream out(tmp.path);
        out << "model = baseline\nseed = 3\n";
    }
    RunConfig cfg = RunConfig::parse_file(tmp.path);
    CHECK(cfg.model == "baseline");
    CHECK(cfg.seed == 3);

    CHECK_THROWS_AS(RunConfig::parse_file("no/such/file.cfg"), config_error);
}

TEST_CASE("model selection rules") {
    // builtin by name
    RunConfig byname = RunConfig::parse_text("model = model2\nvariant = dropout\n", "m.cfg");
    ModelSpec spec = byname.resolve_model();
    CHECK(spec.name == "model2-dropout");

    // inline layer lines
    RunConfig inl = RunConfig::parse_text(
        "layer = input 1x4x4\nlayer = dense 6\nlayer = relu\nlayer = output 10\n", "i.cfg");
    ModelSpec custom = inl.resolve_model();
    CHECK(custom.name == "custom");
    CHECK(custom.layers.size() == 4);

    // both at once
    RunConfig both = RunConfig::parse_text("model = model1\nlayer = dense 5\n", "x.cfg");
    CHECK_THROWS_AS(both.resolve_model(), config_error);

    // neither
    RunConfig none = RunConfig::parse_text("seed = 1\n", "n.cfg");
    CHECK_THROWS_AS(none.resolve_model(), config_error);

    // variant next to inline layers
    RunConfig vlayers = RunConfig::parse_text(
        "layer = input 1x4x4\nlayer = output 10\nvariant = maxout\n", "v.cfg");
    CHECK_THROWS_AS(vlayers.resolve_model(), config_error);

    // inline chains are validated immediately
    RunConfig badchain = RunConfig::parse_text(
        "layer = input 1x2x2\nlayer = conv 3 5x5\nlayer = output 10\n", "bad.cfg");
    CHECK_THROWS_AS(badchain.resolve_model(), config_error);
}

TEST_CASE("schedule overrides land on top of the builtin defaults") {
    RunConfig cfg = RunConfig::parse_text(
        "model = model1\nbase_lr = 0.3\nbatch_size = 25\n", "o.cfg");
    TrainSchedule s = cfg.resolve_schedule();
    CHECK(s.base_lr == 0.3);
    CHECK(s.batch_size == 25);
    // everything else still the model defaults
    CHECK(s.lr_floor_factor == 0.01);
    CHECK(s.lr_saturate_epoch == 500);
    CHECK(s.momentum_kind == TrainSchedule::Momentum::nesterov);
    CHECK(s.momentum_start == 0.5);
    CHECK(s.momentum_end == 0.6);
    CHECK(s.conv_grad_scale == 0.05);

    RunConfig base = RunConfig::parse_text("model = baseline\n", "o2.cfg");
    CHECK(base.resolve_schedule().momentum_kind == TrainSchedule::Momentum::classical);
    CHECK(base.resolve_schedule().base_lr == 0.12);
}

TEST_CASE("invalid schedule values are rejected") {
    auto sched_of = [](const std::string& text) {
        return RunConfig::parse_text(text, "t.cfg").resolve_schedule();
    };
    CHECK_THROWS_AS(sched_of("model = model1\nmomentum = runaway\n"), config_error);
    CHECK_THROWS_AS(sched_of("model = model1\nbase_lr = -0.1\n"), config_error);
    CHECK_THROWS_AS(sched_of("model = model1\nbatch_size = 0\n"), config_error);
    CHECK_THROWS_AS(sched_of("model = model1\nmomentum_start = 1\n"), config_error);
    CHECK_THROWS_AS(sched_of("model = model1\nmomentum_end = -0.2\n"), config_error);
}

TEST_CASE("the canonical dump re-parses to the same canonical text") {
    RunConfig cfg = RunConfig::parse_text(kFullConfig, "full.cfg");
    std::string canon = cfg.canonical();
    RunConfig again = RunConfig::parse_text(canon, "canon");
    CHECK(again.canonical() == canon);
    CHECK(again.hash() == cfg.hash());

    RunConfig inl = RunConfig::parse_text(
        "layer = input 1x4x4\nlayer = dense 6\nlayer = relu\nlayer = output 10\n"
        "preprocess = raw\nseed = 12\n",
        "i.cfg");
    std::string icanon = inl.canonical();
    CHECK(RunConfig::parse_text(icanon, "canon2").canonical() == icanon);
}

TEST_CASE("the run identity ignores stopping bounds but tracks everything else") {
    const char* base = "model = model1\nseed = 5\n";
    RunConfig a = RunConfig::parse_text(base, "a");
    RunConfig b = RunConfig::parse_text("model = model1\nseed = 5\nmax_epochs = 99\n", "b");
    RunConfig c = RunConfig::parse_text(
        "model = model1\nseed = 5\nearly_stop_window = 3\n", "c");
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() == c.hash());

    RunConfig seed = RunConfig::parse_text("model = model1\nseed = 6\n", "d");
    CHECK(a.hash() != seed.hash());
    RunConfig lr = RunConfig::parse_text("model = model1\nseed = 5\nbase_lr = 0.2\n", "e");
    CHECK(a.hash() != lr.hash());
    RunConfig var = RunConfig::parse_text("model = model1\nseed = 5\nvariant = maxout\n", "f");
    CHECK(a.hash() != var.hash());
    RunConfig prep = RunConfig::parse_text(
        "model = model1\nseed = 5\npreprocess = gcn\n", "g");
    CHECK(a.hash() != prep.hash());

    CHECK(a.hash().size() == 16);
    for (char ch : a.hash()) CHECK(std::string("0123456789abcdef").find(ch) != std::string::npos);
}

TEST_CASE("the hash function matches the published test vectors") {
    CHECK(fnv1a64_hex("") == "cbf29ce484222325");
    CHECK(fnv1a64_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a64_hex("foobar") == "85944171f73967e8");
    const char bytes[] = {0x00};
    CHECK(fnv1a64(bytes, 1) == 0xaf63bd4c8601b7dfULL);
}
