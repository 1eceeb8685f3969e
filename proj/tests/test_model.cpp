#include "doctest.h"

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "convnet/errors.hpp"
#include "convnet/model.hpp"

using namespace convnet;

using Kind = LayerDesc::Kind;

namespace {

// Spatial extent after each image-shaped stage, for comparing against the
// published dimension chains.
std::vector<std::size_t> spatial_chain(const ModelSpec& spec) {
    std::vector<std::size_t> hs;
    auto chain = infer_shapes(spec);
    for (std::size_t i = 0; i < chain.size(); ++i) {
        if (chain[i].size() == 3 &&
            (spec.layers[i].kind == Kind::conv || spec.layers[i].kind == Kind::maxpool)) {
            hs.push_back(chain[i][1]);
        }
    }
    return hs;
}

std::size_t param_count_of(const ModelSpec& spec, std::uint64_t seed = 1) {
    Network net = build_network(spec, InitPolicy{}, seed);
    return net.param_count();
}

} // namespace

TEST_CASE("model1 first conv layer has the published kernel tensor and counts") {
    ModelSpec spec = builtin("model1", Variant::plain);
    Network net = build_network(spec, InitPolicy{}, 1);
    auto groups = net.param_groups();
    REQUIRE(!groups.empty());
    CHECK(groups[0]->value.shape() == std::vector<std::size_t>{64, 3, 5, 5});
    CHECK(groups[0]->value.size() == 4800);
    CHECK(groups[1]->value.shape() == std::vector<std::size_t>{64});
}

TEST_CASE("baseline is a 1000-unit sigmoid MLP over flat RGB input") {
    ModelSpec spec = builtin("baseline", Variant::plain);
    REQUIRE(spec.layers.size() == 4);
    CHECK(spec.layers[0].kind == Kind::input);
    CHECK(spec.layers[0].maps == 3);
    CHECK(spec.layers[0].kh == 32);
    CHECK(spec.layers[1].kind == Kind::dense);
    CHECK(spec.layers[1].units == 1000);
    CHECK(spec.layers[2].kind == Kind::activation);
    CHECK(spec.layers[2].act == Act::sigmoid);
    CHECK(spec.layers[3].kind == Kind::output);
    CHECK(spec.layers[3].units == 10);

    // 3*32*32 -> 1000 -> 10 with biases.
    CHECK(param_count_of(spec) == 3072 * 1000 + 1000 + 1000 * 10 + 10);
}

TEST_CASE("model2 walks the published 28-13-9-4-2-1 spatial chain") {
    CHECK(spatial_chain(builtin("model2", Variant::plain)) ==
          std::vector<std::size_t>{28, 13, 9, 4, 2, 1});
}

TEST_CASE("model1 walks the published 28-14-10-5-1 spatial chain") {
    CHECK(spatial_chain(builtin("model1", Variant::plain)) ==
          std::vector<std::size_t>{28, 14, 10, 5, 1});
}

TEST_CASE("every builtin in every variant passes shape inference") {
    for (const std::string& name : builtin_names()) {
        for (Variant v : {Variant::plain, Variant::dropout, Variant::maxout}) {
            ModelSpec spec = builtin(name, v);
            auto chain = infer_shapes(spec);
            CHECK(chain.size() == spec.layers.size());
            // Final stage is the 10-class logit vector.
            CHECK(chain.back() == std::vector<std::size_t>{10});

            ModelSpec small = tiny(name, v);
            auto tchain = infer_shapes(small);
            CHECK(tchain.back() == std::vector<std::size_t>{10});
        }
    }
}

TEST_CASE("oversized kernels are rejected naming the offending layer") {
    ModelSpec spec;
    spec.name = "bad";
    spec.layers = {parse_layer("input 1x5x5"), parse_layer("conv 2 8x8"),
                   parse_layer("output 10")};
    try {
        infer_shapes(spec);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("layer 1") != std::string::npos);
        CHECK(msg.find("conv") != std::string::npos);
    }
}

TEST_CASE("unknown names and variants are rejected") {
    CHECK_THROWS_AS(builtin("model9", Variant::plain), config_error);
    CHECK_THROWS_AS(tiny("mlp", Variant::plain), config_error);
    CHECK_THROWS_AS(parse_variant("fancy"), config_error);
    CHECK_THROWS_AS(builtin_schedule("model9"), config_error);
    CHECK(is_builtin("model3"));
    CHECK_FALSE(is_builtin("model5"));
    CHECK(builtin_names().size() == 6);
}

TEST_CASE("fresh networks start with zero biases and bounded uniform weights") {
    ModelSpec spec = builtin("model1", Variant::plain);
    Network net = build_network(spec, InitPolicy{}, 7);
    double conv_min = 1e9, conv_max = -1e9, conv_sum = 0.0;
    std::size_t conv_n = 0;
    for (ParamGroup* g : net.param_groups()) {
        if (g->grouping == ParamGroup::Grouping::none) {
            for (std::size_t i = 0; i < g->value.size(); ++i) CHECK(g->value[i] == 0.0);
        } else if (g->is_conv) {
            for (std::size_t i = 0; i < g->value.size(); ++i) {
                conv_min = std::min(conv_min, g->value[i]);
                conv_max = std::max(conv_max, g->value[i]);
                conv_sum += g->value[i];
                ++conv_n;
            }
        } else {
            for (std::size_t i = 0; i < g->value.size(); ++i) {
                CHECK(g->value[i] >= -0.05);
                CHECK(g->value[i] < 0.05);
            }
        }
    }
    REQUIRE(conv_n > 100000);
    CHECK(conv_min >= -0.5);
    CHECK(conv_max < 0.5);
    CHECK(conv_min < -0.45); // the range is actually used
    CHECK(conv_max > 0.45);
    // Mean of n U(-0.5, 0.5) draws: sigma = (1/sqrt(12))/sqrt(n).
    double sigma = (1.0 / std::sqrt(12.0)) / std::sqrt(static_cast<double>(conv_n));
    CHECK(std::fabs(conv_sum / static_cast<double>(conv_n)) < 3 * sigma);
}

TEST_CASE("the same seed rebuilds bitwise-identical parameters") {
    ModelSpec spec = tiny("model2", Variant::maxout);
    Network a = build_network(spec, InitPolicy{}, 42);
    Network b = build_network(spec, InitPolicy{}, 42);
    auto ga = a.param_groups(), gb = b.param_groups();
    REQUIRE(ga.size() == gb.size());
    for (std::size_t i = 0; i < ga.size(); ++i) {
        REQUIRE(ga[i]->value.same_shape(gb[i]->value));
        CHECK(std::memcmp(ga[i]->value.data(), gb[i]->value.data(),
                          ga[i]->value.size() * sizeof(double)) == 0);
    }

    Network c = build_network(spec, InitPolicy{}, 43);
    auto gc = c.param_groups();
    bool any_diff = false;
    for (std::size_t i = 0; i < ga.size() && !any_diff; ++i) {
        for (std::size_t j = 0; j < ga[i]->value.size(); ++j) {
            if (ga[i]->value[j] != gc[i]->value[j]) {
                any_diff = true;
                break;
            }
        }
    }
    CHECK(any_diff);
}

TEST_CASE("dropout variant adds input retention 0.8 and hidden-dense retention 0.5") {
    ModelSpec spec = builtin("model1", Variant::dropout);
    REQUIRE(spec.layers.size() >= 3);
    CHECK(spec.layers[0].kind == Kind::input);
    CHECK(spec.layers[1].kind == Kind::dropout);
    CHECK(spec.layers[1].p_retain == 0.8);

    // Exactly one 0.5 dropout: after the hidden dense nonlinearity, none
    // after the output.
    std::size_t half = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (spec.layers[i].kind == Kind::dropout && spec.layers[i].p_retain == 0.5) {
            ++half;
            CHECK(spec.layers[i - 1].kind == Kind::activation);
            CHECK(spec.layers[i - 2].kind == Kind::dense);
        }
    }
    CHECK(half == 1);
    CHECK(spec.layers.back().kind == Kind::output);

    // model3 has two hidden dense layers -> two 0.5 dropouts.
    ModelSpec m3 = builtin("model3", Variant::dropout);
    std::size_t m3half = 0;
    for (const auto& d : m3.layers) {
        if (d.kind == Kind::dropout && d.p_retain == 0.5) ++m3half;
    }
    CHECK(m3half == 2);
}

TEST_CASE("maxout variant widens conv 2x and hidden dense 5x, output untouched") {
    ModelSpec plain = builtin("model1", Variant::plain);
    ModelSpec mx = builtin("model1", Variant::maxout);

    std::vector<std::size_t> plain_maps, mx_maps;
    std::vector<std::size_t> plain_units, mx_units;
    for (const auto& d : plain.layers) {
        if (d.kind == Kind::conv) plain_maps.push_back(d.maps);
        if (d.kind == Kind::dense) plain_units.push_back(d.units);
    }
    for (const auto& d : mx.layers) {
        if (d.kind == Kind::conv) mx_maps.push_back(d.maps);
        if (d.kind == Kind::dense) mx_units.push_back(d.units);
        if (d.kind == Kind::maxout) {
            CHECK((d.pieces == 2 || d.pieces == 5));
        }
        CHECK(d.kind != Kind::activation); // every activation replaced
    }
    REQUIRE(plain_maps.size() == mx_maps.size());
    for (std::size_t i = 0; i < plain_maps.size(); ++i) CHECK(mx_maps[i] == 2 * plain_maps[i]);
    REQUIRE(plain_units.size() == mx_units.size());
    for (std::size_t i = 0; i < plain_units.size(); ++i) CHECK(mx_units[i] == 5 * plain_units[i]);
    CHECK(mx.layers.back().units == 10);

    // Widened parameters: conv weights double, hidden dense quintuple; the
    // maxout collapse keeps downstream shapes equal to the plain chain.
    auto plain_chain = infer_shapes(plain);
    auto mx_chain = infer_shapes(mx);
    CHECK(plain_chain.back() == mx_chain.back());
}

TEST_CASE("norm caps land on the studied models only") {
    ModelSpec m1 = builtin("model1", Variant::plain);
    const double cap = std::sqrt(15.0) / 4.0;
    bool first = true;
    for (const auto& d : m1.layers) {
        if (d.kind == Kind::conv) {
            CHECK(d.norm_cap == doctest::Approx(first ? 0.9 : cap));
            first = false;
        } else if (d.kind == Kind::dense || d.kind == Kind::output) {
            CHECK(d.norm_cap == doctest::Approx(cap));
        }
    }

    for (const char* uncapped : {"baseline", "initial_cnn"}) {
        ModelSpec spec = builtin(uncapped, Variant::plain);
        for (const auto& d : spec.layers) CHECK(d.norm_cap == 0.0);
    }
}

TEST_CASE("built networks copy caps onto their weight groups, biases free") {
    ModelSpec spec = builtin("model2", Variant::plain);
    Network net = build_network(spec, InitPolicy{}, 3);
    const double cap = std::sqrt(15.0) / 4.0;
    bool first_conv = true;
    for (ParamGroup* g : net.param_groups()) {
        if (g->grouping == ParamGroup::Grouping::conv_kernel) {
            CHECK(g->norm_cap == doctest::Approx(first_conv ? 0.9 : cap));
            first_conv = false;
        } else if (g->grouping == ParamGroup::Grouping::dense_column) {
            CHECK(g->norm_cap == doctest::Approx(cap));
        } else {
            CHECK(g->norm_cap == 0.0);
        }
    }
}

TEST_CASE("layer lines round-trip through str and parse_layer") {
    const char* lines[] = {
        "input 3x32x32", "conv 64 5x5 cap 0.9", "maxpool 3x3 stride 2", "relu",
        "sigmoid",       "tanh",                "maxout 2",             "dropout 0.5",
        "dense 1000",    "output 10",
    };
    for (const char* line : lines) {
        LayerDesc d = parse_layer(line);
        CHECK(d.str() == line);
        LayerDesc d2 = parse_layer(d.str());
        CHECK(d2.str() == d.str());
    }

    // An irrational cap survives the text round trip exactly.
    LayerDesc capped;
    capped.kind = Kind::dense;
    capped.units = 500;
    capped.norm_cap = std::sqrt(15.0) / 4.0;
    LayerDesc back = parse_layer(capped.str());
    CHECK(back.norm_cap == capped.norm_cap);
    CHECK(back.str() == capped.str());
}

TEST_CASE("parse_layer rejects malformed lines") {
    CHECK_THROWS_AS(parse_layer("conv 64"), config_error);
    CHECK_THROWS_AS(parse_layer("conv sixty 5x5"), config_error);
    CHECK_THROWS_AS(parse_layer("teleport 3"), config_error);
    CHECK_THROWS_AS(parse_layer("maxpool 3x3 slide 2"), config_error);
    CHECK_THROWS_AS(parse_layer(""), config_error);
    CHECK_THROWS_AS(parse_layer("input 3x32"), config_error);
}

TEST_CASE("published training settings per architecture") {
    TrainSchedule m = builtin_schedule("model1");
    CHECK(m.base_lr == 0.17);
    CHECK(m.lr_floor_factor == 0.01);
    CHECK(m.lr_saturate_epoch == 500);
    CHECK(m.momentum_kind == TrainSchedule::Momentum::nesterov);
    CHECK(m.momentum_start == 0.5);
    CHECK(m.momentum_end == 0.6);
    CHECK(m.momentum_saturate_epoch == 250);
    CHECK(m.conv_grad_scale == 0.05);
    CHECK(m.batch_size == 100);

    TrainSchedule b = builtin_schedule("baseline");
    CHECK(b.base_lr == 0.12);
    CHECK(b.momentum_kind == TrainSchedule::Momentum::classical);
    CHECK(b.momentum_start == 0.9);
    CHECK(b.momentum_end == 0.9);
    CHECK(b.conv_grad_scale == 1.0);
    CHECK(lr_at(b, 400) == 0.12); // no decay

    TrainSchedule i = builtin_schedule("initial_cnn");
    CHECK(i.base_lr == 1.0);
    CHECK(i.momentum_start == 0.0);
    CHECK(i.momentum_end == 0.0);
    CHECK(lr_at(i, 400) == 1.0);
}

TEST_CASE("maxout variant multiplies parameter counts as advertised") {
    ModelSpec plain = tiny("model1", Variant::plain);
    ModelSpec mx = tiny("model1", Variant::maxout);
    Network pn = build_network(plain, InitPolicy{}, 1);
    Network mn = build_network(mx, InitPolicy{}, 1);

    auto pg = pn.param_groups();
    auto mg = mn.param_groups();
    REQUIRE(pg.size() == mg.size());
    // conv weight tensors double along the output-map axis.
    CHECK(mg[0]->value.dim(0) == 2 * pg[0]->value.dim(0));
    // The final (output) dense layer is unchanged in its unit count.
    CHECK(mg.back()->value.dim(0) == pg.back()->value.dim(0));
}
