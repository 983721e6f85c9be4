// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <set>

#include "doctest.h"
#include "silt/net_spec.hpp"
#include "silt/network.hpp"
#include "silt/rng.hpp"

using namespace silt;

namespace {

GeneratorConfig small_config(const std::string& spec, uint64_t seed = 0, int base = 4) {
    GeneratorConfig cfg;
    cfg.spec = parse_network_spec(spec);
    cfg.base_channels = base;
    cfg.seed = seed;
    return cfg;
}

Tensor<float> ramp_image(int c, int h, int w) {
    Tensor<float> t({c, h, w});
    for (int64_t i = 0; i < t.numel(); ++i)
        t.v[static_cast<size_t>(i)] = static_cast<float>(i % 97) / 97.0f;
    return t;
}

}  // namespace

TEST_CASE("parse: restoration preset") {
    const NetworkSpec s = parse_network_spec("N=10; S={(2,8),(3,7),(4,6)}; C={}; R=[]");
    CHECK(s.depth == 10);
    CHECK(s.skips == std::vector<std::pair<int, int>>{{2, 8}, {3, 7}, {4, 6}});
    CHECK(s.cascades.empty());
    CHECK(s.residual_block_count() == 0);
}

TEST_CASE("parse: residual shorthand") {
    const NetworkSpec s = parse_network_spec("N=10; S={(2,8),(3,7),(4,6)}; C={}; R=[6]");
    CHECK(s.residual_shorthand);
    CHECK(s.residual_block_count() == 6);
}

TEST_CASE("parse: minimal empty components") {
    const NetworkSpec s = parse_network_spec("N=4; S={}; C={}; R=[]");
    CHECK(s.depth == 4);
    CHECK(s.skips.empty());
    CHECK(s.cascades.empty());
    CHECK(s.residual_block_count() == 0);
}

TEST_CASE("parse: whitespace-insensitive, explicit blocks and cascades") {
    const NetworkSpec s =
        parse_network_spec("  N = 8 ;\n S = { ( 1 , 5 ) } ; C = { 3 , 4 } ; R = [ (2,2) ] ; ");
    CHECK(s.depth == 8);
    CHECK(s.skips.size() == 1);
    CHECK(s.cascades == std::vector<int>{3, 4});
    REQUIRE(s.residual_blocks.size() == 1);
    CHECK(s.residual_blocks[0] == ResidualBlockSpec{2, 2});
}

TEST_CASE("parse: syntax errors carry line and column") {
    try {
        parse_network_spec("N=10; S={(2,8) (3,7)}; C={}; R=[]");
        FAIL("expected syntax error");
    } catch (const SpecSyntaxError& e) {
        CHECK(e.line == 1);
        CHECK(e.column > 10);
    }
    try {
        parse_network_spec("N=10;\nS={(2,)}; C={}; R=[]");
        FAIL("expected syntax error");
    } catch (const SpecSyntaxError& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("parse: integer literal out of range") {
    CHECK_THROWS_AS(parse_network_spec("N=99999999999; S={}; C={}; R=[]"), SpecSyntaxError);
}

TEST_CASE("round trip through to_string") {
    const char* text = "N=10; S={(2,8),(3,7),(4,6)}; C={}; R=[6]";
    const NetworkSpec s = parse_network_spec(text);
    CHECK(parse_network_spec(to_string(s)) == s);
}

TEST_CASE("validate: restoration preset is clean") {
    CHECK(validate_spec(parse_network_spec("N=10; S={(2,8),(3,7),(4,6)}; C={}; R=[]")).empty());
}

TEST_CASE("validate: reversed skip") {
    const auto v = validate_spec(parse_network_spec("N=10; S={(8,2)}; C={}; R=[]"));
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("skip requires i<j") != std::string::npos);
}

TEST_CASE("validate: residual exceeding depth") {
    const auto v = validate_spec(parse_network_spec("N=10; S={}; C={}; R=[(9,4)]"));
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("exceeds depth") != std::string::npos);
}

TEST_CASE("validate: remaining invariants") {
    NetworkSpec s;
    s.depth = 1;
    CHECK(!validate_spec(s).empty());

    s = parse_network_spec("N=6; S={(2,5),(2,5)}; C={}; R=[]");
    bool dup = false;
    for (const auto& m : validate_spec(s)) dup = dup || m.find("duplicate") != std::string::npos;
    CHECK(dup);

    s = parse_network_spec("N=6; S={(1,5),(2,5)}; C={}; R=[]");
    bool shared = false;
    for (const auto& m : validate_spec(s))
        shared = shared || m.find("targets layer") != std::string::npos;
    CHECK(shared);

    s = parse_network_spec("N=6; S={}; C={1}; R=[]");
    CHECK(!validate_spec(s).empty());
    s = parse_network_spec("N=6; S={}; C={7}; R=[]");
    CHECK(!validate_spec(s).empty());
    s = parse_network_spec("N=6; S={(0,3)}; C={}; R=[]");
    CHECK(!validate_spec(s).empty());
}

TEST_CASE("build: restoration preset has 5+5 stages and 3 skip edges") {
    const BuiltNetwork net = build_generator(small_config("N=10; S={(2,8),(3,7),(4,6)}; C={}; R=[]"));
    CHECK(net.stages == 5);
    CHECK(net.concat_edge_count() == 3);
    CHECK(net.residual_add_count() == 0);
    int enc = 0, dec = 0;
    for (const auto& l : net.layers) {
        enc += l.kind == "encoder";
        dec += l.kind == "decoder";
    }
    CHECK(enc == 5);
    CHECK(dec == 5);
}

TEST_CASE("build: retarget preset adds 6 residual blocks") {
    const BuiltNetwork net =
        build_generator(small_config("N=10; S={(2,8),(3,7),(4,6)}; C={}; R=[6]"));
    CHECK(net.concat_edge_count() == 3);
    CHECK(net.residual_add_count() == 6);
}

TEST_CASE("build: concat edges count skips plus cascades") {
    const BuiltNetwork net =
        build_generator(small_config("N=8; S={(2,6),(3,5)}; C={3,7}; R=[(2,2)]"));
    CHECK(net.concat_edge_count() == 4);
    CHECK(net.residual_add_count() == 1);
}

TEST_CASE("build: skipless spec yields zero concat edges") {
    const BuiltNetwork net = build_generator(small_config("N=10; S={}; C={}; R=[]"));
    CHECK(net.concat_edge_count() == 0);
}

TEST_CASE("build: determinism and seed sensitivity") {
    const auto a = build_generator(small_config("N=6; S={(2,4)}; C={}; R=[2]", 7));
    const auto b = build_generator(small_config("N=6; S={(2,4)}; C={}; R=[2]", 7));
    const auto c = build_generator(small_config("N=6; S={(2,4)}; C={}; R=[2]", 8));
    REQUIRE(a.params.size() == b.params.size());
    for (size_t i = 0; i < a.params.size(); ++i) {
        CHECK(a.params.names[i] == b.params.names[i]);
        CHECK(std::memcmp(a.params.tensors[i].data(), b.params.tensors[i].data(),
                          a.params.tensors[i].v.size() * sizeof(float)) == 0);
    }
    bool any_diff = false;
    for (size_t i = 0; i < a.params.size() && !any_diff; ++i)
        any_diff = std::memcmp(a.params.tensors[i].data(), c.params.tensors[i].data(),
                               a.params.tensors[i].v.size() * sizeof(float)) != 0;
    CHECK(any_diff);
}

TEST_CASE("build: rejects invalid specs and odd depth") {
    CHECK_THROWS_AS(build_generator(small_config("N=10; S={(8,2)}; C={}; R=[]")), InvalidSpec);
    CHECK_THROWS_AS(build_generator(small_config("N=5; S={}; C={}; R=[]")), InvalidSpec);
}

TEST_CASE("forward: output shape follows the scale contract") {
    const BuiltNetwork net = build_generator(small_config("N=4; S={(1,3)}; C={2}; R=[]"));
    const auto x = ramp_image(3, 20, 12);
    SUBCASE("identity") {
        const auto y = generator_forward(net, x, 1.0, 1.0);
        CHECK(y.shape == std::vector<int>{3, 20, 12});
    }
    SUBCASE("doubling height") {
        const auto y = generator_forward(net, x, 2.0, 1.0);
        CHECK(y.shape == std::vector<int>{3, 40, 12});
    }
    SUBCASE("fractional scales round half up") {
        const auto y = generator_forward(net, x, 1.5, 0.5);
        CHECK(y.shape == std::vector<int>{3, 30, 6});
    }
    SUBCASE("sweep") {
        for (double sh : {0.5, 1.0, 1.5, 2.0})
            for (double sw : {0.5, 1.0, 1.5, 2.0}) {
                const auto y = generator_forward(net, x, sh, sw);
                CHECK(y.dim(1) == static_cast<int>(std::floor(20 * sh + 0.5)));
                CHECK(y.dim(2) == static_cast<int>(std::floor(12 * sw + 0.5)));
            }
    }
}

TEST_CASE("forward: output values lie in [0,1]") {
    const BuiltNetwork net = build_generator(small_config("N=4; S={}; C={}; R=[]"));
    const auto y = generator_forward(net, ramp_image(3, 16, 16), 1.0, 1.0);
    for (float v : y.v) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("forward: retargeting size contract on 100x80") {
    const BuiltNetwork net =
        build_generator(small_config("N=10; S={(2,8),(3,7),(4,6)}; C={}; R=[]", 0, 2));
    const auto y = generator_forward(net, ramp_image(3, 100, 80), 1.5, 0.5);
    CHECK(y.dim(1) == 150);
    CHECK(y.dim(2) == 40);
}

TEST_CASE("forward: rejects non-positive and degenerate scales") {
    const BuiltNetwork net = build_generator(small_config("N=4; S={}; C={}; R=[]"));
    const auto x = ramp_image(3, 16, 16);
    CHECK_THROWS_AS(generator_forward(net, x, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(generator_forward(net, x, -1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(generator_forward(net, x, 0.01, 1.0), std::invalid_argument);
}

TEST_CASE("forward: same seed twice is bitwise identical") {
    const auto cfg = small_config("N=6; S={(2,4)}; C={}; R=[1]", 11);
    const auto x = ramp_image(3, 24, 24);
    const auto y1 = generator_forward(build_generator(cfg), x, 1.0, 1.0);
    const auto y2 = generator_forward(build_generator(cfg), x, 1.0, 1.0);
    CHECK(std::memcmp(y1.data(), y2.data(), y1.v.size() * sizeof(float)) == 0);
}

TEST_CASE("discriminator: weight normalization and validation") {
    const auto d = build_discriminator({1, 1, 1, 1}, 0, 8);
    for (double w : d.scale_weights) CHECK(w == doctest::Approx(0.25));
    double sum = 0;
    for (double w : d.scale_weights) sum += w;
    CHECK(sum == doctest::Approx(1.0));

    const auto d2 = build_discriminator({2, 0, 0, 6}, 0, 8);
    CHECK(d2.scale_weights[0] == doctest::Approx(0.25));
    CHECK(d2.scale_weights[3] == doctest::Approx(0.75));

    CHECK_THROWS_AS(build_discriminator({0, 0, 0, 0}, 0, 8), std::invalid_argument);
    CHECK_THROWS_AS(build_discriminator({-1, 1, 1, 1}, 0, 8), std::invalid_argument);
}

TEST_CASE("discriminator: each sub-network has 4 conv layers") {
    const auto d = build_discriminator({1, 1, 1, 1}, 0, 8);
    for (int s = 1; s <= 4; ++s)
        for (int l = 1; l <= 4; ++l)
            CHECK(d.params.index.count("d" + std::to_string(s) + ".conv" + std::to_string(l) +
                                       ".w") == 1);
    CHECK(d.layers_per_sub == 4);
}

TEST_CASE("discriminator: map sizes match the conv arithmetic table") {
    // out = floor((n + 2*pad - k) / stride) + 1 per layer, k=4, pad=2,
    // strides 2,2,2,1; computed by hand for a 64x64 input.
    const auto d = build_discriminator({1, 1, 1, 1}, 0, 8);
    const auto sizes = sub_discriminator_map_sizes(d, 64, 64);
    REQUIRE(sizes.size() == 4);
    CHECK(sizes[0] == std::pair<int, int>{33, 33});
    CHECK(sizes[1] == std::pair<int, int>{17, 17});
    CHECK(sizes[2] == std::pair<int, int>{9, 9});
    CHECK(sizes[3] == std::pair<int, int>{10, 10});

    // The value-level forward must produce exactly these shapes per scale.
    const auto out = discriminator_forward(d, ramp_image(3, 64, 64));
    REQUIRE(out.maps.size() == 4);
    const int pyramid[4] = {64, 32, 16, 8};
    for (int s = 0; s < 4; ++s) {
        const auto expect = sub_discriminator_map_sizes(d, pyramid[s], pyramid[s]).back();
        CHECK(out.maps[static_cast<size_t>(s)].dim(1) == expect.first);
        CHECK(out.maps[static_cast<size_t>(s)].dim(2) == expect.second);
    }
}

TEST_CASE("discriminator: aggregate is the weighted mean of the maps") {
    const auto d = build_discriminator({1, 0, 0, 0}, 3, 8);
    const auto z = ramp_image(3, 48, 48);
    const auto out = discriminator_forward(d, z);
    double mean0 = 0;
    for (float v : out.maps[0].v) mean0 += v;
    mean0 /= static_cast<double>(out.maps[0].numel());
    CHECK(out.aggregate == doctest::Approx(mean0).epsilon(1e-5));

    const auto du = build_discriminator({1, 1, 1, 1}, 3, 8);
    const auto out2 = discriminator_forward(du, z);
    double agg = 0;
    for (int s = 0; s < 4; ++s) {
        double m = 0;
        for (float v : out2.maps[static_cast<size_t>(s)].v) m += v;
        agg += 0.25 * m / static_cast<double>(out2.maps[static_cast<size_t>(s)].numel());
    }
    CHECK(out2.aggregate == doctest::Approx(agg).epsilon(1e-5));
}

TEST_CASE("discriminator: minimum input size is enforced and reported") {
    const auto d = build_discriminator({1, 1, 1, 1}, 0, 8);
    try {
        discriminator_forward(d, ramp_image(3, 8, 8));
        FAIL("expected minimum-size error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find(std::to_string(d.min_input)) != std::string::npos);
    }
}

TEST_CASE("describe_network lists the mandated edges") {
    const auto net = build_generator(small_config("N=10; S={(2,8),(3,7),(4,6)}; C={}; R=[6]"));
    const std::string summary = describe_network(net);
    CHECK(summary.find("skip edges: 3") != std::string::npos);
    CHECK(summary.find("residual blocks: 6") != std::string::npos);
}

TEST_CASE("random valid specs: edge counts follow the component counts") {
    SeededRng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const int stages = 2 + static_cast<int>(rng.uniform_index(3));
        const int n = 2 * stages;
        NetworkSpec s;
        s.depth = n;
        std::set<int> dests;
        for (int k = 0; k < 3; ++k) {
            const int i = 1 + static_cast<int>(rng.uniform_index(static_cast<uint64_t>(n - 1)));
            const int j = i + 1 + static_cast<int>(rng.uniform_index(static_cast<uint64_t>(n - i)));
            if (j > n || dests.count(j)) continue;
            dests.insert(j);
            s.skips.emplace_back(i, j);
        }
        if (rng.uniform() < 0.5) s.cascades.push_back(2 + static_cast<int>(rng.uniform_index(
                                     static_cast<uint64_t>(n - 1))));
        s.residual_shorthand = true;
        s.residual_count = static_cast<int>(rng.uniform_index(4));
        REQUIRE(validate_spec(s).empty());
        GeneratorConfig cfg;
        cfg.spec = s;
        cfg.base_channels = 2;
        const BuiltNetwork net = build_generator(cfg);
        CHECK(net.concat_edge_count() ==
              static_cast<int>(s.skips.size() + s.cascades.size()));
        CHECK(net.residual_add_count() == s.residual_count);
    }
}
