#include <doctest.h>

#include "lsn/config.hpp"

using namespace lsn;

TEST_CASE("round trip is lossless") {
    ExperimentConfig c;
    c.model_id = "bs";
    c.rate = 0.11;
    c.sigma = 0.4;
    c.weights = LossWeights{0.001, 1.0, 0.1, 1.0};
    c.n_interior = 50;
    c.n_boundary = 1000;
    c.n_initial = 1000;
    c.iterations = 200000;
    c.lr_decay = 0.95;
    c.laws.push_back(LawSpec{"bs_g2", "consistent", "t", "t2", 1.0, 1.0});
    c.laws.push_back(LawSpec{"bs_g2", "consistent", "sin_t", "cos_t", 1.0, 1.0});
    c.seeds = {1, 2, 3};
    const std::string text = c.serialize();
    const ExperimentConfig back = ExperimentConfig::parse(text);
    CHECK(back == c);
    CHECK(ExperimentConfig::parse(back.serialize()) == back);
}

TEST_CASE("vasicek and kdv round trips") {
    ExperimentConfig c;
    c.model_id = "vasicek";
    c.domain = {0.0, 1.0, 1.0};
    c.laws.push_back(LawSpec{"vasicek_g6", "consistent", "t", "t2", 1.0, 1.0});
    CHECK(ExperimentConfig::parse(c.serialize()) == c);

    ExperimentConfig k;
    k.model_id = "kdv_manufactured";
    k.domain = {0.0, 1.0, 1.0};
    k.laws.push_back(LawSpec{"kdv_mass", "consistent", "t", "t2", 1.0, 1.0});
    CHECK(ExperimentConfig::parse(k.serialize()) == k);
}

TEST_CASE("unknown keys are rejected with the offending line") {
    try {
        ExperimentConfig::parse("model.id = bs\nmodel.frobnicate = 2\n");
        FAIL("expected an exception");
    } catch (const std::exception& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("model.frobnicate") != std::string::npos);
    }
}

TEST_CASE("parse diagnostics carry line numbers") {
    try {
        ExperimentConfig::parse("model.id = bs\nweights.lambda1 = abc\n");
        FAIL("expected an exception");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("comments, blank lines and key order do not matter") {
    const char* text =
        "# preset\n"
        "seeds = 5,6\n"
        "model.sigma = 0.3   # vol\n"
        "\n"
        "model.id = bs\n";
    const ExperimentConfig c = ExperimentConfig::parse(text);
    CHECK(c.sigma == 0.3);
    CHECK(c.seeds == std::vector<std::uint64_t>{5, 6});
    CHECK(c.domain.x_max == 20.0);  // BS default picked up despite late model.id
}

TEST_CASE("domain defaults follow the model") {
    const ExperimentConfig v = ExperimentConfig::parse("model.id = vasicek\n");
    CHECK(v.domain.x_max == 1.0);
    const ExperimentConfig m = ExperimentConfig::parse("model.id = maxwellian\n");
    CHECK(m.domain.x_min == 1.0);
    CHECK(m.domain.x_max == 2.0);
    const ExperimentConfig o =
        ExperimentConfig::parse("model.id = bs\nmodel.x_max = 40\n");
    CHECK(o.domain.x_max == 40.0);
    CHECK(o.domain.x_min == 0.0);
}

TEST_CASE("validation catches bad setups") {
    ExperimentConfig c;
    c.weights.pde = -1.0;
    CHECK_THROWS(c.validate());
    c = ExperimentConfig{};
    c.hidden_layers = 0;
    CHECK_THROWS(c.validate());
    c = ExperimentConfig{};
    c.model_id = "vasicek";
    c.domain = {0.0, 1.0, 1.0};
    c.laws.push_back(LawSpec{"bs_g2", "consistent", "t", "t2", 1.0, 1.0});
    CHECK_THROWS(c.validate());  // law incompatible with the model
    c = ExperimentConfig{};
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("law construction from specs") {
    ExperimentConfig c;
    c.laws.push_back(LawSpec{"bs_g2", "literal", "sin_t", "cos_t", 2.0, 3.0});
    const auto laws = c.make_laws();
    REQUIRE(laws.size() == 1);
    CHECK(laws[0].kind == LawKind::BsG2);
    CHECK(laws[0].mode == LawMode::Literal);
    CHECK(laws[0].coeff_a == 2.0);
    CHECK(laws[0].coeff_b == 3.0);
    CHECK(laws[0].l.token == "sin_t");
}
