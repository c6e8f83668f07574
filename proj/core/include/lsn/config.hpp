#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lsn/models.hpp"
#include "lsn/sampling.hpp"
#include "lsn/symmetry.hpp"
#include "lsn/training.hpp"

namespace lsn {

/// Config-level description of one conservation law.
struct LawSpec {
    std::string kind = "bs_g2";  // bs_g2 | vasicek_g5 | vasicek_g6 | kdv_mass
    std::string mode = "consistent";
    std::string l = "t";
    std::string g = "t2";
    double a = 1.0;
    double b = 1.0;
    bool operator==(const LawSpec&) const = default;
};

/// A full experiment: model, weights, sampling, network, optimiser schedule,
/// law list, test grid, output directory and seed list. Parsed from flat
/// dotted key = value text; unknown keys are rejected and
/// parse(serialize(c)) == c.
struct ExperimentConfig {
    // model.*
    std::string model_id = "bs";  // bs | vasicek | kdv | kdv_manufactured | maxwellian
    double rate = 0.1, sigma = 0.2, strike = 10.0;
    double alpha = 0.03, beta = 0.08, gamma = -1.0, lambda = 1.0;
    Domain domain{0.0, 20.0, 1.0};

    // weights.lambda1..lambda4
    LossWeights weights{0.001, 1.0, 0.1, 1.0};

    // sampling.*
    std::size_t n_interior = 50, n_boundary = 1000, n_initial = 1000;
    std::string dist = "gaussian";

    // network.*
    int hidden_layers = 9, width = 50;

    // train.*
    std::size_t iterations = 200000;
    double lr0 = 1e-3, lr_decay = 0.95;
    std::size_t decay_interval = 1000, snapshot_every = 500;
    bool deterministic = true;
    std::string engine = "batched";  // batched | tape
    int threads = 0;

    // lie.lawN.*
    std::vector<LawSpec> laws;

    // test.*
    std::size_t test_nx = 50, test_nt = 50;

    // output.dir
    std::string output_dir = "runs/out";

    // seeds
    std::vector<std::uint64_t> seeds{1};

    bool operator==(const ExperimentConfig&) const = default;

    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig parse_file(const std::filesystem::path& path);
    std::string serialize() const;

    /// Structural invariants (positive counts, finite non-negative weights,
    /// laws compatible with the model). Throws on violation.
    void validate() const;

    PdeModel make_model() const;
    std::vector<ConservationLaw> make_laws() const;
    MlpConfig make_mlp_config(std::uint64_t seed) const;
    TrainConfig make_train_config(std::uint64_t seed) const;
    SampleDist sample_dist() const;
};

}  // namespace lsn
