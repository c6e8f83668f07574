#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lsn/autodiff.hpp"

namespace lsn {

struct MlpConfig {
    int hidden_layers = 9;
    int width = 50;
    std::uint64_t seed = 0;
};

/// Fully connected tanh network u(x, t) with a linear output layer, stored as
/// one flat parameter vector (per layer: weights row-major [out][in], then
/// biases). Immutable during evaluation; concurrent forward passes are safe.
class Mlp {
public:
    struct Layer {
        std::size_t w_off, b_off;
        int in, out;
    };

    /// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases,
    /// fully determined by config.seed.
    static Mlp init(const MlpConfig& config);

    const MlpConfig& config() const { return config_; }
    std::span<const double> params() const { return params_; }
    std::span<double> params() { return params_; }
    std::size_t param_count() const { return params_.size(); }
    std::span<const Layer> layers() const { return layers_; }

    static std::size_t param_count_for(const MlpConfig& config);

    double forward_scalar(double x, double t) const;

    /// Jet-valued forward pass on a tape already bound to this network's
    /// parameter vector; the tape's DerivSet decides which partials propagate.
    ad::Var forward_jet(ad::Tape& tape, double x, double t) const;

    /// Checkpoint round trip (versioned text, 17 significant digits).
    void save(const std::filesystem::path& path) const;
    static Mlp load(const std::filesystem::path& path);

private:
    MlpConfig config_;
    std::vector<Layer> layers_;
    std::vector<double> params_;
};

}  // namespace lsn
