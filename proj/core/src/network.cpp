#include "lsn/network.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "lsn/rng.hpp"

namespace lsn {

namespace ad {
// defined in autodiff.cpp; shared so tape and scalar forward round identically
double dot_bias(const double* w, const double* x, std::size_t n, double b);
}

namespace {

std::vector<Mlp::Layer> make_layers(const MlpConfig& c) {
    if (c.hidden_layers < 0 || c.width < 1)
        throw std::invalid_argument("MlpConfig: hidden_layers >= 0 and width >= 1 required");
    std::vector<Mlp::Layer> layers;
    std::size_t off = 0;
    int in = 2;
    for (int l = 0; l < c.hidden_layers; ++l) {
        Mlp::Layer layer{off, off + static_cast<std::size_t>(in) * c.width, in, c.width};
        off = layer.b_off + c.width;
        layers.push_back(layer);
        in = c.width;
    }
    layers.push_back(Mlp::Layer{off, off + static_cast<std::size_t>(in), in, 1});
    return layers;
}

}  // namespace

std::size_t Mlp::param_count_for(const MlpConfig& config) {
    const auto layers = make_layers(config);
    const Layer& last = layers.back();
    return last.b_off + static_cast<std::size_t>(last.out);
}

Mlp Mlp::init(const MlpConfig& config) {
    Mlp mlp;
    mlp.config_ = config;
    mlp.layers_ = make_layers(config);
    mlp.params_.assign(param_count_for(config), 0.0);

    Rng rng(config.seed);
    for (const Layer& layer : mlp.layers_) {
        const double limit = std::sqrt(6.0 / (layer.in + layer.out));
        double* w = mlp.params_.data() + layer.w_off;
        for (int i = 0; i < layer.in * layer.out; ++i)
            w[i] = rng.uniform(-limit, limit);
        // biases stay zero
    }
    return mlp;
}

double Mlp::forward_scalar(double x, double t) const {
    std::vector<double> act{x, t};
    std::vector<double> next;
    const double* p = params_.data();
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        next.resize(layer.out);
        const bool hidden = l + 1 < layers_.size();
        for (int j = 0; j < layer.out; ++j) {
            const double z = ad::dot_bias(p + layer.w_off + static_cast<std::size_t>(j) * layer.in,
                                          act.data(), layer.in, p[layer.b_off + j]);
            next[j] = hidden ? std::tanh(z) : z;
        }
        act.swap(next);
    }
    return act[0];
}

ad::Var Mlp::forward_jet(ad::Tape& tape, double x, double t) const {
    if (tape.param_count() != params_.size())
        throw std::invalid_argument("forward_jet: tape parameters do not match network");

    ad::NodeId first = tape.input(ad::Axis::X, x);
    tape.input(ad::Axis::T, t);

    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        const bool hidden = l + 1 < layers_.size();
        ad::NodeId z0 = 0;
        for (int j = 0; j < layer.out; ++j) {
            const ad::NodeId z =
                tape.affine(first, static_cast<std::uint32_t>(layer.in),
                            layer.w_off + static_cast<std::size_t>(j) * layer.in,
                            layer.b_off + static_cast<std::size_t>(j));
            if (j == 0) z0 = z;
            (void)z;
        }
        if (hidden) {
            ad::NodeId a0 = 0;
            for (int j = 0; j < layer.out; ++j) {
                const ad::NodeId a = tape.unary(ad::UnaryFunc::Tanh, z0 + j);
                if (j == 0) a0 = a;
            }
            first = a0;
        } else {
            first = z0;
        }
    }
    return ad::Var(&tape, first);
}

void Mlp::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    out << "lsn-checkpoint 1\n";
    out << "hidden_layers " << config_.hidden_layers << "\n";
    out << "width " << config_.width << "\n";
    out << "seed " << config_.seed << "\n";
    out << "params " << params_.size() << "\n";
    char buf[40];
    for (double p : params_) {
        std::snprintf(buf, sizeof buf, "%.17g\n", p);
        out << buf;
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

Mlp Mlp::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "lsn-checkpoint" || version != 1)
        throw std::runtime_error("unrecognised checkpoint header in " + path.string());

    MlpConfig config;
    std::size_t count = 0;
    std::string key;
    while (in >> key) {
        if (key == "hidden_layers") in >> config.hidden_layers;
        else if (key == "width") in >> config.width;
        else if (key == "seed") in >> config.seed;
        else if (key == "params") { in >> count; break; }
        else throw std::runtime_error("unknown checkpoint field: " + key);
    }

    Mlp mlp;
    mlp.config_ = config;
    mlp.layers_ = make_layers(config);
    if (count != param_count_for(config))
        throw std::runtime_error("checkpoint parameter count does not match its config");
    mlp.params_.resize(count);
    for (std::size_t i = 0; i < count; ++i)
        if (!(in >> mlp.params_[i]))
            throw std::runtime_error("truncated checkpoint: " + path.string());
    return mlp;
}

}  // namespace lsn
