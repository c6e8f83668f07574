#include "lsn/config.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "lsn/io.hpp"

namespace lsn {

namespace {

Domain default_domain(const std::string& id) {
    if (id == "bs") return {0.0, 20.0, 1.0};
    if (id == "vasicek") return {0.0, 1.0, 1.0};
    if (id == "kdv" || id == "kdv_manufactured") return {0.0, 1.0, 1.0};
    if (id == "maxwellian") return {1.0, 2.0, 1.0};
    throw std::runtime_error("unknown model id: " + id);
}

double parse_num(const std::string& v, int line) {
    std::size_t pos = 0;
    double x = 0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error("config line " + std::to_string(line) + ": not a number: " + v);
    }
    if (pos != v.size())
        throw std::runtime_error("config line " + std::to_string(line) + ": not a number: " + v);
    return x;
}

std::size_t parse_count(const std::string& v, int line) {
    const double x = parse_num(v, line);
    if (x < 0 || x != std::floor(x))
        throw std::runtime_error("config line " + std::to_string(line) +
                                 ": expected a non-negative integer: " + v);
    return static_cast<std::size_t>(x);
}

bool parse_bool(const std::string& v, int line) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw std::runtime_error("config line " + std::to_string(line) + ": expected true/false: " + v);
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    // collect key/value pairs first; model.id then drives domain defaults so
    // the result does not depend on key order
    std::vector<std::pair<std::string, std::string>> kv;
    std::vector<int> lines;
    {
        std::istringstream in(text);
        std::string raw;
        int line = 0;
        while (std::getline(in, raw)) {
            ++line;
            const std::string stripped = trim(raw.substr(0, raw.find('#')));
            if (stripped.empty()) continue;
            const auto eq = stripped.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("config line " + std::to_string(line) +
                                         ": expected key = value");
            kv.emplace_back(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
            lines.push_back(line);
        }
    }

    ExperimentConfig c;
    c.laws.clear();
    c.seeds.clear();
    bool domain_given[3] = {false, false, false};

    for (std::size_t i = 0; i < kv.size(); ++i)
        if (kv[i].first == "model.id") c.model_id = kv[i].second;
    c.domain = default_domain(c.model_id);

    std::map<int, LawSpec> law_map;

    for (std::size_t i = 0; i < kv.size(); ++i) {
        const std::string& k = kv[i].first;
        const std::string& v = kv[i].second;
        const int ln = lines[i];

        if (k == "model.id") continue;
        else if (k == "model.r") c.rate = parse_num(v, ln);
        else if (k == "model.sigma") c.sigma = parse_num(v, ln);
        else if (k == "model.strike") c.strike = parse_num(v, ln);
        else if (k == "model.alpha") c.alpha = parse_num(v, ln);
        else if (k == "model.beta") c.beta = parse_num(v, ln);
        else if (k == "model.gamma") c.gamma = parse_num(v, ln);
        else if (k == "model.lambda") c.lambda = parse_num(v, ln);
        else if (k == "model.x_min") { c.domain.x_min = parse_num(v, ln); domain_given[0] = true; }
        else if (k == "model.x_max") { c.domain.x_max = parse_num(v, ln); domain_given[1] = true; }
        else if (k == "model.t_max") { c.domain.t_max = parse_num(v, ln); domain_given[2] = true; }
        else if (k == "weights.lambda1") c.weights.pde = parse_num(v, ln);
        else if (k == "weights.lambda2") c.weights.boundary = parse_num(v, ln);
        else if (k == "weights.lambda3") c.weights.initial = parse_num(v, ln);
        else if (k == "weights.lambda4") c.weights.lie = parse_num(v, ln);
        else if (k == "sampling.interior") c.n_interior = parse_count(v, ln);
        else if (k == "sampling.boundary") c.n_boundary = parse_count(v, ln);
        else if (k == "sampling.initial") c.n_initial = parse_count(v, ln);
        else if (k == "sampling.dist") {
            if (v != "gaussian" && v != "uniform")
                throw std::runtime_error("config line " + std::to_string(ln) +
                                         ": sampling.dist must be gaussian or uniform");
            c.dist = v;
        }
        else if (k == "network.hidden_layers") c.hidden_layers = static_cast<int>(parse_count(v, ln));
        else if (k == "network.width") c.width = static_cast<int>(parse_count(v, ln));
        else if (k == "train.iterations") c.iterations = parse_count(v, ln);
        else if (k == "train.lr0") c.lr0 = parse_num(v, ln);
        else if (k == "train.decay") c.lr_decay = parse_num(v, ln);
        else if (k == "train.decay_interval") c.decay_interval = parse_count(v, ln);
        else if (k == "train.snapshot_every") c.snapshot_every = parse_count(v, ln);
        else if (k == "train.deterministic") c.deterministic = parse_bool(v, ln);
        else if (k == "train.engine") {
            if (v != "batched" && v != "tape")
                throw std::runtime_error("config line " + std::to_string(ln) +
                                         ": train.engine must be batched or tape");
            c.engine = v;
        }
        else if (k == "train.threads") c.threads = static_cast<int>(parse_count(v, ln));
        else if (k == "test.nx") c.test_nx = parse_count(v, ln);
        else if (k == "test.nt") c.test_nt = parse_count(v, ln);
        else if (k == "output.dir") c.output_dir = v;
        else if (k == "seeds") {
            for (const std::string& tok : split(v, ',')) {
                const std::string s = trim(tok);
                if (s.empty()) continue;
                c.seeds.push_back(static_cast<std::uint64_t>(parse_count(s, ln)));
            }
        }
        else if (k.rfind("lie.law", 0) == 0) {
            const auto dot = k.find('.', 7);
            if (dot == std::string::npos)
                throw std::runtime_error("config line " + std::to_string(ln) + ": unknown key '" +
                                         k + "'");
            const std::string idx_s = k.substr(7, dot - 7);
            const std::string field = k.substr(dot + 1);
            int idx = 0;
            try {
                idx = std::stoi(idx_s);
            } catch (const std::exception&) {
                throw std::runtime_error("config line " + std::to_string(ln) + ": unknown key '" +
                                         k + "'");
            }
            LawSpec& law = law_map[idx];
            if (field == "kind") law.kind = v;
            else if (field == "mode") law.mode = v;
            else if (field == "l") law.l = v;
            else if (field == "g") law.g = v;
            else if (field == "a") law.a = parse_num(v, ln);
            else if (field == "b") law.b = parse_num(v, ln);
            else
                throw std::runtime_error("config line " + std::to_string(ln) + ": unknown key '" +
                                         k + "'");
        }
        else {
            throw std::runtime_error("config line " + std::to_string(ln) + ": unknown key '" + k +
                                     "'");
        }
    }

    for (auto& [idx, law] : law_map) c.laws.push_back(law);
    if (c.seeds.empty()) c.seeds.push_back(1);

    if (!domain_given[0] || !domain_given[1] || !domain_given[2]) {
        Domain d = default_domain(c.model_id);
        if (!domain_given[0]) c.domain.x_min = d.x_min;
        if (!domain_given[1]) c.domain.x_max = d.x_max;
        if (!domain_given[2]) c.domain.t_max = d.t_max;
    }
    return c;
}

ExperimentConfig ExperimentConfig::parse_file(const std::filesystem::path& path) {
    return parse(read_file(path));
}

std::string ExperimentConfig::serialize() const {
    std::ostringstream out;
    out << "model.id = " << model_id << "\n";
    if (model_id == "bs") {
        out << "model.r = " << fmt17(rate) << "\n";
        out << "model.sigma = " << fmt17(sigma) << "\n";
        out << "model.strike = " << fmt17(strike) << "\n";
    } else if (model_id == "vasicek") {
        out << "model.alpha = " << fmt17(alpha) << "\n";
        out << "model.beta = " << fmt17(beta) << "\n";
        out << "model.gamma = " << fmt17(gamma) << "\n";
        out << "model.lambda = " << fmt17(lambda) << "\n";
    }
    out << "model.x_min = " << fmt17(domain.x_min) << "\n";
    out << "model.x_max = " << fmt17(domain.x_max) << "\n";
    out << "model.t_max = " << fmt17(domain.t_max) << "\n";
    out << "weights.lambda1 = " << fmt17(weights.pde) << "\n";
    out << "weights.lambda2 = " << fmt17(weights.boundary) << "\n";
    out << "weights.lambda3 = " << fmt17(weights.initial) << "\n";
    out << "weights.lambda4 = " << fmt17(weights.lie) << "\n";
    out << "sampling.interior = " << n_interior << "\n";
    out << "sampling.boundary = " << n_boundary << "\n";
    out << "sampling.initial = " << n_initial << "\n";
    out << "sampling.dist = " << dist << "\n";
    out << "network.hidden_layers = " << hidden_layers << "\n";
    out << "network.width = " << width << "\n";
    out << "train.iterations = " << iterations << "\n";
    out << "train.lr0 = " << fmt17(lr0) << "\n";
    out << "train.decay = " << fmt17(lr_decay) << "\n";
    out << "train.decay_interval = " << decay_interval << "\n";
    out << "train.snapshot_every = " << snapshot_every << "\n";
    out << "train.deterministic = " << (deterministic ? "true" : "false") << "\n";
    out << "train.engine = " << engine << "\n";
    out << "train.threads = " << threads << "\n";
    for (std::size_t i = 0; i < laws.size(); ++i) {
        const std::string p = "lie.law" + std::to_string(i + 1) + ".";
        out << p << "kind = " << laws[i].kind << "\n";
        out << p << "mode = " << laws[i].mode << "\n";
        out << p << "l = " << laws[i].l << "\n";
        out << p << "g = " << laws[i].g << "\n";
        out << p << "a = " << fmt17(laws[i].a) << "\n";
        out << p << "b = " << fmt17(laws[i].b) << "\n";
    }
    out << "test.nx = " << test_nx << "\n";
    out << "test.nt = " << test_nt << "\n";
    out << "output.dir = " << output_dir << "\n";
    out << "seeds = ";
    for (std::size_t i = 0; i < seeds.size(); ++i) out << (i ? "," : "") << seeds[i];
    out << "\n";
    return out.str();
}

void ExperimentConfig::validate() const {
    if (!(weights.pde >= 0 && weights.boundary >= 0 && weights.initial >= 0 && weights.lie >= 0) ||
        !std::isfinite(weights.pde + weights.boundary + weights.initial + weights.lie))
        throw std::runtime_error("config: weights must be finite and non-negative");
    if (hidden_layers < 1 || width < 1)
        throw std::runtime_error("config: network.hidden_layers >= 1 and width >= 1 required");
    if (!(domain.x_min < domain.x_max) || !(domain.t_max > 0))
        throw std::runtime_error("config: domain requires x_min < x_max and t_max > 0");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0))
        throw std::runtime_error("config: train.decay must lie in (0, 1]");
    if (decay_interval < 1) throw std::runtime_error("config: train.decay_interval >= 1");
    if (snapshot_every < 1) throw std::runtime_error("config: train.snapshot_every >= 1");
    if (n_interior < 1 || n_boundary < 1 || n_initial < 1)
        throw std::runtime_error("config: sampling counts must be >= 1");
    if (seeds.empty()) throw std::runtime_error("config: at least one seed required");
    const PdeModel model = make_model();
    for (const ConservationLaw& law : make_laws()) law.validate_for(model);
}

PdeModel ExperimentConfig::make_model() const {
    if (model_id == "bs") return make_black_scholes(rate, sigma, strike, domain);
    if (model_id == "vasicek") return make_vasicek(alpha, beta, gamma, lambda, domain);
    if (model_id == "kdv") return make_kdv(false, domain);
    if (model_id == "kdv_manufactured") return make_kdv(true, domain);
    if (model_id == "maxwellian") return make_maxwellian(domain);
    throw std::runtime_error("unknown model id: " + model_id);
}

std::vector<ConservationLaw> ExperimentConfig::make_laws() const {
    std::vector<ConservationLaw> out;
    for (const LawSpec& spec : laws) {
        LawMode mode;
        if (spec.mode == "consistent") mode = LawMode::Consistent;
        else if (spec.mode == "literal") mode = LawMode::Literal;
        else throw std::runtime_error("law mode must be consistent or literal: " + spec.mode);

        if (spec.kind == "bs_g2")
            out.push_back(make_bs_g2(mode, FreeFunc::parse(spec.l), FreeFunc::parse(spec.g),
                                     spec.a, spec.b));
        else if (spec.kind == "vasicek_g5") out.push_back(make_vasicek_g5(mode));
        else if (spec.kind == "vasicek_g6") out.push_back(make_vasicek_g6(mode));
        else if (spec.kind == "kdv_mass") out.push_back(make_kdv_mass());
        else throw std::runtime_error("unknown law kind: " + spec.kind);
    }
    return out;
}

MlpConfig ExperimentConfig::make_mlp_config(std::uint64_t seed) const {
    MlpConfig mc;
    mc.hidden_layers = hidden_layers;
    mc.width = width;
    mc.seed = seed;
    return mc;
}

TrainConfig ExperimentConfig::make_train_config(std::uint64_t seed) const {
    TrainConfig tc;
    tc.iterations = iterations;
    tc.lr0 = lr0;
    tc.lr_decay = lr_decay;
    tc.decay_interval = decay_interval;
    tc.seed = seed;
    tc.snapshot_every = snapshot_every;
    tc.deterministic = deterministic;
    tc.engine = engine == "tape" ? TrainEngine::Tape : TrainEngine::Batched;
    tc.threads = threads;
    return tc;
}

SampleDist ExperimentConfig::sample_dist() const {
    return dist == "uniform" ? SampleDist::Uniform : SampleDist::Gaussian;
}

}  // namespace lsn
