#include "lsn/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "lsn/io.hpp"
#include "lsn/rng.hpp"

namespace lsn {

namespace fs = std::filesystem;

namespace {
std::string model_params_label(const ExperimentConfig& c) {
    char buf[160];
    if (c.model_id == "bs")
        std::snprintf(buf, sizeof buf, "r=%g sigma=%g decay=%g", c.rate, c.sigma, c.lr_decay);
    else if (c.model_id == "vasicek")
        std::snprintf(buf, sizeof buf, "alpha=%g beta=%g gamma=%g lambda=%g", c.alpha, c.beta,
                      c.gamma, c.lambda);
    else
        std::snprintf(buf, sizeof buf, "%s", c.model_id.c_str());
    return buf;
}
}  // namespace

// ---------------------------------------------------------------------------
// RunSummary
// ---------------------------------------------------------------------------

std::string RunSummary::get(const std::string& key) const {
    const auto it = fields.find(key);
    if (it == fields.end()) throw std::runtime_error("summary: missing field " + key);
    return it->second;
}

double RunSummary::get_num(const std::string& key) const { return std::stod(get(key)); }

bool RunSummary::has(const std::string& key) const { return fields.count(key) > 0; }

std::string RunSummary::serialize() const {
    std::ostringstream out;
    for (const auto& [k, v] : fields) out << k << " = " << v << "\n";
    return out.str();
}

RunSummary RunSummary::parse(const std::string& text) {
    RunSummary s;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) throw std::runtime_error("summary: expected key = value");
        s.fields[trim(stripped.substr(0, eq))] = trim(stripped.substr(eq + 1));
    }
    return s;
}

RunSummary RunSummary::load(const fs::path& path) { return parse(read_file(path)); }

// ---------------------------------------------------------------------------
// run_experiment
// ---------------------------------------------------------------------------

namespace {

std::string pair_key_of(const ExperimentConfig& c) {
    // everything except weights, laws, seeds and output: groups a method run
    // with its baseline
    std::ostringstream s;
    s << c.model_id << '|' << fmt17(c.rate) << '|' << fmt17(c.sigma) << '|' << fmt17(c.strike)
      << '|' << fmt17(c.alpha) << '|' << fmt17(c.beta) << '|' << fmt17(c.gamma) << '|'
      << fmt17(c.lambda) << '|' << fmt17(c.domain.x_min) << '|' << fmt17(c.domain.x_max) << '|'
      << fmt17(c.domain.t_max) << '|' << c.n_interior << '|' << c.n_boundary << '|' << c.n_initial
      << '|' << c.dist << '|' << c.hidden_layers << '|' << c.width << '|' << c.iterations << '|'
      << fmt17(c.lr0) << '|' << fmt17(c.lr_decay) << '|' << c.decay_interval;
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016zx", std::hash<std::string>{}(s.str()));
    return buf;
}

std::string history_to_string(const TrainHistory& h) {
    std::ostringstream out;
    h.to_csv(out);
    return out.str();
}

std::string checkpoint_to_string(const Mlp& mlp) {
    std::ostringstream out;
    out << "lsn-checkpoint 1\n";
    out << "hidden_layers " << mlp.config().hidden_layers << "\n";
    out << "width " << mlp.config().width << "\n";
    out << "seed " << mlp.config().seed << "\n";
    out << "params " << mlp.param_count() << "\n";
    for (double p : mlp.params()) out << fmt17(p) << "\n";
    return out.str();
}

}  // namespace

std::vector<RunOutcome> run_experiment(const ExperimentConfig& config,
                                       const std::string& config_text,
                                       const fs::path& out_root) {
    config.validate();
    const PdeModel model = config.make_model();
    const std::vector<ConservationLaw> laws = config.make_laws();
    const std::vector<Point> grid = test_grid(model.domain, config.test_nx, config.test_nt);

    std::vector<RunOutcome> outcomes;
    for (std::uint64_t seed : config.seeds) {
        const fs::path dir = out_root / ("seed_" + std::to_string(seed));
        fs::create_directories(dir);

        const CollocationSet data =
            make_collocation(model.domain, config.n_interior, config.n_boundary, config.n_initial,
                             config.sample_dist(), derive_seed(seed, 7001));
        const Mlp init = Mlp::init(config.make_mlp_config(seed));
        const auto t0 = std::chrono::steady_clock::now();
        TrainResult result =
            train(init, model, laws, config.weights, data, config.make_train_config(seed), grid);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        atomic_write(dir / "config.cfg", config_text);
        atomic_write(dir / "history.csv", history_to_string(result.history));
        atomic_write(dir / "checkpoint.txt", checkpoint_to_string(result.mlp));

        RunSummary summary;
        summary.fields["config_id"] = out_root.filename().string();
        summary.fields["pair_key"] = pair_key_of(config);
        summary.fields["model"] = config.model_id;
        summary.fields["seed"] = std::to_string(seed);
        summary.fields["lambda4"] = fmt17(config.weights.lie);
        summary.fields["laws"] = std::to_string(config.laws.size());
        summary.fields["steps"] = std::to_string(result.steps_completed);
        summary.fields["diverged"] = result.diverged ? "true" : "false";
        if (result.diverged) summary.fields["diagnostic"] = result.diagnostic;
        summary.fields["wall_seconds"] = fmt17(wall);
        summary.fields["params"] = model_params_label(config);
        if (!result.history.rows.empty()) {
            const SnapshotRow& last = result.history.rows.back();
            summary.fields["l_pde"] = fmt17(last.l_pde);
            summary.fields["l_bc"] = fmt17(last.l_bc);
            summary.fields["l_ic"] = fmt17(last.l_ic);
            summary.fields["l_lie"] = fmt17(last.l_lie);
            summary.fields["total"] = fmt17(last.total);
            summary.fields["cons_err"] = fmt17(last.cons_err);
            if (std::isfinite(last.rel_err)) summary.fields["rel_err"] = fmt17(last.rel_err);
        }
        atomic_write(dir / "summary.txt", summary.serialize());

        RunOutcome oc;
        oc.dir = dir;
        oc.seed = seed;
        oc.diverged = result.diverged;
        if (summary.has("rel_err")) oc.rel_err = summary.get_num("rel_err");
        if (summary.has("cons_err")) oc.cons_err = summary.get_num("cons_err");
        outcomes.push_back(oc);
    }
    return outcomes;
}

std::vector<RunOutcome> run_experiment_file(const fs::path& config_path,
                                            std::optional<fs::path> out_override) {
    const std::string text = read_file(config_path);
    ExperimentConfig config = ExperimentConfig::parse(text);
    const fs::path root = out_override.value_or(fs::path(config.output_dir));
    return run_experiment(config, text, root);
}

ErrorReport evaluate_checkpoint(const fs::path& checkpoint, const ExperimentConfig& config) {
    const Mlp mlp = Mlp::load(checkpoint);
    return evaluate_on_grid(mlp, config.make_model(), config.make_laws(), config.test_nx,
                            config.test_nt);
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

namespace {
double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace

std::vector<CompareRow> compare(const std::vector<fs::path>& run_dirs) {
    // accept both individual seed dirs and experiment roots holding seed_*/
    std::vector<fs::path> leafs;
    std::vector<std::string> missing;
    for (const fs::path& d : run_dirs) {
        if (fs::exists(d / "summary.txt")) {
            leafs.push_back(d);
            continue;
        }
        bool found = false;
        if (fs::is_directory(d)) {
            for (const auto& e : fs::directory_iterator(d)) {
                if (e.is_directory() && fs::exists(e.path() / "summary.txt")) {
                    leafs.push_back(e.path());
                    found = true;
                }
            }
        }
        if (!found) missing.push_back(d.string());
    }
    if (!missing.empty()) {
        std::string msg = "compare: no summaries under:";
        for (const std::string& m : missing) msg += " " + m;
        throw std::runtime_error(msg);
    }

    struct Group {
        std::string label, pair_key, params;
        bool baseline = false;
        std::vector<double> rel, cons;
    };
    std::map<std::string, Group> groups;
    for (const fs::path& d : leafs) {
        const RunSummary s = RunSummary::load(d / "summary.txt");
        const std::string label = s.get("config_id");
        Group& g = groups[label];
        g.label = label;
        g.pair_key = s.get("pair_key");
        g.params = s.has("params") ? s.get("params") : "";
        g.baseline = s.get_num("lambda4") == 0.0 || s.get("laws") == "0";
        if (s.has("rel_err")) g.rel.push_back(s.get_num("rel_err"));
        if (s.has("cons_err")) g.cons.push_back(s.get_num("cons_err"));
    }

    // baseline medians per pair_key
    std::map<std::string, double> baseline_median;
    for (const auto& [label, g] : groups)
        if (g.baseline && !g.rel.empty()) baseline_median[g.pair_key] = median(g.rel);

    std::vector<CompareRow> rows;
    for (const auto& [label, g] : groups) {
        CompareRow row;
        row.label = g.label;
        row.params = g.params;
        row.runs = g.rel.size();
        row.rel_err_median = g.rel.empty() ? std::numeric_limits<double>::quiet_NaN()
                                           : median(g.rel);
        row.cons_err_median = g.cons.empty() ? std::numeric_limits<double>::quiet_NaN()
                                             : median(g.cons);
        row.baseline = g.baseline;
        const auto it = baseline_median.find(g.pair_key);
        if (!g.baseline && it != baseline_median.end() && row.rel_err_median > 0)
            row.factor = improvement_factor(it->second, row.rel_err_median);
        rows.push_back(row);
    }
    std::sort(rows.begin(), rows.end(),
              [](const CompareRow& a, const CompareRow& b) { return a.label < b.label; });
    return rows;
}

void compare_to_markdown(std::ostream& out, const std::vector<CompareRow>& rows) {
    out << "| config | params | runs | rel test error | conservation error | factor |\n";
    out << "|---|---|---|---|---|---|\n";
    char buf[64];
    for (const CompareRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%.3e", r.rel_err_median);
        out << "| " << r.label << " | " << r.params << " | " << r.runs << " | " << buf << " | ";
        std::snprintf(buf, sizeof buf, "%.3e", r.cons_err_median);
        out << buf << " | " << (r.factor ? format_factor(*r.factor) : std::string("")) << " |\n";
    }
}

void compare_to_csv(std::ostream& out, const std::vector<CompareRow>& rows) {
    out << "config,params,runs,rel_err_median,cons_err_median,factor\n";
    char buf[64];
    for (const CompareRow& r : rows) {
        out << r.label << "," << r.params << "," << r.runs << ",";
        std::snprintf(buf, sizeof buf, "%.10e", r.rel_err_median);
        out << buf << ",";
        std::snprintf(buf, sizeof buf, "%.10e", r.cons_err_median);
        out << buf << "," << (r.factor ? format_factor(*r.factor) : std::string("")) << "\n";
    }
}

// ---------------------------------------------------------------------------
// Option chains
// ---------------------------------------------------------------------------

IngestResult ingest_option_chain(const fs::path& csv_path, bool strict) {
    const std::string text = read_file(csv_path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("option chain: empty file");

    const char* names[6] = {"spot", "strike", "days", "iv", "rate", "market_price"};
    int col[6] = {-1, -1, -1, -1, -1, -1};
    {
        const auto headers = split(trim(line), ',');
        for (std::size_t i = 0; i < headers.size(); ++i) {
            const std::string h = trim(headers[i]);
            for (int k = 0; k < 6; ++k)
                if (h == names[k]) col[k] = static_cast<int>(i);
        }
        for (int k = 0; k < 6; ++k)
            if (col[k] < 0)
                throw std::runtime_error(std::string("option chain: missing column '") + names[k] +
                                         "'");
    }

    IngestResult out;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        auto fail = [&](const std::string& why) {
            const std::string msg = "row " + std::to_string(row) + ": " + why;
            if (strict) throw std::runtime_error("option chain: " + msg);
            out.warnings.push_back(msg);
        };
        double v[6];
        bool ok = true;
        for (int k = 0; k < 6 && ok; ++k) {
            if (static_cast<std::size_t>(col[k]) >= cells.size()) {
                fail("missing cell");
                ok = false;
                break;
            }
            try {
                std::size_t pos = 0;
                const std::string cell = trim(cells[col[k]]);
                v[k] = std::stod(cell, &pos);
                if (pos != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                fail(std::string("non-numeric ") + names[k]);
                ok = false;
            }
        }
        if (!ok) continue;
        OptionQuote q{v[0], v[1], v[2], v[3], v[4], v[5]};
        if (q.spot <= 0 || q.strike <= 0 || q.days <= 0 || q.iv <= 0 || q.rate < 0 ||
            q.market_price <= 0) {
            fail("out-of-range quote");
            continue;
        }
        out.quotes.push_back(q);
    }
    return out;
}

PredictResult predict_prices(const std::vector<OptionQuote>& quotes,
                             const ExperimentConfig& policy, const fs::path& cache_dir) {
    fs::create_directories(cache_dir);
    PredictResult result;

    struct Group {
        double strike, iv, rate, days;
        std::vector<std::size_t> rows;
        double spot_lo = 0, spot_hi = 0;
    };
    std::map<std::string, Group> groups;
    char key[160];
    for (std::size_t i = 0; i < quotes.size(); ++i) {
        const OptionQuote& q = quotes[i];
        std::snprintf(key, sizeof key, "%.9g_%.9g_%.9g_%.9g", q.strike, q.iv, q.rate, q.days);
        auto [it, fresh] = groups.try_emplace(key, Group{q.strike, q.iv, q.rate, q.days, {}, q.spot,
                                                         q.spot});
        it->second.rows.push_back(i);
        it->second.spot_lo = std::min(it->second.spot_lo, q.spot);
        it->second.spot_hi = std::max(it->second.spot_hi, q.spot);
    }

    result.rows.resize(quotes.size());
    for (auto& [k, g] : groups) {
        const double tau = g.days / 365.0;
        const double span = std::max(g.spot_hi - g.spot_lo, 0.05 * g.spot_hi);
        const double margin = 0.2 * span;
        Domain domain{std::max(0.0, g.spot_lo - margin), g.spot_hi + margin, tau};
        const PdeModel model = make_black_scholes(g.rate, g.iv, g.strike, domain);

        const std::uint64_t seed = policy.seeds.front();
        std::snprintf(key, sizeof key, "bs_K%.6g_iv%.6g_r%.6g_tau%.6g_h%d_w%d_it%zu_s%llu.ckpt",
                      g.strike, g.iv, g.rate, tau, policy.hidden_layers, policy.width,
                      policy.iterations, static_cast<unsigned long long>(seed));
        const fs::path ckpt = cache_dir / key;

        Mlp mlp = [&] {
            if (fs::exists(ckpt)) {
                ++result.groups_cached;
                return Mlp::load(ckpt);
            }
            ++result.groups_trained;
            const CollocationSet data =
                make_collocation(domain, policy.n_interior, policy.n_boundary, policy.n_initial,
                                 policy.sample_dist(), derive_seed(seed, 7001));
            const Mlp init = Mlp::init(policy.make_mlp_config(seed));
            TrainResult tr = train(init, model, policy.make_laws(), policy.weights, data,
                                   policy.make_train_config(seed));
            if (tr.diverged) throw std::runtime_error("predict: training diverged for group " + k);
            tr.mlp.save(ckpt);
            return tr.mlp;
        }();

        for (std::size_t i : g.rows) {
            const OptionQuote& q = quotes[i];
            PredictionRow row;
            row.quote = q;
            row.in_domain = q.spot >= domain.x_min && q.spot <= domain.x_max;
            row.predicted = mlp.forward_scalar(q.spot, tau);
            row.closed_form = bs_exact(q.spot, tau, g.strike, g.rate, g.iv);
            row.abs_gap = std::abs(row.predicted - q.market_price);
            row.rel_gap = row.abs_gap / q.market_price;
            result.rows[i] = row;
        }
    }
    return result;
}

void predictions_to_csv(std::ostream& out, const PredictResult& result) {
    out << "spot,strike,days,iv,rate,market_price,predicted,abs_gap,rel_gap,closed_form,in_domain\n";
    char buf[320];
    for (const PredictionRow& r : result.rows) {
        std::snprintf(buf, sizeof buf,
                      "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10e,%.10e,%.10e,%.10e,%d\n",
                      r.quote.spot, r.quote.strike, r.quote.days, r.quote.iv, r.quote.rate,
                      r.quote.market_price, r.predicted, r.abs_gap, r.rel_gap, r.closed_form,
                      r.in_domain ? 1 : 0);
        out << buf;
    }
}

}  // namespace lsn
