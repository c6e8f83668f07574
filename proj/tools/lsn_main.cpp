// Command-line harness: config-driven training of symmetry-regularised PDE
// networks, checkpoint evaluation, run comparison, option-chain pricing and
// the analytic self-test.

#include <CLI11.hpp>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <glob.h>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include "lsn/config.hpp"
#include "lsn/experiment.hpp"
#include "lsn/io.hpp"
#include "lsn/metrics.hpp"
#include "lsn/validation.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_train(const std::string& config_path, const std::string& out_override) {
    std::optional<fs::path> out;
    if (!out_override.empty()) out = fs::path(out_override);
    const auto outcomes = lsn::run_experiment_file(config_path, out);
    bool ok = true;
    for (const lsn::RunOutcome& oc : outcomes) {
        std::printf("seed %llu  dir %s  %s", static_cast<unsigned long long>(oc.seed),
                    oc.dir.string().c_str(), oc.diverged ? "DIVERGED" : "ok");
        if (std::isfinite(oc.rel_err)) std::printf("  rel_err %.3e", oc.rel_err);
        std::printf("\n");
        ok = ok && !oc.diverged;
    }
    return ok ? 0 : 2;
}

int cmd_eval(const std::string& checkpoint, const std::string& config_path,
             const std::string& field_csv) {
    const lsn::ExperimentConfig config = lsn::ExperimentConfig::parse_file(config_path);
    const lsn::ErrorReport rep = lsn::evaluate_checkpoint(checkpoint, config);
    std::printf("rel_err %.10e\n", rep.relative_error);
    std::printf("rel_err_pointwise %.10e\n", rep.relative_error_pointwise);
    std::printf("cons_err %.10e\n", rep.conservation_error);
    std::printf("max_abs_err %.10e\n", rep.max_abs_error);
    std::printf("grid %zux%zu\n", rep.grid_nx, rep.grid_nt);
    if (!field_csv.empty()) {
        std::ostringstream out;
        lsn::error_field_csv(out, lsn::Mlp::load(checkpoint), config.make_model(), config.test_nx,
                             config.test_nt);
        lsn::atomic_write(field_csv, out.str());
        std::printf("field csv written to %s\n", field_csv.c_str());
    }
    return 0;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& format,
                const std::string& out_path) {
    std::vector<fs::path> paths(dirs.begin(), dirs.end());
    const auto rows = lsn::compare(paths);
    std::ostringstream out;
    if (format == "csv")
        lsn::compare_to_csv(out, rows);
    else
        lsn::compare_to_markdown(out, rows);
    if (out_path.empty())
        std::cout << out.str();
    else
        lsn::atomic_write(out_path, out.str());
    return 0;
}

int cmd_sweep(const std::string& pattern, int jobs) {
    glob_t g{};
    const int rc = glob(pattern.c_str(), 0, nullptr, &g);
    if (rc != 0 && rc != GLOB_NOMATCH) {
        std::fprintf(stderr, "sweep: glob failed on %s\n", pattern.c_str());
        return 1;
    }
    std::vector<std::string> configs;
    for (std::size_t i = 0; i < g.gl_pathc; ++i) configs.push_back(g.gl_pathv[i]);
    globfree(&g);
    if (configs.empty()) {
        std::fprintf(stderr, "sweep: no configs match %s\n", pattern.c_str());
        return 1;
    }

    // run configs in parallel child processes
    std::atomic<std::size_t> next{0};
    std::atomic<int> failures{0};
    const fs::path self = fs::read_symlink("/proc/self/exe");
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= configs.size()) return;
            const std::string cmd = self.string() + " train " + configs[i];
            std::printf("sweep: %s\n", configs[i].c_str());
            if (std::system(cmd.c_str()) != 0) failures.fetch_add(1);
        }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < std::max(1, jobs); ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    std::printf("sweep: %zu configs, %d failed\n", configs.size(), failures.load());
    return failures.load() == 0 ? 0 : 2;
}

int cmd_ingest(const std::string& csv, bool strict, const std::string& out_path) {
    const lsn::IngestResult res = lsn::ingest_option_chain(csv, strict);
    for (const std::string& w : res.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::ostringstream out;
    out << "spot,strike,days,iv,rate,market_price\n";
    char buf[200];
    for (const lsn::OptionQuote& q : res.quotes) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", q.spot, q.strike,
                      q.days, q.iv, q.rate, q.market_price);
        out << buf;
    }
    if (out_path.empty())
        std::cout << out.str();
    else
        lsn::atomic_write(out_path, out.str());
    std::fprintf(stderr, "%zu quotes, %zu rows skipped\n", res.quotes.size(),
                 res.warnings.size());
    return 0;
}

int cmd_predict(const std::string& csv, const std::string& config_path, bool strict,
                const std::string& cache, const std::string& out_path) {
    const lsn::ExperimentConfig policy = lsn::ExperimentConfig::parse_file(config_path);
    const lsn::IngestResult res = lsn::ingest_option_chain(csv, strict);
    for (const std::string& w : res.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    const lsn::PredictResult pred = lsn::predict_prices(res.quotes, policy, cache);
    std::ostringstream out;
    lsn::predictions_to_csv(out, pred);
    if (out_path.empty())
        std::cout << out.str();
    else
        lsn::atomic_write(out_path, out.str());
    std::fprintf(stderr, "%zu quotes priced (%zu groups trained, %zu cached)\n", pred.rows.size(),
                 pred.groups_trained, pred.groups_cached);
    return 0;
}

int cmd_selftest(const std::string& level, const std::string& results_path) {
    const auto results = lsn::run_selftest(level == "full" ? lsn::SelftestLevel::Full
                                                           : lsn::SelftestLevel::Fast);
    lsn::selftest_to_stream(std::cout, results);
    if (!results_path.empty()) {
        std::ostringstream out;
        lsn::selftest_machine_file(out, results);
        lsn::atomic_write(results_path, out.str());
    }
    for (const lsn::CheckResult& r : results)
        if (!r.pass) return 2;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lie-symmetry-regularised PDE network harness"};
    app.require_subcommand(1);

    std::string config_path, out_override, checkpoint, field_csv, format = "md", out_path;
    std::string pattern, chain_csv, cache = "predict_cache", level = "fast", results_path;
    std::vector<std::string> dirs;
    bool strict = false;
    int jobs = 1;

    auto* train = app.add_subcommand("train", "train every seed of a config");
    train->add_option("config", config_path, "experiment config file")->required();
    train->add_option("--out", out_override, "override output.dir");

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint against a config");
    eval->add_option("checkpoint", checkpoint)->required();
    eval->add_option("config", config_path)->required();
    eval->add_option("--field-csv", field_csv, "write per-point error field");

    auto* cmp = app.add_subcommand("compare", "tabulate run summaries");
    cmp->add_option("dirs", dirs, "run directories")->required()->expected(-1);
    cmp->add_option("--format", format, "md or csv");
    cmp->add_option("--out", out_path, "write table to file");

    auto* sweep = app.add_subcommand("sweep", "train every config matching a glob");
    sweep->add_option("glob", pattern)->required();
    sweep->add_option("--jobs", jobs, "parallel processes");

    auto* ingest = app.add_subcommand("ingest", "validate an option-chain CSV");
    ingest->add_option("csv", chain_csv)->required();
    ingest->add_flag("--strict", strict, "abort on the first bad row");
    ingest->add_option("--out", out_path, "write normalised quotes");

    auto* predict = app.add_subcommand("predict", "train per option group and price the chain");
    predict->add_option("csv", chain_csv)->required();
    predict->add_option("--config", config_path, "training policy config")->required();
    predict->add_flag("--strict", strict);
    predict->add_option("--cache", cache, "checkpoint cache directory");
    predict->add_option("--out", out_path, "write prediction table");

    auto* selftest = app.add_subcommand("selftest", "run the analytic check suite");
    selftest->add_option("--level", level, "fast or full");
    selftest->add_option("--results", results_path, "machine-readable results file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) return cmd_train(config_path, out_override);
        if (*eval) return cmd_eval(checkpoint, config_path, field_csv);
        if (*cmp) return cmd_compare(dirs, format, out_path);
        if (*sweep) return cmd_sweep(pattern, jobs);
        if (*ingest) return cmd_ingest(chain_csv, strict, out_path);
        if (*predict) return cmd_predict(chain_csv, config_path, strict, cache, out_path);
        if (*selftest) return cmd_selftest(level, results_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
