#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lsn/config.hpp"
#include "lsn/metrics.hpp"

namespace lsn {

/// Flat key = value summary written into every run directory.
struct RunSummary {
    std::map<std::string, std::string> fields;

    std::string get(const std::string& key) const;
    double get_num(const std::string& key) const;
    bool has(const std::string& key) const;

    std::string serialize() const;
    static RunSummary parse(const std::string& text);
    static RunSummary load(const std::filesystem::path& path);
};

struct RunOutcome {
    std::filesystem::path dir;
    std::uint64_t seed = 0;
    bool diverged = false;
    double rel_err = std::numeric_limits<double>::quiet_NaN();
    double cons_err = std::numeric_limits<double>::quiet_NaN();
};

/// Trains every seed of the config; each run directory receives exactly
/// {config.cfg, history.csv, checkpoint.txt, summary.txt}, written atomically.
std::vector<RunOutcome> run_experiment(const ExperimentConfig& config,
                                       const std::string& config_text,
                                       const std::filesystem::path& out_root);
std::vector<RunOutcome> run_experiment_file(const std::filesystem::path& config_path,
                                            std::optional<std::filesystem::path> out_override = {});

/// Evaluate a checkpoint against a config's model/test grid.
ErrorReport evaluate_checkpoint(const std::filesystem::path& checkpoint,
                                const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Comparison tables
// ---------------------------------------------------------------------------

struct CompareRow {
    std::string label;          // config id
    std::string params;         // model parameters, human readable
    std::size_t runs = 0;
    double rel_err_median = 0;
    double cons_err_median = 0;
    bool baseline = false;                  // lambda4 == 0 or no laws
    std::optional<double> factor;           // baseline error / this error
};

/// Pure function of the run summaries: groups run dirs by config id, reports
/// the median error across seeds, and pairs every method group against the
/// matching baseline group (same model/sampling/network/schedule, zero Lie
/// weight) to compute improvement factors.
std::vector<CompareRow> compare(const std::vector<std::filesystem::path>& run_dirs);

void compare_to_markdown(std::ostream& out, const std::vector<CompareRow>& rows);
void compare_to_csv(std::ostream& out, const std::vector<CompareRow>& rows);

// ---------------------------------------------------------------------------
// Option-chain ingestion and pricing
// ---------------------------------------------------------------------------

struct OptionQuote {
    double spot = 0, strike = 0, days = 0, iv = 0, rate = 0, market_price = 0;
};

struct IngestResult {
    std::vector<OptionQuote> quotes;
    std::vector<std::string> warnings;  // skipped-row diagnostics (lenient mode)
};

/// CSV with header columns spot,strike,days,iv,rate,market_price in any
/// order. Strict mode throws on the first bad row naming its line; otherwise
/// bad rows are skipped and reported in warnings.
IngestResult ingest_option_chain(const std::filesystem::path& csv_path, bool strict);

struct PredictionRow {
    OptionQuote quote;
    double predicted = 0;
    double closed_form = 0;
    double abs_gap = 0, rel_gap = 0;
    bool in_domain = true;
};

struct PredictResult {
    std::vector<PredictionRow> rows;
    std::size_t groups_trained = 0, groups_cached = 0;
};

/// Groups quotes by (strike, iv, rate, expiry), trains (or loads a cached)
/// network per group on Black-Scholes with tau = days/365 and a domain
/// covering the group's spot range with a 20% margin, then prices each quote.
PredictResult predict_prices(const std::vector<OptionQuote>& quotes,
                             const ExperimentConfig& policy,
                             const std::filesystem::path& cache_dir);

void predictions_to_csv(std::ostream& out, const PredictResult& result);

}  // namespace lsn
