#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "codeslice/ae_forge.hpp"
#include "codeslice/api_client.hpp"
#include "codeslice/error.hpp"
#include "codeslice/code_metrics.hpp"
#include "codeslice/dataset_store.hpp"
#include "codeslice/response_filter.hpp"
#include "codeslice/types.hpp"

namespace codeslice {

struct CassetteSettings {
    std::string path;
    CassetteMode mode = CassetteMode::Replay;
};

struct SweepSettings {
    double step = 0.25;
    int bodies = 50;
};

struct AeSettings {
    std::string corpus;
    std::string bridge = "mock"; // "mock" or the bridge base URL
    int k = kDefaultTopK;
    int budget = 90;
    double threshold = 25.0;
    double review_floor = 15.0;
    int repeats = 3;
};

struct PipelineConfig {
    TaskKind task = TaskKind::CSum;
    Scheme scheme = Scheme::ZSQ;
    std::vector<ProviderConfig> providers;
    std::string provider; // active provider id; the first one when empty
    SamplingParams sampling;
    std::int64_t filter_lower = kDefaultNlLower;
    std::int64_t filter_upper = kDefaultNlUpper;
    bool strip_fences = true;
    CodeBleuWeights weights;
    std::string proxy_manifest;
    std::string reference_manifest;
    std::string collected_manifest; // <output_dir>/collected.json when empty
    Split proxy_split = Split::Train;
    std::optional<std::int64_t> limit;
    int example_count = kDefaultExampleCount;
    std::string templates;
    CassetteSettings cassette;
    SweepSettings sweep;
    AeSettings ae;
    std::string output_dir = "out";
    std::uint64_t seed = 0;
    int jobs = 1;

    const ProviderConfig &active_provider() const;
    std::string collected_path() const;
};

// Replaces ${NAME} with the environment value; unknown names throw InvalidConfig.
nlohmann::json interpolate_env(const nlohmann::json &j,
                               const std::function<std::optional<std::string>(const std::string &)> &env = {});

PipelineConfig config_from_json(const nlohmann::json &j);
PipelineConfig load_config(const std::string &path);
nlohmann::json to_json(const PipelineConfig &config);

// Checks everything that can be checked without touching the network.
// `needs` selects which inputs must exist ("proxy", "reference", "ae").
void validate(const PipelineConfig &config, const std::vector<std::string> &needs = {});

// Exit code contract: 1 for usage and configuration errors, 2 otherwise.
int exit_code_for(ErrorCode code);

// Shared services for commands that talk to a provider.
struct Runtime {
    Transport *transport = nullptr; // HttplibTransport when null
    Clock *clock = nullptr;         // SystemClock when null
    std::function<std::optional<std::string>(const std::string &)> env;
    const std::atomic<bool> *interrupted = nullptr;
};

struct CollectResult {
    std::string manifest_path;
    IngestResult ingest;
    FilterStats stats;
    CostLedger ledger;
    std::int64_t bodies = 0;
    std::int64_t responses = 0;
    bool interrupted = false;
};

// Builds queries from the proxy split, sends them, filters the answers and
// ingests the kept pairs. Writes stats.json and ledger.json next to the
// collected manifest.
CollectResult cmd_collect(const PipelineConfig &config, const Runtime &runtime = {});

struct EvaluateRow {
    std::string body;
    std::string candidate;
    std::string reference;
    std::optional<double> score;
    std::optional<CodeBleuReport> codebleu;
    std::optional<std::string> note;
};

struct EvaluateReport {
    std::string model;
    TaskKind task = TaskKind::CSum;
    std::string metric; // "BLEU" or "CodeBLEU"
    std::vector<EvaluateRow> rows;
    std::int64_t dropped = 0;
    double mean = 0.0;
};

// Pairs records by body. Unparseable references are dropped unless
// `keep_invalid_references`, in which case they score 0.
EvaluateReport cmd_evaluate(const PipelineConfig &config, const std::string &candidates_manifest,
                            const std::string &references_manifest, const std::string &model_name = "M_imi",
                            bool keep_invalid_references = false);

nlohmann::json to_json(const EvaluateReport &report);

SweepGrid cmd_sweep(const PipelineConfig &config, const Runtime &runtime = {});

AEReport cmd_ae(const PipelineConfig &config, const Runtime &runtime = {});

struct Summary {
    std::string text;
    nlohmann::json json;
};

// Recognizes stats, ledger, evaluation, sweep and AE report files by shape.
Summary cmd_report(const std::vector<std::string> &paths);

} // namespace codeslice
