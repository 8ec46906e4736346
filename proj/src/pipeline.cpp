#include "codeslice/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "codeslice/error.hpp"
#include "codeslice/logging.hpp"
#include "codeslice/query_engine.hpp"
#include "codeslice/util.hpp"

namespace codeslice {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::optional<std::string> lookup_env(const std::function<std::optional<std::string>(const std::string &)> &env,
                                      const std::string &name) {
    if (env) {
        return env(name);
    }
    if (const char *raw = std::getenv(name.c_str())) {
        return std::string(raw);
    }
    return std::nullopt;
}

[[noreturn]] void config_error(const std::string &what) { throw Error(ErrorCode::InvalidConfig, what); }

bool is_zscot(Scheme s) { return s == Scheme::ZSCOT_STAGE1 || s == Scheme::ZSCOT_STAGE2; }

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

void write_json(const std::string &path, const json &j) { write_file_atomic(path, j.dump(2) + "\n"); }

TaskSpec resolved_spec(const PipelineConfig &config) {
    TaskSpec spec = default_task_spec(config.task);
    if (!config.templates.empty()) {
        spec = PromptTemplates::load(config.templates).resolve(spec, config.scheme);
    }
    return spec;
}

std::optional<Language> output_language(const TaskSpec &spec) {
    if (spec.output_modality != Modality::PL || !spec.target_language) {
        return std::nullopt;
    }
    return syntax::require_language(*spec.target_language);
}

} // namespace

// ----------------------------------------------------------------- config

const ProviderConfig &PipelineConfig::active_provider() const {
    if (providers.empty()) {
        config_error("no providers configured");
    }
    if (provider.empty()) {
        return providers.front();
    }
    for (const auto &p : providers) {
        if (p.provider_id == provider) {
            return p;
        }
    }
    throw Error(ErrorCode::UnknownProvider, "provider '" + provider + "' is not configured");
}

std::string PipelineConfig::collected_path() const {
    return collected_manifest.empty() ? (fs::path(output_dir) / "collected.json").string() : collected_manifest;
}

json interpolate_env(const json &j, const std::function<std::optional<std::string>(const std::string &)> &env) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        std::string out;
        std::size_t at = 0;
        while (true) {
            const auto open = s.find("${", at);
            if (open == std::string::npos) {
                out += s.substr(at);
                break;
            }
            const auto close = s.find('}', open + 2);
            if (close == std::string::npos) {
                config_error("unterminated ${ in '" + s + "'");
            }
            out += s.substr(at, open - at);
            const std::string name = s.substr(open + 2, close - open - 2);
            const auto value = lookup_env(env, name);
            if (!value) {
                config_error("environment variable " + name + " is not set");
            }
            out += *value;
            at = close + 1;
        }
        return out;
    }
    if (j.is_object()) {
        json out = json::object();
        for (const auto &[k, v] : j.items()) {
            out[k] = interpolate_env(v, env);
        }
        return out;
    }
    if (j.is_array()) {
        json out = json::array();
        for (const auto &v : j) {
            out.push_back(interpolate_env(v, env));
        }
        return out;
    }
    return j;
}

PipelineConfig config_from_json(const json &j) {
    static const std::set<std::string> known{"task",      "scheme",  "providers", "provider",     "sampling",
                                             "filter",    "metric_weights", "datasets", "proxy_split", "limit",
                                             "example_count", "templates", "cassette", "sweep", "ae",
                                             "output_dir", "seed",    "jobs"};
    if (!j.is_object()) {
        config_error("config must be a JSON object");
    }
    for (const auto &[k, v] : j.items()) {
        if (!known.contains(k)) {
            config_error("unknown config key '" + k + "'");
        }
    }
    PipelineConfig c;
    try {
        if (j.contains("task")) {
            c.task = parse_task_kind(j["task"].get<std::string>());
        }
        if (j.contains("scheme")) {
            c.scheme = parse_scheme(j["scheme"].get<std::string>());
        }
        for (const auto &p : j.value("providers", json::array())) {
            c.providers.push_back(p.get<ProviderConfig>());
        }
        c.provider = j.value("provider", std::string());
        if (j.contains("sampling")) {
            const auto &s = j["sampling"];
            c.sampling.temperature = s.value("temperature", c.sampling.temperature);
            c.sampling.top_p = s.value("top_p", c.sampling.top_p);
            c.sampling.max_tokens = s.value("max_tokens", c.sampling.max_tokens);
            c.sampling.repeats = s.value("repeats", c.sampling.repeats);
        }
        if (j.contains("filter")) {
            const auto &f = j["filter"];
            c.filter_lower = f.value("lower", c.filter_lower);
            c.filter_upper = f.value("upper", c.filter_upper);
            c.strip_fences = f.value("strip_fences", c.strip_fences);
        }
        if (j.contains("metric_weights")) {
            const auto &w = j["metric_weights"];
            c.weights = w.is_string() ? parse_weights(w.get<std::string>()) : w.get<CodeBleuWeights>();
        }
        if (j.contains("datasets")) {
            const auto &d = j["datasets"];
            c.proxy_manifest = d.value("proxy", std::string());
            c.reference_manifest = d.value("reference", std::string());
            c.collected_manifest = d.value("collected", std::string());
        }
        if (j.contains("proxy_split")) {
            c.proxy_split = parse_split(j["proxy_split"].get<std::string>());
        }
        if (j.contains("limit") && !j["limit"].is_null()) {
            c.limit = j["limit"].get<std::int64_t>();
        }
        c.example_count = j.value("example_count", c.example_count);
        c.templates = j.value("templates", std::string());
        if (j.contains("cassette")) {
            const auto &k = j["cassette"];
            c.cassette.path = k.value("path", std::string());
            c.cassette.mode = parse_cassette_mode(k.value("mode", std::string("replay")));
        }
        if (j.contains("sweep")) {
            const auto &s = j["sweep"];
            c.sweep.step = s.value("step", c.sweep.step);
            c.sweep.bodies = s.value("bodies", c.sweep.bodies);
        }
        if (j.contains("ae")) {
            const auto &a = j["ae"];
            c.ae.corpus = a.value("corpus", std::string());
            c.ae.bridge = a.value("bridge", c.ae.bridge);
            c.ae.k = a.value("k", c.ae.k);
            c.ae.budget = a.value("budget", c.ae.budget);
            c.ae.threshold = a.value("threshold", c.ae.threshold);
            c.ae.review_floor = a.value("review_floor", c.ae.review_floor);
            c.ae.repeats = a.value("repeats", c.ae.repeats);
        }
        c.output_dir = j.value("output_dir", c.output_dir);
        c.seed = j.value("seed", c.seed);
        c.jobs = j.value("jobs", c.jobs);
    } catch (const json::exception &e) {
        config_error(std::string("bad config value: ") + e.what());
    } catch (const Error &e) {
        if (e.code() == ErrorCode::InvalidConfig) {
            throw;
        }
        config_error(e.what());
    }
    return c;
}

PipelineConfig load_config(const std::string &path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error &e) {
        config_error(path + ": " + e.what());
    }
    return config_from_json(interpolate_env(j));
}

json to_json(const PipelineConfig &c) {
    json j{{"task", c.task},
           {"scheme", c.scheme},
           {"providers", c.providers},
           {"provider", c.provider},
           {"sampling",
            {{"temperature", c.sampling.temperature},
             {"top_p", c.sampling.top_p},
             {"max_tokens", c.sampling.max_tokens},
             {"repeats", c.sampling.repeats}}},
           {"filter", {{"lower", c.filter_lower}, {"upper", c.filter_upper}, {"strip_fences", c.strip_fences}}},
           {"metric_weights", c.weights},
           {"datasets",
            {{"proxy", c.proxy_manifest}, {"reference", c.reference_manifest}, {"collected", c.collected_manifest}}},
           {"proxy_split", c.proxy_split},
           {"example_count", c.example_count},
           {"templates", c.templates},
           {"cassette", {{"path", c.cassette.path}, {"mode", std::string(to_string(c.cassette.mode))}}},
           {"sweep", {{"step", c.sweep.step}, {"bodies", c.sweep.bodies}}},
           {"ae",
            {{"corpus", c.ae.corpus},
             {"bridge", c.ae.bridge},
             {"k", c.ae.k},
             {"budget", c.ae.budget},
             {"threshold", c.ae.threshold},
             {"review_floor", c.ae.review_floor},
             {"repeats", c.ae.repeats}}},
           {"output_dir", c.output_dir},
           {"seed", c.seed},
           {"jobs", c.jobs}};
    j["limit"] = c.limit ? json(*c.limit) : json(nullptr);
    return j;
}

void validate(const PipelineConfig &c, const std::vector<std::string> &needs) {
    auto needed = [&](const char *what) { return std::find(needs.begin(), needs.end(), what) != needs.end(); };
    const bool networked = needed("proxy") || needed("ae");
    if (networked) {
        std::set<std::string> ids;
        for (const auto &p : c.providers) {
            validate(p);
            if (!ids.insert(p.provider_id).second) {
                config_error("duplicate provider id '" + p.provider_id + "'");
            }
        }
        (void)c.active_provider();
    }
    const auto &s = c.sampling;
    if (!(s.temperature >= 0.0 && s.temperature <= 1.0) || !(s.top_p >= 0.0 && s.top_p <= 1.0)) {
        config_error("temperature and top_p must lie in [0, 1]");
    }
    if (s.max_tokens < 1 || s.max_tokens >= kDefaultContextLimit) {
        config_error("max_tokens must lie in [1, " + std::to_string(kDefaultContextLimit - 1) + "]");
    }
    if (s.repeats < 1) {
        config_error("repeats must be at least 1");
    }
    if (c.filter_lower < 1 || c.filter_lower > c.filter_upper) {
        throw Error(ErrorCode::InvalidBounds, "filter bounds must satisfy 0 < lower <= upper");
    }
    validate(c.weights);
    if (c.jobs < 1) {
        config_error("jobs must be at least 1");
    }
    if (c.limit && *c.limit < 1) {
        config_error("limit must be at least 1");
    }
    if (c.example_count < 1) {
        config_error("example_count must be at least 1");
    }
    if (!c.templates.empty()) {
        (void)PromptTemplates::load(c.templates);
    }
    if (networked) {
        if (c.cassette.mode != CassetteMode::Passthrough && c.cassette.path.empty()) {
            config_error(std::string(to_string(c.cassette.mode)) + " mode needs a cassette path");
        }
        if (c.cassette.mode == CassetteMode::Replay && !fs::exists(c.cassette.path)) {
            config_error("cassette not found: " + c.cassette.path);
        }
        (void)unit_steps(c.sweep.step);
        if (c.sweep.bodies < 1) {
            config_error("sweep.bodies must be at least 1");
        }
    }
    if (needed("proxy")) {
        if (c.proxy_manifest.empty()) {
            config_error("datasets.proxy is required");
        }
        const DatasetStore proxy = DatasetStore::open(c.proxy_manifest);
        (void)proxy.read(ReadPurpose::QueryConstruction, c.proxy_split);
    }
    if (needed("reference")) {
        if (c.reference_manifest.empty()) {
            config_error("datasets.reference is required");
        }
        (void)DatasetStore::open(c.reference_manifest);
    }
    if (needed("ae")) {
        if (c.ae.budget < 1) {
            throw Error(ErrorCode::BadBudget, "ae.budget must be at least 1");
        }
        if (c.ae.k < 1 || c.ae.repeats < 1) {
            config_error("ae.k and ae.repeats must be at least 1");
        }
        if (!(c.ae.threshold > 0.0 && c.ae.threshold <= 100.0) || c.ae.review_floor < 0.0 ||
            c.ae.review_floor > c.ae.threshold) {
            config_error("ae thresholds must satisfy 0 <= review_floor <= threshold <= 100");
        }
        if (c.ae.corpus.empty() || !fs::exists(c.ae.corpus)) {
            config_error("ae.corpus not found: '" + c.ae.corpus + "'");
        }
        if (c.ae.bridge != "mock" && !parse_url(c.ae.bridge)) {
            config_error("ae.bridge must be 'mock' or an http URL");
        }
    }
}

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidConfig:
    case ErrorCode::UnknownProvider:
    case ErrorCode::InvalidBounds:
    case ErrorCode::UnsupportedLanguage:
    case ErrorCode::BadRatios:
    case ErrorCode::BadBudget:
    case ErrorCode::AccessViolation: return 1;
    default: return 2;
    }
}

// ----------------------------------------------------------------- collect

namespace {

struct Services {
    std::unique_ptr<HttplibTransport> own_transport;
    std::unique_ptr<SystemClock> own_clock;
    std::unique_ptr<Cassette> cassette;
    CostLedger ledger;
    std::unique_ptr<Client> client;
};

// Auth is checked before the client exists so a missing token never costs a request.
std::unique_ptr<Services> make_services(const PipelineConfig &config, const Runtime &runtime) {
    auto s = std::make_unique<Services>();
    const auto &provider = config.active_provider();
    if (config.cassette.mode != CassetteMode::Replay && !provider.auth_token_env_var.empty()) {
        const auto token = lookup_env(runtime.env, provider.auth_token_env_var);
        if (!token || token->empty()) {
            throw Error(ErrorCode::AuthFailure, "environment variable " + provider.auth_token_env_var + " is not set");
        }
    }
    Transport *transport = runtime.transport;
    if (transport == nullptr) {
        s->own_transport = std::make_unique<HttplibTransport>();
        transport = s->own_transport.get();
    }
    Clock *clock = runtime.clock;
    if (clock == nullptr) {
        s->own_clock = std::make_unique<SystemClock>();
        clock = s->own_clock.get();
    }
    if (config.cassette.mode == CassetteMode::Record && !config.cassette.path.empty()) {
        const auto parent = fs::path(config.cassette.path).parent_path();
        if (!parent.empty()) {
            fs::create_directories(parent);
        }
    }
    s->cassette = std::make_unique<Cassette>(config.cassette.mode, config.cassette.path);
    ClientOptions options;
    options.jitter_seed = config.seed;
    options.env = runtime.env;
    s->client = std::make_unique<Client>(provider, *transport, *clock, *s->cassette, s->ledger, options);
    return s;
}

struct Exchange {
    LLMResponse response;
    std::optional<std::string> rationale;
};

// Runs task(i) for i in [0, n) on `jobs` threads; the lowest-index failure is rethrown.
template <typename Task>
bool run_pool(std::size_t n, int jobs, const std::atomic<bool> *interrupted, Task task) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex mutex;
    std::map<std::size_t, std::exception_ptr> failures;
    auto worker = [&] {
        while (!stop.load()) {
            if (interrupted != nullptr && interrupted->load()) {
                stop = true;
                break;
            }
            const std::size_t i = next.fetch_add(1);
            if (i >= n) {
                break;
            }
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(mutex);
                failures[i] = std::current_exception();
                stop = true;
            }
        }
    };
    const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto &t : pool) {
            t.join();
        }
    }
    if (!failures.empty()) {
        std::rethrow_exception(failures.begin()->second);
    }
    return interrupted != nullptr && interrupted->load();
}

} // namespace

CollectResult cmd_collect(const PipelineConfig &config, const Runtime &runtime) {
    validate(config, {"proxy"});
    const TaskSpec spec = resolved_spec(config);
    const auto &tokenizer = default_tokenizer();
    const auto budget = prompt_budget(config.sampling.max_tokens);

    const DatasetStore proxy = DatasetStore::open(config.proxy_manifest);
    std::vector<CorpusRecord> sources = proxy.read(ReadPurpose::QueryConstruction, config.proxy_split);
    if (config.limit) {
        sources = sample_records(std::move(sources), static_cast<std::size_t>(*config.limit), config.seed);
    }
    if (sources.empty()) {
        throw Error(ErrorCode::EmptySplit, "proxy split " + std::string(to_string(config.proxy_split)) + " is empty");
    }
    ExamplePool pool;
    pool.task_kind = config.task;
    pool.selection_seed = config.seed;
    if (config.scheme == Scheme::ICQ) {
        for (const auto &r : proxy.read(ReadPurpose::QueryConstruction, config.proxy_split)) {
            pool.entries.push_back({r.body, r.response});
        }
    }

    auto services = make_services(config, runtime);
    Client &client = *services->client;
    const SamplingParams params = config.sampling;
    const auto repeats = static_cast<std::size_t>(params.repeats);
    std::vector<std::vector<std::optional<Exchange>>> results(sources.size(),
                                                              std::vector<std::optional<Exchange>>(repeats));

    auto task = [&](std::size_t i) {
        const std::string &body = sources[i].body;
        try {
            std::optional<Query> query;
            if (config.scheme == Scheme::ZSQ) {
                query = build_zsq(spec, body, tokenizer, budget);
            } else if (config.scheme == Scheme::ICQ) {
                const int want = std::min<int>(config.example_count + 1, static_cast<int>(pool.entries.size()));
                std::vector<ExamplePair> examples;
                for (auto &e : select_examples(pool, want, config.seed + i)) {
                    if (e.input != body && static_cast<int>(examples.size()) < config.example_count) {
                        examples.push_back(std::move(e));
                    }
                }
                query = build_icq_fitting(spec, body, std::move(examples), tokenizer, budget);
            }
            for (std::size_t r = 0; r < repeats; ++r) {
                Exchange ex;
                if (query) {
                    ex.response = client.send_query(*query, params);
                } else {
                    auto cot = run_two_stage_cot(spec, body, params, client, tokenizer, budget);
                    ex.rationale = cot.rationale();
                    ex.response = std::move(cot.answer_response);
                }
                results[i][r] = std::move(ex);
            }
        } catch (Error &e) {
            e.set_phase("collect/send");
            throw;
        }
    };
    const bool interrupted = run_pool(sources.size(), config.jobs, runtime.interrupted, task);

    const auto language = output_language(spec);
    std::vector<FilterItem> items;
    std::vector<std::pair<std::size_t, std::size_t>> origin;
    for (std::size_t i = 0; i < results.size(); ++i) {
        for (std::size_t r = 0; r < repeats; ++r) {
            if (!results[i][r]) {
                continue;
            }
            FilterItem item;
            item.response = results[i][r]->response;
            item.modality = spec.output_modality;
            if (language) {
                item.language = lowercase(std::string(syntax::to_string(*language)));
            }
            if (is_zscot(config.scheme)) {
                item.answer_trigger = spec.cot_answer_trigger;
            }
            items.push_back(std::move(item));
            origin.emplace_back(i, r);
        }
    }
    FilterOptions options;
    options.tokenizer = &tokenizer;
    options.lower = config.filter_lower;
    options.upper = config.filter_upper;
    options.strip_fences = config.strip_fences;

    std::vector<FilterVerdict> verdicts;
    std::vector<CorpusRecord> kept;
    for (std::size_t n = 0; n < items.size(); ++n) {
        const FilterVerdict verdict = check_item(items[n], options);
        verdicts.push_back(verdict);
        if (!verdict.passed) {
            continue;
        }
        const auto [i, r] = origin[n];
        CorpusRecord rec = make_record(config.task, config.scheme, sources[i].body, checked_text(items[n], options));
        rec.provider_id = items[n].response.provider_id;
        rec.params = params;
        rec.filter_verdict = verdict;
        rec.rationale = results[i][r]->rationale;
        kept.push_back(std::move(rec));
    }

    CollectResult out;
    out.manifest_path = config.collected_path();
    out.bodies = static_cast<std::int64_t>(sources.size());
    out.responses = static_cast<std::int64_t>(items.size());
    out.stats = make_stats(verdicts);
    out.interrupted = interrupted;
    const auto dir = fs::path(out.manifest_path).parent_path();
    if (!dir.empty()) {
        fs::create_directories(dir);
    }
    DatasetStore collected = DatasetStore::open_or_create(
        out.manifest_path, "collected-" + lowercase(std::string(to_string(config.task))) + "-" +
                               lowercase(std::string(to_string(config.scheme))),
        DatasetRole::Collected, "provider " + config.active_provider().provider_id);
    out.ingest = collected.ingest(kept);
    out.ledger = services->ledger;

    write_json((dir / "stats.json").string(), json{{"task", config.task},
                                                   {"scheme", config.scheme},
                                                   {"provider", config.active_provider().provider_id},
                                                   {"bodies", out.bodies},
                                                   {"responses", out.responses},
                                                   {"stats", out.stats}});
    write_json((dir / "ledger.json").string(), out.ledger);
    if (interrupted) {
        log::warning("collection interrupted; partial results were saved");
    }
    return out;
}

// ----------------------------------------------------------------- evaluate

EvaluateReport cmd_evaluate(const PipelineConfig &config, const std::string &candidates_manifest,
                            const std::string &references_manifest, const std::string &model_name,
                            bool keep_invalid_references) {
    const TaskSpec spec = default_task_spec(config.task);
    const DatasetStore candidates = DatasetStore::open(candidates_manifest);
    const DatasetStore references = DatasetStore::open(references_manifest);
    std::map<std::string, std::string> by_body;
    for (const auto &r : references.read(ReadPurpose::Evaluation)) {
        by_body.try_emplace(r.body, r.response);
    }
    EvaluateReport report;
    report.model = model_name;
    report.task = config.task;
    const auto language = output_language(spec);
    report.metric = language ? "CodeBLEU" : "BLEU";
    std::vector<double> scores;
    for (const auto &c : candidates.read(ReadPurpose::Evaluation)) {
        const auto ref = by_body.find(c.body);
        if (ref == by_body.end()) {
            continue;
        }
        EvaluateRow row{c.body, c.response, ref->second, std::nullopt, std::nullopt, std::nullopt};
        try {
            if (language) {
                row.codebleu = codebleu(c.response, ref->second, *language, config.weights);
                row.score = row.codebleu->aggregate;
            } else {
                row.score = nl_bleu(c.response, ref->second);
            }
        } catch (const Error &e) {
            if (e.code() != ErrorCode::UnparseableReference && e.code() != ErrorCode::EmptyReference) {
                throw;
            }
            if (!keep_invalid_references) {
                ++report.dropped;
                continue;
            }
            row.score = 0.0;
            row.note = std::string(to_string(e.code()));
        }
        scores.push_back(*row.score);
        report.rows.push_back(std::move(row));
    }
    if (report.rows.empty() && report.dropped == 0) {
        throw Error(ErrorCode::MisalignedCorpora, "no candidate shares a body with the references");
    }
    report.mean = corpus_mean(scores);
    return report;
}

json to_json(const EvaluateReport &r) {
    json rows = json::array();
    for (const auto &row : r.rows) {
        json j{{"body", row.body}, {"candidate", row.candidate}, {"reference", row.reference}};
        j["score"] = row.score ? json(*row.score) : json(nullptr);
        if (row.codebleu) {
            j["codebleu"] = *row.codebleu;
        }
        if (row.note) {
            j["note"] = *row.note;
        }
        rows.push_back(std::move(j));
    }
    return json{{"model", r.model},
                {"task", r.task},
                {"metric", r.metric},
                {"mean", r.mean},
                {"pairs", r.rows.size()},
                {"dropped", r.dropped},
                {"table_row", {{"model", r.model}, {"task", r.task}, {"metric", r.metric}, {"score", r.mean}}},
                {"rows", rows}};
}

// ----------------------------------------------------------------- sweep

SweepGrid cmd_sweep(const PipelineConfig &config, const Runtime &runtime) {
    validate(config, {"proxy"});
    const TaskSpec spec = default_task_spec(config.task);
    const DatasetStore proxy = DatasetStore::open(config.proxy_manifest);
    const auto records = sample_records(proxy.read(ReadPurpose::QueryConstruction, config.proxy_split),
                                        static_cast<std::size_t>(config.sweep.bodies), config.seed);
    std::vector<std::string> bodies;
    std::vector<std::string> references;
    for (const auto &r : records) {
        bodies.push_back(r.body);
        references.push_back(r.response);
    }
    const auto language = output_language(spec);
    const auto weights = config.weights;
    const bool strip = config.strip_fences;
    Scorer scorer = [language, weights, strip](const std::string &candidate, const std::string &reference) {
        if (!language) {
            return nl_bleu(candidate, reference);
        }
        return codebleu(strip ? strip_code_fence(candidate) : candidate, reference, *language, weights).aggregate;
    };
    auto services = make_services(config, runtime);
    const auto steps = unit_steps(config.sweep.step);
    return run_sweep(spec, bodies, references, steps, steps, *services->client, scorer, default_tokenizer(),
                     config.sampling.max_tokens);
}

// ----------------------------------------------------------------- ae

AEReport cmd_ae(const PipelineConfig &config, const Runtime &runtime) {
    validate(config, {"ae"});
    const auto corpus = load_snippets(config.ae.corpus);
    std::unique_ptr<ScorableModel> model;
    if (config.ae.bridge == "mock") {
        model = std::make_unique<MockModel>(corpus.empty() ? Language::Python : corpus.front().language);
    } else {
        auto bridge = std::make_unique<BridgeModel>(config.ae.bridge);
        bridge->health();
        model = std::move(bridge);
    }
    auto services = make_services(config, runtime);
    ClientTarget target(*services->client, default_task_spec(TaskKind::CSum), default_tokenizer(),
                        config.sampling.max_tokens);
    CampaignOptions options;
    options.k = config.ae.k;
    options.budget = config.ae.budget;
    options.verify.repeats = config.ae.repeats;
    options.verify.divergence_threshold = config.ae.threshold;
    options.verify.review_floor = config.ae.review_floor;
    return ae_campaign(corpus, *model, target, options);
}

// ----------------------------------------------------------------- report

Summary cmd_report(const std::vector<std::string> &paths) {
    Summary out;
    out.json = json{{"sections", json::array()}};
    std::ostringstream text;
    for (const auto &path : paths) {
        json j;
        try {
            j = json::parse(read_file(path));
        } catch (const json::parse_error &e) {
            throw Error(ErrorCode::IoFailure, path + " is not JSON: " + e.what());
        }
        json section{{"path", path}};
        text << "== " << path << "\n";
        if (j.contains("stats") || j.contains("failure_rate")) {
            const json &s = j.contains("stats") ? j["stats"] : j;
            const double rate = s.at("failure_rate").get<double>();
            section["kind"] = "stats";
            section["total"] = s.value("total", 0);
            section["rejected"] = s.value("rejected", 0);
            section["failure_rate"] = rate;
            section["failure_rate_text"] = format_percent(rate);
            text << "total: " << section["total"] << "\nrejected: " << section["rejected"]
                 << "\nfailure_rate: " << format_percent(rate) << "\n";
            if (s.contains("breakdown")) {
                section["breakdown"] = s["breakdown"];
                for (const auto &[reason, n] : s["breakdown"].items()) {
                    text << "  " << reason << ": " << n << "\n";
                }
            }
        } else if (j.contains("accounts") && j.contains("pricing")) {
            const CostLedger ledger = j.get<CostLedger>();
            section["kind"] = "ledger";
            section["queries"] = ledger.total_queries();
            section["tokens"] = ledger.total_tokens();
            section["cost"] = ledger.total_cost();
            text << "queries: " << ledger.total_queries() << "\ntokens: " << ledger.total_tokens() << "\n";
            for (const auto &[id, account] : ledger.accounts) {
                text << "  " << id << ": " << account.query_count << " queries, " << account.total_tokens
                     << " tokens, cost " << account.estimated_cost << "\n";
            }
        } else if (j.contains("rows") && j.contains("metric")) {
            section["kind"] = "evaluation";
            section["table_row"] = j.value("table_row", json::object());
            section["mean"] = j.at("mean");
            text << j.value("model", std::string("?")) << " | " << j.at("task").get<std::string>() << " | "
                 << j.at("metric").get<std::string>() << " | " << j.at("mean").get<double>() << "\n";
        } else if (j.contains("cells") && j.contains("grid_mean")) {
            section["kind"] = "sweep";
            section["cells"] = j["cells"].size();
            section["grid_mean"] = j["grid_mean"];
            text << "cells: " << j["cells"].size() << "\ngrid_mean: " << j["grid_mean"].get<double>() << "\n";
            text << "temperature top_p pass/total mean\n";
            for (const auto &c : j["cells"]) {
                text << c.at("temperature").get<double>() << " " << c.at("top_p").get<double>() << " "
                     << c.at("pass_count").get<int>() << "/" << c.at("total").get<int>() << " "
                     << c.at("mean_score").get<double>() << (c.contains("error") ? " (error)" : "") << "\n";
            }
        } else if (j.contains("candidates") && j.contains("counts")) {
            section["kind"] = "ae";
            const auto n = j["candidates"].size();
            section["candidates"] = n;
            if (n == 0) {
                section["status"] = "no candidates";
                text << "no candidates\n";
            } else {
                section["sae_rate"] = j.at("sae_rate");
                section["uae_rate"] = j.at("uae_rate");
                section["sae_rate_text"] = format_percent(j.at("sae_rate").get<double>());
                section["uae_rate_text"] = format_percent(j.at("uae_rate").get<double>());
                text << "candidates: " << n << "\nsae_rate: " << section["sae_rate_text"].get<std::string>()
                     << "\nuae_rate: " << section["uae_rate_text"].get<std::string>() << "\n";
            }
            if (j.contains("aborted")) {
                section["aborted"] = j["aborted"];
                text << "aborted: " << j["aborted"].get<std::string>() << "\n";
            }
        } else {
            throw Error(ErrorCode::SchemaMismatch, path + " is not a stats, ledger, evaluation, sweep or AE report");
        }
        out.json["sections"].push_back(std::move(section));
    }
    out.text = text.str();
    return out;
}

} // namespace codeslice
