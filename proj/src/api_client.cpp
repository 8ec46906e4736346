#include "codeslice/api_client.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <thread>

#include "codeslice/error.hpp"
#include "codeslice/logging.hpp"
#include "codeslice/util.hpp"

namespace codeslice {

using nlohmann::json;

std::string_view to_string(ApiStyle style) { return style == ApiStyle::Chat ? "Chat" : "Completion"; }

ApiStyle parse_api_style(std::string_view text) {
    if (text == "Completion" || text == "completion") {
        return ApiStyle::Completion;
    }
    if (text == "Chat" || text == "chat") {
        return ApiStyle::Chat;
    }
    throw Error(ErrorCode::InvalidConfig, "unknown api style '" + std::string(text) + "'");
}

std::optional<ParsedUrl> parse_url(std::string_view url) {
    ParsedUrl out;
    const auto sep = url.find("://");
    if (sep == std::string_view::npos) {
        return std::nullopt;
    }
    out.scheme = std::string(url.substr(0, sep));
    if (out.scheme != "http" && out.scheme != "https") {
        return std::nullopt;
    }
    const std::string rest(url.substr(sep + 3));
    const auto slash = rest.find('/');
    std::string authority = rest.substr(0, slash);
    out.path = slash == std::string::npos ? "/" : rest.substr(slash);
    out.port = out.scheme == "https" ? 443 : 80;
    if (const auto colon = authority.rfind(':'); colon != std::string::npos && authority.front() != '[') {
        const auto port_text = authority.substr(colon + 1);
        if (port_text.empty() || port_text.size() > 5 ||
            !std::all_of(port_text.begin(), port_text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            return std::nullopt;
        }
        out.port = std::stoi(port_text);
        if (out.port < 1 || out.port > 65535) {
            return std::nullopt;
        }
        authority = authority.substr(0, colon);
    }
    if (authority.empty()) {
        return std::nullopt;
    }
    for (char c : authority) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '.' || c == '_' || c == '[' || c == ']' || c == ':';
        if (!ok) {
            return std::nullopt;
        }
    }
    out.host = authority;
    return out;
}

void validate(const ProviderConfig &config) {
    auto bad = [&](const std::string &what) {
        throw Error(ErrorCode::InvalidConfig, "provider '" + config.provider_id + "': " + what);
    };
    if (config.provider_id.empty()) {
        throw Error(ErrorCode::InvalidConfig, "provider_id is empty");
    }
    if (!parse_url(config.endpoint_url)) {
        bad("endpoint_url is not a well-formed http(s) URL: '" + config.endpoint_url + "'");
    }
    if (config.model_name.empty()) {
        bad("model_name is empty");
    }
    if (config.requests_per_minute < 1) {
        bad("requests_per_minute must be >= 1");
    }
    if (config.max_retries < 0 || config.max_retries > 10) {
        bad("max_retries must be within [0, 10]");
    }
    if (config.timeout_ms < 1) {
        bad("timeout_ms must be positive");
    }
    if (config.pricing.per_1k_tokens < 0 || config.pricing.per_query < 0) {
        bad("pricing must be non-negative");
    }
}

// ----------------------------------------------------------------- time

std::int64_t SystemClock::now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
}

void SystemClock::sleep_ms(std::int64_t ms) {
    if (ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }
}

RateLimiter::RateLimiter(int requests_per_minute, Clock &clock) : rpm_(requests_per_minute), clock_(clock) {
    if (rpm_ < 1) {
        throw Error(ErrorCode::InvalidConfig, "requests_per_minute must be >= 1");
    }
}

void RateLimiter::acquire() {
    constexpr std::int64_t kWindow = 60000;
    std::lock_guard lock(mutex_);
    auto now = clock_.now_ms();
    auto expire = [&] {
        while (!window_.empty() && window_.front() <= now - kWindow) {
            window_.pop_front();
        }
    };
    expire();
    while (static_cast<int>(window_.size()) >= rpm_) {
        clock_.sleep_ms(window_.front() + kWindow - now);
        now = clock_.now_ms();
        expire();
    }
    window_.push_back(now);
    history_.push_back(now);
}

// ----------------------------------------------------------------- wire format

json wire_request(const ProviderConfig &provider, const std::string &prompt, const SamplingParams &params) {
    json j;
    j["model"] = provider.model_name;
    if (provider.api_style == ApiStyle::Chat) {
        j["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
    } else {
        j["prompt"] = prompt;
    }
    j["temperature"] = params.temperature;
    j["top_p"] = params.top_p;
    j["max_tokens"] = params.max_tokens;
    return j;
}

LLMResponse parse_wire_response(const ProviderConfig &provider, const std::string &prompt, const std::string &body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error &e) {
        throw Error(ErrorCode::TransportError, std::string("malformed response body: ") + e.what());
    }
    if (j.contains("error")) {
        throw Error(ErrorCode::TransportError, "provider returned an error: " + j["error"].dump());
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
        throw Error(ErrorCode::TransportError, "response has no choices");
    }
    const json &choice = j["choices"][0];
    LLMResponse r;
    r.provider_id = provider.provider_id;
    const json *text = nullptr;
    if (choice.contains("message") && choice["message"].is_object() && choice["message"].contains("content")) {
        text = &choice["message"]["content"];
    } else if (choice.contains("text")) {
        text = &choice["text"];
    }
    if (text == nullptr || !(text->is_string() || text->is_null())) {
        throw Error(ErrorCode::TransportError, "response choice carries no text");
    }
    r.text = text->is_string() ? text->get<std::string>() : std::string();
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
        const auto reason = choice["finish_reason"].get<std::string>();
        if (reason == "length") {
            r.finish_state = FinishState::Truncated;
        } else if (reason == "content_filter") {
            r.finish_state = FinishState::Error;
        }
    }
    const json usage = j.value("usage", json::object());
    if (usage.contains("prompt_tokens") && usage["prompt_tokens"].is_number_integer()) {
        r.prompt_tokens = usage["prompt_tokens"].get<std::int64_t>();
    } else {
        r.prompt_tokens = default_tokenizer().count(prompt);
    }
    if (usage.contains("completion_tokens") && usage["completion_tokens"].is_number_integer()) {
        r.completion_tokens = usage["completion_tokens"].get<std::int64_t>();
    } else {
        r.completion_tokens = default_tokenizer().count(r.text);
    }
    return r;
}

// ----------------------------------------------------------------- cassette

std::string_view to_string(CassetteMode mode) {
    switch (mode) {
    case CassetteMode::Record: return "record";
    case CassetteMode::Replay: return "replay";
    case CassetteMode::Passthrough: return "passthrough";
    }
    return "?";
}

CassetteMode parse_cassette_mode(std::string_view text) {
    if (text == "record" || text == "Record") {
        return CassetteMode::Record;
    }
    if (text == "replay" || text == "Replay") {
        return CassetteMode::Replay;
    }
    if (text == "passthrough" || text == "Passthrough") {
        return CassetteMode::Passthrough;
    }
    throw Error(ErrorCode::InvalidConfig, "unknown cassette mode '" + std::string(text) + "'");
}

json to_json(const CassetteRequest &request) {
    return json{{"prompt", request.prompt},
                {"temperature", request.temperature},
                {"top_p", request.top_p},
                {"max_tokens", request.max_tokens}};
}

std::string request_digest(const CassetteRequest &request) { return sha256_hex(canonical(to_json(request))); }

json to_json(const CassetteEntry &entry) {
    return json{{"digest", entry.digest},
                {"repeat", entry.repeat},
                {"duplicate", entry.duplicate},
                {"request", to_json(entry.request)},
                {"response", entry.response}};
}

CassetteEntry cassette_entry_from_json(const json &j) {
    try {
        CassetteEntry e;
        e.digest = j.at("digest").get<std::string>();
        e.repeat = j.value("repeat", 0);
        e.duplicate = j.value("duplicate", false);
        const json &req = j.at("request");
        e.request.prompt = req.at("prompt").get<std::string>();
        e.request.temperature = req.at("temperature").get<double>();
        e.request.top_p = req.at("top_p").get<double>();
        e.request.max_tokens = req.at("max_tokens").get<std::int64_t>();
        e.response = j.at("response").get<LLMResponse>();
        return e;
    } catch (const json::exception &ex) {
        throw Error(ErrorCode::SchemaMismatch, std::string("bad cassette entry: ") + ex.what());
    }
}

Cassette::Cassette(CassetteMode mode, std::string path) : mode_(mode), path_(std::move(path)) {
    if (mode_ == CassetteMode::Passthrough || path_.empty()) {
        if (mode_ == CassetteMode::Replay && path_.empty()) {
            return; // empty in-memory cassette: every lookup misses
        }
        return;
    }
    if (!std::filesystem::exists(path_)) {
        if (mode_ == CassetteMode::Replay) {
            throw Error(ErrorCode::IoFailure, "cassette not found: " + path_);
        }
        return;
    }
    for (const auto &row : read_jsonl(path_)) {
        CassetteEntry e = cassette_entry_from_json(row);
        if (request_digest(e.request) != e.digest) {
            throw Error(ErrorCode::CassetteCollision, "cassette " + path_ + ": digest does not match its request");
        }
        check_collision(e.request, e.digest);
        auto &group = by_digest_[e.digest];
        e.repeat = static_cast<int>(group.size());
        group.push_back(entries_.size());
        entries_.push_back(std::move(e));
    }
    for (const auto &[digest, group] : by_digest_) {
        for (auto i : group) {
            entries_[i].duplicate = group.size() > 1;
        }
    }
}

void Cassette::check_collision(const CassetteRequest &request, const std::string &digest) const {
    const auto it = by_digest_.find(digest);
    if (it == by_digest_.end() || it->second.empty()) {
        return;
    }
    const auto &first = entries_[it->second.front()].request;
    if (canonical(to_json(first)) != canonical(to_json(request))) {
        throw Error(ErrorCode::CassetteCollision, "two different requests share digest " + digest);
    }
}

std::optional<LLMResponse> Cassette::next(const CassetteRequest &request) {
    const std::string digest = request_digest(request);
    std::lock_guard lock(mutex_);
    const auto it = by_digest_.find(digest);
    if (it == by_digest_.end()) {
        return std::nullopt;
    }
    check_collision(request, digest);
    auto &cursor = cursor_[digest];
    if (cursor >= it->second.size()) {
        return std::nullopt;
    }
    return entries_[it->second[cursor++]].response;
}

const CassetteEntry &Cassette::record(const CassetteRequest &request, const LLMResponse &response) {
    std::lock_guard lock(mutex_);
    CassetteEntry e;
    e.digest = request_digest(request);
    check_collision(request, e.digest);
    auto &group = by_digest_[e.digest];
    e.repeat = static_cast<int>(group.size());
    e.duplicate = !group.empty();
    e.request = request;
    e.response = response;
    if (!path_.empty() && mode_ == CassetteMode::Record) {
        append_jsonl(path_, to_json(e));
    }
    for (auto i : group) {
        entries_[i].duplicate = e.duplicate;
    }
    group.push_back(entries_.size());
    entries_.push_back(std::move(e));
    return entries_.back();
}

std::vector<CassetteEntry> Cassette::entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

void Cassette::rewind() {
    std::lock_guard lock(mutex_);
    cursor_.clear();
}

// ----------------------------------------------------------------- client

Client::Client(ProviderConfig provider, Transport &transport, Clock &clock, Cassette &cassette, CostLedger &ledger,
               ClientOptions options)
    : provider_(std::move(provider)), transport_(transport), clock_(clock), cassette_(cassette), ledger_(ledger),
      options_(std::move(options)), limiter_(std::max(1, provider_.requests_per_minute), clock),
      jitter_(options_.jitter_seed) {
    validate(provider_);
    ledger_.pricing.try_emplace(provider_.provider_id, provider_.pricing);
}

std::int64_t Client::backoff_ms(int attempt) {
    const double base = 1000.0 * std::pow(2.0, attempt);
    const double factor = 0.8 + 0.4 * jitter_.unit();
    return static_cast<std::int64_t>(std::llround(base * factor));
}

LLMResponse Client::dispatch(const std::string &prompt, const SamplingParams &params) {
    std::string token;
    if (!provider_.auth_token_env_var.empty()) {
        std::optional<std::string> value;
        if (options_.env) {
            value = options_.env(provider_.auth_token_env_var);
        } else if (const char *raw = std::getenv(provider_.auth_token_env_var.c_str())) {
            value = std::string(raw);
        }
        if (!value || value->empty()) {
            throw Error(ErrorCode::AuthFailure,
                        "environment variable " + provider_.auth_token_env_var + " is not set");
        }
        token = *value;
    }
    std::map<std::string, std::string> headers{{"Content-Type", "application/json"}};
    if (!token.empty()) {
        headers["Authorization"] = "Bearer " + token;
    }
    const std::string body = wire_request(provider_, prompt, params).dump();

    HttpResult last;
    for (int attempt = 0; attempt <= provider_.max_retries; ++attempt) {
        limiter_.acquire();
        const auto started = clock_.now_ms();
        {
            std::lock_guard lock(mutex_);
            ++attempts_;
        }
        last = transport_.post(provider_.endpoint_url, headers, body, provider_.timeout_ms);
        const auto elapsed = clock_.now_ms() - started;

        if (last.status >= 200 && last.status < 300) {
            LLMResponse r = parse_wire_response(provider_, prompt, last.body);
            r.latency_ms = elapsed;
            return r;
        }
        if (last.status == 401 || last.status == 403) {
            throw Error(ErrorCode::AuthFailure,
                        "provider '" + provider_.provider_id + "' rejected credentials (HTTP " +
                            std::to_string(last.status) + ")");
        }
        const bool transient = last.status == 0 || last.status == 429 || last.status >= 500 || last.timed_out;
        if (!transient) {
            throw Error(ErrorCode::TransportError, "HTTP " + std::to_string(last.status) + ": " +
                                                       last.body.substr(0, 200));
        }
        if (attempt < provider_.max_retries) {
            std::int64_t wait = 0;
            {
                std::lock_guard lock(mutex_);
                wait = backoff_ms(attempt);
            }
            log::debug("retrying " + provider_.provider_id + " in " + std::to_string(wait) + " ms");
            clock_.sleep_ms(wait);
        }
    }
    const std::string tries = std::to_string(provider_.max_retries + 1) + " attempt(s)";
    if (last.status == 429) {
        throw Error(ErrorCode::RateLimited, "rate limited after " + tries);
    }
    if (last.timed_out) {
        throw Error(ErrorCode::Timeout, "timed out after " + tries);
    }
    throw Error(ErrorCode::TransportError,
                "request failed after " + tries + ": " +
                    (last.status ? "HTTP " + std::to_string(last.status) : last.error));
}

LLMResponse Client::send_query(const Query &query, const SamplingParams &raw_params) {
    const SamplingParams params = normalized(raw_params);
    if (query.rendered.empty()) {
        throw Error(ErrorCode::EmptyBody, "query has no rendered prompt");
    }
    const auto budget = prompt_budget(params.max_tokens);
    if (query.estimated_tokens > budget) {
        throw BudgetExceeded(query.estimated_tokens, budget);
    }
    const CassetteRequest request{query.rendered, params.temperature, params.top_p, params.max_tokens};

    LLMResponse response;
    if (cassette_.mode() == CassetteMode::Replay) {
        auto hit = cassette_.next(request);
        if (!hit) {
            throw Error(ErrorCode::ReplayMiss, "no recording for request " + request_digest(request).substr(0, 12));
        }
        response = std::move(*hit);
    } else {
        response = dispatch(query.rendered, params);
        if (cassette_.mode() == CassetteMode::Record) {
            cassette_.record(request, response);
        }
    }
    std::lock_guard lock(mutex_);
    ledger_add_in_place(ledger_, response);
    return response;
}

CotResult run_two_stage_cot(const TaskSpec &spec, std::string_view body, const SamplingParams &params,
                            Client &client, const Tokenizer &tokenizer, std::int64_t budget) {
    CotResult out;
    try {
        out.stage1 = build_zscot_stage1(spec, body, tokenizer, budget);
        out.rationale_response = client.send_query(out.stage1, params);
    } catch (Error &e) {
        e.set_phase("stage1");
        throw;
    }
    try {
        out.stage2 = build_zscot_stage2(spec, body, out.rationale_response.text, tokenizer, budget);
        out.answer_response = client.send_query(out.stage2, params);
    } catch (Error &e) {
        e.set_phase("stage2");
        throw;
    }
    return out;
}

// ----------------------------------------------------------------- sweep

std::vector<double> unit_steps(double step) {
    if (!(step > 0.0) || step > 1.0) {
        throw Error(ErrorCode::InvalidArgument, "step must be within (0, 1]");
    }
    const auto n = static_cast<int>(std::llround(1.0 / step));
    if (std::abs(n * step - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidArgument, "step must divide 1 evenly");
    }
    std::vector<double> out;
    for (int i = 0; i < n; ++i) {
        out.push_back(i * step);
    }
    out.push_back(1.0);
    return out;
}

void apply_pass_rule(SweepGrid &grid) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto &cell : grid.cells) {
        sum = std::accumulate(cell.scores.begin(), cell.scores.end(), sum);
        count += cell.scores.size();
    }
    grid.grid_mean = count ? sum / static_cast<double>(count) : 0.0;
    for (auto &cell : grid.cells) {
        cell.total = static_cast<int>(cell.scores.size());
        cell.pass_count = static_cast<int>(
            std::count_if(cell.scores.begin(), cell.scores.end(), [&](double s) { return s > grid.grid_mean; }));
        cell.mean_score = cell.scores.empty()
                              ? 0.0
                              : std::accumulate(cell.scores.begin(), cell.scores.end(), 0.0) /
                                    static_cast<double>(cell.scores.size());
    }
}

SweepGrid run_sweep(const TaskSpec &spec, const std::vector<std::string> &bodies,
                    const std::vector<std::string> &references, const std::vector<double> &temperatures,
                    const std::vector<double> &top_ps, Client &client, const Scorer &scorer,
                    const Tokenizer &tokenizer, std::int64_t max_tokens) {
    if (bodies.empty()) {
        throw Error(ErrorCode::InvalidArgument, "sweep needs at least one body");
    }
    if (bodies.size() != references.size()) {
        throw Error(ErrorCode::MisalignedCorpora, "sweep has " + std::to_string(bodies.size()) + " bodies but " +
                                                      std::to_string(references.size()) + " references");
    }
    auto in_unit = [](const std::vector<double> &v) {
        return !v.empty() && std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0 && x <= 1.0; });
    };
    if (!in_unit(temperatures) || !in_unit(top_ps)) {
        throw Error(ErrorCode::InvalidArgument, "sweep grid values must be non-empty and within [0, 1]");
    }
    const auto budget = prompt_budget(max_tokens);
    std::vector<Query> queries;
    queries.reserve(bodies.size());
    for (const auto &body : bodies) {
        queries.push_back(build_zsq(spec, body, tokenizer, budget));
    }

    SweepGrid grid;
    grid.temperature_values = temperatures;
    grid.top_p_values = top_ps;
    for (double t : temperatures) {
        for (double p : top_ps) {
            SweepCell cell;
            cell.temperature = t;
            cell.top_p = p;
            const SamplingParams params{t, p, max_tokens, 1};
            try {
                for (std::size_t i = 0; i < queries.size(); ++i) {
                    const LLMResponse r = client.send_query(queries[i], params);
                    cell.scores.push_back(scorer(r.text, references[i]));
                }
            } catch (const Error &e) {
                cell.error = std::string(to_string(e.code())) + ": " + e.what();
                log::warning("sweep cell (" + std::to_string(t) + ", " + std::to_string(p) + ") " + *cell.error);
            }
            grid.cells.push_back(std::move(cell));
        }
    }
    apply_pass_rule(grid);
    return grid;
}

// ----------------------------------------------------------------- json

void to_json(json &j, const ProviderConfig &v) {
    j = json{{"provider_id", v.provider_id},
             {"endpoint_url", v.endpoint_url},
             {"api_style", std::string(to_string(v.api_style))},
             {"model_name", v.model_name},
             {"auth_token_env_var", v.auth_token_env_var},
             {"requests_per_minute", v.requests_per_minute},
             {"max_retries", v.max_retries},
             {"timeout_ms", v.timeout_ms},
             {"pricing", v.pricing}};
}

void from_json(const json &j, ProviderConfig &v) {
    v = ProviderConfig{};
    v.provider_id = j.at("provider_id").get<std::string>();
    v.endpoint_url = j.at("endpoint_url").get<std::string>();
    v.api_style = parse_api_style(j.value("api_style", std::string("Completion")));
    v.model_name = j.at("model_name").get<std::string>();
    v.auth_token_env_var = j.value("auth_token_env_var", std::string());
    v.requests_per_minute = j.value("requests_per_minute", 60);
    v.max_retries = j.value("max_retries", 3);
    v.timeout_ms = j.value("timeout_ms", 60000);
    if (j.contains("pricing")) {
        v.pricing = j["pricing"].get<Pricing>();
    }
}

void to_json(json &j, const SweepGrid &v) {
    j = json::object();
    j["temperature_values"] = v.temperature_values;
    j["top_p_values"] = v.top_p_values;
    j["grid_mean"] = v.grid_mean;
    j["cells"] = json::array();
    for (const auto &c : v.cells) {
        json cell{{"temperature", c.temperature}, {"top_p", c.top_p},   {"pass_count", c.pass_count},
                  {"total", c.total},             {"mean_score", c.mean_score}, {"scores", c.scores}};
        if (c.error) {
            cell["error"] = *c.error;
        }
        j["cells"].push_back(std::move(cell));
    }
}

} // namespace codeslice
