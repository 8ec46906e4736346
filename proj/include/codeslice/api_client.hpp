#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "codeslice/query_engine.hpp"
#include "codeslice/rng.hpp"
#include "codeslice/tokenizer.hpp"
#include "codeslice/types.hpp"

namespace codeslice {

enum class ApiStyle { Completion, Chat };
std::string_view to_string(ApiStyle style);
ApiStyle parse_api_style(std::string_view text);

struct ProviderConfig {
    std::string provider_id;
    std::string endpoint_url; // full URL of the completions / chat endpoint
    ApiStyle api_style = ApiStyle::Completion;
    std::string model_name;
    std::string auth_token_env_var;
    int requests_per_minute = 60;
    int max_retries = 3;
    int timeout_ms = 60000;
    Pricing pricing;

    friend bool operator==(const ProviderConfig &, const ProviderConfig &) = default;
};

// Throws InvalidConfig (rpm < 1, malformed URL, negative retries, ...).
void validate(const ProviderConfig &config);

struct ParsedUrl {
    std::string scheme; // "http" or "https"
    std::string host;
    int port = 0;
    std::string path; // starts with '/'
};
std::optional<ParsedUrl> parse_url(std::string_view url);

// ----------------------------------------------------------------- time

class Clock {
  public:
    virtual ~Clock() = default;
    virtual std::int64_t now_ms() = 0;
    virtual void sleep_ms(std::int64_t ms) = 0;
};

class SystemClock final : public Clock {
  public:
    std::int64_t now_ms() override;
    void sleep_ms(std::int64_t ms) override;
};

// Test clock: sleeping advances time instantly.
class ManualClock final : public Clock {
  public:
    explicit ManualClock(std::int64_t start_ms = 0) : now_(start_ms) {}
    std::int64_t now_ms() override { return now_; }
    void sleep_ms(std::int64_t ms) override {
        if (ms > 0) {
            now_ += ms;
            slept_ += ms;
        }
    }
    void advance(std::int64_t ms) { now_ += ms; }
    std::int64_t total_slept() const { return slept_; }

  private:
    std::int64_t now_;
    std::int64_t slept_ = 0;
};

// At most `requests_per_minute` acquisitions in any 60-second window.
class RateLimiter {
  public:
    RateLimiter(int requests_per_minute, Clock &clock);
    void acquire();
    const std::vector<std::int64_t> &history() const { return history_; }

  private:
    int rpm_;
    Clock &clock_;
    std::deque<std::int64_t> window_;
    std::vector<std::int64_t> history_;
    std::mutex mutex_;
};

// ----------------------------------------------------------------- transport

struct HttpResult {
    int status = 0; // 0 when no HTTP response arrived
    std::string body;
    bool timed_out = false;
    std::string error; // transport-level failure description
};

class Transport {
  public:
    virtual ~Transport() = default;
    virtual HttpResult post(const std::string &url, const std::map<std::string, std::string> &headers,
                            const std::string &body, int timeout_ms) = 0;
};

class HttplibTransport final : public Transport {
  public:
    HttpResult post(const std::string &url, const std::map<std::string, std::string> &headers,
                    const std::string &body, int timeout_ms) override;
    HttpResult get(const std::string &url, int timeout_ms);
};

// Builds the JSON wire request for a provider.
nlohmann::json wire_request(const ProviderConfig &provider, const std::string &prompt, const SamplingParams &params);
// Parses an OpenAI-compatible response body. Missing usage counts are
// estimated with the default tokenizer. Throws TransportError on malformed input.
LLMResponse parse_wire_response(const ProviderConfig &provider, const std::string &prompt, const std::string &body);

// ----------------------------------------------------------------- cassette

enum class CassetteMode { Record, Replay, Passthrough };
std::string_view to_string(CassetteMode mode);
CassetteMode parse_cassette_mode(std::string_view text);

struct CassetteRequest {
    std::string prompt;
    double temperature = 0.0;
    double top_p = 0.0;
    std::int64_t max_tokens = 0;

    friend bool operator==(const CassetteRequest &, const CassetteRequest &) = default;
};

nlohmann::json to_json(const CassetteRequest &request);
// SHA-256 over the canonical JSON of the request.
std::string request_digest(const CassetteRequest &request);

struct CassetteEntry {
    std::string digest;
    int repeat = 0; // 0 for the first recording of a digest
    bool duplicate = false;
    CassetteRequest request;
    LLMResponse response;
};

// Recorded exchanges. Record appends each entry to the file as it arrives;
// Replay serves the k-th recording of a digest on its k-th lookup and fails
// with ReplayMiss when none is left. Thread-safe.
class Cassette {
  public:
    Cassette(CassetteMode mode, std::string path = {});

    CassetteMode mode() const { return mode_; }
    const std::string &path() const { return path_; }

    std::optional<LLMResponse> next(const CassetteRequest &request);
    const CassetteEntry &record(const CassetteRequest &request, const LLMResponse &response);

    std::vector<CassetteEntry> entries() const;
    void rewind();

  private:
    void check_collision(const CassetteRequest &request, const std::string &digest) const;

    CassetteMode mode_;
    std::string path_;
    std::vector<CassetteEntry> entries_;
    std::map<std::string, std::vector<std::size_t>> by_digest_;
    std::map<std::string, std::size_t> cursor_;
    mutable std::mutex mutex_;
};

nlohmann::json to_json(const CassetteEntry &entry);
CassetteEntry cassette_entry_from_json(const nlohmann::json &j);

// ----------------------------------------------------------------- client

struct ClientOptions {
    std::uint64_t jitter_seed = 0;
    std::function<std::optional<std::string>(const std::string &)> env; // getenv when empty
};

// Sends queries to one provider with rate limiting, retries and the cassette.
class Client {
  public:
    Client(ProviderConfig provider, Transport &transport, Clock &clock, Cassette &cassette, CostLedger &ledger,
           ClientOptions options = {});

    const ProviderConfig &provider() const { return provider_; }

    // Attempts per query are at most 1 + max_retries.
    LLMResponse send_query(const Query &query, const SamplingParams &params);

    std::int64_t network_attempts() const { return attempts_; }
    const RateLimiter &limiter() const { return limiter_; }

  private:
    LLMResponse dispatch(const std::string &prompt, const SamplingParams &params);
    std::int64_t backoff_ms(int attempt);

    ProviderConfig provider_;
    Transport &transport_;
    Clock &clock_;
    Cassette &cassette_;
    CostLedger &ledger_;
    ClientOptions options_;
    RateLimiter limiter_;
    Rng jitter_;
    std::int64_t attempts_ = 0;
    std::mutex mutex_;
};

struct CotResult {
    Query stage1;
    LLMResponse rationale_response;
    Query stage2;
    LLMResponse answer_response;

    const std::string &rationale() const { return rationale_response.text; }
    const std::string &answer() const { return answer_response.text; }
};

// Errors carry phase "stage1" or "stage2".
CotResult run_two_stage_cot(const TaskSpec &spec, std::string_view body, const SamplingParams &params,
                            Client &client, const Tokenizer &tokenizer, std::int64_t budget);

// ----------------------------------------------------------------- sweep

struct SweepCell {
    double temperature = 0.0;
    double top_p = 0.0;
    std::vector<double> scores;
    int pass_count = 0;
    int total = 0;
    double mean_score = 0.0;
    std::optional<std::string> error;
};

struct SweepGrid {
    std::vector<double> temperature_values;
    std::vector<double> top_p_values;
    std::vector<SweepCell> cells; // temperature-major
    double grid_mean = 0.0;

    const SweepCell &cell(std::size_t t, std::size_t p) const { return cells.at(t * top_p_values.size() + p); }
};

// {0, step, 2*step, ..., 1}
std::vector<double> unit_steps(double step);

// Fills pass_count/total/mean_score: a score passes when strictly above the
// mean over every score in the grid.
void apply_pass_rule(SweepGrid &grid);

using Scorer = std::function<double(const std::string &candidate, const std::string &reference)>;

// One zero-shot query per body per cell; transport errors mark the cell and
// the sweep moves on.
SweepGrid run_sweep(const TaskSpec &spec, const std::vector<std::string> &bodies,
                    const std::vector<std::string> &references, const std::vector<double> &temperatures,
                    const std::vector<double> &top_ps, Client &client, const Scorer &scorer,
                    const Tokenizer &tokenizer, std::int64_t max_tokens = kDefaultMaxTokens);

void to_json(nlohmann::json &j, const ProviderConfig &v);
void from_json(const nlohmann::json &j, ProviderConfig &v);
void to_json(nlohmann::json &j, const SweepGrid &v);

} // namespace codeslice
