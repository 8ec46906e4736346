#pragma once

#include <cstdint>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "codeslice/api_client.hpp"
#include "codeslice/tokenizer.hpp"
#include "codeslice/util.hpp"

namespace testing {

inline std::string fixture(const std::string &relative) { return std::string(CODESLICE_FIXTURES) + "/" + relative; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    TempDir() {
        std::string pattern = (std::filesystem::temp_directory_path() / "codeslice-XXXXXX").string();
        if (::mkdtemp(pattern.data()) == nullptr) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = pattern;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    std::string operator/(const std::string &name) const { return (path_ / name).string(); }
    const std::filesystem::path &path() const { return path_; }

  private:
    std::filesystem::path path_;
};

inline std::uint64_t fnv1a(const std::string &s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h = (h ^ c) * 1099511628211ULL;
    }
    return h;
}

inline codeslice::ProviderConfig fake_provider_config(const std::string &id = "fake") {
    codeslice::ProviderConfig p;
    p.provider_id = id;
    p.endpoint_url = "http://fake.local/v1/completions";
    p.model_name = "fake-1";
    p.auth_token_env_var = "FAKE_TOKEN";
    p.pricing.per_1k_tokens = 0.002;
    p.pricing.per_query = 0.0001;
    return p;
}

inline std::optional<std::string> fake_env(const std::string &name) {
    if (name == "FAKE_TOKEN") {
        return std::string("token");
    }
    return std::nullopt;
}

// Deterministic OpenAI-shaped provider. Answers depend only on the request
// and how many times that exact request was seen. About one answer in eight
// is deliberately too short for the NL filter, and CoT stages are honored.
// Scripted results, when queued, are returned first.
class FakeProvider : public codeslice::Transport {
  public:
    codeslice::HttpResult post(const std::string &url, const std::map<std::string, std::string> &headers,
                               const std::string &body, int timeout_ms) override {
        std::lock_guard lock(mutex_);
        ++calls_;
        requests_.push_back(body);
        last_headers_ = headers;
        last_url_ = url;
        last_timeout_ = timeout_ms;
        if (!script_.empty()) {
            auto r = script_.front();
            script_.pop_front();
            return r;
        }
        const auto request = nlohmann::json::parse(body);
        const std::string prompt = request.contains("prompt")
                                       ? request["prompt"].get<std::string>()
                                       : request["messages"][0]["content"].get<std::string>();
        const std::string key = prompt + "|" + request["temperature"].dump() + "|" + request["top_p"].dump();
        const int seen = seen_[key]++;
        const std::string text = answer(prompt, fnv1a(key + "#" + std::to_string(seen)));
        const auto &tok = codeslice::default_tokenizer();
        nlohmann::json usage{{"prompt_tokens", tok.count(prompt)}, {"completion_tokens", tok.count(text)}};
        usage["total_tokens"] = usage["prompt_tokens"].get<std::int64_t>() + usage["completion_tokens"].get<std::int64_t>();
        nlohmann::json response{{"id", "fake-" + std::to_string(calls_)},
                                {"choices", {{{"index", 0}, {"text", text}, {"finish_reason", "stop"}}}},
                                {"usage", usage}};
        return codeslice::HttpResult{200, response.dump(), false, {}};
    }

    void queue(codeslice::HttpResult r) {
        std::lock_guard lock(mutex_);
        script_.push_back(std::move(r));
    }
    int calls() const {
        std::lock_guard lock(mutex_);
        return calls_;
    }
    std::vector<std::string> requests() const {
        std::lock_guard lock(mutex_);
        return requests_;
    }
    std::map<std::string, std::string> last_headers() const {
        std::lock_guard lock(mutex_);
        return last_headers_;
    }
    std::string last_url() const {
        std::lock_guard lock(mutex_);
        return last_url_;
    }

    static std::string answer(const std::string &prompt, std::uint64_t h) {
        static const char *verbs[] = {"computes", "returns", "checks", "builds", "updates", "counts"};
        static const char *objects[] = {"the result for its inputs", "a value from the arguments",
                                        "whether the input is valid", "a new collection of items",
                                        "the state of the object", "the matching elements"};
        const bool stage1 = prompt.find("Let's think it step by step.") != std::string::npos &&
                            prompt.find("Therefore,") == std::string::npos;
        if (stage1) {
            return "First it reads the arguments. Then it " + std::string(verbs[h % 6]) + " " + objects[(h / 6) % 6] +
                   ".";
        }
        std::string sentence = h % 8 == 0 ? std::string("Done.")
                                          : "This code " + std::string(verbs[h % 6]) + " " + objects[(h / 6) % 6] + ".";
        if (prompt.find("Therefore, the summarization is") != std::string::npos) {
            return "Therefore, the summarization is " + sentence;
        }
        if (prompt.find("Python") != std::string::npos) {
            return h % 8 == 0 ? "def f(x:\n    return x\n" : "```python\ndef f(x):\n    return x + " + std::to_string(h % 10) + "\n```";
        }
        if (prompt.find("C# code") != std::string::npos) {
            return h % 8 == 0 ? "public int F(int x) { return x + ; }"
                              : "public int F(int x) { return x + " + std::to_string(h % 10) + "; }";
        }
        return sentence;
    }

  private:
    mutable std::mutex mutex_;
    int calls_ = 0;
    std::vector<std::string> requests_;
    std::map<std::string, int> seen_;
    std::deque<codeslice::HttpResult> script_;
    std::map<std::string, std::string> last_headers_;
    std::string last_url_;
    int last_timeout_ = 0;
};

// A Client wired to a FakeProvider, a manual clock and its own cassette.
struct Harness {
    explicit Harness(codeslice::CassetteMode mode = codeslice::CassetteMode::Passthrough, std::string path = {},
                     codeslice::ProviderConfig provider = fake_provider_config())
        : cassette(mode, std::move(path)),
          client(std::move(provider), transport, clock, cassette, ledger, codeslice::ClientOptions{5, fake_env}) {}

    FakeProvider transport;
    codeslice::ManualClock clock;
    codeslice::Cassette cassette;
    codeslice::CostLedger ledger;
    codeslice::Client client;
};

// Snippets from tests/fixtures/syntax/<lang>_<kind>.jsonl.
inline std::vector<std::string> syntax_corpus(const std::string &lang, const std::string &kind) {
    std::vector<std::string> out;
    for (const auto &row : codeslice::read_jsonl(fixture("syntax/" + lang + "_" + kind + ".jsonl"))) {
        out.push_back(row.at("code").get<std::string>());
    }
    return out;
}

} // namespace testing
