// Acceptance gate: one line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <functional>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "codeslice/ae_forge.hpp"
#include "codeslice/api_client.hpp"
#include "codeslice/code_metrics.hpp"
#include "codeslice/error.hpp"
#include "codeslice/logging.hpp"
#include "codeslice/query_engine.hpp"
#include "codeslice/response_filter.hpp"
#include "codeslice/util.hpp"
#include "oracles.hpp"
#include "scenario.hpp"
#include "support.hpp"

using namespace codeslice;
using nlohmann::json;

namespace {

struct Failed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string &what) {
    if (!ok) {
        throw Failed(what);
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 3) {
    std::ostringstream s;
    s.precision(digits);
    s << std::fixed << v;
    return s.str();
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

std::string words(int n) {
    std::string s;
    for (int i = 0; i < n; ++i) {
        s += i ? " w" : "w";
    }
    return s;
}

// ----------------------------------------------------------------- criteria

std::string metric_identity() {
    const auto t0 = std::chrono::steady_clock::now();
    int n = 0;
    double worst = 0.0;
    for (const std::string lang : {"python", "java", "csharp"}) {
        const Language language = syntax::require_language(lang);
        for (const auto &code : testing::syntax_corpus(lang, "valid")) {
            const double s = codebleu(code, code, language).aggregate;
            worst = std::max(worst, std::abs(s - 100.0));
            ++n;
        }
    }
    const double took = seconds_since(t0);
    expect(n >= 20, "corpus has only " + std::to_string(n) + " snippets");
    expect(worst <= 1e-9, "max |codebleu(x,x) - 100| = " + sci(worst));
    expect(took < 5.0, "took " + fmt(took) + " s");
    return std::to_string(n) + " snippets, max deviation " + sci(worst) + ", " + fmt(took) + " s";
}

std::string bleu_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(20230917);
    double worst = 0.0;
    const int pairs = 200;
    for (int i = 0; i < pairs; ++i) {
        const auto cand = oracle::random_tokens(rng, 1, 12);
        const auto ref = oracle::random_tokens(rng, 1, 12);
        worst = std::max(worst, std::abs(smoothed_bleu4(cand, ref) - oracle::bleu(cand, ref)));
    }
    const double took = seconds_since(t0);
    expect(worst <= 1e-6, "max deviation " + sci(worst));
    expect(took < 1.0, "took " + fmt(took) + " s");
    return std::to_string(pairs) + " seeded pairs, max deviation " + sci(worst) + ", " + fmt(took) + " s";
}

std::string eq1_conformance() {
    const double a = combine(80, 60, 40, 20).aggregate;
    expect(a == 50.0, "combine(80,60,40,20) = " + std::to_string(a));
    Rng rng(7);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        double w[4];
        double sum = 0.0;
        for (double &x : w) {
            x = 0.05 + rng.unit();
            sum += x;
        }
        for (double &x : w) {
            x /= sum;
        }
        double s[4];
        for (double &x : s) {
            x = 100.0 * rng.unit();
        }
        // move weight between two components; the sum stays 1
        const double eps = 0.01 * rng.unit();
        const auto from = rng.below(4);
        const auto to = (from + 1 + rng.below(3)) % 4;
        double v[4] = {w[0], w[1], w[2], w[3]};
        v[from] -= eps;
        v[to] += eps;
        const double base = combine(s[0], s[1], s[2], s[3], {w[0], w[1], w[2], w[3]}).aggregate;
        const double moved = combine(s[0], s[1], s[2], s[3], {v[0], v[1], v[2], v[3]}).aggregate;
        worst = std::max(worst, std::abs(base - oracle::weighted_sum(w[0], w[1], w[2], w[3], s[0], s[1], s[2], s[3])));
        worst = std::max(worst, std::abs((moved - base) - eps * (s[to] - s[from])));
    }
    expect(worst <= 1e-9, "linearity deviation " + sci(worst));
    return "aggregate 50.0 exactly; 500 perturbations within " + sci(worst);
}

std::string filter_bounds() {
    const auto &t = default_tokenizer();
    expect(t.count(words(257)) == 257, "tokenizer does not count one token per word");
    expect(!check_nl(words(2), t).passed, "2 tokens passed");
    expect(check_nl(words(3), t).passed, "3 tokens failed");
    expect(check_nl(words(256), t).passed, "256 tokens failed");
    expect(!check_nl(words(257), t).passed, "257 tokens passed");
    int valid = 0;
    int broken = 0;
    for (const std::string lang : {"python", "java", "csharp"}) {
        const auto good = testing::syntax_corpus(lang, "valid");
        const auto bad = testing::syntax_corpus(lang, "corrupted");
        expect(bad.size() >= 50, lang + " corrupted corpus has " + std::to_string(bad.size()) + " snippets");
        for (const auto &code : good) {
            expect(check_pl(code, lang).passed, lang + " valid snippet rejected:\n" + code);
            ++valid;
        }
        for (const auto &code : bad) {
            const auto v = check_pl(code, lang);
            expect(!v.passed, lang + " corrupted snippet accepted:\n" + code);
            expect(v.detail && v.detail->line >= 1 && v.detail->column >= 1, lang + " rejection without position");
            ++broken;
        }
    }
    return "2/3/256/257 -> Fail/Pass/Pass/Fail; " + std::to_string(broken) + " corrupted rejected with positions, " +
           std::to_string(valid) + " valid kept";
}

std::string failure_rate() {
    std::vector<FilterItem> items;
    for (int i = 0; i < 8; ++i) {
        FilterItem item;
        item.response.text = i < 2 ? "no" : "Returns the sum of the two arguments.";
        items.push_back(item);
    }
    const auto r = filter_batch(items);
    expect(r.stats.total == 8 && r.stats.rejected == 2, "batch counts wrong");
    expect(format_rate(r.stats.rejected, r.stats.total) == "0.2500", "2/8 rendered " + format_rate(2, 8));
    expect(format_percent(r.stats.failure_rate) == "25.00%", "2/8 percent " + format_percent(r.stats.failure_rate));
    // every k/n up to n = 64 against integer rounding
    int checked = 0;
    for (std::int64_t n = 1; n <= 64; ++n) {
        for (std::int64_t k = 0; k <= n; ++k) {
            std::int64_t q = k * 10000 / n;
            const std::int64_t rem = k * 10000 % n;
            if (2 * rem >= n) {
                ++q;
            }
            char want[32];
            std::snprintf(want, sizeof want, "%lld.%04lld", static_cast<long long>(q / 10000),
                          static_cast<long long>(q % 10000));
            expect(format_rate(k, n) == want, std::to_string(k) + "/" + std::to_string(n) + " -> " + format_rate(k, n));
            ++checked;
        }
    }
    expect(format_percent(0.0462) == "4.62%", "Table-3 style percent");
    return "2/8 -> 0.2500 (25.00%); " + std::to_string(checked) + " rationals exact";
}

std::string budget_safety() {
    Rng rng(4097);
    const auto specs = default_task_specs();
    const auto &tok = default_tokenizer();
    int built = 0;
    int refused = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto &spec = specs[rng.below(3)];
        const auto max_tokens = static_cast<std::int64_t>(1 + rng.below(2048));
        const auto budget = prompt_budget(max_tokens);
        auto text = [&](std::uint64_t max_len) {
            std::string s;
            for (std::uint64_t k = 1 + rng.below(max_len); k > 0; --k) {
                const auto r = rng.below(10);
                s += r < 6 ? static_cast<char>('a' + rng.below(26)) : r < 8 ? ' ' : r == 8 ? '(' : '\n';
            }
            return s;
        };
        const std::string body = text(rng.below(4) == 0 ? 30000 : 3000);
        std::vector<ExamplePair> pool;
        for (std::uint64_t k = 1 + rng.below(5); k > 0; --k) {
            pool.push_back({text(3000), text(1000)});
        }
        try {
            Query q;
            switch (rng.below(3)) {
            case 0: q = build_zsq(spec, body, tok, budget); break;
            case 1: q = build_icq_fitting(spec, body, pool, tok, budget); break;
            default: q = build_zscot_stage2(spec, body, text(2000), tok, budget); break;
            }
            expect(tok.count(q.rendered) + max_tokens <= 4097, "query over the context limit");
            expect(q.rendered.find(body) != std::string::npos, "body truncated");
            ++built;
        } catch (const BudgetExceeded &e) {
            expect(e.estimated() > e.budget(), "refused a query that fit");
            ++refused;
        }
    }
    expect(built > 0 && refused > 0, "property did not exercise both outcomes");
    return "1000 cases: " + std::to_string(built) + " within 4097, " + std::to_string(refused) + " refused";
}

std::string cot_protocol() {
    const std::map<TaskKind, std::string> triggers{{TaskKind::CT, "Therefore, the translated C# code is"},
                                                   {TaskKind::CSum, "Therefore, the summarization is"},
                                                   {TaskKind::CSyn, "Therefore, the Python code is"}};
    for (const auto &[kind, trigger] : triggers) {
        const auto &spec = default_task_spec(kind);
        testing::Harness h;
        SamplingParams params;
        const auto result = run_two_stage_cot(spec, "int add(int a, int b) { return a + b; }", params, h.client,
                                              default_tokenizer(), prompt_budget(params.max_tokens));
        const auto requests = h.transport.requests();
        expect(requests.size() == 2, "expected two requests");
        const auto stage1_answer = result.rationale();
        const auto stage2 = json::parse(requests[1])["prompt"].get<std::string>();
        expect(!stage1_answer.empty() && stage2.find(stage1_answer) != std::string::npos,
               "stage-2 prompt lacks the rationale verbatim");
        expect(stage2.find(trigger) != std::string::npos, "stage-2 prompt lacks '" + trigger + "'");
        expect(stage2.starts_with(json::parse(requests[0])["prompt"].get<std::string>()), "stage 2 does not extend stage 1");
    }
    return "rationale verbatim plus trigger for CT, CSum, CSyn";
}

std::string sweep_shape() {
    const auto steps = unit_steps(0.25);
    expect(steps.size() == 5, "0.25 steps gave " + std::to_string(steps.size()) + " values");
    testing::Harness h;
    const auto grid = run_sweep(default_task_spec(TaskKind::CSum), {"int f() { return 1; }"}, {"Returns one."}, steps,
                                steps, h.client, [](const std::string &c, const std::string &r) { return nl_bleu(c, r); },
                                default_tokenizer());
    expect(grid.cells.size() == 25, std::to_string(grid.cells.size()) + " cells");

    SweepGrid constant;
    constant.cells.resize(4);
    for (auto &c : constant.cells) {
        c.scores = {40.0, 40.0, 40.0};
    }
    apply_pass_rule(constant);
    for (const auto &c : constant.cells) {
        expect(c.pass_count == 0, "a constant score passed its own mean");
    }
    SweepGrid two;
    two.cells.resize(2);
    two.cells[0].scores = {10.0, 30.0};
    two.cells[1].scores = {30.0, 30.0};
    apply_pass_rule(two);
    expect(two.grid_mean == 25.0, "grid mean " + std::to_string(two.grid_mean));
    expect(two.cells[0].pass_count == 1 && two.cells[1].pass_count == 2, "two-valued pass counts wrong");
    return "25 cells; constant -> 0 passes; {10,30},{30,30} -> mean 25, passes 1 and 2";
}

class NoNetwork final : public Transport {
  public:
    HttpResult post(const std::string &, const std::map<std::string, std::string> &, const std::string &,
                    int) override {
        ++calls;
        return HttpResult{0, "", false, "network disabled"};
    }
    int calls = 0;
};

testing::ScenarioRun replay_once(const testing::TempDir &dir, const std::string &proxy, NoNetwork &net) {
    ManualClock clock;
    Runtime runtime;
    runtime.transport = &net;
    runtime.clock = &clock;
    runtime.env = testing::fake_env;
    return testing::run_scenario(
        testing::scenario_config(proxy, testing::fixture(testing::kFrozenCassette), CassetteMode::Replay, dir / "out"),
        runtime);
}

std::string replay_determinism() {
    const auto entries = read_jsonl(testing::fixture(testing::kFrozenCassette)).size();
    expect(entries == 100, "cassette has " + std::to_string(entries) + " exchanges");
    testing::TempDir a;
    testing::TempDir b;
    const auto proxy = testing::make_proxy(a);
    NoNetwork net;
    const auto t0 = std::chrono::steady_clock::now();
    const auto first = replay_once(a, proxy, net);
    const auto second = replay_once(b, proxy, net);
    const double took = seconds_since(t0);
    expect(net.calls == 0, "replay touched the network");
    expect(first.files == second.files, "outputs differ between runs");
    expect(first.files.contains("collected.json") && first.files.contains("train.export.jsonl"),
           "manifest or export missing");
    expect(took < 30.0, "took " + fmt(took) + " s");
    return std::to_string(first.files.size()) + " files byte-identical across two replays of 100 exchanges, " +
           fmt(took) + " s";
}

class ScriptedTarget final : public SummaryTarget {
  public:
    explicit ScriptedTarget(std::vector<std::string> s) : script_(s.begin(), s.end()) {}
    std::string summarize(const std::string &) override {
        if (script_.empty()) {
            throw Error(ErrorCode::TransportError, "script exhausted");
        }
        auto s = script_.front();
        script_.pop_front();
        return s;
    }

  private:
    std::deque<std::string> script_;
};

std::string ae_mechanics() {
    // m+1 generations, hand-computed ranking: gap = 6 - len(token)
    MockModel model(Language::Python, [](const std::string &in) { return static_cast<double>(in.size()); });
    const auto ranking = attention_gap_ranking(model, "total = count + 1");
    expect(model.calls() == 6, std::to_string(model.calls()) + " generations for 5 tokens");
    std::vector<int> order;
    for (const auto &e : ranking.entries) {
        order.push_back(e.index);
    }
    expect(order == std::vector<int>{2, 4, 5, 1, 3}, "ranking differs from the hand computation");

    // Fig. 6 rewrite
    const std::string palindrome =
        "def test(x):\n    if x < 0:\n        return False\n    ba = int(str(x)[::-1])\n    return x == ba\n";
    expect(apply_transform(palindrome, Language::Python, 7, TransformPass::MathConstant) ==
               "def test(x):\n    if (x*x/x) < 0:\n        return False\n    ba = int(str(x)[::-1])\n"
               "    return x == ba\n",
           "palindrome rewrite is not verbatim");

    // every pass: parse-clean and execution-equivalent on the executable fixtures
    json cases = json::array();
    std::map<TransformPass, int> per_pass;
    for (const auto &row : read_jsonl(testing::fixture("ae/executable.jsonl"))) {
        const std::string code = row.at("code");
        json mutants = json::array();
        for (const auto &t : source_tokens(code, Language::Python)) {
            for (auto pass : all_passes()) {
                if (!pass_applies(code, Language::Python, t.index, pass)) {
                    continue;
                }
                const auto out = apply_transform(code, Language::Python, t.index, pass);
                expect(check_pl(out, Language::Python).passed, std::string(to_string(pass)) + " broke the syntax");
                mutants.push_back({{"label", std::string(to_string(pass))}, {"code", out}});
                ++per_pass[pass];
            }
        }
        cases.push_back({{"entry", row.at("entry")}, {"inputs", row.at("inputs")}, {"original", code}, {"mutants", mutants}});
    }
    for (auto pass : all_passes()) {
        expect(per_pass[pass] > 0, std::string(to_string(pass)) + " never applied");
    }
#ifndef CODESLICE_PYTHON
    throw Failed("python3 not available for the execution check");
#else
    testing::TempDir dir;
    write_file_atomic(dir / "cases.json", cases.dump());
    const std::string cmd = std::string(CODESLICE_PYTHON) + " " + CODESLICE_TESTS + "/exec_equivalence.py " +
                            (dir / "cases.json") + " > " + (dir / "result.json");
    expect(std::system(cmd.c_str()) == 0, "execution check did not run");
    const json result = json::parse(read_file(dir / "result.json"));
    expect(result["mismatches"].empty(), "behaviour changed: " + result["mismatches"].dump());
    const int executions = result["checked"].get<int>();
#endif

    // trichotomy
    const std::string same = "returns the sum of all values in the list";
    const std::string far = "opens a socket";
    const std::vector<std::pair<std::vector<std::string>, AEClass>> scripts{
        {{far, far, far}, AEClass::SAE}, {{same, far, same}, AEClass::UAE}, {{same, same, same}, AEClass::NotAE}};
    for (const auto &[script, verdict] : scripts) {
        ScriptedTarget target(script);
        AECandidate c;
        c.original_code = palindrome;
        c.mutated_code = apply_transform(palindrome, Language::Python, 7, TransformPass::MathConstant);
        c.original_summary = same;
        verify_ae(c, target);
        expect(c.verdict == verdict, "3 trials classified " + std::string(to_string(*c.verdict)));
    }
    int mutants = 0;
    for (const auto &[p, n] : per_pass) {
        mutants += n;
    }
    return "6 calls for 5 tokens; x -> (x*x/x) verbatim; " + std::to_string(mutants) + " mutants over 5 passes, " +
           std::to_string(executions) + " executions equal; 3/3, 1/3, 0/3 -> SAE, UAE, NotAE";
}

std::string cost_ledger() {
    testing::TempDir dir;
    NoNetwork net;
    const auto run = replay_once(dir, testing::make_proxy(dir), net);
    std::int64_t tokens = 0;
    std::int64_t queries = 0;
    for (const auto &line : read_jsonl(testing::fixture(testing::kFrozenCassette))) {
        const auto &r = line.at("response");
        tokens += r.at("prompt_tokens").get<std::int64_t>() + r.at("completion_tokens").get<std::int64_t>();
        ++queries;
    }
    const auto p = testing::fake_provider_config().pricing;
    const double cost = static_cast<double>(tokens) / 1000.0 * p.per_1k_tokens + static_cast<double>(queries) * p.per_query;
    const auto &ledger = run.collect.ledger;
    expect(ledger.total_tokens() == tokens, "tokens " + std::to_string(ledger.total_tokens()) + " vs " + std::to_string(tokens));
    expect(ledger.total_queries() == queries, "queries differ");
    expect(ledger.total_cost() == cost, "cost differs");
    return std::to_string(queries) + " queries, " + std::to_string(tokens) + " tokens, cost " + fmt(cost, 6) + " exact";
}

} // namespace

int main() {
    codeslice::log::set_level(codeslice::log::Level::Error);
    const std::vector<std::pair<std::string, std::function<std::string()>>> criteria{
        {"metric identity", metric_identity},
        {"BLEU oracle equivalence", bleu_oracle},
        {"Eq. 1 conformance", eq1_conformance},
        {"filter bounds", filter_bounds},
        {"failure-rate arithmetic", failure_rate},
        {"budget safety", budget_safety},
        {"CoT protocol", cot_protocol},
        {"sweep shape", sweep_shape},
        {"replay determinism", replay_determinism},
        {"AE mechanics", ae_mechanics},
        {"cost ledger", cost_ledger},
    };
    int failed = 0;
    for (const auto &[name, run] : criteria) {
        try {
            const std::string detail = run();
            std::cout << "PASS  " << name << ": " << detail << "\n";
        } catch (const std::exception &e) {
            ++failed;
            std::cout << "FAIL  " << name << ": " << e.what() << "\n";
        }
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
