#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "codeslice/error.hpp"
#include "codeslice/logging.hpp"
#include "codeslice/util.hpp"

namespace codeslice::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Flags shared by every command; unset ones leave the config untouched.
struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::string> cassette;
    std::optional<std::string> mode;
    bool verbose = false;
    std::optional<std::string> provider;
    std::optional<int> rpm;
    std::optional<double> temperature;
    std::optional<double> top_p;
    std::optional<std::int64_t> max_tokens;
    std::optional<int> repeats;
    std::optional<std::int64_t> limit;
    std::optional<std::string> task;
    std::optional<std::string> scheme;
    std::optional<std::string> output_dir;
};

PipelineConfig resolve(const Overrides &o) {
    PipelineConfig c = o.config.empty() ? PipelineConfig{} : load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    if (o.jobs) c.jobs = *o.jobs;
    if (o.cassette) c.cassette.path = *o.cassette;
    if (o.mode) c.cassette.mode = parse_cassette_mode(*o.mode);
    if (o.provider) c.provider = *o.provider;
    if (o.temperature) c.sampling.temperature = *o.temperature;
    if (o.top_p) c.sampling.top_p = *o.top_p;
    if (o.max_tokens) c.sampling.max_tokens = *o.max_tokens;
    if (o.repeats) c.sampling.repeats = *o.repeats;
    if (o.limit) c.limit = *o.limit;
    if (o.task) c.task = parse_task_kind(*o.task);
    if (o.scheme) c.scheme = parse_scheme(*o.scheme);
    if (o.output_dir) c.output_dir = *o.output_dir;
    if (o.rpm) {
        for (auto &p : c.providers) {
            if (c.provider.empty() || p.provider_id == c.provider) {
                p.requests_per_minute = *o.rpm;
            }
        }
    }
    return c;
}

void write_json_file(const std::string &path, const json &j) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) {
        fs::create_directories(parent);
    }
    write_file_atomic(path, j.dump(2) + "\n");
}

std::vector<double> parse_triple(const std::string &text, const char *what) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(part, &used));
            if (used != part.size()) {
                throw std::invalid_argument(part);
            }
        } catch (const std::exception &) {
            throw Error(ErrorCode::InvalidArgument, std::string(what) + ": '" + text + "' is not a number list");
        }
    }
    if (out.size() != 3) {
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " needs three comma-separated values");
    }
    return out;
}

// A JSONL row is either a bare string or an object with one of the text keys.
std::string row_text(const json &row, const std::string &path, std::size_t line) {
    if (row.is_string()) {
        return row.get<std::string>();
    }
    if (row.is_object()) {
        for (const char *key : {"text", "code", "response", "target"}) {
            if (row.contains(key) && row[key].is_string()) {
                return row[key].get<std::string>();
            }
        }
    }
    throw Error(ErrorCode::SchemaMismatch, path + ": row " + std::to_string(line) + " has no text");
}

std::string fixed(double v, int digits = 2) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

// ----------------------------------------------------------------- filter

struct FilterArgs {
    std::string in, out, rejects, stats, lang, modality = "nl", trigger;
    std::int64_t lower = kDefaultNlLower;
    std::int64_t upper = kDefaultNlUpper;
    bool keep_fences = false;
};

int do_filter(const FilterArgs &a, std::ostream &out) {
    const Modality modality = a.modality == "pl" || a.modality == "PL" ? Modality::PL : Modality::NL;
    if (a.modality != "pl" && a.modality != "PL" && a.modality != "nl" && a.modality != "NL") {
        throw Error(ErrorCode::InvalidArgument, "--modality must be nl or pl");
    }
    if (modality == Modality::PL && a.lang.empty()) {
        throw Error(ErrorCode::InvalidArgument, "--lang is required for --modality pl");
    }
    if (a.lower < 1 || a.lower > a.upper) {
        throw Error(ErrorCode::InvalidBounds, "filter bounds must satisfy 0 < lower <= upper");
    }
    const auto rows = read_jsonl(a.in);
    std::vector<FilterItem> items;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        FilterItem item;
        item.response.text = row_text(rows[i], a.in, i + 1);
        if (rows[i].is_object()) {
            item.response.provider_id = rows[i].value("provider_id", std::string());
        }
        item.modality = modality;
        item.language = a.lang;
        if (!a.trigger.empty()) {
            item.answer_trigger = a.trigger;
        }
        items.push_back(std::move(item));
    }
    FilterOptions options;
    options.lower = a.lower;
    options.upper = a.upper;
    options.strip_fences = !a.keep_fences;
    std::vector<json> kept;
    std::vector<json> rejected;
    std::vector<FilterVerdict> verdicts;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        // One item per batch keeps the never-throws contract per row.
        const FilteredItem f = [&] {
            const FilterResult one = filter_batch({items[i]}, options);
            return one.kept.empty() ? one.rejected.front() : one.kept.front();
        }();
        verdicts.push_back(f.verdict);
        json row = rows[i].is_object() ? rows[i] : json{{"text", rows[i]}};
        row["verdict"] = f.verdict;
        if (f.verdict.passed) {
            row["checked_text"] = checked_text(f.item, options);
            kept.push_back(std::move(row));
        } else {
            rejected.push_back(std::move(row));
        }
    }
    const FilterStats stats = make_stats(verdicts);
    if (!a.out.empty()) {
        write_jsonl(a.out, kept);
    }
    if (!a.rejects.empty()) {
        write_jsonl(a.rejects, rejected);
    }
    if (!a.stats.empty()) {
        write_json_file(a.stats, stats);
    }
    out << "total: " << stats.total << "\nkept: " << kept.size() << "\nrejected: " << stats.rejected
        << "\nfailure_rate: " << format_percent(stats.failure_rate) << "\n";
    for (const auto &[reason, n] : stats.breakdown) {
        out << "  " << to_string(reason) << ": " << n << "\n";
    }
    return 0;
}

// ----------------------------------------------------------------- score

struct ScoreArgs {
    std::string task = "csum", candidates, references, lang, weights, report;
};

int do_score(const ScoreArgs &a, std::ostream &out) {
    const TaskKind task = parse_task_kind(a.task);
    const TaskSpec &spec = default_task_spec(task);
    const CodeBleuWeights weights = a.weights.empty() ? CodeBleuWeights{} : parse_weights(a.weights);
    std::optional<Language> language;
    if (spec.output_modality == Modality::PL) {
        language = syntax::require_language(a.lang.empty() ? *spec.target_language : a.lang);
    }
    const auto cand = read_jsonl(a.candidates);
    const auto refs = read_jsonl(a.references);
    if (cand.size() != refs.size() || cand.empty()) {
        throw Error(ErrorCode::MisalignedCorpora, "candidates have " + std::to_string(cand.size()) +
                                                      " rows, references " + std::to_string(refs.size()));
    }
    json pairs = json::array();
    std::vector<double> scores;
    std::array<std::vector<double>, 4> parts;
    std::int64_t dropped = 0;
    for (std::size_t i = 0; i < cand.size(); ++i) {
        const std::string c = row_text(cand[i], a.candidates, i + 1);
        const std::string r = row_text(refs[i], a.references, i + 1);
        json pair{{"index", i}};
        try {
            if (language) {
                const CodeBleuReport rep = codebleu(c, r, *language, weights);
                pair["codebleu"] = rep;
                pair["score"] = rep.aggregate;
                scores.push_back(rep.aggregate);
                parts[0].push_back(rep.bleu);
                parts[1].push_back(rep.weighted_bleu);
                parts[2].push_back(rep.ast_score);
                if (rep.df_score) {
                    parts[3].push_back(*rep.df_score);
                }
            } else {
                const double s = nl_bleu(c, r);
                pair["score"] = s;
                scores.push_back(s);
            }
        } catch (const Error &e) {
            if (e.code() != ErrorCode::UnparseableReference && e.code() != ErrorCode::EmptyReference) {
                throw;
            }
            pair["error"] = std::string(to_string(e.code()));
            ++dropped;
        }
        pairs.push_back(std::move(pair));
    }
    json report{{"task", task},
                {"metric", language ? "CodeBLEU" : "BLEU"},
                {"pairs", pairs},
                {"scored", scores.size()},
                {"dropped", dropped},
                {"mean", corpus_mean(scores)}};
    if (language) {
        report["weights"] = weights;
        report["means"] = {{"bleu", corpus_mean(parts[0])},
                           {"weighted_bleu", corpus_mean(parts[1])},
                           {"ast", corpus_mean(parts[2])},
                           {"dataflow", parts[3].empty() ? json(nullptr) : json(corpus_mean(parts[3]))}};
    }
    if (!a.report.empty()) {
        write_json_file(a.report, report);
    }
    out << report["metric"].get<std::string>() << " mean: " << fixed(report["mean"].get<double>()) << " over "
        << scores.size() << " pairs";
    if (dropped > 0) {
        out << " (" << dropped << " unscorable)";
    }
    out << "\n";
    return 0;
}

// ----------------------------------------------------------------- dataset

struct DatasetArgs {
    std::string manifest, pairs, task = "csum", role = "proxy", name, source, body_field = "source",
                                      response_field = "target", ratios = "0.8,0.1,0.1", counts, split = "train",
                                      out;
};

void print_manifest(const DatasetStore &store, std::ostream &out) {
    const auto &m = store.manifest();
    out << "name: " << m.name << "\nrole: " << to_string(m.role) << "\nrecords: " << store.size() << "\n";
    for (const auto &[split, n] : m.counts) {
        out << "  " << to_string(split) << ": " << n << "\n";
    }
}

int do_dataset_ingest(const DatasetArgs &a, std::ostream &out) {
    const auto records = import_pairs(a.pairs, parse_task_kind(a.task), a.body_field, a.response_field);
    const auto parent = fs::path(a.manifest).parent_path();
    if (!parent.empty()) {
        fs::create_directories(parent);
    }
    DatasetStore store = DatasetStore::open_or_create(a.manifest, a.name.empty() ? fs::path(a.manifest).stem().string() : a.name,
                                                      parse_role(a.role), a.source.empty() ? a.pairs : a.source);
    const IngestResult r = store.ingest(records);
    out << "added: " << r.added << "\nduplicates: " << r.duplicates << "\n";
    print_manifest(store, out);
    return 0;
}

int do_dataset_split(const DatasetArgs &a, std::uint64_t seed, std::ostream &out) {
    DatasetStore store = DatasetStore::open(a.manifest);
    if (!a.counts.empty()) {
        const auto c = parse_triple(a.counts, "--counts");
        for (double v : c) {
            if (v < 0 || v != static_cast<double>(static_cast<std::int64_t>(v))) {
                throw Error(ErrorCode::BadRatios, "--counts must be non-negative integers");
            }
        }
        store.split_counts(static_cast<std::int64_t>(c[0]), static_cast<std::int64_t>(c[1]),
                           static_cast<std::int64_t>(c[2]), seed);
    } else {
        const auto r = parse_triple(a.ratios, "--ratios");
        store.split(SplitRatios{r[0], r[1], r[2]}, seed);
    }
    print_manifest(store, out);
    return 0;
}

int do_dataset_export(const DatasetArgs &a, std::ostream &out) {
    const DatasetStore store = DatasetStore::open(a.manifest);
    if (a.out.empty()) {
        throw Error(ErrorCode::InvalidArgument, "--out is required");
    }
    const auto n = store.export_finetune(parse_split(a.split), a.out);
    out << "exported: " << n << "\n";
    return 0;
}

int do_dataset_stats(const DatasetArgs &a, std::ostream &out) {
    print_manifest(DatasetStore::open(a.manifest), out);
    return 0;
}

// ----------------------------------------------------------------- report printers

void print_collect(const CollectResult &r, std::ostream &out) {
    out << "bodies: " << r.bodies << "\nresponses: " << r.responses << "\nkept: " << r.ingest.added
        << " (+" << r.ingest.duplicates << " duplicates)\nfailure_rate: " << format_percent(r.stats.failure_rate)
        << "\nqueries: " << r.ledger.total_queries() << "\ntokens: " << r.ledger.total_tokens()
        << "\nmanifest: " << r.manifest_path << "\n";
    if (r.interrupted) {
        out << "interrupted: partial results saved\n";
    }
}

void print_sweep(const SweepGrid &g, std::ostream &out) {
    out << "grid_mean: " << fixed(g.grid_mean) << "\n";
    out << std::left << std::setw(13) << "temperature" << std::setw(7) << "top_p" << std::setw(10) << "pass"
        << "mean\n";
    for (const auto &c : g.cells) {
        out << std::left << std::setw(13) << fixed(c.temperature) << std::setw(7) << fixed(c.top_p) << std::setw(10)
            << (std::to_string(c.pass_count) + "/" + std::to_string(c.total)) << fixed(c.mean_score)
            << (c.error ? "  error: " + *c.error : std::string()) << "\n";
    }
}

void print_ae(const AEReport &r, std::ostream &out) {
    if (r.candidates.empty()) {
        out << "no candidates\n";
    } else {
        out << "candidates: " << r.candidates.size() << "\nSAE: " << r.sae << " (" << format_percent(r.sae_rate())
            << ")\nUAE: " << r.uae << " (" << format_percent(r.uae_rate()) << ")\nNotAE: " << r.not_ae << "\n";
    }
    if (r.aborted) {
        out << "aborted: " << *r.aborted << "\n";
    }
}

} // namespace

int run(const std::vector<std::string> &args, const Runtime &runtime, std::ostream &out, std::ostream &err) {
    CLI::App app{"codeslice: collect, filter and score LLM responses for imitation attacks"};
    app.require_subcommand(1);
    app.fallthrough();

    Overrides o;
    std::uint64_t seed_value = 0;
    int jobs_value = 1;
    std::string mode_value;
    auto *seed_opt = app.add_option("--seed", seed_value, "Seed for every random choice");
    auto *jobs_opt = app.add_option("--jobs", jobs_value, "Worker threads");
    app.add_option("--config", o.config, "Pipeline config (JSON)")->check(CLI::ExistingFile);
    std::string cassette_value;
    auto *cassette_opt = app.add_option("--cassette", cassette_value, "Cassette file");
    auto *mode_opt = app.add_option("--mode", mode_value, "record | replay | passthrough")
                         ->check(CLI::IsMember({"record", "replay", "passthrough"}));
    app.add_flag("--verbose,-v", o.verbose, "Debug logging");

    std::string provider_value;
    int rpm_value = 0;
    int repeats_value = 0;
    double temperature_value = 0;
    double top_p_value = 0;
    std::int64_t max_tokens_value = 0;
    std::int64_t limit_value = 0;
    std::string task_value;
    std::string scheme_value;
    std::string output_dir_value;
    auto add_provider_flags = [&](CLI::App *sub) {
        sub->add_option("--provider,--target-provider", provider_value, "Provider id from the config");
        sub->add_option("--rpm", rpm_value, "Requests per minute");
        sub->add_option("--temperature", temperature_value);
        sub->add_option("--top-p", top_p_value);
        sub->add_option("--max-tokens", max_tokens_value);
        sub->add_option("--repeats", repeats_value, "Queries per body");
    };

    auto *collect = app.add_subcommand("collect", "Query the provider and store the kept responses");
    add_provider_flags(collect);
    collect->add_option("--limit", limit_value, "Sample this many proxy bodies");
    collect->add_option("--task", task_value, "csyn | ct | csum");
    collect->add_option("--scheme", scheme_value, "zsq | icq | zscot");
    collect->add_option("--output-dir", output_dir_value);

    FilterArgs filter_args;
    auto *filter = app.add_subcommand("filter", "Check responses against the NL length or PL syntax rules");
    filter->add_option("--in", filter_args.in)->required()->check(CLI::ExistingFile);
    filter->add_option("--out", filter_args.out);
    filter->add_option("--rejects", filter_args.rejects);
    filter->add_option("--stats", filter_args.stats);
    filter->add_option("--lang", filter_args.lang);
    filter->add_option("--modality", filter_args.modality, "nl | pl");
    filter->add_option("--lower", filter_args.lower);
    filter->add_option("--upper", filter_args.upper);
    filter->add_option("--trigger", filter_args.trigger, "Keep only the text after this answer trigger");
    filter->add_flag("--keep-fences", filter_args.keep_fences);

    ScoreArgs score_args;
    auto *score = app.add_subcommand("score", "BLEU or CodeBLEU between aligned candidate and reference files");
    score->add_option("--task", score_args.task);
    score->add_option("--candidates", score_args.candidates)->required()->check(CLI::ExistingFile);
    score->add_option("--references", score_args.references)->required()->check(CLI::ExistingFile);
    score->add_option("--lang", score_args.lang);
    score->add_option("--weights", score_args.weights, "alpha,beta,gamma,delta");
    score->add_option("--report", score_args.report);

    DatasetArgs ds;
    auto *dataset = app.add_subcommand("dataset", "Manage stored corpora");
    dataset->require_subcommand(1);
    auto *ingest = dataset->add_subcommand("ingest", "Import a JSONL file of pairs");
    auto *split = dataset->add_subcommand("split", "Assign train/valid/test");
    auto *exp = dataset->add_subcommand("export", "Write a fine-tuning file");
    auto *stats = dataset->add_subcommand("stats", "Show the manifest");
    for (auto *sub : {ingest, split, exp, stats}) {
        sub->add_option("--manifest", ds.manifest)->required();
    }
    ingest->add_option("--pairs", ds.pairs)->required()->check(CLI::ExistingFile);
    ingest->add_option("--task", ds.task);
    ingest->add_option("--role", ds.role, "proxy | reference | collected");
    ingest->add_option("--name", ds.name);
    ingest->add_option("--source", ds.source);
    ingest->add_option("--body-field", ds.body_field);
    ingest->add_option("--response-field", ds.response_field);
    split->add_option("--ratios", ds.ratios, "train,valid,test");
    split->add_option("--counts", ds.counts, "train,valid,test record counts");
    exp->add_option("--split", ds.split);
    exp->add_option("--out", ds.out)->required();

    std::string sweep_out;
    auto *sweep = app.add_subcommand("sweep", "Temperature by top_p grid over the proxy corpus");
    add_provider_flags(sweep);
    sweep->add_option("--task", task_value);
    sweep->add_option("--out", sweep_out, "Grid JSON");

    AeSettings ae_flags;
    std::string ae_report;
    auto *ae = app.add_subcommand("ae", "Adversarial example campaigns");
    ae->require_subcommand(1);
    auto *ae_run = ae->add_subcommand("run", "Rank, transform and verify");
    add_provider_flags(ae_run);
    auto *ae_corpus = ae_run->add_option("--corpus", ae_flags.corpus)->check(CLI::ExistingFile);
    auto *ae_bridge = ae_run->add_option("--bridge", ae_flags.bridge, "mock or http://host:port");
    auto *ae_k = ae_run->add_option("--k", ae_flags.k);
    auto *ae_budget = ae_run->add_option("--budget", ae_flags.budget);
    auto *ae_threshold = ae_run->add_option("--threshold", ae_flags.threshold);
    auto *ae_floor = ae_run->add_option("--review-floor", ae_flags.review_floor);
    ae_run->add_option("--report", ae_report, "Report JSON");

    std::vector<std::string> report_paths;
    std::string report_json;
    auto *report = app.add_subcommand("report", "Summarize stats, ledger, evaluation, sweep and AE files");
    report->add_option("paths", report_paths)->required()->check(CLI::ExistingFile);
    report->add_option("--json", report_json, "Write the machine summary here");

    std::string eval_candidates, eval_references, eval_model = "M_imi", eval_out;
    bool keep_invalid = false;
    auto *evaluate = app.add_subcommand("evaluate", "Score a candidate manifest against a reference manifest");
    evaluate->add_option("--candidates", eval_candidates)->required();
    evaluate->add_option("--references", eval_references)->required();
    evaluate->add_option("--model", eval_model);
    evaluate->add_option("--task", task_value);
    evaluate->add_option("--out", eval_out);
    evaluate->add_flag("--keep-invalid-references", keep_invalid);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError &e) {
        std::ostringstream help;
        const int code = app.exit(e, help, help);
        (code == 0 ? out : err) << help.str();
        return code == 0 ? 0 : 1;
    }

    log::set_level(o.verbose ? log::Level::Debug : log::Level::Info);
    auto set = [](auto *opt, auto &target, const auto &value) {
        if (opt->count() > 0) target = value;
    };
    set(seed_opt, o.seed, seed_value);
    set(jobs_opt, o.jobs, jobs_value);
    set(cassette_opt, o.cassette, cassette_value);
    set(mode_opt, o.mode, mode_value);
    auto from = [&](CLI::App *sub) {
        auto opt_set = [&](const char *name) { return sub->get_option_no_throw(name) && sub->get_option(name)->count() > 0; };
        if (opt_set("--provider")) o.provider = provider_value;
        if (opt_set("--rpm")) o.rpm = rpm_value;
        if (opt_set("--temperature")) o.temperature = temperature_value;
        if (opt_set("--top-p")) o.top_p = top_p_value;
        if (opt_set("--max-tokens")) o.max_tokens = max_tokens_value;
        if (opt_set("--repeats")) o.repeats = repeats_value;
        if (opt_set("--limit")) o.limit = limit_value;
        if (opt_set("--task")) o.task = task_value;
        if (opt_set("--scheme")) o.scheme = scheme_value;
        if (opt_set("--output-dir")) o.output_dir = output_dir_value;
    };

    try {
        if (*collect) {
            from(collect);
            print_collect(cmd_collect(resolve(o), runtime), out);
        } else if (*filter) {
            return do_filter(filter_args, out);
        } else if (*score) {
            return do_score(score_args, out);
        } else if (*dataset) {
            if (*ingest) return do_dataset_ingest(ds, out);
            if (*split) return do_dataset_split(ds, o.seed.value_or(o.config.empty() ? 0 : load_config(o.config).seed), out);
            if (*exp) return do_dataset_export(ds, out);
            return do_dataset_stats(ds, out);
        } else if (*sweep) {
            from(sweep);
            const SweepGrid grid = cmd_sweep(resolve(o), runtime);
            if (!sweep_out.empty()) {
                json j = grid;
                write_json_file(sweep_out, j);
            }
            print_sweep(grid, out);
        } else if (*ae) {
            from(ae_run);
            PipelineConfig c = resolve(o);
            set(ae_corpus, c.ae.corpus, ae_flags.corpus);
            set(ae_bridge, c.ae.bridge, ae_flags.bridge);
            set(ae_k, c.ae.k, ae_flags.k);
            set(ae_budget, c.ae.budget, ae_flags.budget);
            set(ae_threshold, c.ae.threshold, ae_flags.threshold);
            set(ae_floor, c.ae.review_floor, ae_flags.review_floor);
            const AEReport r = cmd_ae(c, runtime);
            if (!ae_report.empty()) {
                write_json_file(ae_report, to_json(r));
            }
            print_ae(r, out);
            if (r.aborted) {
                return 2;
            }
        } else if (*report) {
            const Summary s = cmd_report(report_paths);
            if (!report_json.empty()) {
                write_json_file(report_json, s.json);
            }
            out << s.text;
        } else if (*evaluate) {
            from(evaluate);
            const EvaluateReport r = cmd_evaluate(resolve(o), eval_candidates, eval_references, eval_model, keep_invalid);
            if (!eval_out.empty()) {
                write_json_file(eval_out, to_json(r));
            }
            out << r.model << " | " << to_string(r.task) << " | " << r.metric << " | " << fixed(r.mean) << " ("
                << r.rows.size() << " pairs, " << r.dropped << " dropped)\n";
        }
        return 0;
    } catch (const Error &e) {
        err << "error: " << to_string(e.code());
        if (!e.phase().empty()) {
            err << " in " << e.phase();
        }
        err << ": " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace codeslice::cli
