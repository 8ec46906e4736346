#include "codeslice/dataset_store.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "codeslice/error.hpp"
#include "codeslice/rng.hpp"
#include "codeslice/util.hpp"

namespace codeslice {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(Split split) {
    switch (split) {
    case Split::Train: return "Train";
    case Split::Valid: return "Valid";
    case Split::Test: return "Test";
    case Split::Unassigned: return "Unassigned";
    }
    return "?";
}

Split parse_split(std::string_view text) {
    if (text == "Train" || text == "train") {
        return Split::Train;
    }
    if (text == "Valid" || text == "valid") {
        return Split::Valid;
    }
    if (text == "Test" || text == "test") {
        return Split::Test;
    }
    if (text == "Unassigned" || text == "unassigned") {
        return Split::Unassigned;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown split '" + std::string(text) + "'");
}

std::string_view to_string(DatasetRole role) {
    switch (role) {
    case DatasetRole::Proxy: return "Proxy";
    case DatasetRole::Reference: return "Reference";
    case DatasetRole::Collected: return "Collected";
    }
    return "?";
}

DatasetRole parse_role(std::string_view text) {
    if (text == "Proxy" || text == "proxy") {
        return DatasetRole::Proxy;
    }
    if (text == "Reference" || text == "reference") {
        return DatasetRole::Reference;
    }
    if (text == "Collected" || text == "collected") {
        return DatasetRole::Collected;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown dataset role '" + std::string(text) + "'");
}

std::string record_id(std::string_view body, std::string_view response) {
    std::string joined;
    joined.reserve(body.size() + response.size() + 1);
    joined.append(body);
    joined.push_back('\x1f');
    joined.append(response);
    return sha256_hex(joined);
}

CorpusRecord make_record(TaskKind task, Scheme scheme, std::string body, std::string response) {
    CorpusRecord r;
    r.id = record_id(body, response);
    r.task_kind = task;
    r.scheme = scheme;
    r.body = std::move(body);
    r.response = std::move(response);
    return r;
}

std::int64_t DatasetManifest::total() const {
    std::int64_t n = 0;
    for (const auto &[split, count] : counts) {
        n += count;
    }
    return n;
}

std::array<std::int64_t, 3> split_sizes(std::int64_t n, const SplitRatios &ratios) {
    const std::array<double, 3> r{ratios.train, ratios.valid, ratios.test};
    for (double x : r) {
        if (!(x >= 0.0) || x > 1.0) {
            throw Error(ErrorCode::BadRatios, "split ratios must lie in [0, 1]");
        }
    }
    if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) {
        throw Error(ErrorCode::BadRatios, "split ratios must sum to 1");
    }
    std::array<std::int64_t, 3> sizes{};
    std::array<double, 3> remainder{};
    std::int64_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = r[i] * static_cast<double>(n);
        // Guard against 0.1 * 100 landing on 9.999...
        sizes[i] = static_cast<std::int64_t>(std::floor(exact + 1e-9));
        remainder[i] = exact - static_cast<double>(sizes[i]);
        assigned += sizes[i];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainder[a] > remainder[b]; });
    for (int k = 0; assigned < n; k = (k + 1) % 3) {
        ++sizes[order[k]];
        ++assigned;
    }
    return sizes;
}

// ----------------------------------------------------------------- store

namespace {

std::string stem_of(const std::string &manifest_path) {
    fs::path p(manifest_path);
    if (p.extension() == ".json") {
        p.replace_extension();
    }
    return p.string();
}

} // namespace

DatasetStore DatasetStore::create(const std::string &manifest_path, std::string name, DatasetRole role,
                                  std::string source) {
    if (fs::exists(manifest_path)) {
        throw Error(ErrorCode::IoFailure, "manifest already exists: " + manifest_path);
    }
    DatasetStore s;
    s.manifest_path_ = manifest_path;
    s.records_path_ = stem_of(manifest_path) + ".records.jsonl";
    s.index_path_ = stem_of(manifest_path) + ".index.jsonl";
    s.manifest_.name = std::move(name);
    s.manifest_.role = role;
    s.manifest_.source = std::move(source);
    s.recount();
    write_file_atomic(s.records_path_, "");
    s.save_index();
    s.save_manifest();
    return s;
}

DatasetStore DatasetStore::open(const std::string &manifest_path) {
    DatasetStore s;
    s.manifest_path_ = manifest_path;
    s.records_path_ = stem_of(manifest_path) + ".records.jsonl";
    s.index_path_ = stem_of(manifest_path) + ".index.jsonl";
    try {
        s.manifest_ = json::parse(read_file(manifest_path)).get<DatasetManifest>();
    } catch (const json::exception &e) {
        throw Error(ErrorCode::SchemaMismatch, manifest_path + ": " + e.what());
    }
    if (s.manifest_.schema_version != kSchemaVersion) {
        throw Error(ErrorCode::SchemaMismatch, manifest_path + ": schema version " +
                                                   std::to_string(s.manifest_.schema_version) + " is not supported");
    }
    const auto rows = read_jsonl(s.records_path_);
    const auto index = read_jsonl(s.index_path_);
    if (rows.size() != index.size()) {
        throw Error(ErrorCode::SchemaMismatch, "index of " + manifest_path + " does not match its records");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CorpusRecord r;
        try {
            r = rows[i].get<CorpusRecord>();
            if (index[i].at("id").get<std::string>() != r.id) {
                throw Error(ErrorCode::SchemaMismatch, "index entry " + std::to_string(i + 1) + " names another record");
            }
            r.split = index[i].at("split").get<Split>();
        } catch (const json::exception &e) {
            throw Error(ErrorCode::SchemaMismatch, s.records_path_ + ":" + std::to_string(i + 1) + ": " + e.what());
        }
        s.by_id_[r.id] = s.records_.size();
        s.records_.push_back(std::move(r));
    }
    const auto stored = s.manifest_.counts;
    s.recount();
    if (stored != s.manifest_.counts) {
        throw Error(ErrorCode::SchemaMismatch, "manifest counts of " + manifest_path + " disagree with its records");
    }
    return s;
}

DatasetStore DatasetStore::open_or_create(const std::string &manifest_path, std::string name, DatasetRole role,
                                          std::string source) {
    if (fs::exists(manifest_path)) {
        DatasetStore s = open(manifest_path);
        if (s.manifest_.role != role) {
            throw Error(ErrorCode::SchemaMismatch, manifest_path + " has role " +
                                                       std::string(to_string(s.manifest_.role)) + ", expected " +
                                                       std::string(to_string(role)));
        }
        return s;
    }
    return create(manifest_path, std::move(name), role, std::move(source));
}

void DatasetStore::recount() {
    manifest_.counts = {{Split::Train, 0}, {Split::Valid, 0}, {Split::Test, 0}, {Split::Unassigned, 0}};
    for (const auto &r : records_) {
        ++manifest_.counts[r.split];
    }
}

void DatasetStore::save_manifest() const { write_file_atomic(manifest_path_, json(manifest_).dump(2) + "\n"); }

void DatasetStore::save_index() const {
    std::vector<json> rows;
    rows.reserve(records_.size());
    for (const auto &r : records_) {
        rows.push_back(json{{"id", r.id}, {"split", r.split}});
    }
    write_jsonl(index_path_, rows);
}

IngestResult DatasetStore::ingest(const std::vector<CorpusRecord> &records) {
    for (const auto &r : records) {
        if (!r.filter_verdict.passed || r.filter_verdict.reason != FilterReason::Ok) {
            throw Error(ErrorCode::SchemaMismatch, "record " + r.id.substr(0, 12) + " did not pass the filter");
        }
        if (r.id != record_id(r.body, r.response)) {
            throw Error(ErrorCode::SchemaMismatch, "record id does not match its content");
        }
        if (r.split != Split::Unassigned) {
            throw Error(ErrorCode::SchemaMismatch, "ingested records must be unassigned");
        }
    }
    // Serialize first so a bad record leaves the store untouched.
    std::vector<std::string> lines;
    lines.reserve(records.size());
    for (const auto &r : records) {
        lines.push_back(canonical(json(r)));
    }
    IngestResult result;
    std::string appended;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto &r = records[i];
        if (by_id_.contains(r.id)) {
            ++result.duplicates;
            continue;
        }
        by_id_[r.id] = records_.size();
        records_.push_back(r);
        appended += lines[i];
        appended += '\n';
        ++result.added;
    }
    if (result.added > 0) {
        write_file_atomic(records_path_, read_file(records_path_) + appended);
        save_index();
    }
    recount();
    save_manifest();
    return result;
}

void DatasetStore::check_unassigned() const {
    for (const auto &r : records_) {
        if (r.split != Split::Unassigned) {
            throw Error(ErrorCode::AlreadySplit, manifest_.name + " is already split");
        }
    }
}

void DatasetStore::assign(const std::array<std::int64_t, 3> &sizes, std::uint64_t seed) {
    std::vector<std::size_t> order(records_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return records_[a].id < records_[b].id; });
    Rng rng(seed);
    rng.shuffle(order);
    std::size_t at = 0;
    const std::array<Split, 3> splits{Split::Train, Split::Valid, Split::Test};
    for (int s = 0; s < 3; ++s) {
        for (std::int64_t k = 0; k < sizes[s]; ++k) {
            records_[order[at++]].split = splits[s];
        }
    }
    recount();
    save_index();
    save_manifest();
}

void DatasetStore::split(const SplitRatios &ratios, std::uint64_t seed) {
    const auto sizes = split_sizes(static_cast<std::int64_t>(records_.size()), ratios);
    check_unassigned();
    assign(sizes, seed);
}

void DatasetStore::split_counts(std::int64_t train, std::int64_t valid, std::int64_t test, std::uint64_t seed) {
    if (train < 0 || valid < 0 || test < 0 || train + valid + test > static_cast<std::int64_t>(records_.size())) {
        throw Error(ErrorCode::BadRatios, "split counts " + std::to_string(train) + "/" + std::to_string(valid) + "/" +
                                              std::to_string(test) + " do not fit " +
                                              std::to_string(records_.size()) + " records");
    }
    check_unassigned();
    assign({train, valid, test}, seed);
}

std::vector<CorpusRecord> DatasetStore::read(ReadPurpose purpose, std::optional<Split> split) const {
    if (purpose == ReadPurpose::QueryConstruction && manifest_.role == DatasetRole::Reference) {
        throw Error(ErrorCode::AccessViolation,
                    "reference dataset '" + manifest_.name + "' cannot be used to construct queries");
    }
    std::vector<CorpusRecord> out;
    for (const auto &r : records_) {
        if (!split || r.split == *split) {
            out.push_back(r);
        }
    }
    return out;
}

std::int64_t DatasetStore::export_finetune(Split split, const std::string &path) const {
    std::vector<const CorpusRecord *> chosen;
    for (const auto &r : records_) {
        if (r.split == split) {
            chosen.push_back(&r);
        }
    }
    if (chosen.empty()) {
        throw Error(ErrorCode::EmptySplit, std::string(to_string(split)) + " split of " + manifest_.name + " is empty");
    }
    std::sort(chosen.begin(), chosen.end(), [](auto *a, auto *b) { return a->id < b->id; });
    std::string content;
    for (const auto *r : chosen) {
        const json row{{"source", r->body}, {"target", r->response}, {"task", r->task_kind}};
        content += canonical(row);
        content += '\n';
    }
    write_file_atomic(path, content);
    return static_cast<std::int64_t>(chosen.size());
}

std::vector<CorpusRecord> sample_records(std::vector<CorpusRecord> records, std::size_t n, std::uint64_t seed) {
    std::sort(records.begin(), records.end(), [](const auto &a, const auto &b) { return a.id < b.id; });
    if (n < records.size()) {
        Rng rng(seed);
        for (std::size_t i = 0; i < n; ++i) {
            std::swap(records[i], records[i + rng.below(records.size() - i)]);
        }
        records.resize(n);
        std::sort(records.begin(), records.end(), [](const auto &a, const auto &b) { return a.id < b.id; });
    }
    return records;
}

std::vector<CorpusRecord> import_pairs(const std::string &path, TaskKind task, const std::string &body_field,
                                       const std::string &response_field) {
    std::vector<CorpusRecord> out;
    int line = 0;
    for (const auto &row : read_jsonl(path)) {
        ++line;
        if (!row.is_object() || !row.contains(body_field) || !row[body_field].is_string() ||
            !row.contains(response_field) || !row[response_field].is_string()) {
            throw Error(ErrorCode::SchemaMismatch, path + ": row " + std::to_string(line) + " lacks string fields '" +
                                                       body_field + "' and '" + response_field + "'");
        }
        out.push_back(make_record(task, Scheme::ZSQ, row[body_field].get<std::string>(),
                                  row[response_field].get<std::string>()));
    }
    return out;
}

// ----------------------------------------------------------------- json

void to_json(json &j, const Split &v) { j = std::string(to_string(v)); }
void from_json(const json &j, Split &v) { v = parse_split(j.get<std::string>()); }
void to_json(json &j, const DatasetRole &v) { j = std::string(to_string(v)); }
void from_json(const json &j, DatasetRole &v) { v = parse_role(j.get<std::string>()); }

void to_json(json &j, const CorpusRecord &v) {
    j = json{{"id", v.id},
             {"task_kind", v.task_kind},
             {"scheme", v.scheme},
             {"body", v.body},
             {"response", v.response},
             {"provider_id", v.provider_id},
             {"params", v.params},
             {"filter_verdict", v.filter_verdict}};
    if (v.rationale) {
        j["rationale"] = *v.rationale;
    }
    if (v.scores) {
        j["scores"] = *v.scores;
    }
}

void from_json(const json &j, CorpusRecord &v) {
    v = CorpusRecord{};
    v.id = j.at("id").get<std::string>();
    v.task_kind = j.at("task_kind").get<TaskKind>();
    v.scheme = j.at("scheme").get<Scheme>();
    v.body = j.at("body").get<std::string>();
    v.response = j.at("response").get<std::string>();
    v.provider_id = j.value("provider_id", std::string());
    if (j.contains("params")) {
        v.params = j["params"].get<SamplingParams>();
    }
    if (j.contains("filter_verdict")) {
        v.filter_verdict = j["filter_verdict"].get<FilterVerdict>();
    }
    if (j.contains("rationale")) {
        v.rationale = j["rationale"].get<std::string>();
    }
    if (j.contains("scores")) {
        v.scores = j["scores"];
    }
    if (j.contains("split")) {
        v.split = j["split"].get<Split>();
    }
}

void to_json(json &j, const DatasetManifest &v) {
    json counts = json::object();
    for (const auto &[split, n] : v.counts) {
        counts[std::string(to_string(split))] = n;
    }
    j = json{{"name", v.name},
             {"role", v.role},
             {"counts", counts},
             {"source", v.source},
             {"schema_version", v.schema_version}};
}

void from_json(const json &j, DatasetManifest &v) {
    v = DatasetManifest{};
    v.name = j.at("name").get<std::string>();
    v.role = j.at("role").get<DatasetRole>();
    v.source = j.value("source", std::string());
    v.schema_version = j.at("schema_version").get<int>();
    for (const auto &[key, n] : j.at("counts").items()) {
        v.counts[parse_split(key)] = n.get<std::int64_t>();
    }
}

} // namespace codeslice
