#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "codeslice/response_filter.hpp"
#include "codeslice/types.hpp"

namespace codeslice {

enum class Split { Train, Valid, Test, Unassigned };
enum class DatasetRole { Proxy, Reference, Collected };

// Why a caller reads a dataset. Reference data must never reach query construction.
enum class ReadPurpose { QueryConstruction, Evaluation, Training, Maintenance };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);
std::string_view to_string(DatasetRole role);
DatasetRole parse_role(std::string_view text);

inline constexpr int kSchemaVersion = 1;

// sha256(body + '\x1f' + response)
std::string record_id(std::string_view body, std::string_view response);

struct CorpusRecord {
    std::string id;
    TaskKind task_kind = TaskKind::CSum;
    Scheme scheme = Scheme::ZSQ;
    std::string body;
    std::string response;
    std::optional<std::string> rationale;
    std::string provider_id;
    SamplingParams params;
    FilterVerdict filter_verdict{true, FilterReason::Ok, std::nullopt};
    std::optional<nlohmann::json> scores;
    Split split = Split::Unassigned;

    friend bool operator==(const CorpusRecord &, const CorpusRecord &) = default;
};

CorpusRecord make_record(TaskKind task, Scheme scheme, std::string body, std::string response);

struct DatasetManifest {
    std::string name;
    DatasetRole role = DatasetRole::Collected;
    std::map<Split, std::int64_t> counts;
    std::string source;
    int schema_version = kSchemaVersion;

    std::int64_t total() const;

    friend bool operator==(const DatasetManifest &, const DatasetManifest &) = default;
};

struct IngestResult {
    std::int64_t added = 0;
    std::int64_t duplicates = 0;
};

struct SplitRatios {
    double train = 0.8;
    double valid = 0.1;
    double test = 0.1;
};

// Per-split sizes for n records: floors plus largest remainders (ties go to
// the earlier split), so each is within 1 of the exact proportion.
std::array<std::int64_t, 3> split_sizes(std::int64_t n, const SplitRatios &ratios);

// A manifest file `<stem>.json` next to `<stem>.records.jsonl` (append-only)
// and `<stem>.index.jsonl` (id and split per record). Single writer.
class DatasetStore {
  public:
    static DatasetStore create(const std::string &manifest_path, std::string name, DatasetRole role,
                               std::string source);
    static DatasetStore open(const std::string &manifest_path);
    static DatasetStore open_or_create(const std::string &manifest_path, std::string name, DatasetRole role,
                                       std::string source);

    const DatasetManifest &manifest() const { return manifest_; }
    const std::string &path() const { return manifest_path_; }
    std::size_t size() const { return records_.size(); }

    // Throws SchemaMismatch for records that did not pass the filter or whose
    // id does not match their content. Duplicates are counted, not stored.
    IngestResult ingest(const std::vector<CorpusRecord> &records);

    void split(const SplitRatios &ratios, std::uint64_t seed);
    // Explicit sizes; records beyond their sum stay Unassigned.
    void split_counts(std::int64_t train, std::int64_t valid, std::int64_t test, std::uint64_t seed);

    // {"source", "target", "task"} per line, ordered by id.
    std::int64_t export_finetune(Split split, const std::string &path) const;

    // Records in ingest order, optionally restricted to one split.
    // Throws AccessViolation for QueryConstruction on a Reference dataset.
    std::vector<CorpusRecord> read(ReadPurpose purpose, std::optional<Split> split = std::nullopt) const;

  private:
    DatasetStore() = default;
    void check_unassigned() const;
    void assign(const std::array<std::int64_t, 3> &sizes, std::uint64_t seed);
    void save_manifest() const;
    void save_index() const;
    void recount();

    std::string manifest_path_;
    std::string records_path_;
    std::string index_path_;
    DatasetManifest manifest_;
    std::vector<CorpusRecord> records_;
    std::map<std::string, std::size_t> by_id_;
};

// Uniformly samples n records (all when n >= size), returned ordered by id.
std::vector<CorpusRecord> sample_records(std::vector<CorpusRecord> records, std::size_t n, std::uint64_t seed);

// Reads a JSONL file of pairs into records (e.g. a proxy or reference corpus).
std::vector<CorpusRecord> import_pairs(const std::string &path, TaskKind task, const std::string &body_field = "source",
                                       const std::string &response_field = "target");

void to_json(nlohmann::json &j, const Split &v);
void from_json(const nlohmann::json &j, Split &v);
void to_json(nlohmann::json &j, const DatasetRole &v);
void from_json(const nlohmann::json &j, DatasetRole &v);
void to_json(nlohmann::json &j, const CorpusRecord &v);
void from_json(const nlohmann::json &j, CorpusRecord &v);
void to_json(nlohmann::json &j, const DatasetManifest &v);
void from_json(const nlohmann::json &j, DatasetManifest &v);

} // namespace codeslice
