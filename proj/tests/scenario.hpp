#pragma once

// The end-to-end collection scenario shared by the pipeline tests and the
// acceptance gate: 100 proxy bodies, CSum, zero-shot, one fake provider.

#include <filesystem>
#include <map>
#include <string>

#include "codeslice/dataset_store.hpp"
#include "codeslice/pipeline.hpp"
#include "support.hpp"

namespace testing {

inline const std::string kFrozenCassette = "pipeline/csum_zsq.cassette.jsonl";

// Proxy store over tests/fixtures/pipeline/proxy_pairs.jsonl, every record in train.
inline std::string make_proxy(const TempDir &dir) {
    using namespace codeslice;
    const std::string manifest = dir / "proxy.json";
    auto store = DatasetStore::create(manifest, "proxy-pairs", DatasetRole::Proxy, "proxy_pairs.jsonl");
    const auto records = import_pairs(fixture("pipeline/proxy_pairs.jsonl"), TaskKind::CSum);
    store.ingest(records);
    store.split_counts(static_cast<std::int64_t>(records.size()), 0, 0, 1);
    return manifest;
}

inline codeslice::PipelineConfig scenario_config(const std::string &proxy_manifest, const std::string &cassette,
                                                 codeslice::CassetteMode mode, const std::string &output_dir) {
    codeslice::PipelineConfig c;
    c.task = codeslice::TaskKind::CSum;
    c.scheme = codeslice::Scheme::ZSQ;
    c.providers = {fake_provider_config()};
    c.proxy_manifest = proxy_manifest;
    c.cassette = {cassette, mode};
    c.output_dir = output_dir;
    c.seed = 7;
    return c;
}

// Every file the run leaves behind, by name relative to `root`.
inline std::map<std::string, std::string> snapshot(const std::filesystem::path &root) {
    std::map<std::string, std::string> out;
    for (const auto &entry : std::filesystem::recursive_directory_iterator(root)) {
        if (entry.is_regular_file()) {
            out[std::filesystem::relative(entry.path(), root).string()] = codeslice::read_file(entry.path().string());
        }
    }
    return out;
}

struct ScenarioRun {
    codeslice::CollectResult collect;
    std::int64_t exported = 0;
    std::map<std::string, std::string> files; // collect output plus the export
};

// collect (query, filter, ingest), split the collected store, export train.
inline ScenarioRun run_scenario(const codeslice::PipelineConfig &config, const codeslice::Runtime &runtime) {
    using namespace codeslice;
    ScenarioRun run;
    run.collect = cmd_collect(config, runtime);
    auto store = DatasetStore::open(run.collect.manifest_path);
    store.split(SplitRatios{}, config.seed);
    const auto out = std::filesystem::path(config.output_dir);
    run.exported = store.export_finetune(Split::Train, (out / "train.export.jsonl").string());
    run.files = snapshot(out);
    return run;
}

// Records the scenario against a FakeProvider on a manual clock.
inline ScenarioRun record_scenario(const TempDir &dir, const std::string &cassette, FakeProvider &provider) {
    codeslice::ManualClock clock;
    codeslice::Runtime runtime;
    runtime.transport = &provider;
    runtime.clock = &clock;
    runtime.env = fake_env;
    const auto config = scenario_config(make_proxy(dir), cassette, codeslice::CassetteMode::Record, dir / "out");
    return run_scenario(config, runtime);
}

} // namespace testing
