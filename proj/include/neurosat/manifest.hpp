#pragma once
// Dataset serialization: one directory per split, problems as DIMACS files,
// and a JSON-lines manifest (header line with `schema: 1`, then one record
// per problem). Output is byte-deterministic for a fixed seed and config:
// keys are sorted, file names are zero-padded, records follow pair order
// with the satisfiable member first.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "neurosat/datagen.hpp"
#include "neurosat/util.hpp"

namespace neurosat {

inline constexpr int kManifestSchema = 1;

struct ProblemRecord {
    std::string file;
    bool sat = false;
    int n = 0;
    int m = 0;
    int pair_id = 0;
    std::pair<int, int> flipped{-1, -1};
    std::vector<int> core;  // SRC only: clause indices of the core block

    friend bool operator==(const ProblemRecord&, const ProblemRecord&) = default;
};

struct DatasetManifest {
    nlohmann::json header;
    std::vector<ProblemRecord> records;
};

// Generates `count` pairs, each from its own RNG substream (seed, index),
// with n drawn from U(n_min, n_max). Safe to parallelize: slot i depends
// only on substream i.
inline std::vector<SamplePair> generate_sr_pairs(const GenConfig& cfg, int count,
                                                 int threads = 1) {
    std::vector<SamplePair> out(static_cast<std::size_t>(count));
    parallel_for(count, threads, [&](int i) {
        Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(i));
        int n = rng.uniform_int(cfg.n_min, cfg.n_max);
        out[static_cast<std::size_t>(i)] = sample_sr_pair(n, rng, cfg);
    });
    return out;
}

inline std::vector<SamplePair> generate_src_pairs(const GenConfig& cfg, int count,
                                                  const UnsatCore& core, int threads = 1) {
    std::vector<SamplePair> out(static_cast<std::size_t>(count));
    parallel_for(count, threads, [&](int i) {
        Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(i));
        int n = rng.uniform_int(cfg.n_min, cfg.n_max);
        out[static_cast<std::size_t>(i)] = sample_src_pair(n, core, rng, cfg);
    });
    return out;
}

namespace detail {

inline std::string pad6(int v) {
    std::string s = std::to_string(v);
    return std::string(s.size() >= 6 ? 0 : 6 - s.size(), '0') + s;
}

inline nlohmann::json record_to_json(const ProblemRecord& rec) {
    nlohmann::json j;
    j["file"] = rec.file;
    j["label"] = rec.sat ? "sat" : "unsat";
    j["n"] = rec.n;
    j["m"] = rec.m;
    j["pair_id"] = rec.pair_id;
    j["flipped"] = {rec.flipped.first, rec.flipped.second};
    if (!rec.core.empty()) j["core"] = rec.core;
    return j;
}

inline ProblemRecord record_from_json(const nlohmann::json& j) {
    ProblemRecord rec;
    rec.file = j.at("file").get<std::string>();
    std::string label = j.at("label").get<std::string>();
    NS_CHECK(label == "sat" || label == "unsat", "manifest: bad label " + label);
    rec.sat = label == "sat";
    rec.n = j.at("n").get<int>();
    rec.m = j.at("m").get<int>();
    rec.pair_id = j.at("pair_id").get<int>();
    auto flipped = j.at("flipped");
    rec.flipped = {flipped.at(0).get<int>(), flipped.at(1).get<int>()};
    if (j.contains("core")) rec.core = j.at("core").get<std::vector<int>>();
    return rec;
}

}  // namespace detail

// Writes DIMACS files plus manifest.jsonl into `dir` (created if needed).
// `family` names the files ("sr", "src_r", ...); `header_extras` is merged
// into the manifest header after the standard config echo.
inline DatasetManifest write_pair_dataset(const std::string& dir, const std::string& family,
                                          const GenConfig& cfg,
                                          const std::vector<SamplePair>& pairs,
                                          const nlohmann::json& header_extras = {}) {
    std::filesystem::create_directories(dir);
    DatasetManifest man;
    man.header["schema"] = kManifestSchema;
    man.header["family"] = family;
    man.header["pairs"] = static_cast<int>(pairs.size());
    man.header["seed"] = cfg.seed;
    man.header["n_min"] = cfg.n_min;
    man.header["n_max"] = cfg.n_max;
    man.header["bernoulli_p"] = cfg.bernoulli_p;
    man.header["geometric_p"] = cfg.geometric_p;
    man.header["clause_base"] = cfg.clause_base;
    if (!header_extras.is_null())
        for (auto it = header_extras.begin(); it != header_extras.end(); ++it)
            man.header[it.key()] = it.value();

    std::string manifest_text = man.header.dump() + "\n";
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const SamplePair& pair = pairs[i];
        for (bool sat : {true, false}) {
            const CnfFormula& f = sat ? pair.sat_problem : pair.unsat_problem;
            ProblemRecord rec;
            rec.file = family + "_" + detail::pad6(static_cast<int>(i)) + (sat ? "_sat" : "_unsat") +
                       ".cnf";
            rec.sat = sat;
            rec.n = f.n_vars;
            rec.m = f.num_clauses();
            rec.pair_id = static_cast<int>(i);
            rec.flipped = pair.flipped;
            rec.core = pair.core_clause_indices;
            write_file(dir + "/" + rec.file, write_dimacs(f));
            manifest_text += detail::record_to_json(rec).dump() + "\n";
            man.records.push_back(std::move(rec));
        }
    }
    write_file(dir + "/manifest.jsonl", manifest_text);
    return man;
}

inline DatasetManifest load_manifest(const std::string& dir) {
    std::string text = read_file(dir + "/manifest.jsonl");
    DatasetManifest man;
    std::size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        if (first) {
            NS_CHECK(j.at("schema").get<int>() == kManifestSchema,
                     "manifest: unsupported schema version");
            man.header = j;
            first = false;
        } else {
            man.records.push_back(detail::record_from_json(j));
        }
    }
    NS_CHECK(!first, "manifest: empty file");
    return man;
}

inline CnfFormula load_problem(const std::string& dir, const ProblemRecord& rec) {
    CnfFormula f = parse_dimacs(read_file(dir + "/" + rec.file), ParseMode::Strict).formula;
    NS_CHECK(f.n_vars == rec.n && f.num_clauses() == rec.m,
             "load_problem: file disagrees with manifest: " + rec.file);
    return f;
}

}  // namespace neurosat
