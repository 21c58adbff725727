#pragma once
// Evaluation harness: per-problem records with recomputable aggregates,
// JSON/CSV/text report rendering, the solve-rate-vs-iterations sweep, and
// manifest auditing. All rendered artifacts are deterministic for a fixed
// seed and checkpoint.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "neurosat/cnf.hpp"
#include "neurosat/decode.hpp"
#include "neurosat/manifest.hpp"
#include "neurosat/model.hpp"
#include "neurosat/rng.hpp"
#include "neurosat/solver.hpp"
#include "neurosat/util.hpp"

namespace neurosat {

struct EvalItem {
    std::string id;
    CnfFormula formula;
    bool label = false;
};

struct EvalRecord {
    std::string id;
    bool label = false;
    double logit = 0.0;
    bool predicted = false;       // logit > 0
    bool solved = false;          // decoding produced a verified assignment
    int iterations_used = 0;      // solver iterations (0 when decoding was off)
};

struct EvalAggregates {
    long total = 0, sat_total = 0, unsat_total = 0;
    long correct = 0, sat_correct = 0, unsat_correct = 0, sat_solved = 0;
    double overall_accuracy = 0.0;   // rates are 0 when their denominator is 0
    double sat_accuracy = 0.0;
    double unsat_accuracy = 0.0;
    double percent_sat_solved = 0.0;
};

// The only path from records to aggregates — reports are built with it and
// invariants re-run it.
inline EvalAggregates aggregate_records(const std::vector<EvalRecord>& records) {
    EvalAggregates a;
    for (const EvalRecord& r : records) {
        ++a.total;
        bool is_correct = r.predicted == r.label;
        if (is_correct) ++a.correct;
        if (r.label) {
            ++a.sat_total;
            if (is_correct) ++a.sat_correct;
            if (r.solved) ++a.sat_solved;
        } else {
            ++a.unsat_total;
            if (is_correct) ++a.unsat_correct;
        }
    }
    auto rate = [](long num, long den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    a.overall_accuracy = rate(a.correct, a.total);
    a.sat_accuracy = rate(a.sat_correct, a.sat_total);
    a.unsat_accuracy = rate(a.unsat_correct, a.unsat_total);
    a.percent_sat_solved = rate(a.sat_solved, a.sat_total);
    return a;
}

struct EvalReport {
    std::vector<EvalRecord> records;
    EvalAggregates aggregates;
};

// Classifier and solver hooks, injectable so the harness can be self-tested
// against oracle-backed stubs.
using LogitFn = std::function<double(const CnfFormula&)>;
using SolveFn = std::function<std::pair<bool, int>(const CnfFormula&)>;  // (solved, iterations)

// Runs the classifier on every item; when `solver` is provided it runs on
// sat-labeled items only (the percent-solved aggregate counts only those, and
// decoding can never verify anything on the others).
inline EvalReport evaluate(const std::vector<EvalItem>& items, const LogitFn& logit_fn,
                           const SolveFn& solver = {}) {
    NS_CHECK(static_cast<bool>(logit_fn), "evaluate: classifier hook required");
    EvalReport report;
    report.records.reserve(items.size());
    for (const EvalItem& item : items) {
        EvalRecord rec;
        rec.id = item.id;
        rec.label = item.label;
        rec.logit = logit_fn(item.formula);
        rec.predicted = rec.logit > 0.0;
        if (solver && item.label) {
            auto [solved, iterations] = solver(item.formula);
            rec.solved = solved;
            rec.iterations_used = iterations;
        }
        report.records.push_back(std::move(rec));
    }
    report.aggregates = aggregate_records(report.records);
    return report;
}

// Standard wiring: predict for the logit, solve_with_model for decoding.
inline EvalReport evaluate_model(const std::vector<EvalItem>& items, ParamTree& params,
                                 int t_iters, bool decode, int t_max_solve = 0) {
    LogitFn logit_fn = [&](const CnfFormula& f) { return predict(f, params, t_iters).logit; };
    SolveFn solver;
    if (decode) {
        int t_max = t_max_solve > 0 ? t_max_solve : t_iters;
        solver = [&params, t_max](const CnfFormula& f) {
            SolveAttempt attempt = solve_with_model(f, params, t_max);
            return std::make_pair(attempt.solved, attempt.iterations_used);
        };
    }
    return evaluate(items, logit_fn, solver);
}

inline nlohmann::json eval_report_json(const EvalReport& report) {
    nlohmann::json records = nlohmann::json::array();
    for (const EvalRecord& r : report.records)
        records.push_back({{"id", r.id},
                           {"label", r.label},
                           {"logit", r.logit},
                           {"predicted", r.predicted},
                           {"solved", r.solved},
                           {"iterations_used", r.iterations_used}});
    const EvalAggregates& a = report.aggregates;
    return nlohmann::json{
        {"aggregates",
         {{"total", a.total},
          {"sat_total", a.sat_total},
          {"unsat_total", a.unsat_total},
          {"correct", a.correct},
          {"sat_correct", a.sat_correct},
          {"unsat_correct", a.unsat_correct},
          {"sat_solved", a.sat_solved},
          {"overall_accuracy", a.overall_accuracy},
          {"sat_accuracy", a.sat_accuracy},
          {"unsat_accuracy", a.unsat_accuracy},
          {"percent_sat_solved", a.percent_sat_solved}}},
        {"records", records}};
}

inline std::string eval_report_csv(const EvalReport& report) {
    std::string csv = "id,label,logit,predicted,solved,iterations_used\n";
    for (const EvalRecord& r : report.records) {
        csv += r.id;
        csv += r.label ? ",1," : ",0,";
        csv += fmt_double(r.logit);
        csv += r.predicted ? ",1," : ",0,";
        csv += r.solved ? "1," : "0,";
        csv += std::to_string(r.iterations_used);
        csv += '\n';
    }
    return csv;
}

// Aligned summary for humans; the JSON and CSV carry the full records.
inline std::string eval_report_text(const EvalReport& report) {
    const EvalAggregates& a = report.aggregates;
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "problems            %8ld  (sat %ld / unsat %ld)\n"
                  "overall accuracy    %8.4f\n"
                  "sat accuracy        %8.4f\n"
                  "unsat accuracy      %8.4f\n"
                  "sat problems solved %8.4f\n",
                  a.total, a.sat_total, a.unsat_total, a.overall_accuracy, a.sat_accuracy,
                  a.unsat_accuracy, a.percent_sat_solved);
    return buf;
}

// Loads every problem of a manifest-backed dataset directory as eval items
// (id = file name within the directory).
inline std::vector<EvalItem> load_eval_items(const std::string& dir) {
    DatasetManifest manifest = load_manifest(dir);
    std::vector<EvalItem> items;
    items.reserve(manifest.records.size());
    for (const ProblemRecord& rec : manifest.records)
        items.push_back({rec.file, load_problem(dir, rec), rec.sat});
    return items;
}

struct SweepRow {
    int n = 0;
    int t = 0;
    double solve_rate = 0.0;
};

struct SweepDataset {
    int n = 0;
    std::vector<CnfFormula> problems;  // satisfiable instances
};

struct SweepResult {
    std::vector<SweepRow> rows;  // ordered by (n, t)
    std::string csv;             // "n,t,solve_rate" header + one row each
};

// Success rate as a function of iteration count, per problem size. Each
// problem runs once to max(t_list) recording its first solve iteration; the
// rate at T is the fraction with first solve <= T. This matches per-T runs
// exactly because trajectories are deterministic and decoding happens every
// iteration. Rates are checked non-decreasing in T before returning.
inline SweepResult sweep_iterations(ParamTree& params, const std::vector<SweepDataset>& datasets,
                                    std::vector<int> t_list) {
    SweepResult result;
    result.csv = "n,t,solve_rate\n";
    if (t_list.empty()) return result;
    std::sort(t_list.begin(), t_list.end());
    NS_CHECK(t_list.front() >= 1, "sweep_iterations: iteration counts must be positive");
    const int t_max = t_list.back();

    for (const SweepDataset& ds : datasets) {
        NS_CHECK(!ds.problems.empty(), "sweep_iterations: empty dataset");
        std::vector<int> first_solve;  // t of first verified decode, or t_max+1
        for (const CnfFormula& f : ds.problems) {
            SolveAttempt attempt = solve_with_model(f, params, t_max);
            first_solve.push_back(attempt.solved ? attempt.iterations_used : t_max + 1);
        }
        double prev = -1.0;
        for (int t : t_list) {
            long solved = 0;
            for (int fs : first_solve)
                if (fs <= t) ++solved;
            double rate = static_cast<double>(solved) / static_cast<double>(ds.problems.size());
            NS_CHECK(rate >= prev, "sweep_iterations: solve rate decreased in T");
            prev = rate;
            result.rows.push_back({ds.n, t, rate});
            result.csv += std::to_string(ds.n) + "," + std::to_string(t) + "," +
                          fmt_double(rate) + "\n";
        }
    }
    return result;
}

// Minimal line chart of the sweep: one polyline per n, solve rate vs T.
inline std::string sweep_svg(const SweepResult& sweep) {
    const double width = 640, height = 400, margin = 48;
    int t_min = 0, t_max = 1;
    for (const SweepRow& r : sweep.rows) {
        t_min = t_min == 0 ? r.t : std::min(t_min, r.t);
        t_max = std::max(t_max, r.t);
    }
    auto sx = [&](double t) {
        return t_max == t_min ? width / 2
                              : margin + (t - t_min) / (t_max - t_min) * (width - 2 * margin);
    };
    auto sy = [&](double rate) { return height - margin - rate * (height - 2 * margin); };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_double(width) +
                      "\" height=\"" + fmt_double(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // Axes: solve rate 0..1 on y, iterations on x.
    svg += "<line x1=\"" + fmt_double(margin) + "\" y1=\"" + fmt_double(sy(0)) + "\" x2=\"" +
           fmt_double(width - margin) + "\" y2=\"" + fmt_double(sy(0)) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + fmt_double(margin) + "\" y1=\"" + fmt_double(sy(0)) + "\" x2=\"" +
           fmt_double(margin) + "\" y2=\"" + fmt_double(sy(1)) + "\" stroke=\"black\"/>\n";

    const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    int series = 0;
    std::size_t i = 0;
    while (i < sweep.rows.size()) {
        int n = sweep.rows[i].n;
        std::string points;
        std::size_t j = i;
        for (; j < sweep.rows.size() && sweep.rows[j].n == n; ++j)
            points += fmt_double(sx(sweep.rows[j].t)) + "," + fmt_double(sy(sweep.rows[j].solve_rate)) + " ";
        const char* color = palette[series % 6];
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" points=\"" +
               points + "\"/>\n";
        svg += "<text x=\"" + fmt_double(width - margin + 4) + "\" y=\"" +
               fmt_double(sy(sweep.rows[j - 1].solve_rate)) + "\" font-size=\"12\" fill=\"" +
               color + "\">n=" + std::to_string(n) + "</text>\n";
        ++series;
        i = j;
    }
    svg += "</svg>\n";
    return svg;
}

struct AuditReport {
    long eligible = 0;               // records in the manifest
    long checked = 0;                // records re-solved
    long budget_exceeded = 0;        // oracle gave up (counted separately)
    std::vector<std::string> mismatched_files;
    bool zero_fraction = false;      // frac == 0: trivially passed, warn

    bool passed() const { return mismatched_files.empty(); }
};

// Re-solves a seeded random fraction of a dataset's problems with the DPLL
// oracle and compares the stored labels.
inline AuditReport audit_manifest(const std::string& dir, double sample_frac,
                                  std::uint64_t seed = 0,
                                  std::optional<std::uint64_t> budget = std::nullopt) {
    NS_CHECK(sample_frac >= 0.0 && sample_frac <= 1.0, "audit: fraction must be in [0,1]");
    DatasetManifest manifest = load_manifest(dir);
    AuditReport report;
    report.eligible = static_cast<long>(manifest.records.size());
    if (sample_frac == 0.0) {
        report.zero_fraction = true;
        return report;
    }
    Rng rng = Rng::substream(seed, 0x6175646974); // dedicated audit stream
    for (const ProblemRecord& rec : manifest.records) {
        if (sample_frac < 1.0 && rng.uniform() >= sample_frac) continue;
        ++report.checked;
        CnfFormula f = load_problem(dir, rec);
        SolveResult oracle = solve(f, budget);
        if (oracle.outcome == Outcome::BudgetExceeded) {
            ++report.budget_exceeded;
            continue;
        }
        if (oracle.sat() != rec.sat) report.mismatched_files.push_back(rec.file);
    }
    return report;
}

}  // namespace neurosat
