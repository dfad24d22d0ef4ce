#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "flipguard/repair.hpp"
#include "flipguard/validation.hpp"

namespace flipguard {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

inline Program load_program(const std::filesystem::path& path) {
  std::string text = read_file(path);
  try {
    return lower_predicates(parse_program(text));
  } catch (const SourceError& e) {
    throw ConfigError(path.string() + ":" + e.what());
  }
}

inline TestSuite load_suite(const std::filesystem::path& path, const Program& p) {
  std::string text = read_file(path);
  try {
    return parse_test_suite(text, p);
  } catch (const TestSuiteError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// Per-parameter sampling ranges, keyed by `main`'s parameter names:
// {"min", "max", "decimals", "alphabet", "min_len", "max_len"}.
inline GenConfig gen_config_from_json(const nlohmann::json& j, GenConfig base = {}) {
  if (!j.is_object()) return base;
  for (const auto& [name, spec] : j.items()) {
    ParamRange r;
    if (spec.contains("alphabet")) r.alphabet = from_utf8(spec["alphabet"].get<std::string>());
    r.min = spec.value("min", r.min);
    r.max = spec.value("max", r.max);
    r.decimals = spec.value("decimals", r.decimals);
    r.min_len = spec.value("min_len", r.min_len);
    r.max_len = spec.value("max_len", r.max_len);
    base.params[name] = r;
  }
  return base;
}

// A corpus entry: buggy.mimp, reference.mimp, train.tests and defect.json.
struct Defect {
  std::string name;
  std::filesystem::path dir;
  nlohmann::json meta;
};

inline std::vector<Defect> list_corpus(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) throw ConfigError("corpus '" + root.string() + "' is not a directory");
  std::vector<Defect> out;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (!entry.is_directory() || !std::filesystem::exists(entry.path() / "buggy.mimp")) continue;
    Defect d;
    d.name = entry.path().filename().string();
    d.dir = entry.path();
    auto meta_path = entry.path() / "defect.json";
    d.meta = std::filesystem::exists(meta_path) ? nlohmann::json::parse(read_file(meta_path)) : nlohmann::json::object();
    out.push_back(std::move(d));
  }
  std::sort(out.begin(), out.end(), [](const Defect& a, const Defect& b) { return a.name < b.name; });
  return out;
}

struct BenchConfig {
  RepairConfig repair;
  std::size_t validation_n = 1000;
  std::uint64_t seed = 7;
  unsigned jobs = 1;
};

struct DefectRow {
  std::string defect;
  int exit_code = kConfigError;
  std::size_t failing = 0;
  std::size_t candidates = 0;
  bool candidate_found = false;
  bool fully_fixed = false;
  bool plausible = false;
  bool correct = false;
  std::string verdict = "none";
  std::string guard;
  std::size_t validation_pass = 0;
  std::size_t validation_fail = 0;
  std::string error;
};

inline DefectRow bench_defect(const Defect& d, const BenchConfig& cfg) {
  DefectRow row;
  row.defect = d.name;
  try {
    Program buggy = load_program(d.dir / "buggy.mimp");
    Program reference = load_program(d.dir / "reference.mimp");
    TestSuite train = load_suite(d.dir / "train.tests", buggy);
    GenConfig gen;
    gen.n = cfg.validation_n;
    gen.seed = cfg.seed;
    gen = gen_config_from_json(d.meta.value("params", nlohmann::json::object()), gen);
    TestSuite validation = gen_validation(reference, gen, cfg.repair.step_budget).suite;

    RepairConfig rc = cfg.repair;
    rc.defect = d.name;
    RepairResult r = repair(buggy, train, &validation, rc);
    row.exit_code = r.exit_code;
    row.failing = r.failing;
    row.candidates = r.queue.size();
    row.candidate_found = !r.queue.empty();
    row.fully_fixed = r.fully_fixed_by_search();
    if (const PatchOutcome* top = r.top_patch()) {
      row.plausible = true;
      row.correct = top->verdict == Verdict::CorrectCandidate;
      row.verdict = to_string(top->verdict);
      row.guard = top->patch.guard_expr;
      row.validation_pass = top->validation.pass;
      row.validation_fail = top->validation.fail;
    }
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

struct BenchMetrics {
  std::vector<DefectRow> rows;
  std::size_t with_candidates = 0, fully_fixed = 0, plausible = 0, correct = 0, incorrect = 0;

  std::optional<double> precision() const {
    if (plausible == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(plausible);
  }
  std::optional<double> recall() const {
    if (rows.empty()) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(rows.size());
  }
};

inline BenchMetrics bench(const std::vector<Defect>& corpus, const BenchConfig& cfg) {
  BenchMetrics m;
  m.rows.resize(corpus.size());
  std::size_t jobs = std::max<std::size_t>(1, cfg.jobs);
  for (std::size_t start = 0; start < corpus.size(); start += jobs) {
    std::vector<std::future<DefectRow>> batch;
    std::size_t end = std::min(corpus.size(), start + jobs);
    for (std::size_t i = start; i < end; ++i)
      batch.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred,
                                 [&, i] { return bench_defect(corpus[i], cfg); }));
    for (std::size_t i = start; i < end; ++i) m.rows[i] = batch[i - start].get();
  }
  for (const auto& r : m.rows) {
    m.with_candidates += r.candidate_found;
    m.fully_fixed += r.fully_fixed;
    m.plausible += r.plausible;
    m.correct += r.correct;
    m.incorrect += r.plausible && !r.correct;
  }
  return m;
}

inline std::string ratio_text(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", *v * 100);
  return buf;
}

// Timing-free, so equal inputs give byte-identical output.
inline nlohmann::ordered_json metrics_json(const BenchMetrics& m) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["defects"] = ordered_json::array();
  for (const auto& r : m.rows) {
    ordered_json e = {{"defect", r.defect},
                      {"exit_code", r.exit_code},
                      {"failing_tests", r.failing},
                      {"candidates", r.candidates},
                      {"candidate_found", r.candidate_found},
                      {"fully_fixed_by_search", r.fully_fixed},
                      {"plausible", r.plausible},
                      {"correct", r.correct},
                      {"verdict", r.verdict},
                      {"guard_expr", r.guard},
                      {"validation", {{"pass", r.validation_pass}, {"fail", r.validation_fail}}}};
    if (!r.error.empty()) e["error"] = r.error;
    j["defects"].push_back(std::move(e));
  }
  auto ratio = [](std::optional<double> v) { return v ? ordered_json(*v) : ordered_json("n/a"); };
  j["aggregates"] = {{"defects", m.rows.size()},
                     {"with_candidates", m.with_candidates},
                     {"fully_fixed_by_search", m.fully_fixed},
                     {"plausible", m.plausible},
                     {"correct", m.correct},
                     {"incorrect", m.incorrect},
                     {"precision", ratio(m.precision())},
                     {"recall", ratio(m.recall())}};
  return j;
}

inline std::string metrics_table(const BenchMetrics& m) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %5s %5s %6s %9s %17s\n", "defect", "exit", "cands", "fixed", "plausible",
                "verdict");
  out += line;
  for (const auto& r : m.rows) {
    std::snprintf(line, sizeof line, "%-18s %5d %5zu %6s %9s %17s\n", r.defect.c_str(), r.exit_code, r.candidates,
                  r.fully_fixed ? "yes" : "no", r.plausible ? "yes" : "no",
                  r.error.empty() ? r.verdict.c_str() : "error");
    out += line;
  }
  std::size_t n = m.rows.size();
  auto pct = [n](std::size_t k) { return n ? ratio_text(static_cast<double>(k) / static_cast<double>(n)) : "n/a"; };
  out += "\n";
  out += "defects                 " + std::to_string(n) + "\n";
  out += "with candidates         " + std::to_string(m.with_candidates) + " (" + pct(m.with_candidates) + ")\n";
  out += "fully fixed by search   " + std::to_string(m.fully_fixed) + " (" + pct(m.fully_fixed) + ")\n";
  out += "plausible               " + std::to_string(m.plausible) + " (" + pct(m.plausible) + ")\n";
  out += "correct                 " + std::to_string(m.correct) + "\n";
  out += "incorrect               " + std::to_string(m.incorrect) + "\n";
  out += "precision               " + ratio_text(m.precision()) + "\n";
  out += "recall                  " + ratio_text(m.recall()) + "\n";
  return out;
}

}  // namespace flipguard
