#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "flipguard/bench.hpp"

namespace fs = std::filesystem;
using namespace flipguard;

namespace {

std::vector<Pattern> parse_patterns(const std::string& list) {
  std::vector<Pattern> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto p = pattern_named(item);
    if (!p) throw ConfigError("unknown pattern '" + item + "'");
    out.push_back(*p);
  }
  if (out.empty()) throw ConfigError("empty pattern list");
  return out;
}

RankMethod parse_fl(const std::string& s) {
  if (s == "all") return RankMethod::All;
  if (s == "ochiai") return RankMethod::Ochiai;
  throw ConfigError("unknown fault localization method '" + s + "'");
}

struct RepairArgs {
  std::string program, train, validation, reference, params, out, emit_dir, defect;
  std::string patterns, fl = "all";
  std::size_t topk = 0, max_candidates = 20, validation_n = 1000, min_samples = 1;
  int max_depth = 8;
  std::int64_t step_budget = kDefaultStepBudget;
  std::uint64_t seed = 7;
  bool simplify = false, no_timings = false;
};

int do_repair(const RepairArgs& a) {
  RepairConfig cfg;
  cfg.defect = a.defect.empty() ? fs::path(a.program).stem().string() : a.defect;
  if (!a.patterns.empty()) cfg.patterns = parse_patterns(a.patterns);
  cfg.fl = parse_fl(a.fl);
  cfg.topk = a.topk;
  cfg.max_candidates = a.max_candidates;
  cfg.tree.max_depth = a.max_depth;
  cfg.tree.min_samples = a.min_samples;
  cfg.step_budget = a.step_budget;
  cfg.simplify = a.simplify;
  cfg.timings = !a.no_timings;

  Program p = load_program(a.program);
  TestSuite train = load_suite(a.train, p);
  std::optional<TestSuite> validation;
  if (!a.validation.empty()) {
    validation = load_suite(a.validation, p);
  } else if (!a.reference.empty()) {
    GenConfig gen;
    gen.n = a.validation_n;
    gen.seed = a.seed;
    if (!a.params.empty()) {
      auto meta = nlohmann::json::parse(read_file(a.params));
      gen = gen_config_from_json(meta.value("params", nlohmann::json::object()), gen);
    }
    validation = gen_validation(load_program(a.reference), gen, a.step_budget).suite;
  }

  RepairResult r = repair(p, train, validation ? &*validation : nullptr, cfg);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";

  std::string report = report_json(p, r, cfg).dump(2) + "\n";
  if (a.out.empty()) std::cout << report;
  else write_file(a.out, report);

  if (!a.emit_dir.empty()) {
    fs::create_directories(a.emit_dir);
    for (std::size_t i = 0; i < r.patches.size(); ++i) {
      std::string stem = cfg.defect + ".patch" + std::to_string(i + 1);
      write_file(fs::path(a.emit_dir) / (stem + ".mimp"), r.patches[i].patch.source);
      write_file(fs::path(a.emit_dir) / (stem + ".diff"), r.patches[i].diff);
    }
  }

  if (const PatchOutcome* top = r.top_patch()) {
    std::cerr << "top patch at site " << top->site << " (" << pattern_name(top->pattern) << "): "
              << p.sites[static_cast<std::size_t>(top->site)].clause << "  ->  " << top->patch.condition << " ["
              << to_string(top->verdict) << "]\n";
  } else if (r.exit_code == kEmptyQueue) {
    std::cerr << "no (site, pattern) pair fixes any failing test\n";
  } else {
    std::cerr << "no plausible patch among " << r.classifiers.size() << " classified candidate(s)\n";
  }
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Repairs branch conditions by learning when to negate them"};
  app.require_subcommand(1);

  RepairArgs ra;
  auto* rep = app.add_subcommand("repair", "Search, learn and synthesize guard patches for one program");
  rep->add_option("program", ra.program, "Program (.mimp)")->required();
  rep->add_option("train", ra.train, "Training suite (.tests)")->required();
  rep->add_option("--validation", ra.validation, "Held-out validation suite (.tests)");
  rep->add_option("--reference", ra.reference, "Correct program to generate a validation suite from");
  rep->add_option("--params", ra.params, "defect.json with per-parameter ranges for --reference");
  rep->add_option("--validation-n", ra.validation_n, "Generated validation size")->capture_default_str();
  rep->add_option("--seed", ra.seed, "Seed for generated validation inputs")->capture_default_str();
  rep->add_option("--patterns", ra.patterns, "Comma-separated pattern subset (default: all 11)");
  rep->add_option("--fl", ra.fl, "Site ranking: all | ochiai")->capture_default_str();
  rep->add_option("--topk", ra.topk, "Keep only the k best-ranked sites (0 = all)")->capture_default_str();
  rep->add_option("--max-candidates", ra.max_candidates, "Candidates to classify")->capture_default_str();
  rep->add_option("--max-depth", ra.max_depth, "Tree depth limit")->capture_default_str();
  rep->add_option("--min-samples", ra.min_samples, "Minimum samples per tree child")->capture_default_str();
  rep->add_option("--step-budget", ra.step_budget, "Interpreter steps per run")->capture_default_str();
  rep->add_flag("--simplify", ra.simplify, "Drop implied literals from guards");
  rep->add_flag("--no-timings", ra.no_timings, "Report zero timings (byte-stable output)");
  rep->add_option("--defect", ra.defect, "Name used in the report (default: program file stem)");
  rep->add_option("--out", ra.out, "JSON report path (default: stdout)");
  rep->add_option("--emit-dir", ra.emit_dir, "Write each patch as .mimp and .diff here");

  std::string corpus, bench_out, table_out;
  BenchConfig bc;
  auto* ben = app.add_subcommand("bench", "Repair every defect of a corpus and report metrics");
  ben->add_option("corpus", corpus, "Corpus directory")->required();
  ben->add_option("--jobs", bc.jobs, "Defects repaired in parallel")->capture_default_str();
  ben->add_option("--out", bench_out, "Metrics JSON path (default: stdout)");
  ben->add_option("--table", table_out, "Text table path (default: stderr)");
  ben->add_option("--seed", bc.seed, "Seed for generated validation inputs")->capture_default_str();
  ben->add_option("--validation-n", bc.validation_n, "Generated validation size per defect")->capture_default_str();
  ben->add_option("--max-candidates", bc.repair.max_candidates, "Candidates to classify")->capture_default_str();
  ben->add_option("--step-budget", bc.repair.step_budget, "Interpreter steps per run")->capture_default_str();

  std::string ref_path, gen_out, params_path;
  GenConfig gc;
  auto* gen = app.add_subcommand("gen-validation", "Generate a labelled suite from a reference program");
  gen->add_option("reference", ref_path, "Reference program (.mimp)")->required();
  gen->add_option("--n", gc.n, "Number of tests")->required();
  gen->add_option("--seed", gc.seed, "Seed")->required();
  gen->add_option("--out", gen_out, "Output suite path (default: stdout)");
  gen->add_option("--params", params_path, "defect.json with per-parameter ranges");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*rep) return do_repair(ra);
    if (*ben) {
      BenchMetrics m = bench(list_corpus(corpus), bc);
      std::string json = metrics_json(m).dump(2) + "\n";
      if (bench_out.empty()) std::cout << json;
      else write_file(bench_out, json);
      if (table_out.empty()) std::cerr << metrics_table(m);
      else write_file(table_out, metrics_table(m));
      return 0;
    }
    Program ref = load_program(ref_path);
    if (!params_path.empty()) {
      auto meta = nlohmann::json::parse(read_file(params_path));
      gc = gen_config_from_json(meta.value("params", nlohmann::json::object()), gc);
    }
    GeneratedSuite g = gen_validation(ref, gc);
    for (const auto& w : g.warnings) std::cerr << "warning: " << w << "\n";
    std::string text = format_test_suite(g.suite);
    if (gen_out.empty()) std::cout << text;
    else write_file(gen_out, text);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
}
