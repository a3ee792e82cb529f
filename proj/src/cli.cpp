// SPDX-License-Identifier: Apache-2.0
#include "graphdec/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "graphdec/dataset_builder.hpp"
#include "graphdec/errors.hpp"
#include "graphdec/eval_harness.hpp"
#include "graphdec/feedback_loop.hpp"
#include "graphdec/graph_analysis.hpp"
#include "graphdec/hash.hpp"

namespace graphdec::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raised for bad flag values that CLI11 cannot check itself.
class UsageError : public Error {
 public:
  using Error::Error;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

std::string now_utc() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<ArchId> parse_archs(const std::vector<std::string>& values) {
  std::vector<ArchId> out;
  for (const auto& v : values) {
    auto a = parse_arch(v);
    if (!a) throw UsageError("unknown architecture '" + v + "'");
    if (std::find(out.begin(), out.end(), *a) == out.end()) out.push_back(*a);
  }
  return out;
}

std::vector<OptLevel> parse_opts(const std::vector<std::string>& values) {
  std::vector<OptLevel> out;
  for (const auto& v : values) {
    auto o = parse_opt_level(v);
    if (!o) throw UsageError("unknown optimization level '" + v + "'");
    if (std::find(out.begin(), out.end(), *o) == out.end()) out.push_back(*o);
  }
  return out;
}

ToolchainMatrix resolve_matrix(const RunConfig& cfg) {
  if (!cfg.matrix.empty()) return load_toolchain_matrix(cfg.matrix);
  if (!cfg.corpus.empty() && fs::exists(cfg.corpus / "matrix.json")) {
    return load_toolchain_matrix(cfg.corpus / "matrix.json");
  }
  return default_host_matrix();
}

fs::path exports_root(const RunConfig& cfg) {
  return cfg.exports.empty() ? cfg.corpus / "exports" : cfg.exports;
}

void write_run_meta(const RunConfig& cfg) {
  if (cfg.out.empty()) return;
  json meta = {{"fingerprint", cfg.fingerprint()},
               {"created_at", now_utc()},
               {"config", cfg.to_json()}};
  write_text(cfg.out / "run_meta.json", meta.dump(2) + "\n");
}

FunctionAnalysis load_valid_bundle(const fs::path& path) {
  FunctionAnalysis f = load_function_bundle(path.string());
  auto report = validate_bundle(f);
  if (!report.ok()) {
    throw SchemaError(path.string() + ": " + std::to_string(report.violations.size()) +
                      " validation violation(s), first: " + report.violations.front().message);
  }
  return f;
}

// ---------------------------------------------------------------- ingest

int cmd_ingest(const RunConfig& cfg, std::ostream& out) {
  std::vector<fs::path> files;
  if (!cfg.function.empty()) {
    files.push_back(cfg.function);
  } else {
    const fs::path root = exports_root(cfg);
    if (!fs::is_directory(root)) throw IoError("no export directory at " + root.string());
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  }
  std::size_t bad = 0;
  json results = json::array();
  for (const auto& path : files) {
    json item = {{"path", path.string()}};
    try {
      auto f = load_function_bundle(path.string());
      auto report = validate_bundle(f);
      json violations = json::array();
      for (const auto& v : report.violations) {
        violations.push_back({{"kind", to_string(v.kind)}, {"block", v.block}, {"message", v.message}});
        out << path.string() << ": " << to_string(v.kind) << ": " << v.message << "\n";
      }
      item["function"] = f.name;
      item["violations"] = violations;
      if (!report.ok()) ++bad;
    } catch (const SchemaError& e) {
      ++bad;
      item["error"] = e.what();
      out << path.string() << ": schema error: " << e.what() << "\n";
    }
    results.push_back(item);
  }
  out << files.size() - bad << " of " << files.size() << " bundle(s) valid\n";
  if (!cfg.out.empty()) {
    write_text(cfg.out / "ingest.json", json{{"files", results}}.dump(2) + "\n");
    write_run_meta(cfg);
  }
  if (files.empty()) return kExitFatal;
  return bad == 0 ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------- analyze

json analysis_to_json(const FunctionAnalysis& f, const StructuralAnalysis& a) {
  const Cfg& g = a.cfg;
  json blocks = json::array();
  for (NodeIndex n : a.order) {
    json succ = json::array();
    for (const auto& s : g.succ(n)) succ.push_back({{"to", g.id(s.target)}, {"kind", to_string(s.kind)}});
    json roles = json::array();
    for (auto r : a.roles[n].names()) roles.push_back(r);
    auto idom = a.dominators.idom(n);
    blocks.push_back({{"id", g.id(n)},
                      {"idom", idom ? json(g.id(*idom)) : json(nullptr)},
                      {"roles", roles},
                      {"succ", succ}});
  }
  json loops = json::array();
  for (const auto& l : a.loops) {
    json body = json::array();
    for (NodeIndex n : l.body) body.push_back(g.id(n));
    json back = json::array();
    for (const auto& e : l.back_edges) back.push_back({{"from", g.id(e.from)}, {"to", g.id(e.to)}});
    loops.push_back({{"header", g.id(l.header)}, {"back_edges", back}, {"body", body}});
  }
  json regions = json::array();
  for (const auto& region : irreducible_regions(g)) {
    json ids = json::array();
    for (NodeIndex n : region) ids.push_back(g.id(n));
    regions.push_back(ids);
  }
  return {{"function", f.name},
          {"reducible", a.reducible},
          {"blocks", blocks},
          {"loops", loops},
          {"irreducible_regions", regions}};
}

int cmd_analyze(const RunConfig& cfg, std::ostream& out) {
  FunctionAnalysis f = load_valid_bundle(cfg.function);
  json j = analysis_to_json(f, analyze_function(f));
  if (cfg.out.empty()) {
    out << j.dump(2) << "\n";
  } else {
    write_text(cfg.out / "analysis.json", j.dump(2) + "\n");
    write_run_meta(cfg);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- prompt

int cmd_prompt(const RunConfig& cfg, std::ostream& out) {
  FunctionAnalysis f = load_valid_bundle(cfg.function);
  PromptBundle p = assemble_prompt(f, analyze_function(f), cfg.experiment.prompt);
  for (const auto& t : p.truncations) spdlog::warn("prompt truncated: {}", t);
  const std::string text = "[SYSTEM]\n" + p.system_text + "\n[USER]\n" + p.user_text;
  if (cfg.out.empty()) {
    out << text;
  } else {
    write_text(cfg.out / "prompt.txt", text);
    write_run_meta(cfg);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- build-corpus

int cmd_build_corpus(const RunConfig& cfg) {
  if (cfg.out.empty()) throw UsageError("build-corpus requires --out");
  auto tasks = load_tasks(cfg.corpus);
  auto matrix = resolve_matrix(cfg);
  std::vector<ArchId> archs = cfg.archs;
  if (archs.empty()) archs.assign(std::begin(kAllArchs), std::end(kAllArchs));
  std::vector<OptLevel> opts = cfg.opts;
  if (opts.empty()) opts.assign(std::begin(kAllOptLevels), std::end(kAllOptLevels));

  fs::create_directories(cfg.out);
  Manifest m = build_corpus(tasks, matrix, archs, opts, cfg.out, {cfg.workers});
  write_manifest(m, cfg.out / "manifest.json");
  write_run_meta(cfg);

  std::map<EntryStatus, std::size_t> counts;
  for (const auto& e : m.entries) ++counts[e.status];
  spdlog::info("corpus: {} entries, {} built, {} toolchain-missing, {} compile-failed",
               m.entries.size(), counts[EntryStatus::built], counts[EntryStatus::toolchain_missing],
               counts[EntryStatus::compile_failed]);
  auto discrepancies = verify_manifest(m, cfg.out);
  for (const auto& d : discrepancies) spdlog::error("manifest: {}: {}", to_string(d.kind), d.message);
  if (!discrepancies.empty()) return kExitFatal;
  return counts[EntryStatus::compile_failed] ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------- decompile

struct Cell {
  const Task* task;
  ArchId arch;
  OptLevel opt;
  fs::path bundle;
};

std::vector<Cell> plan_cells(const RunConfig& cfg, const std::vector<Task>& tasks,
                             std::size_t& missing) {
  const fs::path root = exports_root(cfg);
  std::vector<ArchId> archs = cfg.archs;
  std::vector<OptLevel> opts = cfg.opts;
  const bool explicit_grid = !archs.empty() || !opts.empty();
  if (archs.empty()) archs.assign(std::begin(kAllArchs), std::end(kAllArchs));
  if (opts.empty()) opts.assign(std::begin(kAllOptLevels), std::end(kAllOptLevels));

  std::vector<Cell> cells;
  missing = 0;
  for (const auto& t : tasks) {
    for (auto a : archs) {
      for (auto o : opts) {
        fs::path bundle = root / std::string(to_string(a)) / std::string(to_string(o)) / (t.id + ".json");
        if (fs::exists(bundle)) {
          cells.push_back({&t, a, o, bundle});
        } else if (explicit_grid) {
          // Without an explicit grid the run covers whatever was exported.
          spdlog::error("{} [{} {}]: no export at {}", t.id, to_string(a), to_string(o), bundle.string());
          ++missing;
        }
      }
    }
  }
  return cells;
}

int cmd_decompile(const RunConfig& cfg) {
  if (cfg.out.empty()) throw UsageError("decompile requires --out");
  auto tasks = load_tasks(cfg.corpus);
  auto matrix = resolve_matrix(cfg);
  std::size_t missing = 0;
  auto cells = plan_cells(cfg, tasks, missing);
  if (cells.empty()) throw IoError("no exported functions found under " + exports_root(cfg).string());
  for (const auto& c : cells) {
    if (!matrix.find(c.arch)) {
      throw ToolchainUnavailable("no toolchain configured for " + std::string(to_string(c.arch)));
    }
  }

  std::map<std::string, fs::path, std::less<>> sources;
  for (const auto& t : tasks) sources[t.reference_function] = t.source_path;
  LlmGateway::Options gw_opts;
  gw_opts.max_in_flight = std::max<std::size_t>(cfg.workers, 1);
  gw_opts.audit_log = cfg.out / "model_calls.jsonl";
  gw_opts.references = [sources](std::string_view fn) -> std::optional<std::string> {
    auto it = sources.find(fn);
    if (it == sources.end()) return std::nullopt;
    return read_text(it->second);
  };
  fs::create_directories(cfg.out);
  write_run_meta(cfg);
  LlmGateway gateway(cfg.model, gw_opts);

  const std::string fingerprint = experiment_fingerprint(cfg.experiment);
  const std::string label = cfg.config_label();
  std::vector<std::optional<EvalRecord>> records(cells.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> errored{0};
  std::atomic<bool> fatal{false};
  std::mutex fatal_mutex;
  std::string fatal_message;

  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size() && !fatal; i = next++) {
      const Cell& c = cells[i];
      try {
        FunctionAnalysis f = load_valid_bundle(c.bundle);
        AttemptOptions opts;
        opts.harness_source = read_text(c.task->harness_path);
        opts.artifact_dir = cfg.out / c.task->id / std::string(to_string(c.arch)) /
                            std::string(to_string(c.opt));
        opts.config_fingerprint = fingerprint;
        auto attempt = decompile_function(f, cfg.experiment.prompt, gateway,
                                          *matrix.find(c.arch), cfg.experiment.enable_feedback, opts);
        records[i] = evaluate_attempt(attempt, read_text(c.task->source_path), label);
        records[i]->task = c.task->id;
      } catch (const AuthError& e) {
        std::lock_guard lock(fatal_mutex);
        fatal = true;
        fatal_message = e.what();
      } catch (const ToolchainUnavailable& e) {
        std::lock_guard lock(fatal_mutex);
        fatal = true;
        fatal_message = e.what();
      } catch (const std::exception& e) {
        ++errored;
        spdlog::error("{} [{} {}]: {}", c.task->id, to_string(c.arch), to_string(c.opt), e.what());
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < std::min(cfg.workers, cells.size()); ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (fatal) throw Error(fatal_message);

  std::vector<EvalRecord> done;
  for (auto& r : records) {
    if (r) done.push_back(std::move(*r));
  }
  write_records_jsonl(cfg.out / "results.jsonl", done);
  if (!done.empty()) {
    auto table = aggregate(done);
    for (auto f : {ReportFormat::csv, ReportFormat::json, ReportFormat::markdown}) {
      emit_report(table, f, cfg.out / ("report." + std::string(extension_for(f))));
    }
  }
  std::size_t compiled = std::count_if(done.begin(), done.end(), [](const EvalRecord& r) { return r.compilable; });
  spdlog::info("decompile: {} attempt(s), {} compilable, {} errored, {} missing export(s)",
               done.size(), compiled, errored.load(), missing);
  return errored == 0 && missing == 0 ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(RunConfig cfg) {
  if (cfg.out.empty()) throw UsageError("evaluate requires --out (a decompile output directory)");
  auto tasks = load_tasks(cfg.corpus);
  std::string label = std::string(to_string(cfg.preset));
  if (fs::exists(cfg.out / "run_meta.json")) {
    json meta = json::parse(read_text(cfg.out / "run_meta.json"), nullptr, false);
    if (!meta.is_discarded() && meta.contains("config")) {
      label = meta["config"].value("label", meta["config"].value("preset", label));
    }
  }
  std::vector<EvalRecord> records;
  std::size_t bad = 0;
  for (const auto& t : tasks) {
    const fs::path task_dir = cfg.out / t.id;
    if (!fs::is_directory(task_dir)) continue;
    std::vector<fs::path> attempts;
    for (const auto& e : fs::recursive_directory_iterator(task_dir)) {
      if (e.is_regular_file() && e.path().filename() == "attempt.json") attempts.push_back(e.path());
    }
    std::sort(attempts.begin(), attempts.end());
    const std::string reference = read_text(t.source_path);
    for (const auto& p : attempts) {
      try {
        json j = json::parse(read_text(p), nullptr, false);
        if (j.is_discarded()) throw SchemaError(p.string() + ": malformed JSON");
        auto r = evaluate_attempt(attempt_from_json(j), reference, label);
        r.task = t.id;
        records.push_back(std::move(r));
      } catch (const Error& e) {
        ++bad;
        spdlog::error("{}: {}", p.string(), e.what());
      }
    }
  }
  if (records.empty()) throw EmptyInput("no attempt.json files under " + cfg.out.string());
  write_records_jsonl(cfg.out / "results.jsonl", records);
  spdlog::info("evaluate: {} record(s) written", records.size());
  return bad == 0 ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------- report

int cmd_report(const RunConfig& cfg) {
  fs::path results = cfg.results;
  if (results.empty()) {
    if (cfg.out.empty()) throw UsageError("report requires --results or --out");
    results = cfg.out / "results.jsonl";
  }
  fs::path out_dir = cfg.out.empty() ? results.parent_path() : cfg.out;
  auto records = read_records_jsonl(results);
  auto table = aggregate(records);
  std::vector<std::string> formats = cfg.formats;
  if (formats.empty()) formats = {"csv", "json", "markdown"};
  for (const auto& name : formats) {
    auto f = parse_report_format(name);
    if (!f) throw UsageError("unknown report format '" + name + "'");
    emit_report(table, *f, out_dir / ("report." + std::string(extension_for(*f))));
  }
  if (!cfg.out.empty()) write_run_meta(cfg);
  return kExitOk;
}

void install_logger(bool verbose, bool quiet) {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_color_mt("graphdec");
    logger->set_pattern("%^%l%$: %v");
    spdlog::set_default_logger(logger);
  });
  spdlog::set_level(quiet ? spdlog::level::warn : verbose ? spdlog::level::debug : spdlog::level::info);
}

}  // namespace

std::string_view to_string(Preset p) {
  switch (p) {
    case Preset::base: return "base";
    case Preset::cfg: return "cfg";
    case Preset::rules: return "rules";
    case Preset::func: return "func";
    case Preset::full: return "full";
  }
  return "?";
}

std::optional<Preset> parse_preset(std::string_view text) {
  for (auto p : {Preset::base, Preset::cfg, Preset::rules, Preset::func, Preset::full}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

ExperimentConfig preset_config(Preset p) {
  ExperimentConfig e;
  e.prompt.include_cfg = p != Preset::base;
  e.prompt.include_rules = p == Preset::rules || p == Preset::func || p == Preset::full;
  e.prompt.include_function_context = p == Preset::func || p == Preset::full;
  e.enable_feedback = p == Preset::full;
  return e;
}

std::string experiment_fingerprint(const ExperimentConfig& e) {
  return fingerprint_hex(e.prompt.canonical() + ";feedback=" + (e.enable_feedback ? "1" : "0"));
}

json RunConfig::to_json() const {
  json archs_j = json::array();
  for (auto a : archs) archs_j.push_back(graphdec::to_string(a));
  json opts_j = json::array();
  for (auto o : opts) opts_j.push_back(graphdec::to_string(o));
  return {{"subcommand", subcommand},
          {"preset", cli::to_string(preset)},
          {"label", config_label()},
          {"prompt", experiment.prompt.canonical()},
          {"enable_feedback", experiment.enable_feedback},
          {"experiment_fingerprint", experiment_fingerprint(experiment)},
          {"model", model.canonical()},
          {"corpus", corpus.string()},
          {"exports", exports.string()},
          {"out", out.string()},
          {"matrix", matrix.string()},
          {"function", function.string()},
          {"results", results.string()},
          {"archs", archs_j},
          {"opts", opts_j},
          {"workers", workers}};
}

std::string RunConfig::config_label() const {
  std::string label(cli::to_string(preset));
  if (experiment.enable_feedback != preset_config(preset).enable_feedback) {
    label += experiment.enable_feedback ? "+feedback" : "-feedback";
  }
  return label;
}

std::string RunConfig::fingerprint() const { return fingerprint_hex(to_json().dump()); }

int run(const std::vector<std::string>& args, std::ostream& out) {
  CLI::App app{"Graph-aware LLM decompilation toolkit", "graphdec"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  RunConfig cfg;
  std::string preset = "full";
  std::string model_uri = "mock:echo-reference";
  std::string corpus, exports, out_dir, matrix, function, results;
  std::vector<std::string> archs, opts, formats;
  std::size_t workers = 1;
  int token_budget = PromptConfig{}.token_budget;
  std::string rule_set = PromptConfig{}.rule_set_version;

  auto add_preset = [&](CLI::App* sc) {
    sc->add_option("--preset", preset, "Ablation preset: base, cfg, rules, func, full")
        ->check(CLI::IsMember({"base", "cfg", "rules", "func", "full"}));
    sc->add_option("--token-budget", token_budget, "Prompt token budget");
    sc->add_option("--rules", rule_set, "Rule set version");
  };
  auto add_feedback = [](CLI::App* sc) {
    sc->add_flag("--feedback", "Enable the compiler-feedback repair round");
    sc->add_flag("--no-feedback", "Disable the compiler-feedback repair round");
  };
  auto add_grid = [&](CLI::App* sc) {
    sc->add_option("--arch", archs, "Architectures")->delimiter(',');
    sc->add_option("--opt", opts, "Optimization levels")->delimiter(',');
    sc->add_option("--matrix", matrix, "Toolchain matrix JSON");
    sc->add_option("--workers", workers, "Parallel workers")->check(CLI::Range(1, 64));
  };

  auto* build = app.add_subcommand("build-corpus", "Compile tasks across the toolchain matrix");
  build->add_option("--corpus", corpus, "Corpus directory with tasks/")->required();
  build->add_option("--out", out_dir, "Output directory")->required();
  add_grid(build);

  auto* ingest = app.add_subcommand("ingest", "Validate exported function bundles");
  ingest->add_option("--function", function, "Single bundle");
  ingest->add_option("--corpus", corpus, "Corpus directory");
  ingest->add_option("--exports", exports, "Export directory");
  ingest->add_option("--out", out_dir, "Output directory");

  auto* analyze = app.add_subcommand("analyze", "Print the structural analysis of a bundle");
  analyze->add_option("--function", function, "Function bundle")->required();
  analyze->add_option("--out", out_dir, "Output directory");

  auto* prompt = app.add_subcommand("prompt", "Print the assembled prompt for a bundle");
  prompt->add_option("--function", function, "Function bundle")->required();
  prompt->add_option("--out", out_dir, "Output directory");
  add_preset(prompt);

  auto* decompile = app.add_subcommand("decompile", "Decompile, compile, link and test every export");
  decompile->add_option("--corpus", corpus, "Corpus directory with tasks/")->required();
  decompile->add_option("--exports", exports, "Export directory (default <corpus>/exports)");
  decompile->add_option("--out", out_dir, "Output directory")->required();
  decompile->add_option("--model", model_uri, "mock:<name>, openai:<model> or gemini:<model>");
  add_preset(decompile);
  add_feedback(decompile);
  add_grid(decompile);

  auto* evaluate = app.add_subcommand("evaluate", "Recompute results.jsonl from attempt artifacts");
  evaluate->add_option("--corpus", corpus, "Corpus directory with tasks/")->required();
  evaluate->add_option("--out", out_dir, "Decompile output directory")->required();

  auto* report = app.add_subcommand("report", "Aggregate results.jsonl into report files");
  report->add_option("--results", results, "results.jsonl");
  report->add_option("--out", out_dir, "Output directory");
  report->add_option("--format", formats, "csv, json, markdown")->delimiter(',');

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  install_logger(verbose, quiet);

  try {
    CLI::App* sc = app.get_subcommands().front();
    cfg.subcommand = sc->get_name();
    cfg.preset = *parse_preset(preset);
    cfg.experiment = preset_config(cfg.preset);
    cfg.experiment.prompt.token_budget = token_budget;
    cfg.experiment.prompt.rule_set_version = rule_set;
    if (sc->get_option_no_throw("--feedback") && sc->count("--feedback")) {
      if (sc->count("--no-feedback")) throw UsageError("--feedback and --no-feedback are exclusive");
      cfg.experiment.enable_feedback = true;
    } else if (sc->get_option_no_throw("--no-feedback") && sc->count("--no-feedback")) {
      cfg.experiment.enable_feedback = false;
    }
    try {
      cfg.model = parse_model_uri(model_uri);
    } catch (const ContractError& e) {
      throw UsageError(e.what());
    }
    cfg.corpus = corpus;
    cfg.exports = exports;
    cfg.out = out_dir;
    cfg.matrix = matrix;
    cfg.function = function;
    cfg.results = results;
    cfg.archs = parse_archs(archs);
    cfg.opts = parse_opts(opts);
    cfg.formats = formats;
    cfg.workers = workers;
    if (cfg.subcommand == "ingest" && function.empty() && corpus.empty() && exports.empty()) {
      throw UsageError("ingest requires --function, --exports or --corpus");
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (cfg.subcommand == "build-corpus") return cmd_build_corpus(cfg);
    if (cfg.subcommand == "ingest") return cmd_ingest(cfg, out);
    if (cfg.subcommand == "analyze") return cmd_analyze(cfg, out);
    if (cfg.subcommand == "prompt") return cmd_prompt(cfg, out);
    if (cfg.subcommand == "decompile") return cmd_decompile(cfg);
    if (cfg.subcommand == "evaluate") return cmd_evaluate(cfg);
    if (cfg.subcommand == "report") return cmd_report(cfg);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFatal;
  }
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout);
}

}  // namespace graphdec::cli
