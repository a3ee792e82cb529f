// SPDX-License-Identifier: Apache-2.0
#include "graphdec/feedback_loop.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "graphdec/errors.hpp"
#include "graphdec/graph_analysis.hpp"
#include "graphdec/subprocess.hpp"

namespace graphdec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kTruncationMarkerPrefix = "[... ";

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> probe(std::vector<std::string> argv) {
  if (argv.empty() || !find_executable(argv[0])) {
    throw ToolchainUnavailable("toolchain program '" + (argv.empty() ? std::string() : argv[0]) +
                               "' not found");
  }
  return argv;
}

std::chrono::milliseconds stage_timeout(const Toolchain& t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.timeout);
}

std::string process_diagnostics(const ProcessResult& r, const Toolchain& t, std::string_view what) {
  std::string diag = r.stderr_text;
  if (diag.empty()) diag = r.stdout_text;
  if (r.timed_out) {
    diag += std::string(what) + " timed out after " + std::to_string(t.timeout.count()) + "s\n";
  } else if (diag.empty()) {
    diag = std::string(what) + " exited with status " + std::to_string(r.exit_code) + "\n";
  }
  return truncate_diagnostics(diag);
}

StageResult fail_without_process(std::string message) {
  StageResult r;
  r.status = StageStatus::fail;
  r.diagnostics = std::move(message);
  return r;
}

json stage_to_json(const StageResult& s) {
  return {{"status", to_string(s.status)},
          {"diagnostics", s.diagnostics},
          {"duration_ms", s.duration.count()}};
}

StageResult stage_from_json(const json& j) {
  StageResult s;
  auto status = j.at("status").get<std::string>();
  s.status = status == "pass" ? StageStatus::pass
             : status == "fail" ? StageStatus::fail
                                : StageStatus::skipped;
  s.diagnostics = j.value("diagnostics", std::string());
  s.duration = std::chrono::milliseconds(j.value("duration_ms", 0));
  return s;
}

// Extracted candidate, or an empty string plus the reason it is unusable.
std::pair<std::string, std::string> candidate_from(const ModelResponse& r) {
  if (r.finish_reason == FinishReason::error) {
    return {"", "model returned an error instead of a candidate\n"};
  }
  try {
    return {extract_code(r), ""};
  } catch (const NoCodeFound&) {
    return {"", "model response contained no C code\n"};
  }
}

}  // namespace

std::string Toolchain::opt_flag(OptLevel opt) const {
  if (auto it = opt_flags.find(opt); it != opt_flags.end()) return it->second;
  return "-" + std::string(to_string(opt));
}

void Toolchain::validate() const {
  auto need = [](const std::string& templ, std::string_view what,
                 std::initializer_list<std::string_view> keys) {
    for (auto key : keys) {
      if (templ.find(key) == std::string::npos) {
        throw ContractError(std::string(what) + " template lacks placeholder " + std::string(key));
      }
    }
  };
  need(compile_cmd_template, "compile", {"{src}", "{out}", "{opt}"});
  need(link_cmd_template, "link", {"{obj}", "{harness}", "{out}"});
  if (!run_cmd_template.empty()) need(run_cmd_template, "run", {"{exe}"});
}

const Toolchain* ToolchainMatrix::find(ArchId arch) const {
  for (const auto& t : toolchains) {
    if (t.arch == arch) return &t;
  }
  return nullptr;
}

ToolchainMatrix parse_toolchain_matrix(std::string_view json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("toolchains") ||
      !doc["toolchains"].is_array()) {
    throw SchemaError("toolchain matrix must be an object with a 'toolchains' array");
  }
  ToolchainMatrix m;
  for (const auto& entry : doc["toolchains"]) {
    try {
      Toolchain t;
      auto arch_text = entry.at("arch").get<std::string>();
      auto arch = parse_arch(arch_text);
      if (!arch) throw SchemaError("unknown architecture '" + arch_text + "'");
      t.arch = *arch;
      t.compile_cmd_template = entry.at("compile").get<std::string>();
      t.link_cmd_template = entry.at("link").get<std::string>();
      t.run_cmd_template = entry.value("run", std::string());
      t.timeout = std::chrono::seconds(entry.value("timeout_seconds", 10));
      if (entry.contains("opt_flags")) {
        for (const auto& [k, v] : entry["opt_flags"].items()) {
          auto opt = parse_opt_level(k);
          if (!opt) throw SchemaError("unknown opt level '" + k + "'");
          t.opt_flags[*opt] = v.get<std::string>();
        }
      }
      t.validate();
      if (m.find(t.arch)) throw SchemaError("duplicate toolchain for " + arch_text);
      m.toolchains.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw SchemaError(std::string("toolchain entry: ") + e.what());
    } catch (const ContractError& e) {
      throw SchemaError(e.what());
    }
  }
  return m;
}

ToolchainMatrix load_toolchain_matrix(const fs::path& path) {
  return parse_toolchain_matrix(read_file(path));
}

json toolchain_matrix_to_json(const ToolchainMatrix& m) {
  json arr = json::array();
  for (const auto& t : m.toolchains) {
    json flags = json::object();
    for (const auto& [opt, f] : t.opt_flags) flags[std::string(to_string(opt))] = f;
    arr.push_back({{"arch", to_string(t.arch)},
                   {"compile", t.compile_cmd_template},
                   {"link", t.link_cmd_template},
                   {"run", t.run_cmd_template},
                   {"timeout_seconds", t.timeout.count()},
                   {"opt_flags", flags}});
  }
  return {{"toolchains", arr}};
}

ToolchainMatrix default_host_matrix() {
  Toolchain t;
  t.arch = host_arch();
  t.compile_cmd_template = "gcc -c {opt} {src} -o {out}";
  t.link_cmd_template = "gcc {obj} {harness} -o {out} -lm";
  t.run_cmd_template = "{exe}";
  t.timeout = std::chrono::seconds(10);
  return {{t}};
}

std::vector<std::string> expand_command(std::string_view templ,
                                        const std::map<std::string, std::string>& values,
                                        std::string_view opt_flags) {
  std::vector<std::string> argv;
  for (auto& word : split_words(templ)) {
    if (word == "{opt}") {
      for (auto& f : split_words(opt_flags)) argv.push_back(f);
      continue;
    }
    replace_all(word, "{opt}", opt_flags);
    for (const auto& [key, value] : values) replace_all(word, "{" + key + "}", value);
    argv.push_back(std::move(word));
  }
  return argv;
}

std::string_view to_string(StageStatus s) {
  switch (s) {
    case StageStatus::pass: return "pass";
    case StageStatus::fail: return "fail";
    case StageStatus::skipped: return "skipped";
  }
  return "?";
}

std::string truncate_diagnostics(std::string_view text, std::size_t max_lines) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  bool has_marker = !lines.empty() && lines.back().starts_with(kTruncationMarkerPrefix) &&
                    lines.back().ends_with("truncated ...]");
  std::size_t content = lines.size() - (has_marker ? 1 : 0);
  if (content <= max_lines) {
    std::string out(text);
    if (!out.empty() && out.back() != '\n') out += '\n';
    return out;
  }
  std::string out;
  for (std::size_t i = 0; i < max_lines; ++i) {
    out += lines[i];
    out += '\n';
  }
  out += std::string(kTruncationMarkerPrefix) + std::to_string(content - max_lines) +
         " more lines truncated ...]\n";
  return out;
}

StageResult compile_object(std::string_view source, const Toolchain& t, OptLevel opt,
                           const fs::path& workdir, std::string_view stem) {
  const fs::path src = workdir / (std::string(stem) + ".c");
  const fs::path obj = workdir / (std::string(stem) + ".o");
  auto argv = probe(expand_command(t.compile_cmd_template,
                                   {{"src", src.string()}, {"out", obj.string()}},
                                   t.opt_flag(opt)));
  write_file(src, source);
  std::error_code ec;
  fs::remove(obj, ec);

  auto r = run_process(argv, workdir, stage_timeout(t));
  StageResult s;
  s.duration = r.duration;
  if (r.ok() && fs::exists(obj)) {
    s.status = StageStatus::pass;
  } else {
    s.status = StageStatus::fail;
    s.diagnostics = process_diagnostics(r, t, "compiler");
  }
  return s;
}

StageResult link_executable(const fs::path& object, std::string_view harness_source,
                            const Toolchain& t, const fs::path& workdir) {
  const fs::path harness = workdir / "harness.c";
  const fs::path exe = workdir / "exe";
  auto argv = probe(expand_command(
      t.link_cmd_template,
      {{"obj", object.string()}, {"harness", harness.string()}, {"out", exe.string()}}));
  write_file(harness, harness_source);
  std::error_code ec;
  fs::remove(exe, ec);

  auto r = run_process(argv, workdir, stage_timeout(t));
  StageResult s;
  s.duration = r.duration;
  if (r.ok() && fs::exists(exe)) {
    s.status = StageStatus::pass;
  } else {
    s.status = StageStatus::fail;
    s.diagnostics = process_diagnostics(r, t, "linker");
  }
  return s;
}

StageResult run_tests(const fs::path& exe, const Toolchain& t, const fs::path& workdir) {
  StageResult s;
  if (t.run_cmd_template.empty()) {
    s.diagnostics = "no run command configured for " + std::string(to_string(t.arch)) + "\n";
    return s;
  }
  auto argv = expand_command(t.run_cmd_template, {{"exe", exe.string()}});
  if (argv.empty() || !find_executable(argv[0])) {
    s.diagnostics = "launcher '" + (argv.empty() ? std::string() : argv[0]) + "' not found\n";
    return s;
  }
  auto r = run_process(argv, workdir, stage_timeout(t));
  s.duration = r.duration;
  if (r.ok()) {
    s.status = StageStatus::pass;
  } else {
    s.status = StageStatus::fail;
    s.diagnostics = process_diagnostics(r, t, "test executable");
  }
  return s;
}

PromptBundle build_repair_prompt(const PromptBundle& prompt, std::string_view diagnostics,
                                 std::string_view previous_candidate) {
  if (std::all_of(diagnostics.begin(), diagnostics.end(),
                  [](unsigned char c) { return std::isspace(c) != 0; })) {
    throw ContractError("repair prompt requires non-empty diagnostics");
  }
  const bool has_structure = prompt.span(kCfgOverview).has_value();

  std::string section = segment_header(kCompilerFeedback) + "\n";
  if (!previous_candidate.empty()) {
    section += "Your previous answer failed to compile:\n```c\n";
    section += previous_candidate;
    if (section.back() != '\n') section += '\n';
    section += "```\n";
  }
  section += "Compiler diagnostics:\n";
  section += truncate_diagnostics(diagnostics);
  if (has_structure) {
    section +=
        "Correct the code so that it compiles while maintaining control-flow consistency "
        "with [CFG_OVERVIEW] and [BLOCK_DETAILS].";
  } else {
    section += "Correct the code so that it compiles while preserving the behavior of "
               "[RAW_DECOMPILED_CODE].";
  }
  section += " Reply with the corrected C source in a single ```c fenced code block.\n";

  PromptBundle out = prompt;
  out.user_text += '\n';
  std::size_t start = out.user_text.size();
  out.user_text += section;
  out.segment_spans.emplace_back(std::string(kCompilerFeedback),
                                 TextSpan{start, out.user_text.size()});
  out.estimated_tokens = estimate_tokens(out.system_text.size() + out.user_text.size());
  return out;
}

std::string import_header(const std::vector<std::string>& imported_functions) {
  static const std::map<std::string, std::string, std::less<>> kHeaderFor = {
      {"strlen", "string.h"},  {"strcmp", "string.h"},  {"strncmp", "string.h"},
      {"strcpy", "string.h"},  {"strncpy", "string.h"}, {"strcat", "string.h"},
      {"strchr", "string.h"},  {"strrchr", "string.h"}, {"strstr", "string.h"},
      {"memcpy", "string.h"},  {"memmove", "string.h"}, {"memset", "string.h"},
      {"memcmp", "string.h"},  {"malloc", "stdlib.h"},  {"calloc", "stdlib.h"},
      {"realloc", "stdlib.h"}, {"free", "stdlib.h"},    {"abs", "stdlib.h"},
      {"atoi", "stdlib.h"},    {"qsort", "stdlib.h"},   {"exit", "stdlib.h"},
      {"printf", "stdio.h"},   {"sprintf", "stdio.h"},  {"snprintf", "stdio.h"},
      {"puts", "stdio.h"},     {"putchar", "stdio.h"},  {"fprintf", "stdio.h"},
      {"sqrt", "math.h"},      {"pow", "math.h"},       {"fabs", "math.h"},
      {"floor", "math.h"},     {"ceil", "math.h"},      {"toupper", "ctype.h"},
      {"tolower", "ctype.h"},  {"isdigit", "ctype.h"},  {"isalpha", "ctype.h"},
      {"isspace", "ctype.h"},  {"isupper", "ctype.h"},  {"islower", "ctype.h"},
  };
  std::set<std::string> headers;
  for (const auto& name : imported_functions) {
    if (auto it = kHeaderFor.find(name); it != kHeaderFor.end()) headers.insert(it->second);
  }
  std::string out;
  for (const auto& h : headers) out += "#include <" + h + ">\n";
  return out;
}

json attempt_to_json(const DecompilationAttempt& a) {
  json j = {{"function_ref", a.function_ref},
            {"arch", to_string(a.arch)},
            {"opt", to_string(a.opt)},
            {"config_fingerprint", a.config_fingerprint},
            {"first_candidate", a.first_candidate},
            {"repair_used", a.repair_used},
            {"first_compile", stage_to_json(a.first_compile)},
            {"compile", stage_to_json(a.compile)},
            {"link", stage_to_json(a.link)},
            {"test", stage_to_json(a.test)},
            {"model_calls", a.model_calls}};
  j["repair_candidate"] = a.repair_candidate ? json(*a.repair_candidate) : json(nullptr);
  return j;
}

DecompilationAttempt attempt_from_json(const json& j) {
  try {
    DecompilationAttempt a;
    a.function_ref = j.at("function_ref").get<std::string>();
    auto arch = parse_arch(j.at("arch").get<std::string>());
    auto opt = parse_opt_level(j.at("opt").get<std::string>());
    if (!arch || !opt) throw SchemaError("attempt: bad arch or opt");
    a.arch = *arch;
    a.opt = *opt;
    a.config_fingerprint = j.value("config_fingerprint", std::string());
    a.first_candidate = j.at("first_candidate").get<std::string>();
    if (j.contains("repair_candidate") && j["repair_candidate"].is_string()) {
      a.repair_candidate = j["repair_candidate"].get<std::string>();
    }
    a.repair_used = j.at("repair_used").get<bool>();
    a.first_compile = stage_from_json(j.at("first_compile"));
    a.compile = stage_from_json(j.at("compile"));
    a.link = stage_from_json(j.at("link"));
    a.test = stage_from_json(j.at("test"));
    a.model_calls = j.at("model_calls").get<int>();
    return a;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("attempt: ") + e.what());
  }
}

DecompilationAttempt decompile_function(const FunctionAnalysis& f, const PromptConfig& config,
                                        LlmGateway& gateway, const Toolchain& toolchain,
                                        bool enable_feedback, const AttemptOptions& options) {
  const StructuralAnalysis analysis = analyze_function(f);
  const PromptBundle prompt = assemble_prompt(f, analysis, config);

  DecompilationAttempt a;
  a.function_ref = f.name;
  a.arch = f.architecture;
  a.opt = f.opt_level;
  a.config_fingerprint = options.config_fingerprint.value_or(prompt.config_fingerprint);

  TempDir work("graphdec-attempt");
  const std::string prelude = import_header(f.metadata.imported_functions);
  if (!prelude.empty()) write_file(work.path() / "graphdec_imports.h", prelude);

  auto compile_candidate = [&](const std::string& candidate, std::string_view unusable,
                               std::string_view stem) {
    if (candidate.empty()) return fail_without_process(std::string(unusable));
    std::string source = candidate;
    if (!prelude.empty()) {
      source = "#include \"graphdec_imports.h\"\n#line 1 \"" + std::string(stem) + ".c\"\n" +
               candidate;
    }
    return compile_object(source, toolchain, f.opt_level, work.path(), stem);
  };

  ModelResponse first = gateway.complete(prompt, 1);
  a.model_calls = 1;
  auto [first_code, first_problem] = candidate_from(first);
  a.first_candidate = first_code;
  a.first_compile = compile_candidate(first_code, first_problem, "first_candidate");
  a.compile = a.first_compile;
  std::string final_stem = "first_candidate";

  if (!a.first_compile.passed() && enable_feedback) {
    PromptBundle repair = build_repair_prompt(prompt, a.first_compile.diagnostics, first_code);
    ModelResponse second = gateway.complete(repair, 2);
    a.model_calls = 2;
    auto [repair_code, repair_problem] = candidate_from(second);
    a.repair_candidate = repair_code;
    a.repair_used = true;
    a.compile = compile_candidate(repair_code, repair_problem, "repair_candidate");
    final_stem = "repair_candidate";
  }

  const fs::path object = work.path() / (final_stem + ".o");
  if (a.compile.passed() && options.harness_source) {
    a.link = link_executable(object, *options.harness_source, toolchain, work.path());
    if (a.link.passed()) a.test = run_tests(work.path() / "exe", toolchain, work.path());
  }

  if (options.artifact_dir) {
    const fs::path& dir = *options.artifact_dir;
    fs::create_directories(dir);
    write_file(dir / "candidate.c", a.final_candidate());
    write_file(dir / "first_candidate.c", a.first_candidate);
    if (a.repair_candidate) write_file(dir / "repair_candidate.c", *a.repair_candidate);
    write_file(dir / "prompt.txt", prompt.system_text + "\n" + prompt.user_text);
    std::error_code ec;
    if (fs::exists(object)) fs::copy_file(object, dir / "candidate.o", fs::copy_options::overwrite_existing, ec);
    if (fs::exists(work.path() / "exe")) {
      fs::copy_file(work.path() / "exe", dir / "exe", fs::copy_options::overwrite_existing, ec);
    }
    write_file(dir / "compile.log", a.compile.diagnostics);
    write_file(dir / "link.log", a.link.diagnostics);
    write_file(dir / "test.log", a.test.diagnostics);
    write_file(dir / "attempt.json", attempt_to_json(a).dump(2) + "\n");
  }
  spdlog::debug("{} [{} {}]: compile={} link={} test={} calls={}", a.function_ref,
                to_string(a.arch), to_string(a.opt), to_string(a.compile.status),
                to_string(a.link.status), to_string(a.test.status), a.model_calls);
  return a;
}

}  // namespace graphdec
