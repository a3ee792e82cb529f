// SPDX-License-Identifier: Apache-2.0
#include "graphdec/dataset_builder.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <spdlog/spdlog.h>

#include "graphdec/errors.hpp"
#include "graphdec/subprocess.hpp"

namespace graphdec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string now_utc() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string join(const std::vector<std::string>& argv) {
  std::string out;
  for (const auto& a : argv) {
    if (!out.empty()) out += ' ';
    out += a;
  }
  return out;
}

bool available(const std::vector<std::string>& argv) {
  return !argv.empty() && find_executable(argv[0]).has_value();
}

std::string failure_text(const ProcessResult& r) {
  std::string text = r.stderr_text.empty() ? r.stdout_text : r.stderr_text;
  if (r.timed_out) text += "timed out\n";
  return truncate_diagnostics(text);
}

ManifestEntry build_cell(const Task& task, ArchId arch, OptLevel opt, const Toolchain* toolchain,
                         const fs::path& out_dir) {
  ManifestEntry e;
  e.task = task.id;
  e.arch = arch;
  e.opt = opt;
  const fs::path rel_dir = fs::path("corpus") / std::string(to_string(arch)) / std::string(to_string(opt));
  e.binary_path = (rel_dir / task.id).generic_string();
  if (!toolchain) {
    e.status = EntryStatus::toolchain_missing;
    e.diagnostics = "no toolchain configured for " + std::string(to_string(arch)) + "\n";
    return e;
  }

  const fs::path dir = out_dir / rel_dir;
  const fs::path obj = dir / (task.id + ".o");
  const fs::path exe = dir / task.id;
  auto compile = expand_command(toolchain->compile_cmd_template,
                                {{"src", fs::absolute(task.source_path).string()}, {"out", obj.string()}},
                                toolchain->opt_flag(opt));
  auto link = expand_command(toolchain->link_cmd_template,
                             {{"obj", obj.string()},
                              {"harness", fs::absolute(task.harness_path).string()},
                              {"out", exe.string()}});
  e.command = join(compile);
  if (!available(compile) || !available(link)) {
    e.status = EntryStatus::toolchain_missing;
    e.diagnostics = "toolchain program '" + (available(compile) ? link[0] : compile[0]) +
                    "' not found\n";
    return e;
  }

  fs::create_directories(dir);
  std::error_code ec;
  fs::remove(obj, ec);
  fs::remove(exe, ec);
  const auto timeout = std::chrono::duration_cast<std::chrono::milliseconds>(toolchain->timeout);
  auto c = run_process(compile, dir, timeout);
  if (!c.ok() || !fs::exists(obj)) {
    e.status = EntryStatus::compile_failed;
    e.diagnostics = failure_text(c);
    return e;
  }
  auto l = run_process(link, dir, timeout);
  if (!l.ok() || !fs::exists(exe)) {
    e.status = EntryStatus::compile_failed;
    e.diagnostics = failure_text(l);
    return e;
  }
  e.status = EntryStatus::built;
  return e;
}

json entry_to_json(const ManifestEntry& e) {
  return {{"task", e.task},
          {"arch", to_string(e.arch)},
          {"opt", to_string(e.opt)},
          {"binary_path", e.binary_path},
          {"export_path", e.export_path},
          {"status", to_string(e.status)},
          {"command", e.command},
          {"diagnostics", e.diagnostics}};
}

ManifestEntry entry_from_json(const json& j) {
  ManifestEntry e;
  e.task = j.at("task").get<std::string>();
  auto arch = parse_arch(j.at("arch").get<std::string>());
  auto opt = parse_opt_level(j.at("opt").get<std::string>());
  auto status = parse_entry_status(j.at("status").get<std::string>());
  if (!arch || !opt || !status) throw SchemaError("manifest entry: bad arch, opt or status");
  e.arch = *arch;
  e.opt = *opt;
  e.status = *status;
  e.binary_path = j.at("binary_path").get<std::string>();
  e.export_path = j.value("export_path", std::string(kPendingExport));
  e.command = j.value("command", std::string());
  e.diagnostics = j.value("diagnostics", std::string());
  return e;
}

}  // namespace

Task load_task(const fs::path& dir) {
  json j = json::parse(read_text(dir / "task.json"), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw SchemaError((dir / "task.json").string() + ": malformed JSON");
  }
  try {
    Task t;
    t.id = j.at("id").get<std::string>();
    t.source_path = dir / j.at("source").get<std::string>();
    t.harness_path = dir / j.at("harness").get<std::string>();
    t.reference_function = j.at("reference_function").get<std::string>();
    for (const auto& p : {t.source_path, t.harness_path}) {
      if (!fs::is_regular_file(p)) throw IoError("task " + t.id + ": missing " + p.string());
    }
    return t;
  } catch (const json::exception& e) {
    throw SchemaError((dir / "task.json").string() + ": " + e.what());
  }
}

std::vector<Task> load_tasks(const fs::path& corpus_dir) {
  const fs::path root = corpus_dir / "tasks";
  if (!fs::is_directory(root)) throw IoError("no tasks directory under " + corpus_dir.string());
  std::vector<Task> tasks;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "task.json")) {
      tasks.push_back(load_task(entry.path()));
    }
  }
  std::sort(tasks.begin(), tasks.end(), [](const Task& a, const Task& b) { return a.id < b.id; });
  return tasks;
}

std::string_view to_string(EntryStatus s) {
  switch (s) {
    case EntryStatus::built: return "built";
    case EntryStatus::toolchain_missing: return "toolchain-missing";
    case EntryStatus::compile_failed: return "compile-failed";
  }
  return "?";
}

std::optional<EntryStatus> parse_entry_status(std::string_view text) {
  for (auto s : {EntryStatus::built, EntryStatus::toolchain_missing, EntryStatus::compile_failed}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

json manifest_to_json(const Manifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) entries.push_back(entry_to_json(e));
  json archs = json::array();
  for (auto a : m.archs) archs.push_back(to_string(a));
  json opts = json::array();
  for (auto o : m.opts) opts.push_back(to_string(o));
  return {{"created_at", m.created_at}, {"tasks", m.tasks},   {"archs", archs},
          {"opts", opts},               {"matrix", m.matrix_snapshot}, {"entries", entries}};
}

Manifest manifest_from_json(const json& j) {
  try {
    Manifest m;
    m.created_at = j.value("created_at", std::string());
    m.tasks = j.at("tasks").get<std::vector<std::string>>();
    for (const auto& a : j.at("archs")) {
      auto arch = parse_arch(a.get<std::string>());
      if (!arch) throw SchemaError("manifest: bad arch");
      m.archs.push_back(*arch);
    }
    for (const auto& o : j.at("opts")) {
      auto opt = parse_opt_level(o.get<std::string>());
      if (!opt) throw SchemaError("manifest: bad opt");
      m.opts.push_back(*opt);
    }
    m.matrix_snapshot = j.value("matrix", json::object());
    for (const auto& e : j.at("entries")) m.entries.push_back(entry_from_json(e));
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("manifest: ") + e.what());
  }
}

void write_manifest(const Manifest& m, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << manifest_to_json(m).dump(2) << '\n';
}

Manifest read_manifest(const fs::path& path) {
  json j = json::parse(read_text(path), nullptr, false);
  if (j.is_discarded()) throw SchemaError(path.string() + ": malformed JSON");
  return manifest_from_json(j);
}

Manifest build_corpus(const std::vector<Task>& tasks, const ToolchainMatrix& matrix,
                      const std::vector<ArchId>& archs, const std::vector<OptLevel>& opts,
                      const fs::path& out_dir, const BuildOptions& options) {
  Manifest m;
  m.created_at = now_utc();
  for (const auto& t : tasks) m.tasks.push_back(t.id);
  m.archs = archs;
  m.opts = opts;
  ToolchainMatrix used;
  for (auto a : archs) {
    if (const Toolchain* t = matrix.find(a)) used.toolchains.push_back(*t);
  }
  m.matrix_snapshot = toolchain_matrix_to_json(used);

  struct Cell {
    const Task* task;
    ArchId arch;
    OptLevel opt;
  };
  std::vector<Cell> cells;
  for (const auto& t : tasks) {
    for (auto a : archs) {
      for (auto o : opts) cells.push_back({&t, a, o});
    }
  }
  m.entries.resize(cells.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& c = cells[i];
      m.entries[i] = build_cell(*c.task, c.arch, c.opt, matrix.find(c.arch), out_dir);
      spdlog::debug("corpus {} {} {}: {}", c.task->id, to_string(c.arch), to_string(c.opt),
                    to_string(m.entries[i].status));
    }
  };
  const std::size_t n_workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(cells.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return m;
}

std::string_view to_string(Discrepancy::Kind k) {
  switch (k) {
    case Discrepancy::Kind::missing_file: return "missing-file";
    case Discrepancy::Kind::count_mismatch: return "count-mismatch";
    case Discrepancy::Kind::duplicate_entry: return "duplicate-entry";
  }
  return "?";
}

std::vector<Discrepancy> verify_manifest(const Manifest& m, const fs::path& root) {
  std::vector<Discrepancy> out;
  const std::size_t expected = m.tasks.size() * m.archs.size() * m.opts.size();
  if (m.entries.size() != expected) {
    out.push_back({Discrepancy::Kind::count_mismatch,
                   "expected " + std::to_string(expected) + " entries (" +
                       std::to_string(m.tasks.size()) + " tasks x " + std::to_string(m.archs.size()) +
                       " archs x " + std::to_string(m.opts.size()) + " opts), found " +
                       std::to_string(m.entries.size())});
  }
  std::set<std::tuple<std::string, ArchId, OptLevel>> seen;
  for (const auto& e : m.entries) {
    const std::string cell = e.task + " " + std::string(to_string(e.arch)) + " " +
                             std::string(to_string(e.opt));
    if (!seen.insert({e.task, e.arch, e.opt}).second) {
      out.push_back({Discrepancy::Kind::duplicate_entry, "duplicate entry for " + cell});
    }
    if (e.status == EntryStatus::built && !fs::exists(root / e.binary_path)) {
      out.push_back({Discrepancy::Kind::missing_file, cell + ": missing " + e.binary_path});
    }
  }
  return out;
}

}  // namespace graphdec
