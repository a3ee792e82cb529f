// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "graphdec/dataset_builder.hpp"
#include "graphdec/errors.hpp"
#include "graphdec/subprocess.hpp"

namespace graphdec {
namespace {

namespace fs = std::filesystem;

const fs::path kStrict = fs::path(GRAPHDEC_TEST_FIXTURES_DIR) / "strict_corpus";
const std::vector<ArchId> kArchs = {ArchId::x86_64, ArchId::mips_32};
const std::vector<OptLevel> kOpts(std::begin(kAllOptLevels), std::end(kAllOptLevels));

// Built once; every test below reads it.
class StrictCorpus : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("graphdec-corpus");
    manifest_ = new Manifest(build_corpus(load_tasks(kStrict),
                                          load_toolchain_matrix(kStrict / "matrix.json"), kArchs,
                                          kOpts, dir_->path()));
  }
  static void TearDownTestSuite() {
    delete manifest_;
    delete dir_;
  }
  static TempDir* dir_;
  static Manifest* manifest_;
};

TempDir* StrictCorpus::dir_ = nullptr;
Manifest* StrictCorpus::manifest_ = nullptr;

TEST(Tasks, LoadSorted) {
  auto tasks = load_tasks(kStrict);
  ASSERT_EQ(tasks.size(), 3u);
  EXPECT_EQ(tasks[0].id, "add_one");
  EXPECT_EQ(tasks[2].id, "strict_o3");
  EXPECT_EQ(tasks[1].reference_function, "square");
  EXPECT_TRUE(fs::exists(tasks[1].harness_path));
  EXPECT_THROW(load_task(kStrict / "nope"), Error);
}

TEST_F(StrictCorpus, EntryArithmetic) {
  const auto& m = *manifest_;
  ASSERT_EQ(m.entries.size(), 24u);
  std::map<EntryStatus, int> counts;
  for (const auto& e : m.entries) ++counts[e.status];
  EXPECT_EQ(counts[EntryStatus::built], 11);
  EXPECT_EQ(counts[EntryStatus::compile_failed], 1);
  EXPECT_EQ(counts[EntryStatus::toolchain_missing], 12);
  EXPECT_EQ(counts[EntryStatus::built] + counts[EntryStatus::compile_failed] +
                counts[EntryStatus::toolchain_missing],
            24);
}

TEST_F(StrictCorpus, OrderAndStatuses) {
  const auto& m = *manifest_;
  std::size_t i = 0;
  for (const auto& task : m.tasks) {
    for (auto arch : kArchs) {
      for (auto opt : kOpts) {
        const auto& e = m.entries[i++];
        ASSERT_EQ(e.task, task);
        ASSERT_EQ(e.arch, arch);
        ASSERT_EQ(e.opt, opt);
        EXPECT_EQ(e.export_path, kPendingExport);
        if (arch == ArchId::mips_32) {
          EXPECT_EQ(e.status, EntryStatus::toolchain_missing);
        } else if (task == "strict_o3" && opt == OptLevel::O3) {
          EXPECT_EQ(e.status, EntryStatus::compile_failed);
          EXPECT_NE(e.diagnostics.find("strict O3 profile rejects"), std::string::npos);
        } else {
          EXPECT_EQ(e.status, EntryStatus::built) << e.task << " " << to_string(e.opt) << e.diagnostics;
          EXPECT_TRUE(fs::exists(dir_->path() / e.binary_path));
          EXPECT_EQ(e.binary_path, "corpus/x86_64/" + std::string(to_string(opt)) + "/" + task);
        }
      }
    }
  }
}

TEST_F(StrictCorpus, VerifyCleanAndRoundTrip) {
  EXPECT_TRUE(verify_manifest(*manifest_, dir_->path()).empty());
  TempDir tmp;
  write_manifest(*manifest_, tmp.path() / "manifest.json");
  auto back = read_manifest(tmp.path() / "manifest.json");
  EXPECT_EQ(back.entries, manifest_->entries);
  EXPECT_EQ(back.tasks, manifest_->tasks);
  EXPECT_EQ(back.archs, manifest_->archs);
  EXPECT_EQ(back.opts, manifest_->opts);
  EXPECT_EQ(back.created_at, manifest_->created_at);
  EXPECT_EQ(back.matrix_snapshot, manifest_->matrix_snapshot);
}

TEST_F(StrictCorpus, VerifyDetectsDuplicatesAndCountMismatch) {
  Manifest m = *manifest_;
  m.entries.push_back(m.entries.front());
  auto d = verify_manifest(m, dir_->path());
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].kind, Discrepancy::Kind::count_mismatch);
  EXPECT_EQ(d[1].kind, Discrepancy::Kind::duplicate_entry);
}

TEST_F(StrictCorpus, VerifyDetectsDeletedBinary) {
  // Work on a copy so the shared build stays intact.
  TempDir copy;
  fs::copy(dir_->path(), copy.path(), fs::copy_options::recursive | fs::copy_options::overwrite_existing);
  const ManifestEntry* built = nullptr;
  for (const auto& e : manifest_->entries) {
    if (e.status == EntryStatus::built) {
      built = &e;
      break;
    }
  }
  ASSERT_NE(built, nullptr);
  fs::remove(copy.path() / built->binary_path);
  auto d = verify_manifest(*manifest_, copy.path());
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].kind, Discrepancy::Kind::missing_file);
  EXPECT_NE(d[0].message.find(built->binary_path), std::string::npos);
}

TEST(Build, DeterministicAcrossWorkerCounts) {
  auto tasks = load_tasks(kStrict);
  tasks.resize(2);
  auto matrix = load_toolchain_matrix(kStrict / "matrix.json");
  const std::vector<OptLevel> opts = {OptLevel::O0, OptLevel::O2};
  TempDir a, b;
  auto one = build_corpus(tasks, matrix, kArchs, opts, a.path(), {1});
  auto many = build_corpus(tasks, matrix, kArchs, opts, b.path(), {3});
  ASSERT_EQ(one.entries.size(), many.entries.size());
  for (std::size_t i = 0; i < one.entries.size(); ++i) {
    EXPECT_EQ(one.entries[i].task, many.entries[i].task);
    EXPECT_EQ(one.entries[i].status, many.entries[i].status);
    EXPECT_EQ(one.entries[i].binary_path, many.entries[i].binary_path);
  }
  EXPECT_TRUE(verify_manifest(many, b.path()).empty());
}

TEST(Status, Names) {
  EXPECT_EQ(to_string(EntryStatus::toolchain_missing), "toolchain-missing");
  EXPECT_EQ(parse_entry_status("compile-failed"), EntryStatus::compile_failed);
  EXPECT_FALSE(parse_entry_status("bogus").has_value());
}

}  // namespace
}  // namespace graphdec
