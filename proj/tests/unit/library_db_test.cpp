#include <gtest/gtest.h>

#include <filesystem>

#include "tpld/corpus.hpp"
#include "tpld/library_db.hpp"

namespace tpld {
namespace {

namespace fs = std::filesystem;

class LibraryDbTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tpld_db_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    for (int i = 0; i < 2; ++i) {
      corpus::LibrarySpec spec;
      spec.name = "lib" + std::to_string(i);
      spec.version = "1.0";
      spec.seed = 10 + i;
      libs_.push_back(corpus::gen_library(spec));
    }
    libs_.push_back(corpus::derive_version(libs_[0], {1, 0, 0, 1}, "1.1", 3).first);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
  std::vector<CodeModel> libs_;
};

TEST_F(LibraryDbTest, RoundTrip) {
  const auto manifest = build_db(libs_, dir_);
  ASSERT_EQ(manifest.entries.size(), 3u);
  EXPECT_EQ(manifest.entries[0].library, "lib0");
  EXPECT_EQ(manifest.entries[1].version, "1.1");
  EXPECT_EQ(manifest_from_json(read_file(dir_ / "manifest.json")), manifest);

  const auto db = load_db(dir_, default_fuzzy_config());
  EXPECT_TRUE(db.diagnostics.empty());
  ASSERT_EQ(db.by_library.at("lib0").size(), 2u);
  EXPECT_EQ(serialize_code_model(db.by_library.at("lib1")[0]->model()),
            serialize_code_model(libs_[1]));
}

TEST_F(LibraryDbTest, HashesAreStable) {
  const auto a = build_db(libs_, dir_);
  const auto b = build_db(libs_, dir_ / "again");
  EXPECT_EQ(a, b);
}

TEST_F(LibraryDbTest, RejectsDuplicatesAndApps) {
  auto dup = libs_;
  dup.push_back(libs_[0]);
  EXPECT_THROW(build_db(dup, dir_), Error);
  auto app = libs_[0];
  app.kind = ModelKind::kApp;
  app.version.reset();
  EXPECT_THROW(build_db({app}, dir_ / "x"), Error);
}

TEST_F(LibraryDbTest, CorruptEntryBecomesDiagnostic) {
  const auto manifest = build_db(libs_, dir_);
  const auto victim = dir_ / manifest.entries[2].signatures_file;
  auto bytes = read_file(victim);
  bytes[bytes.size() / 2] ^= 0x5a;
  write_file(victim, bytes);
  const auto db = load_db(dir_, default_fuzzy_config());
  ASSERT_EQ(db.diagnostics.size(), 1u);
  EXPECT_NE(db.diagnostics[0].find("db entry lib1 1.0"), std::string::npos);
  EXPECT_EQ(db.models.size(), 2u);
}

TEST_F(LibraryDbTest, MissingManifestThrows) {
  EXPECT_THROW(load_db(dir_ / "nowhere", default_fuzzy_config()), Error);
}

TEST(Signatures, EncodeDecode) {
  const ClassDependencyGraph g({"a", "b"}, {Feature::kDefault, Feature::kInterface},
                               {{0, 1, EdgeKind::kImplements}});
  const std::vector<NodeSignature> sigs = {hash128("x"), hash128("y")};
  const auto bytes = encode_signatures(g, 3, sigs);
  const auto d = decode_signatures(bytes);
  EXPECT_EQ(d.iterations, 3u);
  EXPECT_EQ(d.names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(d.signatures, sigs);
  EXPECT_EQ(d.edges, (std::vector<Edge>{{0, 1, EdgeKind::kImplements}}));
  EXPECT_THROW(decode_signatures(bytes.substr(0, bytes.size() - 1)), Error);
  EXPECT_THROW(decode_signatures(bytes + "z"), Error);
  EXPECT_THROW(decode_signatures("NOTMAGIC"), Error);
}

}  // namespace
}  // namespace tpld
