#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <string>
#include <vector>

#include "anomap/manifest.hpp"
#include "anomap/phantom.hpp"
#include "testutil.hpp"

using namespace anomap;
using Catch::Matchers::ContainsSubstring;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

} // namespace

TEST_CASE("manifest lines parse into entries in order", "[manifest]") {
  testutil::TempDir dir;
  const std::string path = dir.file("manifest.tsv");
  write_text(path,
             "val\ta.mvol\tb.mvol\tc.mvol\td.mvol\n"
             "\n"
             "test\te.mvol\tf.mvol\tg.mvol\th.mvol\n");
  const std::vector<ManifestEntry> entries = load_manifest(path);
  REQUIRE(entries.size() == 2);
  REQUIRE(entries[0].is_validation);
  REQUIRE(entries[0].x == "a.mvol");
  REQUIRE(entries[0].rec == "b.mvol");
  REQUIRE(entries[0].gt == "c.mvol");
  REQUIRE(entries[0].brain == "d.mvol");
  REQUIRE_FALSE(entries[1].is_validation);
  REQUIRE(entries[1].brain == "h.mvol");
}

TEST_CASE("manifest syntax errors carry the path and line number",
          "[manifest]") {
  testutil::TempDir dir;
  const std::string path = dir.file("manifest.tsv");

  SECTION("wrong field count") {
    write_text(path, "val\ta\tb\tc\td\nval\ta\tb\tc\n");
    REQUIRE_THROWS_WITH(load_manifest(path), ContainsSubstring(":2:"));
  }
  SECTION("extra field") {
    write_text(path, "val\ta\tb\tc\td\te\n");
    REQUIRE_THROWS_WITH(load_manifest(path), ContainsSubstring("got 6"));
  }
  SECTION("bad role") {
    write_text(path, "train\ta\tb\tc\td\n");
    REQUIRE_THROWS_WITH(load_manifest(path),
                        ContainsSubstring("role must be val or test"));
  }
  SECTION("empty file") {
    write_text(path, "");
    REQUIRE_THROWS_WITH(load_manifest(path), ContainsSubstring("empty manifest"));
  }
  SECTION("only blank lines") {
    write_text(path, "\n\n");
    REQUIRE_THROWS_WITH(load_manifest(path), ContainsSubstring("empty manifest"));
  }
  SECTION("missing file") {
    REQUIRE_THROWS_AS(load_manifest(dir.file("nope.tsv")), io_error);
  }
}

TEST_CASE("save_manifest round-trips through load_manifest", "[manifest]") {
  testutil::TempDir dir;
  const std::string path = dir.file("manifest.tsv");
  std::vector<ManifestEntry> entries(2);
  entries[0] = {true, "x0.mvol", "r0.mvol", "g0.mvol", "b0.mvol"};
  entries[1] = {false, "sub/x1.mvol", "sub/r1.mvol", "sub/g1.mvol",
                "sub/b1.mvol"};
  save_manifest(path, entries);

  const std::vector<ManifestEntry> back = load_manifest(path);
  REQUIRE(back.size() == entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    REQUIRE(back[i].is_validation == entries[i].is_validation);
    REQUIRE(back[i].x == entries[i].x);
    REQUIRE(back[i].rec == entries[i].rec);
    REQUIRE(back[i].gt == entries[i].gt);
    REQUIRE(back[i].brain == entries[i].brain);
  }
}

TEST_CASE("load_dataset resolves paths against the manifest directory",
          "[manifest]") {
  testutil::TempDir dir;
  PhantomSpec spec;
  spec.nx = 12;
  spec.ny = 10;
  spec.nz = 8;
  spec.seed = 5;
  spec.background_texture_scale = 6;
  spec.lesions.push_back({5.5, 4.5, 3.5, 1, 0.4, 0.0});
  const std::vector<VolumeRecord> data = generate_dataset(spec, 2, 1);

  // first volume by relative path, second mixes in one absolute path
  write_volume(data[0].input, dir.file("x0.mvol"));
  write_volume(data[0].reconstruction, dir.file("r0.mvol"));
  write_mask(data[0].ground_truth, dir.file("g0.mvol"));
  write_mask(data[0].brain, dir.file("b0.mvol"));
  write_volume(data[1].input, dir.file("x1.mvol"));
  write_volume(data[1].reconstruction, dir.file("r1.mvol"));
  write_mask(data[1].ground_truth, dir.file("g1.mvol"));
  write_mask(data[1].brain, dir.file("b1.mvol"));

  const std::string path = dir.file("manifest.tsv");
  write_text(path,
             "val\tx0.mvol\tr0.mvol\tg0.mvol\tb0.mvol\n"
             "test\t" + dir.file("x1.mvol") +
                 "\tr1.mvol\tg1.mvol\tb1.mvol\n");

  const std::vector<VolumeRecord> loaded = load_dataset(path);
  REQUIRE(loaded.size() == 2);
  REQUIRE(loaded[0].id == "vol000");
  REQUIRE(loaded[1].id == "vol001");
  REQUIRE(loaded[0].is_validation);
  REQUIRE_FALSE(loaded[1].is_validation);
  for (std::size_t i = 0; i < 2; ++i) {
    REQUIRE(bitwise_equal(loaded[i].input, data[i].input));
    REQUIRE(bitwise_equal(loaded[i].reconstruction, data[i].reconstruction));
    REQUIRE(bitwise_equal(loaded[i].ground_truth, data[i].ground_truth));
    REQUIRE(bitwise_equal(loaded[i].brain, data[i].brain));
  }
}

TEST_CASE("load_dataset rejects volumes with mismatched dims", "[manifest]") {
  testutil::TempDir dir;
  const Volume3D x = testutil::random_volume(6, 5, 4, 1);
  const Volume3D rec = testutil::random_volume(6, 5, 5, 2); // nz differs
  Mask3D gt(6, 5, 4);
  gt.data()[3] = 1;
  Mask3D brain(6, 5, 4, 1);

  write_volume(x, dir.file("x.mvol"));
  write_volume(rec, dir.file("r.mvol"));
  write_mask(gt, dir.file("g.mvol"));
  write_mask(brain, dir.file("b.mvol"));
  const std::string path = dir.file("manifest.tsv");
  write_text(path, "val\tx.mvol\tr.mvol\tg.mvol\tb.mvol\n");

  REQUIRE_THROWS_WITH(load_dataset(path),
                      ContainsSubstring("mismatched dimensions"));
}

TEST_CASE("load_dataset propagates reader errors", "[manifest]") {
  testutil::TempDir dir;
  const std::string path = dir.file("manifest.tsv");
  write_text(path, "val\tx.mvol\tr.mvol\tg.mvol\tb.mvol\n");
  REQUIRE_THROWS_AS(load_dataset(path), io_error);
}
