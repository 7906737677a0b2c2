#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <set>

#include "anomap/phantom.hpp"
#include "testutil.hpp"

using namespace anomap;

namespace {

PhantomSpec small_spec() {
  PhantomSpec spec;
  spec.nx = 32;
  spec.ny = 28;
  spec.nz = 20;
  spec.seed = 77;
  spec.background_texture_scale = 12;
  spec.lesion_texture_scale = 3;
  return spec;
}

} // namespace

TEST_CASE("spec validation rejects bad fields", "[phantom]") {
  PhantomSpec spec = small_spec();
  spec.nx = 0;
  REQUIRE_THROWS_AS(spec.validate(), validation_error);

  spec = small_spec();
  spec.background_texture_scale = 0;
  REQUIRE_THROWS_AS(spec.validate(), validation_error);

  spec = small_spec();
  spec.lesion_texture_scale = -2;
  REQUIRE_THROWS_AS(spec.validate(), validation_error);

  spec = small_spec();
  spec.reconstruction_noise = -0.1;
  REQUIRE_THROWS_AS(spec.validate(), validation_error);

  spec = small_spec();
  spec.lesions.push_back({16, 14, 10, 0.5, 0.1, 0.0}); // radius below 1
  REQUIRE_THROWS_AS(spec.validate(), validation_error);

  spec = small_spec();
  spec.lesions.push_back({16, 14, 10, 2, 0.1, -0.2}); // negative amplitude
  REQUIRE_THROWS_AS(spec.validate(), validation_error);

  spec = small_spec();
  spec.lesions.push_back({std::nan(""), 14, 10, 2, 0.1, 0.0});
  REQUIRE_THROWS_AS(spec.validate(), validation_error);

  REQUIRE_NOTHROW(small_spec().validate());
}

TEST_CASE("brain mask is the centered ellipsoid", "[phantom]") {
  const PhantomSpec spec = small_spec();
  const HealthyPhantom h = generate_healthy(spec);

  const double mx = (spec.nx - 1) / 2.0, my = (spec.ny - 1) / 2.0,
               mz = (spec.nz - 1) / 2.0;
  const double ax = 0.8 * spec.nx / 2.0, ay = 0.8 * spec.ny / 2.0,
               az = 0.8 * spec.nz / 2.0;
  std::size_t inside = 0;
  for (std::uint32_t z = 0; z < spec.nz; ++z)
    for (std::uint32_t y = 0; y < spec.ny; ++y)
      for (std::uint32_t x = 0; x < spec.nx; ++x) {
        const double u = (x - mx) / ax, v = (y - my) / ay, w = (z - mz) / az;
        const bool in = u * u + v * v + w * w <= 1.0;
        inside += in;
        REQUIRE((h.brain(x, y, z) != 0) == in);
      }
  REQUIRE(h.brain.count_set() == inside);
  REQUIRE(inside > 0);
}

TEST_CASE("healthy intensities live in [0.1, 0.9] inside and 0 outside",
          "[phantom]") {
  const PhantomSpec spec = small_spec();
  const HealthyPhantom h = generate_healthy(spec);
  float lo = 1.f, hi = 0.f;
  for (std::size_t i = 0; i < h.volume.size(); ++i) {
    const float v = h.volume.data()[i];
    if (h.brain.data()[i]) {
      REQUIRE(v >= 0.1f);
      REQUIRE(v <= 0.9f);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    } else {
      REQUIRE(v == 0.0f);
    }
  }
  // the texture actually uses the band, it is not a constant fill
  REQUIRE(hi - lo > 0.2f);
}

TEST_CASE("generation is deterministic and seed-sensitive", "[phantom]") {
  const PhantomSpec spec = small_spec();
  const HealthyPhantom a = generate_healthy(spec);
  const HealthyPhantom b = generate_healthy(spec);
  REQUIRE(bitwise_equal(a.volume, b.volume));
  REQUIRE(bitwise_equal(a.brain, b.brain));

  PhantomSpec other = spec;
  other.seed = 78;
  REQUIRE_FALSE(bitwise_equal(a.volume, generate_healthy(other).volume));
}

TEST_CASE("ground truth is exactly the union of lesion spheres", "[phantom]") {
  PhantomSpec spec = small_spec();
  spec.lesions.push_back({15.5, 13.5, 9.5, 3, 0.3, 0.0});
  spec.lesions.push_back({10.0, 10.0, 8.0, 2, 0.0, 0.5});
  const HealthyPhantom h = generate_healthy(spec);
  const UnhealthyPhantom u = inject_lesions(h.volume, spec);

  for (std::uint32_t z = 0; z < spec.nz; ++z)
    for (std::uint32_t y = 0; y < spec.ny; ++y)
      for (std::uint32_t x = 0; x < spec.nx; ++x) {
        bool in_any = false;
        for (const Lesion& l : spec.lesions) {
          const double dx = x - l.cx, dy = y - l.cy, dz = z - l.cz;
          in_any |= dx * dx + dy * dy + dz * dz <= l.radius * l.radius;
        }
        REQUIRE((u.ground_truth(x, y, z) != 0) == in_any);
      }
  REQUIRE(u.ground_truth.count_set() > 0);
}

TEST_CASE("voxels outside every lesion stay bit-identical", "[phantom]") {
  PhantomSpec spec = small_spec();
  spec.lesions.push_back({15.5, 13.5, 9.5, 3, 0.25, 0.4});
  const HealthyPhantom h = generate_healthy(spec);
  const UnhealthyPhantom u = inject_lesions(h.volume, spec);

  std::size_t touched = 0;
  for (std::size_t i = 0; i < h.volume.size(); ++i) {
    if (u.ground_truth.data()[i]) {
      touched += u.volume.data()[i] != h.volume.data()[i];
    } else {
      REQUIRE(u.volume.data()[i] == h.volume.data()[i]);
    }
  }
  REQUIRE(touched > 0);
}

TEST_CASE("lesion voxels move by offset plus bounded texture", "[phantom]") {
  PhantomSpec spec = small_spec();
  spec.lesions.push_back({15.5, 13.5, 9.5, 3, 0.2, 0.1});
  const HealthyPhantom h = generate_healthy(spec);
  const UnhealthyPhantom u = inject_lesions(h.volume, spec);

  for (std::size_t i = 0; i < h.volume.size(); ++i) {
    if (!u.ground_truth.data()[i]) continue;
    const float uv = u.volume.data()[i];
    REQUIRE(uv >= 0.0f);
    REQUIRE(uv <= 1.0f);
    const double delta = double(uv) - double(h.volume.data()[i]);
    REQUIRE(delta >= 0.2 - 0.1 - 1e-6);
    REQUIRE(delta <= 0.2 + 0.1 + 1e-6);
  }
}

TEST_CASE("lesions must fit inside the brain", "[phantom]") {
  PhantomSpec spec = small_spec();
  spec.lesions.push_back({15.5, 13.5, 9.5, 3, 0.2, 0.0});
  spec.lesions.push_back({1.0, 1.0, 1.0, 2, 0.2, 0.0}); // in the corner
  const HealthyPhantom h = generate_healthy(spec);
  REQUIRE_THROWS_WITH(inject_lesions(h.volume, spec),
                      Catch::Matchers::ContainsSubstring("lesion 1"));
}

TEST_CASE("inject_lesions checks the volume against the spec", "[phantom]") {
  const PhantomSpec spec = small_spec();
  REQUIRE_THROWS_AS(inject_lesions(Volume3D(8, 8, 8), spec), validation_error);
}

TEST_CASE("zero reconstruction noise returns the input unchanged",
          "[phantom]") {
  PhantomSpec spec = small_spec();
  spec.reconstruction_noise = 0.0;
  const HealthyPhantom h = generate_healthy(spec);
  REQUIRE(bitwise_equal(pseudo_reconstruct(h.volume, spec), h.volume));
}

TEST_CASE("reconstruction noise stays inside the brain and in range",
          "[phantom]") {
  PhantomSpec spec = small_spec();
  spec.reconstruction_noise = 0.05;
  const HealthyPhantom h = generate_healthy(spec);
  const Volume3D rec = pseudo_reconstruct(h.volume, spec);

  std::size_t changed = 0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    REQUIRE(rec.data()[i] >= 0.0f);
    REQUIRE(rec.data()[i] <= 1.0f);
    if (h.brain.data()[i]) {
      changed += rec.data()[i] != h.volume.data()[i];
    } else {
      REQUIRE(rec.data()[i] == h.volume.data()[i]);
    }
  }
  REQUIRE(changed > h.brain.count_set() / 2);

  REQUIRE(bitwise_equal(rec, pseudo_reconstruct(h.volume, spec)));
}

TEST_CASE("family members differ but are individually deterministic",
          "[phantom]") {
  const PhantomSpec spec = small_spec();
  const PhantomSpec m0 = family_member(spec, 0);
  const PhantomSpec m1 = family_member(spec, 1);
  REQUIRE(m0.seed != m1.seed);
  REQUIRE(m0.seed == family_member(spec, 0).seed);
  REQUIRE(m0.nx == spec.nx);
  REQUIRE(m0.lesions.size() == spec.lesions.size());
  REQUIRE_FALSE(bitwise_equal(generate_healthy(m0).volume,
                              generate_healthy(m1).volume));
}

TEST_CASE("generate_dataset labels splits and ids in order", "[phantom]") {
  PhantomSpec spec = small_spec();
  spec.lesions.push_back({15.5, 13.5, 9.5, 2, 0.3, 0.0});
  const std::vector<VolumeRecord> data = generate_dataset(spec, 4, 2);

  REQUIRE(data.size() == 4);
  REQUIRE(data[0].id == "vol000");
  REQUIRE(data[3].id == "vol003");
  REQUIRE(data[0].is_validation);
  REQUIRE(data[1].is_validation);
  REQUIRE_FALSE(data[2].is_validation);
  REQUIRE_FALSE(data[3].is_validation);

  std::set<std::uint64_t> first_bits;
  for (const VolumeRecord& r : data) {
    REQUIRE(r.input.nx() == spec.nx);
    REQUIRE(r.ground_truth.count_set() > 0);
    REQUIRE(r.brain.count_set() > 0);
    // input differs from reconstruction at the lesion at least
    REQUIRE_FALSE(bitwise_equal(r.input, r.reconstruction));
    first_bits.insert(
        std::uint64_t(std::bit_cast<std::uint32_t>(r.input.data()[r.input.index(
            spec.nx / 2, spec.ny / 2, spec.nz / 2)])));
  }
  REQUIRE(first_bits.size() > 1); // volumes are not clones

  const std::vector<VolumeRecord> again = generate_dataset(spec, 4, 2);
  for (std::size_t i = 0; i < data.size(); ++i) {
    REQUIRE(bitwise_equal(data[i].input, again[i].input));
    REQUIRE(bitwise_equal(data[i].reconstruction, again[i].reconstruction));
    REQUIRE(bitwise_equal(data[i].ground_truth, again[i].ground_truth));
    REQUIRE(bitwise_equal(data[i].brain, again[i].brain));
  }
}

TEST_CASE("generate_dataset validates the split sizes", "[phantom]") {
  const PhantomSpec spec = small_spec();
  REQUIRE_THROWS_AS(generate_dataset(spec, 0, 0), validation_error);
  REQUIRE_THROWS_AS(generate_dataset(spec, 2, 3), validation_error);
}
