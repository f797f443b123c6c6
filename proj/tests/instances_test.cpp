#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "eot/instances/idx.hpp"
#include "eot/instances/images.hpp"
#include "eot/instances/instance_spec.hpp"
#include "eot/oracle/exact.hpp"

namespace eot {
namespace {

namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("eot_instances_test_" + name);
}

// Writes an IDX file byte by byte without the library's encoder.
void write_idx_fixture(const fs::path& path, std::uint32_t magic, std::uint32_t count, std::uint32_t rows,
                       std::uint32_t cols, const std::vector<unsigned char>& payload) {
  std::ofstream out(path, std::ios::binary);
  for (std::uint32_t v : {magic, count, rows, cols}) {
    const unsigned char be[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                 static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(be), 4);
  }
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
}

TEST(Mt19937_64, StandardCheckValue) {
  std::mt19937_64 g;
  g.discard(9999);
  EXPECT_EQ(g(), 9981545732273789042ULL);
}

TEST(SyntheticImage, MatchesIndependentGenerator) {
  // tests/oracles/synthetic_lp.py, image(7, 4, 0.5).
  const double expected[] = {0.11741428103451801, 0.8919131767124763, 0.14127156320378675,
                             0.05509315850394303, 41.62614902657229,  45.03552382298541,
                             12.857903438199846,  0.7179056846490034, 37.78725173700484,
                             29.80943903892166,   19.872272720786693, 0.30852871662747394,
                             41.60841861878749,   15.200258221290857, 49.76309133893322,
                             0.99365272821278};
  const GrayImage img = gen_synthetic_image(7, 4, 0.5);
  ASSERT_EQ(img.intensities.size(), 16u);
  for (std::size_t k = 0; k < 16; ++k) EXPECT_EQ(img.intensities[k], expected[k]) << k;
  EXPECT_EQ(synthetic_pair_seeds(7).second, 7191089600892374487ULL);
}

TEST(SyntheticImage, ForegroundSideAndRange) {
  EXPECT_EQ(foreground_side(20, 0.1), 6u);
  EXPECT_EQ(foreground_side(8, 0.9), 8u);
  EXPECT_EQ(foreground_side(2, 0.1), 1u);
  EXPECT_THROW(foreground_side(8, 0.0), DomainError);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GrayImage img = gen_synthetic_image(seed, 20, 0.1);
    std::size_t bright = 0;
    for (double x : img.intensities) {
      EXPECT_GE(x, 0.0);
      EXPECT_LT(x, 50.0);
      bright += x > 1.0;
    }
    EXPECT_LE(bright, 36u);
  }
  EXPECT_THROW(gen_synthetic_image(1, 1, 0.5), DomainError);
}

TEST(SyntheticImage, Deterministic) {
  EXPECT_EQ(gen_synthetic_image(42, 10, 0.5).intensities, gen_synthetic_image(42, 10, 0.5).intensities);
  EXPECT_NE(gen_synthetic_image(42, 10, 0.5).intensities, gen_synthetic_image(43, 10, 0.5).intensities);
}

TEST(ImageToHistogram, Examples) {
  const Histogram u = image_to_histogram(GrayImage(3, Vector(9, 7.0)));
  for (double w : u.weights()) EXPECT_NEAR(w, 1.0 / 9, 1e-16);
  Vector one(4, 0.0);
  one[2] = 3.0;
  EXPECT_EQ(image_to_histogram(GrayImage(2, one)).weights(), (Vector{0, 0, 1, 0}));
  EXPECT_EQ(image_to_histogram(GrayImage(2, {1, 1, 2, 0})).weights(), (Vector{0.25, 0.25, 0.5, 0}));
  EXPECT_THROW(image_to_histogram(GrayImage(2, Vector(4, 0.0))), DomainError);
}

TEST(MnistHistogram, Examples) {
  const Histogram z = mnist_histogram(GrayImage(2, Vector(4, 0.0)));
  for (double w : z.weights()) EXPECT_DOUBLE_EQ(w, 0.25);
  const GrayImage full(2, {1, 2, 3, 4});
  EXPECT_EQ(mnist_histogram(full), image_to_histogram(full));
  // 1x2 image [[0, 1]] as a flattened pair; the floor applies per pixel.
  const Histogram h = Histogram::normalized({kMnistZeroFloor, 1.0});
  EXPECT_NEAR(h[0], 9.99999000001e-7, 1e-18);
  EXPECT_NEAR(h[1], 0.999999, 1e-11);
  const Histogram m = mnist_histogram(GrayImage(2, {0, 255, 0, 0}));
  EXPECT_GT(m.min(), 0.0);
}

TEST(L1Cost, Examples) {
  const CostMatrix C2 = l1_cost_matrix(2);
  EXPECT_EQ(C2.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(C2(k, k), 0.0);
  EXPECT_EQ(C2.max_abs(), 2.0);
  EXPECT_EQ(C2(0, 3), 2.0);
  EXPECT_EQ(l1_cost_matrix(20).max_abs(), 38.0);
  const CostMatrix C = l1_cost_matrix(5);
  for (std::size_t a = 0; a < 25; ++a)
    for (std::size_t b = 0; b < 25; ++b) {
      EXPECT_EQ(C(a, b), C(b, a));
      for (std::size_t m = 0; m < 25; m += 3) EXPECT_LE(C(a, b), C(a, m) + C(m, b));
    }
}

TEST(Idx, FixtureRoundTrip) {
  std::vector<unsigned char> payload(2 * 28 * 28);
  for (std::size_t k = 0; k < payload.size(); ++k) payload[k] = static_cast<unsigned char>((k * 37 + 11) % 256);
  const fs::path p = temp_path("fixture.idx");
  write_idx_fixture(p, 0x00000803, 2, 28, 28, payload);
  const auto images = load_idx_images(p.string());
  ASSERT_EQ(images.size(), 2u);
  for (std::size_t k = 0; k < payload.size(); ++k)
    EXPECT_EQ(images[k / 784].intensities[k % 784], static_cast<double>(payload[k]));

  const auto encoded = encode_idx_images(images);
  std::ifstream in(p, std::ios::binary);
  const std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(encoded, raw);
  fs::remove(p);
}

TEST(Idx, Errors) {
  const fs::path p = temp_path("bad.idx");
  write_idx_fixture(p, 0x00000801, 1, 2, 2, {1, 2, 3, 4});
  EXPECT_THROW(load_idx_images(p.string()), ParseError);

  write_idx_fixture(p, 0x00000803, 2, 2, 2, {1, 2, 3, 4, 5});
  try {
    load_idx_images(p.string());
    FAIL() << "truncated file accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 21u);
  }

  { std::ofstream(p, std::ios::binary | std::ios::trunc); }
  EXPECT_THROW(load_idx_images(p.string()), ParseError);
  EXPECT_THROW(parse_idx_images({0, 0, 8}), ParseError);
  fs::remove(p);
  EXPECT_THROW(load_idx_images(p.string()), IoError);
}

TEST(Idx, Labels) {
  const std::vector<unsigned char> bytes = {0, 0, 8, 1, 0, 0, 0, 3, 7, 2, 9};
  EXPECT_EQ(parse_idx_labels(bytes), (std::vector<std::uint8_t>{7, 2, 9}));
  EXPECT_THROW(parse_idx_labels({0, 0, 8, 3, 0, 0, 0, 3}), ParseError);
  EXPECT_THROW(parse_idx_labels({0, 0, 8, 1, 0, 0, 0, 3, 7}), ParseError);
}

TEST(UniformInstance, Examples) {
  const Instance u = uniform_instance(2);
  EXPECT_EQ(u.cost.entries(), Matrix(2, 2, 1.0));
  EXPECT_EQ(u.r.weights(), (Vector{0.5, 0.5}));
  EXPECT_THROW(uniform_instance(1), DomainError);
  for (std::size_t n : {2u, 5u, 9u}) {
    const Instance v = uniform_instance(n);
    EXPECT_NEAR(exact_ot(v.cost, v.r, v.c).value, 1.0, 1e-12);
  }
}

TEST(InstanceSpec, MaterializeSynthetic) {
  const Instance inst = materialize(InstanceSpec{SyntheticPair{5, 0.5, 3}});
  EXPECT_EQ(inst.size(), 25u);
  EXPECT_GT(inst.r.min(), 0.0);
  EXPECT_EQ(inst.meta["kind"], "synthetic");
  EXPECT_EQ(inst.meta["params"]["rng"], "mt19937_64");
  EXPECT_NE(inst.r, inst.c);
  const Instance again = materialize(InstanceSpec{SyntheticPair{5, 0.5, 3}});
  EXPECT_EQ(again.r, inst.r);
  EXPECT_EQ(again.c, inst.c);
}

TEST(InstanceSpec, MaterializeMnist) {
  std::vector<unsigned char> payload(3 * 16, 0);
  payload[5] = 200;
  payload[16 + 9] = 100;
  payload[32 + 1] = 50;
  const fs::path p = temp_path("mnist.idx");
  write_idx_fixture(p, 0x00000803, 3, 4, 4, payload);
  MnistPair m;
  m.images_path = p.string();
  m.index_a = 0;
  m.index_b = 1;
  const Instance inst = materialize(InstanceSpec{m});
  EXPECT_EQ(inst.size(), 16u);
  EXPECT_GT(inst.r.min(), 0.0);
  EXPECT_NEAR(inst.r[5], 200 / (200 + 15e-6), 1e-12);

  MnistPair drawn;
  drawn.images_path = p.string();
  drawn.seed = 5;
  const Instance d = materialize(InstanceSpec{drawn});
  EXPECT_NE(d.meta["params"]["index_a"], d.meta["params"]["index_b"]);
  fs::remove(p);
}

TEST(InstanceSpec, JsonRoundTrip) {
  MnistPair m;
  m.images_path = "x.idx";
  m.index_a = 3;
  m.seed = 9;
  for (const InstanceSpec& s :
       {InstanceSpec{SyntheticPair{6, 0.9, 12}}, InstanceSpec{UniformKind{7}}, InstanceSpec{m}}) {
    const InstanceSpec back = spec_from_json(spec_to_json(s));
    EXPECT_EQ(spec_to_json(back), spec_to_json(s));
  }
  EXPECT_THROW(spec_from_json(json{{"kind", "color"}}), DomainError);
  EXPECT_THROW(spec_from_json(json{{"n", 3}}), DomainError);
}

TEST(Instance, FileRoundTripIsExact) {
  const Instance inst = materialize(InstanceSpec{SyntheticPair{3, 0.5, 11}});
  const fs::path p = temp_path("inst.json");
  save_instance(p.string(), inst);
  const Instance back = load_instance(p.string());
  EXPECT_EQ(back.cost.entries(), inst.cost.entries());
  EXPECT_EQ(back.r, inst.r);
  EXPECT_EQ(back.c, inst.c);
  EXPECT_EQ(back.meta, inst.meta);
  fs::remove(p);
  EXPECT_THROW(load_instance(p.string()), IoError);
  EXPECT_THROW(instance_from_json(json{{"n", 2}, {"cost", {1, 2, 3}}, {"r", {0.5, 0.5}}, {"c", {0.5, 0.5}}}),
               DomainError);
}

}  // namespace
}  // namespace eot
