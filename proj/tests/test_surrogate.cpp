#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>

#include "test_util.hpp"

using namespace sni;
using sni::testing::dirichlet_from;

namespace {

std::string fixture(const char* name) { return std::string(SNI_TEST_DATA) + "/" + name; }

}  // namespace

TEST(WeightFile, MeanBranchConstantTrunk) {
  const auto m = load_model(fixture("mean_branch.json"));
  EXPECT_EQ(m.M, 8u);
  EXPECT_EQ(m.p, 1u);
  const Field b{1, 2, 3, 4, 5, 6, 7, 8};
  const std::vector<Point2> pts{{0, 0}, {0.3, -0.2}, {5, 5}};
  for (double v : evaluate(m, b, pts)) EXPECT_DOUBLE_EQ(v, 4.5);
  EXPECT_DOUBLE_EQ(m.training_report.val_l2_rel, 0.0);
  EXPECT_EQ(m.training_report.dataset_hash, "fixture");
}

TEST(WeightFile, ShapeMismatchNamesLayer) {
  try {
    load_model(fixture("mismatched_trunk.json"));
    FAIL() << "mismatched file accepted";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("trunk layer 1"), std::string::npos) << e.what();
  }
}

TEST(WeightFile, UnknownActivationRejected) {
  try {
    load_model(fixture("bad_activation.json"));
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("branch layer 0"), std::string::npos);
  }
}

TEST(WeightFile, MissingFileAndGarbage) {
  EXPECT_THROW(load_model(fixture("does_not_exist.json")), LoadError);
  EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({"format_version": 2})")), LoadError);
  EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({"format_version": 1, "M": 2})")), LoadError);
}

TEST(WeightFile, SaveLoadRoundTrip) {
  SurrogateModel m;
  m.M = 3;
  m.p = 2;
  m.branch = {{3, 4, {0.1, 0.2, 0.3, -0.1, 0.0, 0.5, 0.7, 0.2, -0.3, 0.4, 0.4, 0.4}, {0, 0.1, 0.2, 0.3}, Activation::Tanh},
              {4, 2, {1, 0, 0, 1, 0, 1, 1, 0}, {0, 0}, Activation::Identity}};
  m.trunk = {{2, 2, {1, 2, 3, 4}, {0.5, -0.5}, Activation::Tanh}};
  m.output_bias = 0.25;
  const auto path = (std::filesystem::temp_directory_path() / "sni_roundtrip_weights.json").string();
  save_model(m, path);
  const auto back = load_model(path);
  std::filesystem::remove(path);
  const Field b{0.3, -0.4, 0.9};
  const std::vector<Point2> pts{{0.1, 0.2}, {-0.4, 0.3}};
  const Field x = evaluate(m, b, pts), y = evaluate(back, b, pts);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(x[i], y[i]);
  // Hand evaluation of the first point.
  const double h[4] = {std::tanh(0.1 * 0.3 + 0.2 * -0.4 + 0.3 * 0.9),
                       std::tanh(-0.1 * 0.3 + 0.0 * -0.4 + 0.5 * 0.9 + 0.1),
                       std::tanh(0.7 * 0.3 + 0.2 * -0.4 + -0.3 * 0.9 + 0.2),
                       std::tanh(0.4 * 0.3 + 0.4 * -0.4 + 0.4 * 0.9 + 0.3)};
  const double br[2] = {h[0] + h[3], h[1] + h[2]};
  const double tr[2] = {std::tanh(0.1 + 0.4 + 0.5), std::tanh(0.3 + 0.8 - 0.5)};
  EXPECT_NEAR(x[0], br[0] * tr[0] + br[1] * tr[1] + 0.25, 1e-14);
}

TEST(Evaluate, BranchLengthChecked) {
  const auto m = load_model(fixture("mean_branch.json"));
  const Field shorter(7, 0.0);
  const std::vector<Point2> pts{{0, 0}};
  EXPECT_THROW(evaluate(m, shorter, pts), SurrogateScopeError);
}

TEST(Encoding, LinearDataOnSquareMatchesArcLength) {
  // Unit square centred at the origin; centroid of the boundary loop is the
  // origin, the vertex at angle 0 is (0.5, 0). Walk counter-clockwise.
  const auto mesh = make_grid_mesh(4, 4, Box2{});
  auto f = [](Point2 p) { return 2.0 * p.x - p.y; };
  const auto spec = dirichlet_from(mesh, Equation::LaplaceDirichlet, f);
  const std::size_t m = 16;
  const Field enc = encode_boundary(mesh, spec, m);
  ASSERT_EQ(enc.size(), m);
  auto point_at = [](double s) -> Point2 {
    // Perimeter 4, starting at (0.5, 0) going up.
    s = std::fmod(s, 4.0);
    if (s < 0.5) return {0.5, s};
    if (s < 1.5) return {0.5 - (s - 0.5), 0.5};
    if (s < 2.5) return {-0.5, 0.5 - (s - 1.5)};
    if (s < 3.5) return {-0.5 + (s - 2.5), -0.5};
    return {0.5, -0.5 + (s - 3.5)};
  };
  for (std::size_t k = 0; k < m; ++k) EXPECT_NEAR(enc[k], f(point_at(4.0 * k / m)), 1e-12) << k;
}

TEST(Encoding, ScopeChecks) {
  const auto mesh = make_grid_mesh(3, 3);
  auto spec = dirichlet_from(mesh, Equation::Darcy, [](Point2) { return 0.0; });
  EXPECT_THROW(encode_boundary(mesh, spec, 8), SurrogateScopeError);
  const auto mixed = retag_boundary(mesh, {BoundaryKind::Neumann});
  auto mspec = dirichlet_from(mixed, Equation::LaplaceDirichlet, [](Point2) { return 0.0; });
  EXPECT_THROW(encode_boundary(mixed, mspec, 8), SurrogateScopeError);
}

TEST(Encoding, BoundaryLoopsOfGrid) {
  const auto loops = boundary_loops(make_grid_mesh(3, 2));
  ASSERT_EQ(loops.size(), 1u);
  EXPECT_EQ(loops[0].size(), 10u);
}
