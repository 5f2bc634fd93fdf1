#include <gtest/gtest.h>

#include <fstream>

#include "irem/checkpoint.hpp"
#include "irem/reconstruct.hpp"
#include "test_util.hpp"

namespace irem {
namespace {

GridSpec cube(double edge, double spacing) {
  return {Box3(Vec3::Zero(), Vec3::Constant(edge)), Vec3::Constant(spacing)};
}

Model small_model(std::uint64_t seed = 1) {
  return make_model(8, seed, seed + 1, Box3(Vec3(-2, -3, -1), Vec3(6, 5, 9)), 250.0, 16);
}

TEST(DenseGrid, UnitCubeCorners) {
  const Eigen::Matrix3Xd pts = make_dense_grid(cube(1.0, 1.0));
  ASSERT_EQ(pts.cols(), 8);
  EXPECT_EQ(pts.col(0), Vec3(0, 0, 0));
  EXPECT_EQ(pts.col(1), Vec3(1, 0, 0));
  EXPECT_EQ(pts.col(2), Vec3(0, 1, 0));
  EXPECT_EQ(pts.col(4), Vec3(0, 0, 1));
  EXPECT_EQ(pts.col(7), Vec3(1, 1, 1));
}

TEST(DenseGrid, DimsAbsorbRoundingInRatio) {
  EXPECT_EQ(cube(2.8, 0.7).dims(), Index3(5, 5, 5));
  EXPECT_EQ(cube(1.0, 0.3).dims(), Index3(4, 4, 4));
  const Eigen::Matrix3Xd pts = make_dense_grid(cube(2.8, 0.7));
  EXPECT_EQ(pts.cols(), 125);
  EXPECT_LE(pts.maxCoeff(), 2.8);
  EXPECT_GE(pts.minCoeff(), 0.0);
}

TEST(DenseGrid, RejectsDegenerateSpecs) {
  EXPECT_THROW(make_dense_grid({Box3(Vec3::Zero(), Vec3(1, 0, 1)), Vec3::Ones()}), ValidationError);
  EXPECT_THROW(make_dense_grid(cube(1.0, 0.0)), ValidationError);
  EXPECT_THROW(make_dense_grid(cube(1.0, -0.5)), ValidationError);
}

TEST(DefaultGrid, UsesUnionBoxAndFinestSpacing) {
  Volume a(Index3(4, 4, 2), Vec3(0.7, 0.7, 2.8));
  Volume b(Index3(2, 4, 4), Vec3(2.8, 0.7, 0.7), Vec3(1, 0, 0));
  a.data.setConstant(1.0f);
  b.data.setConstant(1.0f);
  const NormalizedStackSet set{{a, b}, {Rigid::identity(), Rigid::identity()}, 1.0};
  const GridSpec g = default_grid(set);
  EXPECT_EQ(g.spacing, Vec3::Constant(0.7));
  EXPECT_TRUE(g.bbox.min().isApprox(Vec3(0, 0, 0)));
  EXPECT_TRUE(g.bbox.max().isApprox(Vec3(3.8, 2.1, 2.8)));
}

TEST(Reconstruct, ZeroWeightsGiveBiasTimesScale) {
  Model m = small_model();
  for (auto& l : m.network.layers) l.weight.setZero();
  m.network.layers.back().bias[0] = 0.25f;
  const Volume v = reconstruct_volume(m, cube(3.0, 1.0));
  EXPECT_EQ(v.dims, Index3(4, 4, 4));
  for (Eigen::Index i = 0; i < v.data.size(); ++i) EXPECT_FLOAT_EQ(v.data[i], 62.5f);
}

TEST(Reconstruct, GeometryFollowsSpec) {
  const GridSpec spec{Box3(Vec3(1, 2, 3), Vec3(3, 5, 4)), Vec3(0.5, 1.0, 0.25)};
  const Volume v = reconstruct_volume(small_model(), spec);
  EXPECT_EQ(v.dims, Index3(5, 4, 5));
  EXPECT_EQ(v.origin, Vec3(1, 2, 3));
  EXPECT_EQ(v.spacing, spec.spacing);
  EXPECT_TRUE(v.direction.isIdentity());
}

TEST(Reconstruct, ChunkSizeIsInvisible) {
  const Model m = small_model(4);
  const Volume a = reconstruct_volume(m, cube(4.0, 0.5), {1000});
  const Volume b = reconstruct_volume(m, cube(4.0, 0.5), {7});
  EXPECT_LE((a.data - b.data).abs().maxCoeff(), 1e-6f * a.data.abs().maxCoeff());
}

TEST(Reconstruct, HalfSpacingAgreesAtSharedPoints) {
  const Model m = small_model(5);
  const Volume coarse = reconstruct_volume(m, cube(4.0, 1.0));
  const Volume fine = reconstruct_volume(m, cube(4.0, 0.5));
  ASSERT_EQ(fine.dims, Index3(9, 9, 9));
  for (int k = 0; k < 5; ++k)
    for (int j = 0; j < 5; ++j)
      for (int i = 0; i < 5; ++i)
        EXPECT_NEAR(coarse.at(i, j, k), fine.at(2 * i, 2 * j, 2 * k), 1e-6 * 250);
}

TEST(Reconstruct, RejectsMismatchedEncoder) {
  const Model m = small_model(3);
  EXPECT_NO_THROW(reconstruct_volume(make_encoder<float>(8, 3), m, cube(1.0, 1.0)));
  EXPECT_THROW(reconstruct_volume(make_encoder<float>(8, 4), m, cube(1.0, 1.0)), ValidationError);
  EXPECT_THROW(reconstruct_volume(make_encoder<float>(16, 3), m, cube(1.0, 1.0)), ValidationError);
}

TEST(Reconstruct, CheckpointRoundTripPreservesOutput) {
  const Model m = small_model(6);
  const auto dir = testing::scratch_dir("ckpt_roundtrip");
  save_checkpoint(m, dir / "model");
  const Model back = load_checkpoint(dir / "model");
  const Volume a = reconstruct_volume(m, cube(2.0, 0.5));
  const Volume b = reconstruct_volume(back, cube(2.0, 0.5));
  EXPECT_EQ(a.data.matrix(), b.data.matrix());
  EXPECT_EQ(back.encoder.half_dim, 8);
  EXPECT_EQ(back.intensity_scale, 250.0);
}

TEST(ExportSlices, WritesWindowedPgm) {
  Volume v(Index3(3, 2, 2), Vec3::Ones());
  for (Eigen::Index i = 0; i < v.data.size(); ++i) v.data[i] = static_cast<float>(i);
  const auto dir = testing::scratch_dir("pgm");
  EXPECT_EQ(export_slices(v, 2, dir), 2);
  std::ifstream in(dir / "slice_0001.pgm", std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  in.get();
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(w, 3);
  EXPECT_EQ(h, 2);
  EXPECT_EQ(maxval, 255);
  unsigned char px[6];
  in.read(reinterpret_cast<char*>(px), 6);
  EXPECT_EQ(px[0], std::lround(6.0 / 11 * 255));
  EXPECT_EQ(px[5], 255);
  EXPECT_THROW(export_slices(v, 3, dir), ValidationError);
}

}  // namespace
}  // namespace irem
