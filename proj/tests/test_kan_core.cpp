/* Copyright 2026 The kanprompt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "kanprompt/kan_core.hpp"
#include "oracles.hpp"

namespace kanprompt::kan {
namespace {

using Grid = SplineGrid<double>;

std::shared_ptr<const Grid> default_grid() {
  return std::make_shared<const Grid>(Grid::uniform(8, 3, -1.0, 1.0));
}

// Strictly increasing knots with random spacing, covering [-1, 1].
Grid random_grid(Rng& rng, int intervals, int order) {
  std::vector<double> inner{-1.0};
  std::vector<double> widths(intervals);
  double total = 0.0;
  for (double& w : widths) total += (w = rng.uniform(0.5, 1.5));
  for (int i = 0; i < intervals; ++i) inner.push_back(inner.back() + 2.0 * widths[i] / total);
  inner.back() = 1.0;
  std::vector<double> knots;
  for (int i = order; i > 0; --i) knots.push_back(-1.0 - i * rng.uniform(0.1, 0.4));
  knots.insert(knots.end(), inner.begin(), inner.end());
  for (int i = 1; i <= order; ++i) knots.push_back(1.0 + i * rng.uniform(0.1, 0.4));
  std::sort(knots.begin(), knots.end());
  return Grid(knots, order, -1.0, 1.0);
}

TEST(SplineGrid, BasisCountIsIntervalsPlusOrder) {
  for (int order = 1; order <= 5; ++order) {
    for (int intervals : {1, 3, 8}) {
      EXPECT_EQ(Grid::uniform(intervals, order, -1.0, 1.0).basis_count(),
                static_cast<std::size_t>(intervals + order));
    }
  }
}

TEST(SplineGrid, RejectsInvalidConstruction) {
  EXPECT_THROW(Grid({0, 1, 1, 2, 3, 4, 5, 6, 7, 8}, 3, 3.0, 5.0), InvalidArgument);
  EXPECT_THROW(Grid::uniform(8, 3, 1.0, -1.0), InvalidArgument);
  EXPECT_THROW(Grid::uniform(0, 3, -1.0, 1.0), InvalidArgument);
  EXPECT_THROW(Grid::uniform(8, 0, -1.0, 1.0), InvalidArgument);
  // Interior knots [2, 4] do not cover [0, 5].
  EXPECT_THROW(Grid({-1, 0, 1, 2, 3, 4, 5, 6, 7}, 3, 0.0, 5.0), InvalidArgument);
  EXPECT_THROW(Grid({0, 1, 2}, 3, 0.5, 1.5), InvalidArgument);
}

TEST(BsplineBasis, PartitionOfUnityAndNonNegative) {
  const auto grid = default_grid();
  Rng rng(1);
  std::vector<double> x(1000);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  x.front() = -1.0;
  x.back() = 1.0;
  const auto b = bspline_basis<double>(x, *grid);
  for (std::size_t r = 0; r < x.size(); ++r) {
    double sum = 0.0;
    for (double v : b.row(r)) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9) << "x=" << x[r];
  }
}

TEST(BsplineBasis, ClampedInputsMatchBoundaries) {
  const auto grid = default_grid();
  const std::vector<double> x{-50.0, -1.0, 1.0, 1e6};
  const auto b = bspline_basis<double>(x, *grid);
  for (std::size_t j = 0; j < grid->basis_count(); ++j) {
    EXPECT_EQ(b(0, j), b(1, j));
    EXPECT_EQ(b(3, j), b(2, j));
  }
}

TEST(BsplineBasis, RejectsNonFiniteInput) {
  const auto grid = default_grid();
  const std::vector<double> x{0.0, std::nan("")};
  EXPECT_THROW(bspline_basis<double>(x, *grid), InvalidArgument);
  const std::vector<double> y{INFINITY};
  EXPECT_THROW(bspline_basis<double>(y, *grid), InvalidArgument);
}

TEST(BsplineBasis, MatchesCoxDeBoorOracleOnRandomGrids) {
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const Grid grid = random_grid(rng, 8, 3);
    std::vector<double> x(100);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    x.front() = -1.0;  // both closed ends of the domain
    x.back() = 1.0;
    const auto b = bspline_basis<double>(x, grid);
    const std::vector<double> knots(grid.knots().begin(), grid.knots().end());
    for (std::size_t r = 0; r < x.size(); ++r) {
      for (std::size_t j = 0; j < grid.basis_count(); ++j) {
        const double want = oracle::cox_de_boor(knots, static_cast<int>(j), 3, x[r], 1.0);
        EXPECT_NEAR(b(r, j), want, 1e-10) << "x=" << x[r] << " j=" << j;
      }
    }
  }
}

TEST(BsplineBasis, LocalSupport) {
  const auto grid = default_grid();
  const auto knots = grid->knots();
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(-1.0, 1.0);
    const auto b = bspline_basis<double>(std::span<const double>(&x, 1), *grid);
    for (std::size_t j = 0; j < grid->basis_count(); ++j) {
      if (x < knots[j] || x > knots[j + 4]) EXPECT_EQ(b(0, j), 0.0);
    }
  }
}

TEST(SplineGrid, LocalBasisDerivativeMatchesFiniteDifference) {
  const auto grid = default_grid();
  Rng rng(4);
  std::array<double, 4> v{}, d{}, vp{}, vm{}, scratch{};
  for (int i = 0; i < 100; ++i) {
    const double x = rng.uniform(-0.99, 0.99);
    const double h = 1e-6;
    const std::size_t first = grid->local_basis(x, v, d);
    ASSERT_EQ(grid->local_basis(x + h, vp, scratch), first);
    ASSERT_EQ(grid->local_basis(x - h, vm, scratch), first);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(d[j], (vp[j] - vm[j]) / (2 * h), 1e-5);
  }
  grid->local_basis(-3.0, v, d);
  for (double g : d) EXPECT_EQ(g, 0.0);
}

TEST(KanEdge, ZeroParametersGiveZero) {
  const auto grid = default_grid();
  KanEdgeFunction<double> edge{0.0, std::vector<double>(grid->basis_count(), 0.0), grid};
  const std::vector<double> x{-3.0, -0.5, 0.0, 0.7, 9.0};
  for (double y : kan_edge_eval<double>(x, edge)) EXPECT_EQ(y, 0.0);
}

TEST(KanEdge, SiluAtOriginIsZero) {
  const auto grid = default_grid();
  KanEdgeFunction<double> edge{1.0, std::vector<double>(grid->basis_count(), 0.0), grid};
  const std::vector<double> x{0.0};
  EXPECT_EQ(kan_edge_eval<double>(x, edge)[0], 0.0);
}

TEST(KanEdge, TermByTermRecomposition) {
  const auto grid = default_grid();
  Rng rng(5);
  KanEdgeFunction<double> edge{rng.uniform(-2, 2), {}, grid};
  for (std::size_t j = 0; j < grid->basis_count(); ++j) edge.coefficients.push_back(rng.normal());
  std::vector<double> x(50);
  for (double& v : x) v = rng.uniform(-1.5, 1.5);
  const auto y = kan_edge_eval<double>(x, edge);
  const auto b = bspline_basis<double>(x, *grid);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double spline = 0.0;
    for (std::size_t j = 0; j < grid->basis_count(); ++j) spline += edge.coefficients[j] * b(i, j);
    const double silu = x[i] / (1.0 + std::exp(-x[i]));
    EXPECT_NEAR(y[i], edge.base_weight * silu + spline, 1e-12);
  }
}

TEST(KanEdge, CoefficientLengthMismatchIsStructural) {
  const auto grid = default_grid();
  KanEdgeFunction<double> edge{1.0, std::vector<double>(3, 0.0), grid};
  const std::vector<double> x{0.1};
  EXPECT_THROW(kan_edge_eval<double>(x, edge), StructuralError);
}

KanNetwork<double> random_network(std::vector<std::size_t> dims, std::uint64_t seed,
                                  double coef_scale = 1.0) {
  Rng rng(seed);
  KanInit init{0.0, 2.0, coef_scale};
  return make_kan_network<double>(dims, default_grid(), init, rng);
}

TEST(KanLayer, ZeroParametersGiveZeroVector) {
  KanLayer<double> layer(3, 4, default_grid());
  const std::vector<double> z{0.3, -0.2, 0.9};
  const auto out = kan_layer_forward<double>(z, layer);
  ASSERT_EQ(out.size(), 4u);
  for (double v : out) EXPECT_EQ(v, 0.0);
}

TEST(KanLayer, SingleEdgeEqualsEdgeEval) {
  const auto net = random_network({1, 1}, 6);
  const std::vector<double> z{0.37};
  EXPECT_EQ(kan_layer_forward<double>(z, net.layer(0))[0],
            kan_edge_eval<double>(z, net.layer(0).edge(0, 0))[0]);
}

TEST(KanLayer, MatchesDoubleLoopOracle) {
  const auto net = random_network({3, 4}, 7);
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> z(3);
    for (double& v : z) v = rng.uniform(-1.3, 1.3);
    const auto out = kan_layer_forward<double>(z, net.layer(0));
    for (std::size_t q = 0; q < 4; ++q) {
      double want = 0.0;
      for (std::size_t p = 0; p < 3; ++p) {
        want += kan_edge_eval<double>(std::span<const double>(&z[p], 1), net.layer(0).edge(q, p))[0];
      }
      EXPECT_NEAR(out[q], want, 1e-10);
    }
  }
}

TEST(KanLayer, DimensionMismatchIsStructural) {
  const auto net = random_network({3, 4}, 9);
  const std::vector<double> z{0.1, 0.2};
  EXPECT_THROW(kan_layer_forward<double>(z, net.layer(0)), StructuralError);
}

TEST(KanNetwork, InterLayerMismatchRejectedAtConstruction) {
  std::vector<KanLayer<double>> layers;
  layers.emplace_back(2, 3, default_grid());
  layers.emplace_back(4, 1, default_grid());
  EXPECT_THROW(KanNetwork<double>(std::move(layers)), StructuralError);
}

TEST(KanNetwork, SingleLayerEqualsLayerForward) {
  const auto net = random_network({2, 5}, 10);
  const std::vector<double> z{0.4, -0.8};
  EXPECT_EQ(kan_forward<double>(z, net), kan_layer_forward<double>(z, net.layer(0)));
}

TEST(KanNetwork, EqualsManualComposition) {
  const auto net = random_network({3, 4, 2}, 11);
  const std::vector<double> z{0.1, -0.6, 0.95};
  const auto hidden = kan_layer_forward<double>(z, net.layer(0));
  EXPECT_EQ(kan_forward<double>(z, net), kan_layer_forward<double>(hidden, net.layer(1)));
}

TEST(KanNetwork, ZeroParametersPropagateZero) {
  std::vector<KanLayer<double>> layers;
  for (int i = 0; i < 4; ++i) layers.emplace_back(3, 3, default_grid());
  const KanNetwork<double> net(std::move(layers));
  const std::vector<double> z{5.0, -1.0, 0.2};
  for (double v : kan_forward<double>(z, net)) EXPECT_EQ(v, 0.0);
}

TEST(KanNetwork, DeterministicEvaluation) {
  const auto a = random_network({4, 6, 2}, 12);
  const auto b = random_network({4, 6, 2}, 12);
  const std::vector<double> z{0.1, 0.2, -0.3, 0.4};
  EXPECT_EQ(kan_forward<double>(z, a), kan_forward<double>(z, b));
}

TEST(KanGradients, ZeroUpstreamGivesZeroGradients) {
  const auto net = random_network({2, 3, 1}, 13);
  const std::vector<double> z{0.2, -0.4};
  const std::vector<double> up{0.0};
  const auto g = kan_gradients<double>(z, net, up);
  for (const auto& layer : g.base_weights) for (double v : layer) EXPECT_EQ(v, 0.0);
  for (const auto& layer : g.coefficients) for (double v : layer) EXPECT_EQ(v, 0.0);
  for (double v : g.input) EXPECT_EQ(v, 0.0);
}

TEST(KanGradients, MatchFiniteDifferences) {
  auto net = random_network({2, 3, 1}, 14);
  Rng rng(15);
  for (int point = 0; point < 10; ++point) {
    std::vector<double> z{rng.uniform(-0.95, 0.95), rng.uniform(-0.95, 0.95)};
    const std::vector<double> up{rng.uniform(0.5, 1.5)};
    const auto g = kan_gradients<double>(z, net, up);
    auto objective = [&] { return up[0] * kan_forward<double>(z, net)[0]; };
    const auto result = oracle::check_network_gradients(net, z, g, objective, 1e-5);
    EXPECT_LT(result.max_rel_error, 1e-4) << "point " << point << " worst " << result.worst;
    EXPECT_GT(result.checked, 40u);
  }
}

TEST(KanGradients, ClampedInputKeepsCoefficientGradientsOfBoundary) {
  const auto net = random_network({1, 1}, 16);
  const std::vector<double> up{1.0};
  const std::vector<double> below{-4.0}, at{-1.0};
  const auto gb = kan_gradients<double>(below, net, up);
  const auto ga = kan_gradients<double>(at, net, up);
  EXPECT_EQ(gb.coefficients[0], ga.coefficients[0]);
  // Outside the grid only the silu term moves with the input.
  const double s = 1.0 / (1.0 + std::exp(4.0));
  const double silu_grad = s * (1.0 + -4.0 * (1.0 - s));
  EXPECT_NEAR(gb.input[0], net.layer(0).base_weights()[0] * silu_grad, 1e-14);
}

}  // namespace
}  // namespace kanprompt::kan
