#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "lase/experiments.hpp"
#include "lase/kernel_network.hpp"
#include "lase/kernels.hpp"

using namespace lase;
using namespace lase::kernels;
using lase::experiments::random_small_graph;

namespace {

// Plain recursion, no memo and no argument canonicalisation.
double naive_neighborhood(const AttributedGraph& g1, const AttributedGraph& g2, NodeId u, NodeId u2, std::size_t level,
                          double decay) {
  const double base = dot(g1.node_features(u), g2.node_features(u2));
  if (level == 0) return base;
  double acc = 0.0;
  for (const auto& a : g1.neighbors(u)) {
    for (const auto& b : g2.neighbors(u2)) {
      acc += naive_neighborhood(g1, g2, a.node, b.node, level - 1, decay) *
             dot(g1.link_features(a.link), g2.link_features(b.link));
    }
  }
  return base * decay * acc;
}

AttributedGraph single_node(std::vector<double> f, std::size_t d_link) {
  AttributedGraph::Options o;
  o.d_link = d_link;
  return AttributedGraph::build({{0, std::move(f), std::nullopt}}, {}, o);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(NeighborFeature, OuterProduct) {
  const std::vector<double> fv{1, 2}, fe{3, 4, 5};
  const auto t = neighbor_feature(fv, fe);
  ASSERT_EQ(t.rows(), 2u);
  ASSERT_EQ(t.cols(), 3u);
  EXPECT_EQ(t(1, 2), 10.0);
  EXPECT_EQ(t(0, 0), 3.0);
}

TEST(NeighborKernel, FactorisationMatchesFrobenius) {
  const std::vector<double> a{1, 0}, e{1, 1}, b{0, 1}, e2{2, 0};
  EXPECT_EQ(neighbor_kernel({a, e}, {a, e}), 2.0);
  EXPECT_EQ(neighbor_kernel({a, e}, {b, e}), 0.0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(3), w(3), x(2), y(2);
    for (auto* vec : {&v, &w, &x, &y}) {
      for (auto& z : *vec) z = n(rng);
    }
    const double lhs = neighbor_kernel({v, x}, {w, y});
    const double rhs = frobenius_inner(neighbor_feature(v, x), neighbor_feature(w, y));
    EXPECT_NEAR(lhs, rhs, 1e-12 * (1.0 + std::abs(rhs)));
  }
  EXPECT_THROW(neighbor_kernel({a, e}, {a, std::vector<double>{1.0}}), KernelError);
}

TEST(NeighborhoodKernel, MatchesNaiveRecursion) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 40; ++t) {
    const auto g1 = random_small_graph(rng);
    const auto g2 = random_small_graph(rng);
    for (std::size_t hops = 0; hops <= 3; ++hops) {
      const KernelConfig cfg{0.6, hops};
      for (NodeId u = 0; u < g1.num_nodes(); ++u) {
        for (NodeId v = 0; v < g2.num_nodes(); ++v) {
          const double got = neighborhood_kernel(g1, g2, u, v, cfg);
          EXPECT_LT(rel(got, naive_neighborhood(g1, g2, u, v, hops, 0.6)), 1e-12);
          EXPECT_EQ(got, neighborhood_kernel(g2, g1, v, u, cfg));
        }
      }
    }
  }
}

TEST(NeighborhoodKernel, Errors) {
  std::mt19937_64 rng(1);
  const auto g = random_small_graph(rng);
  EXPECT_THROW(neighborhood_kernel(g, g, 0, 0, {1.0, 1}), KernelError);
  EXPECT_THROW(neighborhood_kernel(g, g, 99, 0, {0.5, 1}), KernelError);
  experiments::RandomGraphSpec wide;
  wide.d_node = 4;
  const auto h = random_small_graph(rng, wide);
  EXPECT_THROW(rw_kernel_dp(g, h, {0.5, 1}), KernelError);
}

TEST(RandomWalkKernel, DynamicProgramMatchesEnumeration) {
  const auto rows = experiments::kernel_cross_check(100, 4, 0.5, 17);
  for (const auto& r : rows) EXPECT_LT(r.rel_err, 1e-9) << "pair " << r.pair;
}

TEST(RandomWalkKernel, ZeroHopsIsNodeGramSum) {
  std::mt19937_64 rng(2);
  const auto g1 = random_small_graph(rng);
  const auto g2 = random_small_graph(rng);
  double expected = 0.0;
  for (NodeId a = 0; a < g1.num_nodes(); ++a) {
    for (NodeId b = 0; b < g2.num_nodes(); ++b) expected += dot(g1.node_features(a), g2.node_features(b));
  }
  EXPECT_LT(rel(rw_kernel_dp(g1, g2, {0.5, 0}), expected), 1e-12);
  const auto one = single_node({1.0, 2.0, 3.0}, 2);
  EXPECT_EQ(rw_kernel_dp(one, one, {0.5, 0}), 14.0);
  EXPECT_EQ(rw_kernel_dp(one, one, {0.5, 2}), 0.0);
}

TEST(RandomWalkKernel, EdgelessGraphGivesZeroForPositiveHops) {
  std::mt19937_64 rng(4);
  experiments::RandomGraphSpec spec;
  spec.link_prob = 0.0;
  const auto empty = random_small_graph(rng, spec);
  const auto other = random_small_graph(rng);
  EXPECT_EQ(rw_kernel_dp(empty, other, {0.5, 1}), 0.0);
  EXPECT_EQ(rw_kernel_enumerate(other, empty, {0.5, 2}), 0.0);
}

TEST(RandomWalkKernel, ExactlySymmetric) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 50; ++t) {
    const auto g1 = random_small_graph(rng);
    const auto g2 = random_small_graph(rng);
    const KernelConfig cfg{0.3, 2};
    EXPECT_EQ(rw_kernel_dp(g1, g2, cfg), rw_kernel_dp(g2, g1, cfg));
    EXPECT_EQ(rw_kernel_enumerate(g1, g2, cfg), rw_kernel_enumerate(g2, g1, cfg));
  }
}

TEST(RandomWalkKernel, GramMatrixIsPositiveSemidefinite) {
  std::mt19937_64 rng(8);
  std::vector<AttributedGraph> graphs;
  for (int i = 0; i < 25; ++i) graphs.push_back(random_small_graph(rng));
  for (std::size_t hops : {1u, 2u, 3u}) {
    const auto gram = rw_gram(graphs, {0.5, hops});
    const auto n = static_cast<Eigen::Index>(graphs.size());
    const Eigen::MatrixXd m = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        gram.data(), n, n);
    EXPECT_EQ((m - m.transpose()).cwiseAbs().maxCoeff(), 0.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-8 * scale) << "hops " << hops;
  }
}

TEST(Theorem1, NetworkSumEqualsWalkKernel) {
  for (std::size_t hops : {1u, 2u, 3u}) {
    const auto rows = experiments::theorem1_trials(nullptr, hops, 0.5, 50, 4, 100 + hops);
    ASSERT_EQ(rows.size(), 200u);
    for (const auto& r : rows) EXPECT_LT(r.rel_err, 1e-9) << "hops " << hops << " trial " << r.trial;
  }
}

TEST(Theorem1, ZeroLinkWeightsGiveZero) {
  std::mt19937_64 rng(12);
  const auto g = random_small_graph(rng);
  StackConfig sc;
  sc.arch = Architecture::rw;
  sc.kernel_mode = true;
  sc.depth = 2;
  sc.hidden = 3;
  LayerStack stack(sc, g.d_node(), g.d_link(), 1);
  for (std::size_t l = 1; l <= 2; ++l) {
    for (auto& v : stack.layer(l).U->data()) v = 0.0;
  }
  const auto c = check_theorem1(g, stack, {0.5, 2}, 1);
  EXPECT_EQ(c.lhs, 0.0);
  EXPECT_EQ(c.rhs, 0.0);
}

TEST(Theorem1, SingleNodeGraph) {
  const auto g = single_node({0.5, -1.0, 2.0}, 2);
  const auto rows = experiments::theorem1_trials(&g, 1, 0.5, 5, 4, 3);
  for (const auto& r : rows) {
    EXPECT_EQ(r.lhs, 0.0);
    EXPECT_EQ(r.rhs, 0.0);
  }
}

TEST(Theorem1, RejectsMismatchedConfig) {
  std::mt19937_64 rng(1);
  const auto g = random_small_graph(rng);
  StackConfig sc;
  sc.arch = Architecture::rw;
  sc.kernel_mode = true;
  sc.depth = 2;
  sc.hidden = 3;
  LayerStack stack(sc, g.d_node(), g.d_link(), 1);
  EXPECT_THROW(check_theorem1(g, stack, {0.5, 1}, 0), KernelError);
  EXPECT_THROW(check_theorem1(g, stack, {0.4, 2}, 0), KernelError);
  EXPECT_THROW(param_path_graph(stack, 3), KernelError);
}
