#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lase/experiments.hpp"
#include "lase/layers.hpp"
#include "lase/sampler.hpp"
#include "support/grad_suite.hpp"

using namespace lase;
using lase::testing::stack_grad_check;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> matvec(const Tensor2& w, std::span<const double> x) {
  std::vector<double> out(w.rows(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) out[i] += w(i, j) * x[j];
  }
  return out;
}

// Two nodes joined by one link, plus an isolated third node.
AttributedGraph pair_graph() {
  std::vector<NodeRecord> nodes{{0, {1.0, -0.5}, std::nullopt}, {1, {0.25, 2.0}, std::nullopt}, {2, {0.7, 0.1}, std::nullopt}};
  std::vector<LinkRecord> links{{0, 0, 1, {0.5, -1.5, 1.0}}};
  return AttributedGraph::build(nodes, links, {});
}

std::vector<double> hidden_of(const AttributedGraph& g, LayerStack& s, NodeId u) {
  const NodeId b[] = {u};
  const auto h = infer_hidden(g, s, b);
  return {h[0].data().begin(), h[0].data().end()};
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "coordinate " << i;
}

}  // namespace

TEST(Gate, ZeroWeightsGiveOneHalf) {
  Tape t;
  const Var lam = gate(t, t.constant(Tensor2::column({1, 2})), t.constant(Tensor2::column({3})),
                       t.constant(Tensor2::column({-4, 5})), t.zeros(1, 5), t.zeros(1, 1));
  EXPECT_EQ(t.scalar(lam), 0.5);
}

TEST(Gate, StaysInsideUnitInterval) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 10000; ++trial) {
    Tape t;
    Tensor2 V(1, 5), hu(2, 1), fe(1, 1), hv(2, 1), b(1, 1);
    for (auto* x : {&V, &hu, &fe, &hv, &b}) {
      for (auto& v : x->data()) v = u(rng);
    }
    const double lam = t.scalar(gate(t, t.constant(hu), t.constant(fe), t.constant(hv), t.constant(V), t.constant(b)));
    ASSERT_GT(lam, 0.0);
    ASSERT_LT(lam, 1.0);
  }
}

TEST(Gate, KernelModeUsesConstantDecay) {
  std::mt19937_64 rng(2);
  const auto g = experiments::random_small_graph(rng, {.min_nodes = 6, .max_nodes = 6, .link_prob = 0.8});
  StackConfig sc;
  sc.arch = Architecture::rw;
  sc.kernel_mode = true;
  sc.constant_decay = 0.3;
  sc.depth = 2;
  sc.hidden = 4;
  LayerStack stack(sc, g.d_node(), g.d_link(), 3);
  EXPECT_FALSE(stack.gated());
  EXPECT_FALSE(stack.layer(1).V.has_value());
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (double lam : neighborhood_terms(g, stack, 2, u).gates) EXPECT_EQ(lam, 0.3);
  }
}

TEST(Amplifier, ElementwiseProduct) {
  Tape t;
  Tensor2 U(2, 1, {2, 3});
  const Var a = amplifier(t, t.constant(Tensor2::column({1, 2})), t.constant(Tensor2::column({1})), t.constant(U), false);
  EXPECT_EQ(t.value(a)[0], 2.0);
  EXPECT_EQ(t.value(a)[1], 6.0);
  const Var s = amplifier(t, t.constant(Tensor2::column({1, 2})), t.constant(Tensor2::column({1})), t.constant(U), true);
  EXPECT_NEAR(t.value(s)[1], 2.0 * sigmoid(3.0), 1e-15);
}

TEST(Amplifier, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  Tensor2 U = glorot_uniform(3, 2, rng);
  const auto h = Tensor2::column({0.3, -1.2, 0.8});
  const auto fe = Tensor2::column({1.5, -0.4});
  for (bool squash : {false, true}) {
    const auto r = lase::testing::grad_check({{"U", &U}}, [&](bool g) {
      Tape t;
      const Var out = t.reduce_sum(amplifier(t, t.constant(h), t.constant(fe), t.param(U), squash));
      if (g) t.backward(out);
      return t.scalar(out);
    });
    EXPECT_EQ(r.failed, 0u) << r.worst;
  }
}

TEST(RwLayer, OneTermMatchesHandComputation) {
  const auto g = pair_graph();
  StackConfig sc;
  sc.arch = Architecture::rw;
  sc.kernel_mode = true;
  sc.constant_decay = 0.4;
  sc.depth = 1;
  sc.hidden = 3;
  LayerStack stack(sc, g.d_node(), g.d_link(), 5);
  const auto w0v = matvec(*stack.input_projection(), g.node_features(1));
  const auto ue = matvec(*stack.layer(1).U, g.link_features(0));
  const auto wu = matvec(*stack.layer(1).W, g.node_features(0));
  std::vector<double> expected(3);
  for (std::size_t i = 0; i < 3; ++i) expected[i] = 0.4 * w0v[i] * ue[i] * wu[i];
  expect_close(hidden_of(g, stack, 0), expected, 1e-14);
  EXPECT_EQ(hidden_of(g, stack, 2), std::vector<double>(3, 0.0));
}

TEST(RwLayer, StrictFormSwapsCentreAndNeighbour) {
  const auto g = pair_graph();
  StackConfig sc;
  sc.arch = Architecture::rw;
  sc.depth = 1;
  sc.hidden = 3;
  sc.output_activation = Activation::identity;
  sc.rw_central_term = true;
  LayerStack stack(sc, g.d_node(), g.d_link(), 6);
  const auto& p = stack.layer(1);
  const auto w0u = matvec(*stack.input_projection(), g.node_features(0));
  const auto w0v = matvec(*stack.input_projection(), g.node_features(1));
  const auto ue = matvec(*p.U, g.link_features(0));
  const auto wv = matvec(*p.W, g.node_features(1));
  std::vector<double> joined(w0u);
  joined.insert(joined.end(), g.link_features(0).begin(), g.link_features(0).end());
  joined.insert(joined.end(), w0v.begin(), w0v.end());
  const double lam = sigmoid(matvec(*p.V, joined)[0] + (*p.b)[0]);
  std::vector<double> expected(3);
  for (std::size_t i = 0; i < 3; ++i) expected[i] = lam * w0u[i] * ue[i] * wv[i];
  expect_close(hidden_of(g, stack, 0), expected, 1e-14);
}

TEST(WlRelabel, ZeroNeighbourWeightDecouples) {
  std::mt19937_64 rng(7);
  const auto g = experiments::random_small_graph(rng, {.min_nodes = 7, .max_nodes = 7, .link_prob = 0.6});
  StackConfig sc;
  sc.arch = Architecture::wl;
  sc.depth = 1;
  sc.hidden = 4;
  LayerStack stack(sc, g.d_node(), g.d_link(), 8);
  for (auto& v : stack.relabel()->P2.data()) v = 0.0;
  const auto r = wl_relabel(g, stack, 1);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    auto expected = matvec(stack.relabel()->P1, g.node_features(u));
    for (auto& x : expected) x = sigmoid(x);
    expect_close({r[u].data().begin(), r[u].data().end()}, expected, 1e-15);
  }
}

TEST(WlRelabel, IsolatedNodeSeesOnlyItself) {
  const auto g = pair_graph();
  StackConfig sc;
  sc.arch = Architecture::wl;
  sc.depth = 1;
  sc.hidden = 2;
  LayerStack stack(sc, g.d_node(), g.d_link(), 9);
  const auto r = wl_relabel(g, stack, 2);
  auto once = matvec(stack.relabel()->P1, g.node_features(2));
  for (auto& x : once) x = sigmoid(x);
  auto twice = matvec(stack.relabel()->P1, once);
  for (auto& x : twice) x = sigmoid(x);
  expect_close({r[2].data().begin(), r[2].data().end()}, twice, 1e-15);
}

TEST(WlRelabel, PermutationInvariant) {
  std::mt19937_64 rng(10);
  const auto g = experiments::random_small_graph(rng, {.min_nodes = 8, .max_nodes = 8, .link_prob = 0.5});
  std::vector<NodeId> perm(g.num_nodes());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<NodeRecord> nodes(g.num_nodes());
  for (NodeId u = 0; u < g.num_nodes(); ++u) nodes[perm[u]] = {perm[u], g.node(u).features, std::nullopt};
  std::vector<LinkRecord> links;
  for (const auto& l : g.links()) links.push_back({0, perm[l.src], perm[l.dst], l.features});
  const auto h = AttributedGraph::build(nodes, links, {});
  StackConfig sc;
  sc.arch = Architecture::wl;
  sc.depth = 1;
  sc.hidden = 2;
  LayerStack stack(sc, g.d_node(), g.d_link(), 11);
  const auto a = wl_relabel(g, stack, 3);
  const auto b = wl_relabel(h, stack, 3);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    expect_close({a[u].data().begin(), a[u].data().end()}, {b[perm[u]].data().begin(), b[perm[u]].data().end()}, 1e-12);
  }
}

TEST(SageLayer, ZeroAggregatorWeightLeavesSelfTerm) {
  const auto g = pair_graph();
  StackConfig sc;
  sc.arch = Architecture::sage;
  sc.depth = 1;
  sc.hidden = 3;
  sc.combine = CombineOp::sum;
  LayerStack stack(sc, g.d_node(), g.d_link(), 12);
  for (auto& v : stack.layer(1).W2->data()) v = 0.0;
  auto expected = matvec(*stack.layer(1).W1, g.node_features(0));
  for (auto& x : expected) x = std::max(0.0, x);
  expect_close(hidden_of(g, stack, 0), expected, 1e-15);
}

TEST(SageLayer, OneTermMatchesHandComputation) {
  const auto g = pair_graph();
  StackConfig sc;
  sc.arch = Architecture::sage;
  sc.depth = 1;
  sc.hidden = 3;
  sc.combine = CombineOp::concat;
  sc.output_activation = Activation::identity;
  LayerStack stack(sc, g.d_node(), g.d_link(), 13);
  const auto& p = stack.layer(1);
  const auto fu = g.node_features(0), fv = g.node_features(1), fe = g.link_features(0);
  std::vector<double> joined(fu.begin(), fu.end());
  joined.insert(joined.end(), fe.begin(), fe.end());
  joined.insert(joined.end(), fv.begin(), fv.end());
  const double lam = sigmoid(matvec(*p.V, joined)[0] + (*p.b)[0]);
  const auto ue = matvec(*p.U, fe);
  std::vector<double> agg(2);
  for (std::size_t i = 0; i < 2; ++i) agg[i] = lam * fv[i] * ue[i];
  auto expected = matvec(*p.W1, fu);
  const auto second = matvec(*p.W2, agg);
  expected.insert(expected.end(), second.begin(), second.end());
  EXPECT_EQ(stack.output_dim(), 6u);
  expect_close(hidden_of(g, stack, 0), expected, 1e-14);
}

TEST(ConcatLayer, EmptyNeighbourhoodIsActivationOfZero) {
  const auto g = pair_graph();
  StackConfig sc;
  sc.arch = Architecture::concat;
  sc.depth = 2;
  sc.hidden = 5;
  sc.output_activation = Activation::sigmoid;
  LayerStack stack(sc, g.d_node(), g.d_link(), 14);
  EXPECT_FALSE(stack.gated());
  EXPECT_EQ(hidden_of(g, stack, 2), std::vector<double>(5, 0.5));
}

TEST(ConcatLayer, BlindToPairingWhileOthersSeparate) {
  for (std::size_t depth : {1u, 2u}) {
    const auto rows = experiments::figure3_trials(30, depth, 8, 15 + depth);
    std::size_t rw = 0, sage = 0;
    for (const auto& r : rows) {
      EXPECT_LT(r.concat_diff, 1e-12);
      rw += r.rw_diff > 1e-9;
      sage += r.sage_diff > 1e-9;
    }
    EXPECT_GE(rw, 28u);
    EXPECT_GE(sage, 28u);
  }
}

TEST(Layers, LinkOrderDoesNotMatter) {
  std::mt19937_64 rng(16);
  const auto g = experiments::random_small_graph(rng, {.min_nodes = 8, .max_nodes = 8, .link_prob = 0.5});
  std::vector<LinkRecord> links(g.links().begin(), g.links().end());
  std::reverse(links.begin(), links.end());
  for (auto& l : links) std::swap(l.src, l.dst);
  const auto h = AttributedGraph::build(std::vector<NodeRecord>(g.nodes().begin(), g.nodes().end()), links, {});
  for (auto arch : {Architecture::rw, Architecture::wl, Architecture::sage, Architecture::concat}) {
    StackConfig sc;
    sc.arch = arch;
    sc.depth = 2;
    sc.hidden = 4;
    LayerStack stack(sc, g.d_node(), g.d_link(), 17);
    for (NodeId u = 0; u < g.num_nodes(); ++u) expect_close(hidden_of(g, stack, u), hidden_of(h, stack, u), 1e-12);
  }
}

TEST(Layers, DimensionMismatchIsRejected) {
  const auto g = pair_graph();
  StackConfig sc;
  LayerStack stack(sc, 3, g.d_link(), 1);
  Tape t;
  EXPECT_THROW(StackForward(t, g, stack), ShapeError);
  sc.kernel_mode = true;
  EXPECT_THROW(LayerStack(sc, 2, 3, 1), std::invalid_argument);
}

class GradientSuite : public ::testing::TestWithParam<Architecture> {};

TEST_P(GradientSuite, DepthTwoWidthEight) {
  const auto r = stack_grad_check(GetParam(), 2, 8, 21);
  EXPECT_GT(r.checked, 0u);
  EXPECT_EQ(r.failed, 0u) << r.worst;
  EXPECT_LT(r.max_rel, 1e-4) << r.worst;
}

INSTANTIATE_TEST_SUITE_P(Architectures, GradientSuite,
                         ::testing::Values(Architecture::rw, Architecture::wl, Architecture::sage, Architecture::concat),
                         [](const auto& info) { return to_string(info.param); });

TEST(StrictRwGradient, DepthTwoWidthEight) {
  const auto r = stack_grad_check(Architecture::rw, 2, 8, 22, true);
  EXPECT_EQ(r.failed, 0u) << r.worst;
}
