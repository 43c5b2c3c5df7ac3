#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "dsg/core_graph.hpp"
#include "dsg/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace dsg;
using dsgtest::shape_graph;

namespace {

std::vector<SemanticTuple> entities(std::vector<int> ids) {
  std::vector<SemanticTuple> out;
  for (int id : ids) out.push_back({id, Category::entity, Subcategory::whole, {"e" + std::to_string(id)}});
  return out;
}

std::vector<QuestionNode> questions_for(const std::vector<int>& ids) {
  std::vector<QuestionNode> out;
  for (int id : ids) out.push_back({id, "Is there e" + std::to_string(id) + "?", id});
  return out;
}

// Lexicographically smallest permutation that respects every edge, by brute force.
std::vector<int> lexmin_topo(int n, const std::vector<DependencyEdge>& edges) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 1);
  do {
    std::vector<int> pos(static_cast<std::size_t>(n + 1));
    for (int i = 0; i < n; ++i) pos[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i;
    bool ok = std::all_of(edges.begin(), edges.end(), [&](const DependencyEdge& e) {
      return pos[static_cast<std::size_t>(e.parent_id)] < pos[static_cast<std::size_t>(e.child_id)];
    });
    if (ok) return perm;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {};
}

bool respects(const std::vector<int>& order, const SceneGraph& g) {
  std::vector<int> pos(g.size() + 1, -1);
  for (std::size_t i = 0; i < order.size(); ++i) pos[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
  for (int id = 1; id <= static_cast<int>(g.size()); ++id)
    if (pos[static_cast<std::size_t>(id)] < 0) return false;
  return std::all_of(g.edges().begin(), g.edges().end(), [&](const DependencyEdge& e) {
    return pos[static_cast<std::size_t>(e.parent_id)] < pos[static_cast<std::size_t>(e.child_id)];
  });
}

}  // namespace

TEST(Taxonomy, SubcategoriesBelongToOneCategory) {
  EXPECT_TRUE(subcategory_legal(Category::entity, Subcategory::part));
  EXPECT_TRUE(subcategory_legal(Category::attribute, Subcategory::text_rendering));
  EXPECT_TRUE(subcategory_legal(Category::relation, Subcategory::action));
  EXPECT_TRUE(subcategory_legal(Category::global, Subcategory::global));
  EXPECT_FALSE(subcategory_legal(Category::entity, Subcategory::color));
  EXPECT_FALSE(subcategory_legal(Category::relation, Subcategory::whole));
  std::size_t per_cat[4] = {};
  for (std::size_t i = 0; i < kSubcategoryNames.size(); ++i)
    ++per_cat[static_cast<std::size_t>(category_of(static_cast<Subcategory>(i)))];
  EXPECT_EQ(per_cat[0], 2u);
  EXPECT_EQ(per_cat[1], 10u);
  EXPECT_EQ(per_cat[2], 2u);
  EXPECT_EQ(per_cat[3], 1u);
}

TEST(Taxonomy, NamesRoundTrip) {
  for (std::size_t i = 0; i < kSubcategoryNames.size(); ++i) {
    auto s = static_cast<Subcategory>(i);
    EXPECT_EQ(parse_subcategory(to_string(s)), s);
  }
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    auto c = static_cast<Category>(i);
    EXPECT_EQ(parse_category(to_string(c)), c);
  }
  EXPECT_FALSE(parse_subcategory("colour"));
  EXPECT_EQ(arity_of(Category::entity), 1u);
  EXPECT_EQ(arity_of(Category::global), 1u);
  EXPECT_EQ(arity_of(Category::attribute), 2u);
  EXPECT_EQ(arity_of(Category::relation), 3u);
}

TEST(BuildGraph, ParkedMotorcycleHasTwoRoots) {
  auto g = decode_graph("m", fixtures::parked_motorcycle_annotation());
  EXPECT_EQ(g.size(), 4u);
  EXPECT_EQ(g.roots(), (std::vector<int>{1, 3}));
  EXPECT_EQ(g.parents(4), (std::vector<int>{1, 3}));
  EXPECT_EQ(g.children(1), (std::vector<int>{2, 4}));
  EXPECT_EQ(g.topological_order(), (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(g.depth(4), 1);
}

TEST(BuildGraph, EmptyGraphIsValid) {
  auto g = build_graph("empty", {}, {}, {});
  EXPECT_TRUE(g.empty());
  EXPECT_TRUE(g.topological_order().empty());
  EXPECT_TRUE(g.roots().empty());
}

TEST(BuildGraph, TwoCycleNamesBothNodes) {
  try {
    build_graph("c", entities({1, 2}), questions_for({1, 2}), {{1, 2}, {2, 1}});
    FAIL() << "expected CycleError";
  } catch (const CycleError& e) {
    EXPECT_EQ(e.cycle(), (std::vector<int>{1, 2}));
  }
}

TEST(BuildGraph, CycleReportedInOriginalIds) {
  try {
    build_graph("c", entities({10, 20, 30}), questions_for({10, 20, 30}), {{30, 20}, {20, 10}, {10, 30}});
    FAIL() << "expected CycleError";
  } catch (const CycleError& e) {
    EXPECT_EQ(e.cycle(), (std::vector<int>{10, 30, 20}));
  }
}

TEST(BuildGraph, SelfEdgeIsACycle) {
  EXPECT_THROW(build_graph("s", entities({1}), questions_for({1}), {{1, 1}}), CycleError);
}

TEST(BuildGraph, RejectsStructuralViolations) {
  auto t = entities({1, 2});
  auto q = questions_for({1, 2});
  EXPECT_THROW(build_graph("x", t, q, {{1, 3}}), DanglingRefError);
  EXPECT_THROW(build_graph("x", t, questions_for({1}), {}), DanglingRefError);
  EXPECT_THROW(build_graph("x", entities({1}), q, {}), DanglingRefError);
  EXPECT_THROW(build_graph("x", entities({1, 1}), questions_for({1}), {}), DuplicateIdError);
  EXPECT_THROW(build_graph("x", t, {q[0], q[1], q[1]}, {}), DuplicateIdError);
  EXPECT_THROW(build_graph("x", entities({0}), questions_for({0}), {}), GraphError);

  auto bad_arity = t;
  bad_arity[1].args.push_back("extra");
  EXPECT_THROW(build_graph("x", bad_arity, q, {}), ArityError);
  auto bad_sub = t;
  bad_sub[0].subcategory = Subcategory::color;
  EXPECT_THROW(build_graph("x", bad_sub, q, {}), ArityError);
  auto empty_arg = t;
  empty_arg[0].args[0].clear();
  EXPECT_THROW(build_graph("x", empty_arg, q, {}), ArityError);

  auto cross = q;
  cross[0].tuple_id = 2;
  EXPECT_THROW(build_graph("x", t, cross, {}), GraphError);
  auto no_text = q;
  no_text[1].text.clear();
  EXPECT_THROW(build_graph("x", t, no_text, {}), GraphError);
}

TEST(BuildGraph, NormalizesSparseIds) {
  auto g = build_graph("n", entities({7, 3, 12}), questions_for({12, 3, 7}), {{3, 12}, {12, 7}});
  EXPECT_EQ(g.original_ids(), (std::vector<int>{3, 7, 12}));
  EXPECT_EQ(g.tuple(1).args[0], "e3");
  EXPECT_EQ(g.question(3).text, "Is there e12?");
  EXPECT_EQ(g.question(3).tuple_id, 3);
  EXPECT_EQ(g.edges(), (std::vector<DependencyEdge>{{1, 3}, {3, 2}}));
  EXPECT_EQ(g.topological_order(), (std::vector<int>{1, 3, 2}));
}

TEST(BuildGraph, DuplicateEdgesCollapse) {
  auto g = build_graph("d", entities({1, 2}), questions_for({1, 2}), {{1, 2}, {1, 2}});
  EXPECT_EQ(g.edges().size(), 1u);
  EXPECT_EQ(g.parents(2), (std::vector<int>{1}));
}

TEST(TopologicalOrder, HandExamples) {
  EXPECT_EQ(shape_graph(4, {{1, 2}, {1, 4}, {3, 4}}).topological_order(), (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(shape_graph(3, {}).topological_order(), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(shape_graph(3, {{3, 2}, {2, 1}}).topological_order(), (std::vector<int>{3, 2, 1}));
  EXPECT_EQ(topological_order(shape_graph(3, {{2, 1}})), (std::vector<int>{2, 1, 3}));
}

TEST(TopologicalOrder, LexMinOverAllEdgeSetsUpToFourNodes) {
  for (int n = 1; n <= 4; ++n) {
    std::vector<std::pair<int, int>> pairs;
    for (int a = 1; a <= n; ++a)
      for (int b = 1; b <= n; ++b)
        if (a != b) pairs.emplace_back(a, b);
    for (std::uint32_t mask = 0; mask < (1u << pairs.size()); ++mask) {
      std::vector<DependencyEdge> edges;
      for (std::size_t i = 0; i < pairs.size(); ++i)
        if (mask >> i & 1u) edges.push_back({pairs[i].first, pairs[i].second});
      bool cyclic = dsgtest::has_cycle_bruteforce(n, edges);
      if (cyclic) {
        EXPECT_THROW(shape_graph(n, edges), CycleError);
        continue;
      }
      auto g = shape_graph(n, edges);
      ASSERT_EQ(g.topological_order(), lexmin_topo(n, edges)) << "n=" << n << " mask=" << mask;
    }
  }
}

TEST(TopologicalOrder, RespectsEdgesOnRelabelledDagsUpToSevenNodes) {
  dsgtest::Rng rng(11);
  for (int n = 5; n <= 7; ++n) {
    const int m = n * (n - 1) / 2;
    const std::uint32_t total = 1u << m;
    // every upper-triangular shape for n <= 6, a sample for n = 7
    const std::uint32_t step = n <= 6 ? 1 : 97;
    for (std::uint32_t mask = 0; mask < total; mask += step) {
      std::vector<int> label(static_cast<std::size_t>(n));
      std::iota(label.begin(), label.end(), 1);
      std::shuffle(label.begin(), label.end(), rng);
      std::vector<DependencyEdge> edges;
      int bit = 0;
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b, ++bit)
          if (mask >> bit & 1u) edges.push_back({label[static_cast<std::size_t>(a)], label[static_cast<std::size_t>(b)]});
      auto g = shape_graph(n, edges);
      ASSERT_TRUE(respects(g.topological_order(), g)) << "n=" << n << " mask=" << mask;
      if (n <= 5) {
        ASSERT_EQ(g.topological_order(), lexmin_topo(n, edges));
      }
    }
  }
}

TEST(BuildGraph, AcceptsExactlyTheAcyclicEdgeSets) {
  dsgtest::Rng rng(5);
  for (int trial = 0; trial < 20000; ++trial) {
    int n = dsgtest::uniform(rng, 1, 8);
    std::vector<DependencyEdge> edges;
    double p = std::uniform_real_distribution<double>(0.0, 0.4)(rng);
    for (int a = 1; a <= n; ++a)
      for (int b = 1; b <= n; ++b)
        if (a != b && dsgtest::coin(rng, p)) edges.push_back({a, b});
    bool cyclic = dsgtest::has_cycle_bruteforce(n, edges);
    bool threw = false;
    try {
      auto g = shape_graph(n, edges);
      ASSERT_TRUE(respects(g.topological_order(), g));
    } catch (const CycleError& e) {
      threw = true;
      // the reported cycle is a real one
      const auto& c = e.cycle();
      ASSERT_GE(c.size(), 2u);
      for (std::size_t i = 0; i < c.size(); ++i) {
        DependencyEdge step{c[i], c[(i + 1) % c.size()]};
        ASSERT_NE(std::find(edges.begin(), edges.end(), step), edges.end());
      }
      ASSERT_EQ(*std::min_element(c.begin(), c.end()), c.front());
    }
    ASSERT_EQ(threw, cyclic) << "trial " << trial;
  }
}

TEST(Descendants, HandExamples) {
  auto chain = shape_graph(3, {{1, 2}, {2, 3}});
  EXPECT_EQ(descendants(chain, 1), (std::set<int>{2, 3}));
  EXPECT_TRUE(descendants(chain, 3).empty());
  auto diamond = shape_graph(4, {{1, 2}, {1, 3}, {2, 4}, {3, 4}});
  EXPECT_EQ(descendants(diamond, 1), (std::set<int>{2, 3, 4}));
  EXPECT_EQ(diamond.depth(4), 2);
  EXPECT_THROW(descendants(diamond, 5), UnknownIdError);
  EXPECT_THROW(descendants(diamond, 0), UnknownIdError);
}

TEST(SceneGraph, EqualityIgnoresOriginalIds) {
  auto a = build_graph("p", entities({1, 2}), questions_for({1, 2}), {{1, 2}});
  auto t = entities({5, 9});
  t[0].args[0] = "e1";
  t[1].args[0] = "e2";
  auto q = questions_for({5, 9});
  q[0].text = "Is there e1?";
  q[1].text = "Is there e2?";
  auto b = build_graph("p", t, q, {{5, 9}});
  EXPECT_EQ(a, b);
  EXPECT_NE(a.original_ids(), b.original_ids());
}
