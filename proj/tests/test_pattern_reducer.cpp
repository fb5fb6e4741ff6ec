#include <doctest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "generators.hpp"
#include "htppn/config_selector.hpp"
#include "htppn/errors.hpp"
#include "htppn/pattern_reducer.hpp"
#include "oracles.hpp"

using namespace htppn;
using namespace htppn::testing;

namespace {

const QosVector kA{2, 5, 0.9, 10};
const QosVector kB{3, 7, 0.8, 4};
const QosVector kC{1, 1, 0.5, 6};

FlatNet with_qos(FlatNet n, const std::map<std::string, QosVector>& qos) {
  for (auto& t : n.net.transitions)
    if (auto it = qos.find(t.id); it != qos.end()) t.concrete().qos = it->second;
  return n;
}

FlatNet split_join() {
  FlatNet n;
  n.net.places = {{"Pi", 1, {0, 0}}, {"a"}, {"b"}, {"c"}, {"d"}, {"Po", 1, {0, 0}}};
  n.net.transitions = {Transition::make_dummy("T0"), Transition::make_concrete("i", std::nullopt, kA),
                       Transition::make_concrete("j", std::nullopt, kB), Transition::make_dummy("Tj")};
  n.net.arcs = {{"Pi", "T0"}, {"T0", "a"}, {"T0", "b"}, {"a", "i"}, {"b", "j"},
                {"i", "c"},   {"j", "d"},  {"c", "Tj"}, {"d", "Tj"}, {"Tj", "Po"}};
  n.input_place = "Pi";
  n.output_place = "Po";
  return n;
}

// Two forks whose halves are joined crosswise.
FlatNet crossing() {
  FlatNet n;
  n.input_place = "Pi";
  n.output_place = "Po";
  n.net.places = {{"Pi"}, {"a"}, {"b"}, {"c1"}, {"c2"}, {"d1"}, {"d2"}, {"e"}, {"f"}, {"Po"}};
  for (const char* id : {"s", "u", "v", "x", "y", "z"})
    n.net.transitions.push_back(Transition::make_concrete(id, std::nullopt, kA));
  n.net.arcs = {{"Pi", "s"}, {"s", "a"},   {"s", "b"},   {"a", "u"},   {"b", "v"},  {"u", "c1"}, {"u", "c2"},
                {"v", "d1"}, {"v", "d2"},  {"c1", "x"},  {"d1", "x"},  {"c2", "y"}, {"d2", "y"},  {"x", "e"},
                {"y", "f"},  {"e", "z"},   {"f", "z"},   {"z", "Po"}};
  return n;
}

std::vector<std::string> sorted_leaves(const Block& b) {
  auto v = leaf_transitions(b);
  std::sort(v.begin(), v.end());
  return v;
}

void check_close(const QosVector& got, const QosVector& want, double tol) {
  CHECK(got.response_time == doctest::Approx(want.response_time).epsilon(tol));
  CHECK(got.cost == doctest::Approx(want.cost).epsilon(tol));
  CHECK(got.availability == doctest::Approx(want.availability).epsilon(tol));
  CHECK(got.throughput == doctest::Approx(want.throughput).epsilon(tol));
}

}  // namespace

TEST_SUITE("reduce") {
  TEST_CASE("two-step chain is a sequence with the place delay") {
    const FlatNet n = with_qos(chain_net({0, 5}, {0, 5}, 0, 0, {1, 4}), {{"t1", kA}, {"t2", kB}});
    const Block b = reduce(n);
    CHECK(describe(b) == "Seq[Leaf(t1), Leaf(t2)]");
    CHECK(b.delays == std::vector<double>{1});
    check_close(aggregate(b), {6, 12, 0.72, 4}, 1e-15);
  }

  TEST_CASE("split and join give a parallel block") {
    const Block b = reduce(split_join());
    CHECK(describe(b) == "Par[Leaf(i), Leaf(j)]");
    check_close(aggregate(b), {3, 12, 0.72, 4}, 1e-15);
  }

  TEST_CASE("crossing synchronizations are not well-structured") {
    CHECK_THROWS_AS(reduce(crossing()), NotWellStructured);
  }

  TEST_CASE("a net with an arc between two places is rejected") {
    FlatNet n = split_join();
    n.net.arcs.push_back({"a", "b"});
    CHECK_THROWS_AS(reduce(n), NotWellStructured);
  }

  TEST_CASE("guarded choice becomes a conditional") {
    const Htppn m = load_corpus("healthcare.htppn");
    const FlatNet f = flatten(m, parse_configuration(m, "T3=1 T4=2 T6=2 T8=1"));
    const Block b = reduce(f);
    const std::string text = describe(b);
    CHECK(text.find("Cond[0.8:Leaf(T6/b2/T604), 0.2:Leaf(T6/b2/T605)]") != std::string::npos);
  }

  TEST_CASE("loop body is repeated") {
    const Htppn m = load_corpus("healthcare.htppn");
    const FlatNet f = flatten(m, parse_configuration(m, "T3=1 T4=2 T6=1 T8=2"));
    CHECK(describe(reduce(f)).find("Loop*2[Leaf(T8/b2/T83)]") != std::string::npos);
  }

  TEST_CASE("every concrete transition becomes exactly one leaf") {
    for (const char* name : kCorpus) {
      CAPTURE(name);
      const Htppn m = load_corpus(name);
      for (const auto& c : enumerate_configurations(m)) {
        const FlatNet f = flatten(m, c);
        CHECK(sorted_leaves(reduce(f)) == concrete_ids(f));
      }
    }
    std::mt19937_64 rng(8);
    for (int i = 0; i < 100; ++i) {
      const Htppn m = random_model(rng, {.timing = true});
      for (const auto& c : enumerate_configurations(m)) {
        const FlatNet f = flatten(m, c);
        CHECK(sorted_leaves(reduce(f)) == concrete_ids(f));
      }
    }
  }

  TEST_CASE("rewrite order does not change the result") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 60; ++i) {
      const Htppn m = random_model(rng, {.timing = true});
      const FlatNet f = flatten(m, enumerate_configurations(m).front());
      const Block base = reduce(f);
      const QosVector paper = aggregate(base, CondMode::Paper);
      const QosVector expected = aggregate(base, CondMode::Expected);
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Block other = reduce(f, {.shuffle_seed = seed});
        CHECK(sorted_leaves(other) == sorted_leaves(base));
        check_close(aggregate(other, CondMode::Paper), paper, 1e-9);
        check_close(aggregate(other, CondMode::Expected), expected, 1e-9);
      }
    }
  }
}

TEST_SUITE("aggregate") {
  TEST_CASE("folds follow the composition operators") {
    Block seq;
    seq.kind = BlockKind::Seq;
    seq.children = {Block::leaf("a", kA), Block::leaf("b", kB)};
    seq.delays = {1};
    CHECK(aggregate(seq) == seq_compose(kA, kB, 1));

    Block par;
    par.kind = BlockKind::Par;
    par.children = {Block::leaf("a", kA), Block::leaf("b", kB)};
    par.delays = {0, 0};
    Block outer;
    outer.kind = BlockKind::Seq;
    outer.children = {par, Block::leaf("c", kC)};
    outer.delays = {2};
    CHECK(aggregate(outer) == seq_compose(par_compose(kA, kB), kC, 2));

    Block loop;
    loop.kind = BlockKind::Loop;
    loop.iterations = 3;
    loop.children = {Block::leaf("a", kA)};
    CHECK(aggregate(loop) == loop_compose(kA, 3));
  }

  TEST_CASE("three-way conditional folds left with renormalized weights") {
    Block cond;
    cond.kind = BlockKind::Cond;
    cond.children = {Block::leaf("a", kA), Block::leaf("b", kB), Block::leaf("c", kC)};
    cond.probabilities = {0.5, 0.25, 0.25};
    cond.delays = {0, 0, 0};
    const QosVector q = aggregate(cond, CondMode::Expected);
    CHECK(q.response_time == doctest::Approx(0.5 * 2 + 0.25 * 3 + 0.25 * 1));
    CHECK(q.cost == doctest::Approx(0.5 * 5 + 0.25 * 7 + 0.25 * 1));
    CHECK(q.availability == doctest::Approx(0.5 * 0.9 + 0.25 * 0.8 + 0.25 * 0.5));
    const QosVector p = aggregate(cond, CondMode::Paper);
    CHECK(p.response_time == 3);
    CHECK(p.cost == 13);
  }

  TEST_CASE("healthcare configuration matches a hand fold") {
    const Htppn m = load_corpus("healthcare.htppn");
    // T41 || T42, then T311, then T441.
    const double t4_r = std::max(3.0, 5.0) + 2 + 7;
    const double t4_c = 4.0 + 6 + 3 + 2;
    const double t4_a = 0.98 * 0.96 * 0.99 * 0.9;
    CHECK(t4_r == 14);
    CHECK(t4_c == 15);
    // T31 in parallel with that side, p5 delay 1, T602 then T603, then T81.
    const double r = std::max(4.0, t4_r) + 1 + 6 + 3 + 5;
    const double c = 12 + t4_c + 10 + 4 + 9;
    const double a = 0.97 * t4_a * 0.95 * 0.98 * 0.96;
    const QosVector q = evaluate_configuration(m, parse_configuration(m, "T3=1 T4=1 T4/T43=1 T4/T44=1 T6=1 T8=1"));
    check_close(q, {r, c, a, 20}, 1e-12);
  }
}
