#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "generators.hpp"
#include "htppn/timed_sim.hpp"
#include "oracles.hpp"

using namespace htppn;
using namespace htppn::testing;

namespace {

FlatNet guarded(double first, double second) {
  FlatNet n;
  n.input_place = "Pi";
  n.output_place = "Po";
  n.net.places = {{"Pi", 1, {0, 0}}, {"c", 1, {0, 0}}, {"x", 1, {0, 0}}, {"y", 1, {0, 0}}, {"Po", 1, {0, 0}}};
  n.net.transitions = {Transition::make_dummy("g1", first), Transition::make_dummy("g2", second),
                       Transition::make_concrete("a", std::nullopt, {}, {1, 3}),
                       Transition::make_concrete("b", std::nullopt, {}, {1, 3}), Transition::make_dummy("open")};
  n.net.arcs = {{"Pi", "open"}, {"open", "c"}, {"c", "g1"}, {"c", "g2"}, {"g1", "x"},
                {"g2", "y"},    {"x", "a"},    {"y", "b"},  {"a", "Po"}, {"b", "Po"}};
  return n;
}

// Each place has at most one consumer: no choices and no loops.
bool choice_free(const FlatNet& f) {
  std::map<std::string, int> consumers;
  for (const auto& a : f.net.arcs)
    if (f.net.find_place(a.source) != nullptr && ++consumers[a.source] > 1) return false;
  return true;
}

}  // namespace

TEST_SUITE("propagate_windows") {
  TEST_CASE("zero-width window is unschedulable") {
    const auto r = propagate_windows(chain_net({5, 5}, {1, 2}));
    const ScheduleWindow* w = r.find("t1");
    REQUIRE(w != nullptr);
    CHECK_FALSE(w->schedulable);
    CHECK(r.find("t2")->schedulable);
    CHECK_FALSE(r.consistent);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].transition == "t1");
  }

  TEST_CASE("chain completion interval") {
    const auto r = propagate_windows(chain_net({1, 3}, {2, 4}));
    const ScheduleWindow* w = r.find("t2");
    CHECK(w->enable_min == 1);
    CHECK(w->enable_max == 3);
    CHECK(w->completion_min == 3);
    CHECK(w->completion_max == 7);
    CHECK(r.consistent);
    const auto oracle = chain_completion_by_enumeration({1, 3, 0}, 0, {2, 4, 0});
    CHECK(oracle == std::pair<Time, Time>{3, 7});
  }

  TEST_CASE("chain corpus fast branch") {
    const Htppn m = load_corpus("chain.htppn");
    const auto r = propagate_windows(flatten(m, parse_configuration(m, "t2=fast")));
    const ScheduleWindow* w = r.find("t2/fast/s1");
    REQUIRE(w != nullptr);
    CHECK(w->completion_min == 3);
    CHECK(w->completion_max == 7);
  }

  TEST_CASE("chain intervals match integer enumeration") {
    std::mt19937_64 rng(41);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<Time>(lo, hi)(rng); };
    for (int i = 0; i < 200; ++i) {
      const Time a = pick(0, 5), b = a + pick(0, 5), c = pick(0, 5), d = c + pick(0, 5);
      const Time d1 = pick(0, 3), d2 = pick(0, 3), delay = pick(0, 3);
      const auto r = propagate_windows(chain_net({a, b}, {c, d}, d1, d2, {delay, delay}));
      const auto oracle = chain_completion_by_enumeration({a, b, d1}, delay, {c, d, d2});
      const ScheduleWindow* w = r.find("t2");
      CHECK(w->completion_min == oracle.first);
      CHECK(w->completion_max == oracle.second);
    }
  }

  TEST_CASE("empty net") {
    FlatNet n;
    n.net.places = {{"p"}};
    n.input_place = n.output_place = "p";
    const auto r = propagate_windows(n);
    CHECK(r.windows.empty());
    CHECK(r.consistent);
  }

  TEST_CASE("unmarked cycle is rejected") {
    FlatNet n;
    n.input_place = "Pi";
    n.output_place = "Po";
    n.net.places = {{"Pi"}, {"p"}, {"q"}, {"Po"}};
    for (const char* id : {"t1", "t2", "t3", "t4"})
      n.net.transitions.push_back(Transition::make_concrete(id, std::nullopt, {}, {0, 1}));
    n.net.arcs = {{"Pi", "t1"}, {"t1", "p"}, {"p", "t2"}, {"t2", "q"}, {"q", "t3"}, {"t3", "p"}, {"q", "t4"}, {"t4", "Po"}};
    CHECK_THROWS_AS(propagate_windows(n), CyclicTiming);
  }

  TEST_CASE("loop body windows cover every iteration") {
    const Htppn m = load_corpus("retry_loop.htppn");
    const FlatNet f = flatten(m, enumerate_configurations(m).front());
    const auto r = propagate_windows(f);
    const ScheduleWindow* call = r.find("call");
    REQUIRE(call != nullptr);
    CHECK(call->reachable);
    CHECK(call->completion_max > call->completion_min);
    // Three passes through the body: the last one ends no earlier than three
    // times the minimal body time.
    CHECK(call->completion_max >= 3 * (call->teb_min + 1));
  }

  TEST_CASE("corpus windows are ordered") {
    for (const char* name : kCorpus) {
      const Htppn m = load_corpus(name);
      for (const auto& c : enumerate_configurations(m)) {
        const auto r = propagate_windows(flatten(m, c));
        for (const auto& w : r.windows) {
          CAPTURE(w.transition);
          CHECK(w.reachable);
          CHECK(w.enable_min <= w.enable_max);
          CHECK(w.completion_min <= w.completion_max);
        }
      }
    }
  }

  TEST_CASE("later starts never make anything earlier") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 80; ++i) {
      const Htppn m = random_model(rng, {.timing = true});
      const FlatNet f = flatten(m, enumerate_configurations(m).front());
      const auto before = propagate_windows(f);
      std::vector<std::size_t> concrete;
      for (std::size_t k = 0; k < f.net.transitions.size(); ++k)
        if (f.net.transitions[k].is_concrete()) concrete.push_back(k);
      FlatNet g = f;
      Transition& t = g.net.transitions[concrete[std::uniform_int_distribution<std::size_t>(0, concrete.size() - 1)(rng)]];
      if (std::bernoulli_distribution(0.5)(rng)) {
        ++t.window.min;
        t.window.max = std::max(t.window.max, t.window.min);
      } else {
        ++t.duration;
      }
      const auto after = propagate_windows(g);
      for (const auto& w : before.windows) {
        CAPTURE(w.transition);
        CHECK(after.find(w.transition)->completion_min >= w.completion_min);
      }
    }
  }
}

TEST_SUITE("simulate_run") {
  TEST_CASE("earliest policy on the chain") {
    const Trace t = simulate_run(chain_net({1, 3}, {2, 4}), Policy::earliest());
    REQUIRE(t.steps.size() == 2);
    CHECK(t.steps[0].transition == "t1");
    CHECK(t.steps[0].fire_time == 1);
    CHECK(t.steps[1].transition == "t2");
    CHECK(t.steps[1].fire_time == 3);
    CHECK(t.final_marking == Marking{{"Po", 1}});
    CHECK(format_marking(t.steps[0].marking_after) == "p:1");
  }

  TEST_CASE("latest policy takes the upper bounds") {
    const Trace t = simulate_run(chain_net({1, 3}, {2, 4}, 1, 0), Policy::latest());
    CHECK(t.steps[0].fire_time == 3);
    CHECK(t.steps[0].completion_time == 4);
    CHECK(t.steps[1].fire_time == 8);
  }

  TEST_CASE("random policy is reproducible") {
    const Htppn m = load_corpus("healthcare.htppn");
    for (const auto& c : enumerate_configurations(m)) {
      const FlatNet f = flatten(m, c);
      CHECK(simulate_run(f, Policy::random(7)) == simulate_run(f, Policy::random(7)));
    }
  }

  TEST_CASE("certain guard is always taken") {
    const FlatNet n = guarded(1, 0);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const Trace t = simulate_run(n, Policy::random(seed));
      for (const auto& s : t.steps) {
        CHECK(s.transition != "g2");
        CHECK(s.transition != "b");
      }
    }
    const Trace e = simulate_run(guarded(0.3, 0.7), Policy::earliest());
    CHECK(e.steps[1].transition == "g2");
  }

  TEST_CASE("random guards follow their probabilities") {
    const FlatNet n = guarded(0.25, 0.75);
    int first = 0;
    const int runs = 2000;
    for (int seed = 0; seed < runs; ++seed) {
      const Trace t = simulate_run(n, Policy::random(static_cast<std::uint64_t>(seed)));
      if (t.steps[1].transition == "g1") ++first;
    }
    CHECK(first > runs * 0.2);
    CHECK(first < runs * 0.3);
  }

  TEST_CASE("deadlock carries the partial trace") {
    FlatNet n = chain_net({1, 3}, {2, 4});
    n.net.places.push_back({"never"});
    n.net.arcs.push_back({"never", "t2"});
    try {
      simulate_run(n, Policy::earliest());
      FAIL("expected a deadlock");
    } catch (const Deadlock& d) {
      REQUIRE(d.trace().steps.size() == 1);
      CHECK(d.trace().steps[0].transition == "t1");
      CHECK(d.trace().final_marking == Marking{{"p", 1}});
    }
  }

  TEST_CASE("loop back-edge fires k - 1 times") {
    const Htppn m = load_corpus("retry_loop.htppn");
    const Trace t = simulate_run(flatten(m, enumerate_configurations(m).front()), Policy::earliest());
    int calls = 0, again = 0;
    for (const auto& s : t.steps) {
      calls += s.transition == "call";
      again += s.transition == "again";
    }
    CHECK(calls == 3);
    CHECK(again == 2);
  }

  TEST_CASE("simulated firings stay inside the propagated windows") {
    std::mt19937_64 rng(43);
    int runs = 0;
    for (int i = 0; runs < 1000; ++i) {
      const Htppn m = random_model(rng, {.timing = true});
      const auto configs = enumerate_configurations(m);
      const FlatNet f = flatten(m, configs[std::uniform_int_distribution<std::size_t>(0, configs.size() - 1)(rng)]);
      const auto report = propagate_windows(f);
      for (int k = 0; k < 10; ++k, ++runs) {
        const Trace t = simulate_run(f, Policy::random(rng()));
        CHECK(t.final_marking.contains(f.output_place));
        for (const auto& s : t.steps) {
          const ScheduleWindow* w = report.find(s.transition);
          if (w == nullptr) continue;
          CAPTURE(s.transition);
          CHECK(s.completion_time >= w->completion_min);
          CHECK(s.completion_time <= w->completion_max);
          CHECK(s.fire_time >= saturating_add(w->enable_min, w->teb_min));
          CHECK(s.fire_time <= saturating_add(w->enable_max, w->teb_max));
        }
      }
    }
  }

  TEST_CASE("earliest run meets the propagated lower bounds on choice-free nets") {
    std::mt19937_64 rng(44);
    int checked = 0;
    for (int i = 0; checked < 100 && i < 5000; ++i) {
      const Htppn m = random_model(rng, {.timing = true});
      const FlatNet f = flatten(m, enumerate_configurations(m).front());
      if (!choice_free(f)) continue;
      ++checked;
      const auto report = propagate_windows(f);
      const Trace t = simulate_run(f, Policy::earliest());
      for (const auto& s : t.steps) {
        if (const ScheduleWindow* w = report.find(s.transition)) {
          CAPTURE(s.transition);
          CHECK(s.completion_time == w->completion_min);
        }
      }
    }
    CHECK(checked == 100);
  }
}
