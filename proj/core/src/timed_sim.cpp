#include "htppn/timed_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <optional>
#include <random>
#include <set>

namespace htppn {

const ScheduleWindow* SchedulabilityReport::find(std::string_view transition) const {
  for (const auto& w : windows)
    if (w.transition == transition) return &w;
  return nullptr;
}

std::string format_marking(const Marking& marking) {
  std::string out;
  for (const auto& [place, n] : marking) {
    if (n == 0) continue;
    if (!out.empty()) out += ',';
    out += fmt::format("{}:{}", place, n);
  }
  return out;
}

namespace {

struct Interval {
  Time min = 0;
  Time max = 0;
};

Interval hull(Interval a, Interval b) { return {std::min(a.min, b.min), std::max(a.max, b.max)}; }

Interval shift(Interval a, const TimeWindow& w) {
  return {saturating_add(a.min, w.min), saturating_add(a.max, w.max)};
}

bool is_back_edge(const Transition& t) { return t.is_dummy() && t.dummy().iterations.has_value(); }

std::size_t unroll_count(const Transition& t) {
  const double k = t.dummy().iterations.value_or(1.0);
  return k <= 1.0 ? 1 : static_cast<std::size_t>(std::ceil(k));
}

// Working copy of a flat net with loop back-edges unrolled. Copies inside a
// loop body are named "<id>#<iteration>" and remember their original id.
struct Unrolled {
  SubNet net;
  std::string input;
  std::string output;
  std::map<std::string, std::string> origin;
};

std::set<std::string> reach(const std::map<std::string, std::vector<std::string>>& adj, const std::string& from) {
  std::set<std::string> seen{from};
  std::vector<std::string> todo{from};
  while (!todo.empty()) {
    const std::string n = todo.back();
    todo.pop_back();
    auto it = adj.find(n);
    if (it == adj.end()) continue;
    for (const auto& m : it->second)
      if (seen.insert(m).second) todo.push_back(m);
  }
  return seen;
}

void unroll_one(Unrolled& u, const Transition& d) {
  std::vector<std::string> pre;
  std::vector<std::string> post;
  for (const auto& a : u.net.arcs) {
    if (a.target == d.id) pre.push_back(a.source);
    if (a.source == d.id) post.push_back(a.target);
  }
  if (pre.size() != 1 || post.size() != 1)
    throw CyclicTiming(fmt::format("loop back-edge '{}' must have one input and one output place", d.id));
  const std::string q = pre.front();
  const std::string p = post.front();

  // Every back-edge is cut, so an enclosing loop cannot pull its whole body
  // into this region.
  std::set<std::string> back_edges;
  for (const auto& t : u.net.transitions)
    if (is_back_edge(t)) back_edges.insert(t.id);
  std::map<std::string, std::vector<std::string>> fwd;
  std::map<std::string, std::vector<std::string>> bwd;
  for (const auto& a : u.net.arcs) {
    if (back_edges.contains(a.source) || back_edges.contains(a.target)) continue;
    fwd[a.source].push_back(a.target);
    bwd[a.target].push_back(a.source);
  }
  const auto from_p = reach(fwd, p);
  const auto to_q = reach(bwd, q);
  std::set<std::string> region;
  std::set_intersection(from_p.begin(), from_p.end(), to_q.begin(), to_q.end(),
                        std::inserter(region, region.end()));
  const std::size_t n = region.contains(p) ? unroll_count(d) : 1;
  auto copy_id = [](const std::string& id, std::size_t i) { return fmt::format("{}#{}", id, i); };

  SubNet out;
  for (const auto& pl : u.net.places) {
    if (!region.contains(pl.id)) {
      out.places.push_back(pl);
      continue;
    }
    for (std::size_t i = 1; i <= n; ++i) {
      Place c = pl;
      c.id = copy_id(pl.id, i);
      out.places.push_back(std::move(c));
    }
  }
  for (const auto& t : u.net.transitions) {
    if (t.id == d.id) continue;
    if (!region.contains(t.id)) {
      out.transitions.push_back(t);
      continue;
    }
    for (std::size_t i = 1; i <= n; ++i) {
      Transition c = t;
      c.id = copy_id(t.id, i);
      u.origin[c.id] = u.origin.at(t.id);
      out.transitions.push_back(std::move(c));
    }
  }
  for (const auto& a : u.net.arcs) {
    if (a.source == d.id || a.target == d.id) continue;
    const bool s = region.contains(a.source);
    const bool t = region.contains(a.target);
    if (s && t) {
      for (std::size_t i = 1; i <= n; ++i) out.arcs.push_back({copy_id(a.source, i), copy_id(a.target, i), a.weight});
    } else if (t) {
      out.arcs.push_back({a.source, copy_id(a.target, 1), a.weight});
    } else if (s) {
      out.arcs.push_back({copy_id(a.source, n), a.target, a.weight});
    } else {
      out.arcs.push_back(a);
    }
  }
  if (region.contains(p)) {
    for (std::size_t i = 1; i < n; ++i) {
      Transition back = Transition::make_dummy(copy_id(d.id, i));
      back.window = d.window;
      u.origin[back.id] = u.origin.at(d.id);
      out.arcs.push_back({copy_id(q, i), back.id});
      out.arcs.push_back({back.id, copy_id(p, i + 1)});
      out.transitions.push_back(std::move(back));
    }
  }
  if (region.contains(u.input)) u.input = copy_id(u.input, 1);
  if (region.contains(u.output)) u.output = copy_id(u.output, n);
  u.net = std::move(out);
}

Unrolled unroll(const FlatNet& net) {
  Unrolled u{net.net, net.input_place, net.output_place, {}};
  for (const auto& t : net.net.transitions) u.origin[t.id] = t.id;
  for (;;) {
    auto it = std::find_if(u.net.transitions.begin(), u.net.transitions.end(), is_back_edge);
    if (it == u.net.transitions.end()) break;
    const Transition d = *it;
    unroll_one(u, d);
  }
  return u;
}

// Places and transitions of the net in topological order.
std::vector<std::string> topological(const SubNet& net) {
  std::map<std::string, int> indegree;
  std::map<std::string, std::vector<std::string>> succ;
  for (const auto& p : net.places) indegree[p.id];
  for (const auto& t : net.transitions) indegree[t.id];
  for (const auto& a : net.arcs) {
    succ[a.source].push_back(a.target);
    ++indegree[a.target];
  }
  std::set<std::string> ready;
  for (const auto& [id, d] : indegree)
    if (d == 0) ready.insert(id);
  std::vector<std::string> order;
  while (!ready.empty()) {
    const std::string n = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(n);
    for (const auto& m : succ[n])
      if (--indegree[m] == 0) ready.insert(m);
  }
  if (order.size() != indegree.size()) {
    std::vector<std::string> stuck;
    for (const auto& [id, d] : indegree)
      if (d > 0) stuck.push_back(id);
    throw CyclicTiming(fmt::format("cycle without a loop back-edge through {}", fmt::join(stuck, ", ")));
  }
  return order;
}

// Nodes on some path from the input place to the output place.
std::set<std::string> on_path(const FlatNet& net) {
  std::map<std::string, std::vector<std::string>> fwd;
  std::map<std::string, std::vector<std::string>> bwd;
  for (const auto& a : net.net.arcs) {
    fwd[a.source].push_back(a.target);
    bwd[a.target].push_back(a.source);
  }
  const auto from_in = reach(fwd, net.input_place);
  const auto to_out = reach(bwd, net.output_place);
  std::set<std::string> out;
  std::set_intersection(from_in.begin(), from_in.end(), to_out.begin(), to_out.end(),
                        std::inserter(out, out.end()));
  return out;
}

}  // namespace

SchedulabilityReport propagate_windows(const FlatNet& net) {
  const Unrolled u = unroll(net);
  const auto order = topological(u.net);

  std::map<std::string, std::vector<std::string>> pre;
  for (const auto& a : u.net.arcs) pre[a.target].push_back(a.source);

  // Ready interval of every place and completion interval of every transition
  // that a token can reach.
  std::map<std::string, Interval> done;
  std::map<std::string, Interval> enabled;
  for (const auto& id : order) {
    if (const Place* p = u.net.find_place(id)) {
      std::optional<Interval> arrival;
      if (id == u.input) arrival = Interval{0, 0};
      for (const auto& t : pre[id]) {
        auto it = done.find(t);
        if (it == done.end()) continue;
        arrival = arrival ? hull(*arrival, it->second) : it->second;
      }
      if (arrival) done[id] = shift(*arrival, p->window);
      continue;
    }
    const Transition* t = u.net.find_transition(id);
    const auto& inputs = pre[id];
    if (inputs.empty()) continue;
    Interval e{0, 0};
    bool ok = true;
    for (const auto& p : inputs) {
      auto it = done.find(p);
      if (it == done.end()) {
        ok = false;
        break;
      }
      e.min = std::max(e.min, it->second.min);
      e.max = std::max(e.max, it->second.max);
    }
    if (!ok) continue;
    enabled[id] = e;
    const Interval c = shift(e, t->window);
    done[id] = {saturating_add(c.min, t->duration), saturating_add(c.max, t->duration)};
  }

  std::map<std::string, ScheduleWindow> windows;
  for (const auto& t : net.net.transitions) {
    if (!t.is_concrete()) continue;
    ScheduleWindow w;
    w.transition = t.id;
    w.teb_min = t.window.min;
    w.teb_max = t.window.max;
    w.schedulable = t.window.max > t.window.min;
    w.reachable = false;
    windows.emplace(t.id, w);
  }
  for (const auto& t : u.net.transitions) {
    auto wit = windows.find(u.origin.at(t.id));
    auto eit = enabled.find(t.id);
    if (wit == windows.end() || eit == enabled.end()) continue;
    ScheduleWindow& w = wit->second;
    const Interval e = eit->second;
    const Interval c = done.at(t.id);
    if (!w.reachable) {
      w.enable_min = e.min;
      w.enable_max = e.max;
      w.completion_min = c.min;
      w.completion_max = c.max;
      w.reachable = true;
    } else {
      w.enable_min = std::min(w.enable_min, e.min);
      w.enable_max = std::max(w.enable_max, e.max);
      w.completion_min = std::min(w.completion_min, c.min);
      w.completion_max = std::max(w.completion_max, c.max);
    }
  }

  SchedulabilityReport report;
  const auto path = on_path(net);
  for (auto& [id, w] : windows) {
    if (!w.schedulable) {
      report.violations.push_back(
          {id, fmt::format("window [{}, {}] has no positive width", w.teb_min, w.teb_max)});
      if (path.contains(id)) report.consistent = false;
    }
    report.windows.push_back(std::move(w));
  }
  return report;
}

namespace {

class Simulator {
 public:
  Simulator(const FlatNet& net, const Policy& policy) : net_(net), policy_(policy), rng_(policy.seed) {
    for (const auto& a : net.net.arcs) {
      if (net.net.find_place(a.source) != nullptr) {
        outputs_[a.source].push_back(a.target);
        inputs_[a.target].push_back(a.source);
      } else {
        produces_[a.source].push_back(a.target);
      }
    }
    for (auto& [p, ts] : outputs_) std::sort(ts.begin(), ts.end());
  }

  Trace run(std::size_t step_limit) {
    Trace trace;
    put(net_.input_place, 0);
    while (!has_token(net_.output_place)) {
      if (trace.steps.size() >= step_limit)
        throw Error(fmt::format("simulation exceeded {} steps", step_limit));
      const auto candidates = fireable();
      if (candidates.empty()) {
        trace.final_marking = counts_;
        throw Deadlock(std::move(trace));
      }
      std::string next;
      Time at = kTimeInfinity;
      for (const auto& t : candidates) {
        const Time planned = plan(t);
        if (next.empty() || planned < at) {
          next = t;
          at = planned;
        }
      }
      for (auto it = plans_.begin(); it != plans_.end();)
        it = candidates.contains(it->first) ? std::next(it) : plans_.erase(it);
      trace.steps.push_back(fire(next, at));
    }
    trace.final_marking = counts_;
    return trace;
  }

 private:
  Time sample(const TimeWindow& w) {
    switch (policy_.kind) {
      case PolicyKind::Earliest: return w.min;
      case PolicyKind::Latest: return w.bounded() ? w.max : w.min;
      case PolicyKind::Random:
        if (!w.bounded() || w.max <= w.min) return w.min;
        return std::uniform_int_distribution<Time>(w.min, w.max)(rng_);
    }
    return w.min;
  }

  bool has_token(const std::string& place) const {
    auto it = tokens_.find(place);
    return it != tokens_.end() && !it->second.empty();
  }

  void put(const std::string& place, Time arrival) {
    const Place* p = net_.net.find_place(place);
    const Time ready = saturating_add(arrival, p != nullptr ? sample(p->window) : 0);
    tokens_[place].insert(ready);
    ++counts_[place];
  }

  void take(const std::string& place) {
    auto& ts = tokens_[place];
    ts.erase(ts.begin());
    if (--counts_[place] == 0) counts_.erase(place);
    choice_.erase(place);
  }

  std::string choose(const std::string& place, const std::vector<const Transition*>& guards) {
    if (auto it = choice_.find(place); it != choice_.end()) return it->second;
    std::vector<double> alpha;
    for (const auto* g : guards) alpha.push_back(g->dummy().alpha.value_or(1.0 / static_cast<double>(guards.size())));
    std::size_t pick = 0;
    if (policy_.kind == PolicyKind::Random) {
      double total = 0;
      for (double a : alpha) total += a;
      if (total <= 0) return choice_[place] = guards.front()->id;
      const double u = std::uniform_real_distribution<double>(0.0, total)(rng_);
      double acc = 0;
      pick = guards.size();
      for (std::size_t i = 0; i < guards.size(); ++i) {
        if (alpha[i] <= 0) continue;
        acc += alpha[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
      if (pick == guards.size()) {
        // Rounding at the top end: take the last guard with positive weight.
        for (std::size_t i = guards.size(); i-- > 0;)
          if (alpha[i] > 0) {
            pick = i;
            break;
          }
        if (pick == guards.size()) pick = 0;
      }
    } else {
      for (std::size_t i = 1; i < guards.size(); ++i)
        if (alpha[i] > alpha[pick]) pick = i;
    }
    return choice_[place] = guards[pick]->id;
  }

  std::set<std::string> fireable() {
    const auto enabled = enabled_transitions(net_, counts_);
    std::set<std::string> excluded;
    for (const auto& [place, ts] : tokens_) {
      if (ts.empty()) continue;
      auto oit = outputs_.find(place);
      if (oit == outputs_.end()) continue;
      std::vector<const Transition*> loops;
      std::vector<const Transition*> others;
      for (const auto& id : oit->second) {
        const Transition* t = net_.net.find_transition(id);
        (is_back_edge(*t) ? loops : others).push_back(t);
      }
      if (!loops.empty()) {
        for (const auto* d : loops) {
          if (iterations_[d->id] + 1 < unroll_count(*d)) {
            for (const auto* o : others) excluded.insert(o->id);
          } else {
            excluded.insert(d->id);
          }
        }
      } else if (others.size() >= 2 &&
                 std::all_of(others.begin(), others.end(), [](auto* t) { return t->is_dummy(); })) {
        const std::string pick = choose(place, others);
        for (const auto* o : others)
          if (o->id != pick) excluded.insert(o->id);
      }
    }
    std::set<std::string> out;
    for (const auto& t : enabled)
      if (!excluded.contains(t)) out.insert(t);
    return out;
  }

  Time plan(const std::string& t) {
    Time enable = 0;
    for (const auto& p : inputs_[t]) enable = std::max(enable, *tokens_[p].begin());
    auto it = plans_.find(t);
    if (it != plans_.end() && it->second.first == enable) return it->second.second;
    const Time planned = saturating_add(enable, sample(net_.net.find_transition(t)->window));
    plans_[t] = {enable, planned};
    return planned;
  }

  TraceStep fire(const std::string& id, Time at) {
    const Transition* t = net_.net.find_transition(id);
    for (const auto& p : inputs_[id]) {
      take(p);
      for (const auto& other : outputs_[p]) {
        const Transition* o = net_.net.find_transition(other);
        if (is_back_edge(*o) && !is_back_edge(*t)) iterations_[o->id] = 0;
      }
    }
    if (is_back_edge(*t)) ++iterations_[id];
    plans_.erase(id);
    const Time completion = saturating_add(at, t->duration);
    for (const auto& p : produces_[id]) put(p, completion);
    return TraceStep{at, completion, id, counts_};
  }

  const FlatNet& net_;
  Policy policy_;
  std::mt19937_64 rng_;
  std::map<std::string, std::vector<std::string>> outputs_;   // place -> transitions
  std::map<std::string, std::vector<std::string>> inputs_;    // transition -> places
  std::map<std::string, std::vector<std::string>> produces_;  // transition -> places
  std::map<std::string, std::multiset<Time>> tokens_;         // ready times
  Marking counts_;
  std::map<std::string, std::string> choice_;
  std::map<std::string, std::size_t> iterations_;
  std::map<std::string, std::pair<Time, Time>> plans_;
};

}  // namespace

Trace simulate_run(const FlatNet& net, const Policy& policy, std::size_t step_limit) {
  if (net.net.find_place(net.input_place) == nullptr)
    throw std::invalid_argument(fmt::format("input place '{}' does not exist", net.input_place));
  return Simulator(net, policy).run(step_limit);
}

}  // namespace htppn
