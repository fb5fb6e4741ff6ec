#include <cmath>
#include <fmt/format.h>
#include <map>
#include <set>

#include "htppn/model.hpp"

namespace htppn {

std::string_view rule_name(Rule rule) {
  switch (rule) {
    case Rule::EmptyId: return "empty id rule";
    case Rule::UniqueId: return "unique id rule";
    case Rule::DanglingArc: return "dangling arc rule";
    case Rule::BipartiteArc: return "bipartite arc rule";
    case Rule::ArcWeight: return "arc weight rule";
    case Rule::Capacity: return "capacity rule";
    case Rule::Window: return "window rule";
    case Rule::Duration: return "duration rule";
    case Rule::InputPlace: return "input place rule";
    case Rule::OutputPlace: return "output place rule";
    case Rule::InitialMarking: return "initial marking rule";
    case Rule::RefinablePresent: return "refinable presence rule";
    case Rule::BranchCount: return "branch count rule";
    case Rule::BranchShape: return "branch shape rule";
    case Rule::RefinablePath: return "refinable path rule";
    case Rule::Probability: return "probability rule";
    case Rule::Iterations: return "iterations rule";
    case Rule::Qos: return "qos rule";
  }
  return "?";
}

namespace {

bool is_probability(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

// Probabilities of sibling alternatives: all absent (uniform) or all present
// and summing to 1.
std::optional<std::string> check_alpha_group(const std::vector<std::optional<double>>& alphas) {
  std::size_t present = 0;
  double sum = 0.0;
  for (const auto& a : alphas) {
    if (a) {
      ++present;
      sum += *a;
    }
  }
  if (present == 0) return std::nullopt;
  if (present != alphas.size()) return "probabilities must be given for all alternatives or none";
  if (std::abs(sum - 1.0) > kProbabilityTolerance)
    return fmt::format("alternative probabilities sum to {} instead of 1", sum);
  return std::nullopt;
}

class Validator {
 public:
  explicit Validator(ValidationReport& report) : report_(report) {}

  void scope(const SubNet& net, const std::string& prefix, const std::string& path) {
    std::map<std::string, int> kinds;  // 0 place, 1 transition
    for (const auto& p : net.places) {
      if (p.id.empty()) add(Rule::EmptyId, prefix, "place with empty id");
      else if (!kinds.emplace(p.id, 0).second) add(Rule::UniqueId, prefix + p.id, "duplicate id");
      if (p.capacity < 1) add(Rule::Capacity, prefix + p.id, "capacity must be at least 1");
      window(p.window, prefix + p.id);
    }
    for (const auto& t : net.transitions) {
      if (t.id.empty()) add(Rule::EmptyId, prefix, "transition with empty id");
      else if (!kinds.emplace(t.id, 1).second) add(Rule::UniqueId, prefix + t.id, "duplicate id");
      window(t.window, prefix + t.id);
      if (t.duration < 0) add(Rule::Duration, prefix + t.id, "duration must be nonnegative");
    }

    std::map<std::string, std::vector<const Transition*>> outputs_of_place;
    for (const auto& arc : net.arcs) {
      const std::string label = prefix + arc.source + "->" + arc.target;
      auto src = kinds.find(arc.source);
      auto dst = kinds.find(arc.target);
      if (src == kinds.end() || dst == kinds.end()) {
        add(Rule::DanglingArc, label,
            fmt::format("arc endpoint '{}' is not declared",
                        src == kinds.end() ? arc.source : arc.target));
        continue;
      }
      if (src->second == dst->second) {
        add(Rule::BipartiteArc, label,
            src->second == 0 ? "arc connects two places" : "arc connects two transitions");
        continue;
      }
      if (arc.weight != 1) add(Rule::ArcWeight, label, "arc weight must be 1");
      if (src->second == 0) {
        if (const auto* t = net.find_transition(arc.target)) outputs_of_place[arc.source].push_back(t);
      }
    }

    // Choice places: every output is a dummy guard (loop back-edges excluded).
    for (const auto& [place, outs] : outputs_of_place) {
      std::vector<std::optional<double>> alphas;
      bool all_dummy = true;
      for (const auto* t : outs) {
        if (!t->is_dummy()) {
          all_dummy = false;
          break;
        }
        if (!t->dummy().iterations) alphas.push_back(t->dummy().alpha);
      }
      if (!all_dummy || alphas.size() < 2) continue;
      if (auto msg = check_alpha_group(alphas)) add(Rule::Probability, prefix + place, *msg);
    }

    for (const auto& t : net.transitions) transition(t, prefix, path);
  }

  void top_level(const Htppn& model) {
    const SubNet& net = model.net;
    scope(net, "", "");

    auto check_boundary = [&](const std::string& id, Rule rule, bool input) {
      const char* what = input ? "input" : "output";
      if (id.empty()) {
        add(rule, "", fmt::format("no {} place declared", what));
        return;
      }
      if (net.find_place(id) == nullptr) {
        add(rule, id, fmt::format("{} place is not a declared place", what));
        return;
      }
      for (const auto& arc : net.arcs) {
        if (input && arc.target == id) add(rule, id, "input place has an incoming arc");
        if (!input && arc.source == id) add(rule, id, "output place has an outgoing arc");
      }
    };
    check_boundary(model.input_place, Rule::InputPlace, true);
    check_boundary(model.output_place, Rule::OutputPlace, false);

    for (const auto& [place, tokens] : model.initial_marking) {
      const Place* p = net.find_place(place);
      if (p == nullptr) {
        add(Rule::InitialMarking, place, "marking refers to an undeclared place");
        continue;
      }
      if (tokens < 0 || tokens > p->capacity)
        add(Rule::InitialMarking, place, "token count outside [0, capacity]");
      if (place != model.input_place && tokens != 0)
        add(Rule::InitialMarking, place, "only the input place may be marked initially");
    }
    if (!model.input_place.empty()) {
      auto it = model.initial_marking.find(model.input_place);
      if (it == model.initial_marking.end() || it->second != 1)
        add(Rule::InitialMarking, model.input_place, "input place must hold exactly one token");
    }

    bool has_refinable = std::any_of(net.transitions.begin(), net.transitions.end(),
                                     [](const Transition& t) { return t.is_refinable(); });
    if (!has_refinable) add(Rule::RefinablePresent, "", "model has no refinable transition");
  }

 private:
  void add(Rule rule, std::string id, std::string message) {
    report_.violations.push_back({rule, std::move(id), std::move(message)});
  }

  void window(const TimeWindow& w, const std::string& id) {
    if (w.min < 0) add(Rule::Window, id, "window minimum must be nonnegative");
    if (w.min > w.max) add(Rule::Window, id, "window minimum exceeds maximum");
  }

  void transition(const Transition& t, const std::string& prefix, const std::string& path) {
    const std::string id = prefix + t.id;
    switch (t.kind()) {
      case TransitionKind::Dummy: {
        const auto& d = t.dummy();
        if (d.alpha && !is_probability(*d.alpha))
          add(Rule::Probability, id, "alpha must lie in [0, 1]");
        if (d.iterations && !(std::isfinite(*d.iterations) && *d.iterations >= 1.0))
          add(Rule::Iterations, id, "iterations must be finite and at least 1");
        break;
      }
      case TransitionKind::Concrete: {
        const auto& c = t.concrete();
        if (c.unavailable) break;
        const auto& q = c.qos;
        auto finite_nonneg = [](double x) { return std::isfinite(x) && x >= 0.0; };
        if (!finite_nonneg(q.response_time) || !finite_nonneg(q.cost) ||
            !finite_nonneg(q.throughput))
          add(Rule::Qos, id, "qos values must be finite and nonnegative unless unavailable");
        if (!is_probability(q.availability)) add(Rule::Qos, id, "availability must lie in [0, 1]");
        break;
      }
      case TransitionKind::Refinable: {
        const auto& branches = t.refinable().branches;
        const std::string rpath = join_path(path, t.id);
        if (!t.id.empty() && !refinable_paths_.insert(rpath).second)
          add(Rule::RefinablePath, id, fmt::format("refinable path '{}' is not unique", rpath));
        if (branches.size() < 2)
          add(Rule::BranchCount, id, "a refinable transition needs at least two branches");
        std::set<std::string> branch_ids;
        std::vector<std::optional<double>> alphas;
        for (const auto& b : branches) {
          const std::string bid = id + "/" + b.id;
          if (b.id.empty()) add(Rule::EmptyId, id, "branch with empty id");
          else if (!branch_ids.insert(b.id).second) add(Rule::UniqueId, bid, "duplicate branch id");
          if (b.alpha && !is_probability(*b.alpha))
            add(Rule::Probability, bid, "branch alpha must lie in [0, 1]");
          alphas.push_back(b.alpha);
          if (b.net.transitions.empty()) {
            add(Rule::BranchShape, bid, "branch has no transitions");
          } else {
            auto entries = fragment_entries(b.net);
            auto exits = fragment_exits(b.net);
            if (entries.size() != 1)
              add(Rule::BranchShape, bid,
                  fmt::format("branch needs a unique entry transition, found {}", entries.size()));
            if (exits.size() != 1)
              add(Rule::BranchShape, bid,
                  fmt::format("branch needs a unique exit transition, found {}", exits.size()));
          }
          scope(b.net, bid + "/", rpath);
        }
        if (auto msg = check_alpha_group(alphas)) add(Rule::Probability, id, *msg);
        break;
      }
    }
  }

  ValidationReport& report_;
  std::set<std::string> refinable_paths_;
};

}  // namespace

ValidationReport validate_structure(const Htppn& model) {
  ValidationReport report;
  Validator(report).top_level(model);
  return report;
}

}  // namespace htppn
