#include "htppn/config_selector.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <map>

#include "htppn/errors.hpp"
#include "htppn/pattern_reducer.hpp"

namespace htppn {

namespace {

// Boundary place ids cannot clash with model ids, which never contain '<'.
constexpr const char* kWrapIn = "<in>";
constexpr const char* kWrapOut = "<out>";

struct Node {
  std::string path;
  const Transition* refinable = nullptr;
  std::vector<std::string> children;  // paths of refinables nested one level down
};

class Selector {
 public:
  Selector(const Htppn& model, const Weights& w, CondMode mode) : w_(w), mode_(mode) {
    for (const auto& t : model.net.transitions)
      if (t.is_refinable()) top_.push_back(index(t, ""));
    std::sort(top_.begin(), top_.end());
  }

  void run() {
    // A refinable is decided only once everything nested in it is decided.
    std::vector<std::string> stack(top_.begin(), top_.end());
    while (!stack.empty()) {
      const std::string path = stack.back();
      stack.pop_back();
      const Node& node = nodes_.at(path);
      std::vector<std::string> pending;
      for (const auto& c : node.children)
        if (!chosen_.contains(c)) pending.push_back(c);
      if (pending.empty()) {
        decide(node);
        continue;
      }
      stack.push_back(path);
      for (const auto& c : pending) stack.push_back(c);
    }
  }

  const std::map<std::string, std::size_t>& chosen() const { return chosen_; }
  const std::vector<SelectionStep>& steps() const { return steps_; }

 private:
  std::string index(const Transition& t, const std::string& parent) {
    Node node;
    node.path = join_path(parent, t.id);
    node.refinable = &t;
    for (const auto& b : t.refinable().branches)
      for (const auto& inner : b.net.transitions)
        if (inner.is_refinable()) node.children.push_back(index(inner, node.path));
    std::sort(node.children.begin(), node.children.end());
    node.children.erase(std::unique(node.children.begin(), node.children.end()), node.children.end());
    const std::string path = node.path;
    nodes_.emplace(path, std::move(node));
    return path;
  }

  QosVector branch_qos(const Node& node, const Branch& branch) const {
    FlatNet net;
    net.name = node.path;
    net.net = branch.net;
    for (auto& t : net.net.transitions) {
      if (!t.is_refinable()) continue;
      const QosVector q = qos_.at(join_path(node.path, t.id));
      t = Transition::make_concrete(t.id, std::nullopt, q);
    }
    const auto entries = fragment_entries(net.net);
    const auto exits = fragment_exits(net.net);
    if (entries.size() != 1 || exits.size() != 1)
      throw InfeasibleConfiguration(
          fmt::format("branch '{}' of '{}' has no unique entry/exit transition", branch.id, node.path));
    net.net.places.push_back(Place{kWrapIn, 1, {}});
    net.net.places.push_back(Place{kWrapOut, 1, {}});
    net.net.arcs.push_back(Arc{kWrapIn, entries.front()});
    net.net.arcs.push_back(Arc{exits.front(), kWrapOut});
    net.input_place = kWrapIn;
    net.output_place = kWrapOut;
    return aggregate(reduce(net), mode_);
  }

  void decide(const Node& node) {
    SelectionStep step;
    step.path = node.path;
    std::vector<QosVector> qos;
    for (const auto& b : node.refinable->refinable().branches) {
      qos.push_back(branch_qos(node, b));
      step.branch_scalars.push_back(scalarize(qos.back(), w_));
    }
    for (std::size_t i = 1; i < step.branch_scalars.size(); ++i)
      if (step.branch_scalars[i] < step.branch_scalars[step.chosen]) step.chosen = i;
    chosen_[node.path] = step.chosen;
    qos_[node.path] = qos[step.chosen];
    steps_.push_back(std::move(step));
  }

  Weights w_;
  CondMode mode_;
  std::map<std::string, Node> nodes_;
  std::vector<std::string> top_;
  std::map<std::string, std::size_t> chosen_;
  std::map<std::string, QosVector> qos_;
  std::vector<SelectionStep> steps_;
};

// Choices reachable from the top level through chosen branches.
void instantiate(const SubNet& net, const std::string& parent, const std::map<std::string, std::size_t>& chosen,
                 Configuration& out) {
  for (const auto& t : net.transitions) {
    if (!t.is_refinable()) continue;
    const std::string path = join_path(parent, t.id);
    const std::size_t b = chosen.at(path);
    out[path] = b;
    instantiate(t.refinable().branches[b].net, path, chosen, out);
  }
}

}  // namespace

QosVector evaluate_configuration(const Htppn& model, const Configuration& config, CondMode mode) {
  return aggregate(reduce(flatten(model, config)), mode);
}

SelectionResult select_optimal(const Htppn& model, const Weights& w, CondMode mode) {
  Selector selector(model, w, mode);
  selector.run();
  SelectionResult result;
  instantiate(model.net, "", selector.chosen(), result.configuration);
  for (const auto& step : selector.steps())
    if (result.configuration.contains(step.path)) result.trace.push_back(step);
  result.selections_made = selector.steps().size();
  result.composite_qos = evaluate_configuration(model, result.configuration, mode);
  result.scalar = scalarize(result.composite_qos, w);
  return result;
}

SelectionResult brute_force_optimal(const Htppn& model, const Weights& w, CondMode mode, std::size_t cap) {
  const auto configs = enumerate_configurations(model, cap);
  SelectionResult best;
  bool found = false;
  for (const auto& c : configs) {
    const QosVector q = evaluate_configuration(model, c, mode);
    const double s = scalarize(q, w);
    if (!found || s < best.scalar) {
      best.configuration = c;
      best.composite_qos = q;
      best.scalar = s;
      found = true;
    }
  }
  best.selections_made = configs.size();
  return best;
}

}  // namespace htppn
