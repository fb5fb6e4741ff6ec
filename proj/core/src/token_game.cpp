#include <fmt/format.h>

#include "htppn/errors.hpp"
#include "htppn/model.hpp"

namespace htppn {

namespace {

int tokens(const Marking& m, const std::string& place) {
  auto it = m.find(place);
  return it == m.end() ? 0 : it->second;
}

bool is_enabled(const FlatNet& net, const Marking& m, const std::string& t) {
  // Net effect per place: -1 for inputs, +1 for outputs (a self-loop nets 0).
  std::map<std::string, int> delta;
  bool has_input = false;
  for (const auto& arc : net.net.arcs) {
    if (arc.target == t) {
      if (tokens(m, arc.source) < 1) return false;
      delta[arc.source] -= 1;
      has_input = true;
    } else if (arc.source == t) {
      delta[arc.target] += 1;
    }
  }
  if (!has_input) return false;
  for (const auto& [place, d] : delta) {
    if (d <= 0) continue;
    const Place* p = net.net.find_place(place);
    const int capacity = p != nullptr ? p->capacity : 1;
    if (tokens(m, place) + d > capacity) return false;
  }
  return true;
}

}  // namespace

std::set<std::string> enabled_transitions(const FlatNet& net, const Marking& marking) {
  std::set<std::string> out;
  for (const auto& t : net.net.transitions) {
    if (is_enabled(net, marking, t.id)) out.insert(t.id);
  }
  return out;
}

Marking fire(const FlatNet& net, const Marking& marking, std::string_view transition) {
  const std::string t(transition);
  if (net.net.find_transition(t) == nullptr || !is_enabled(net, marking, t))
    throw NotEnabled(fmt::format("transition '{}' is not enabled", t));
  Marking next = marking;
  for (const auto& arc : net.net.arcs) {
    if (arc.target == t) {
      if (--next[arc.source] == 0) next.erase(arc.source);
    }
  }
  for (const auto& arc : net.net.arcs) {
    if (arc.source == t) ++next[arc.target];
  }
  return next;
}

}  // namespace htppn
