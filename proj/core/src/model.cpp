#include "htppn/model.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace htppn {

bool RefinablePayload::operator==(const RefinablePayload&) const = default;

bool QosVector::is_unavailable() const {
  return std::isinf(response_time) && std::isinf(cost) && availability == 0.0;
}

std::string_view to_string(TransitionKind kind) {
  switch (kind) {
    case TransitionKind::Dummy: return "dummy";
    case TransitionKind::Concrete: return "concrete";
    case TransitionKind::Refinable: return "refinable";
  }
  return "?";
}

Transition Transition::make_dummy(std::string id, std::optional<double> alpha) {
  Transition t;
  t.id = std::move(id);
  t.payload = DummyPayload{alpha, std::nullopt};
  t.window = {0, 0};
  return t;
}

Transition Transition::make_concrete(std::string id, std::optional<std::string> service, QosVector qos,
                                     TimeWindow window, Time duration) {
  Transition t;
  t.id = std::move(id);
  t.payload = ConcretePayload{std::move(service), qos, false};
  t.window = window;
  t.duration = duration;
  return t;
}

Transition Transition::make_unavailable(std::string id, std::optional<std::string> service) {
  Transition t;
  t.id = std::move(id);
  t.payload = ConcretePayload{std::move(service), QosVector::unavailable(), true};
  return t;
}

Transition Transition::make_refinable(std::string id, std::vector<Branch> branches) {
  Transition t;
  t.id = std::move(id);
  t.payload = RefinablePayload{std::move(branches)};
  t.window = {0, 0};
  return t;
}

const Place* SubNet::find_place(std::string_view id) const {
  auto it = std::find_if(places.begin(), places.end(), [&](const Place& p) { return p.id == id; });
  return it == places.end() ? nullptr : &*it;
}

const Transition* SubNet::find_transition(std::string_view id) const {
  auto it = std::find_if(transitions.begin(), transitions.end(),
                         [&](const Transition& t) { return t.id == id; });
  return it == transitions.end() ? nullptr : &*it;
}

Place* SubNet::find_place(std::string_view id) {
  return const_cast<Place*>(std::as_const(*this).find_place(id));
}

Transition* SubNet::find_transition(std::string_view id) {
  return const_cast<Transition*>(std::as_const(*this).find_transition(id));
}

bool SubNet::has_node(std::string_view id) const {
  return find_place(id) != nullptr || find_transition(id) != nullptr;
}

Marking FlatNet::initial_marking() const {
  Marking m;
  m[input_place] = 1;
  return m;
}

std::string join_path(std::string_view parent, std::string_view child) {
  if (parent.empty()) return std::string(child);
  std::string out(parent);
  out += '/';
  out += child;
  return out;
}

void reset_initial_marking(Htppn& model) {
  model.initial_marking.clear();
  if (!model.input_place.empty()) model.initial_marking[model.input_place] = 1;
}

SubNet canonicalized(SubNet net) {
  std::sort(net.places.begin(), net.places.end(),
            [](const Place& a, const Place& b) { return a.id < b.id; });
  std::sort(net.transitions.begin(), net.transitions.end(),
            [](const Transition& a, const Transition& b) { return a.id < b.id; });
  std::sort(net.arcs.begin(), net.arcs.end());
  for (auto& t : net.transitions) {
    if (!t.is_refinable()) continue;
    for (auto& b : t.refinable().branches) b.net = canonicalized(std::move(b.net));
  }
  return net;
}

Htppn canonicalized(Htppn model) {
  model.net = canonicalized(std::move(model.net));
  return model;
}

bool structurally_equal(const Htppn& a, const Htppn& b) {
  return canonicalized(a) == canonicalized(b);
}

namespace {

std::vector<std::string> fragment_ends(const SubNet& net, bool entries) {
  std::set<std::string> connected;
  for (const auto& arc : net.arcs) {
    // entry: no arc place->t; exit: no arc t->place
    const std::string& t = entries ? arc.target : arc.source;
    const std::string& p = entries ? arc.source : arc.target;
    if (net.find_place(p) != nullptr) connected.insert(t);
  }
  std::vector<std::string> out;
  for (const auto& t : net.transitions) {
    if (!connected.contains(t.id)) out.push_back(t.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<std::string> fragment_entries(const SubNet& net) { return fragment_ends(net, true); }
std::vector<std::string> fragment_exits(const SubNet& net) { return fragment_ends(net, false); }

}  // namespace htppn
