#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "htppn/qos.hpp"
#include "htppn/time.hpp"

namespace htppn {

struct Place {
  std::string id;
  int capacity = 1;
  TimeWindow window;

  bool operator==(const Place&) const = default;
};

/// Arcs always have weight 1 in this model class; the field exists so that a
/// violating model can be represented and reported.
struct Arc {
  std::string source;
  std::string target;
  int weight = 1;

  bool operator==(const Arc&) const = default;
  auto operator<=>(const Arc&) const = default;
};

enum class TransitionKind { Dummy, Concrete, Refinable };

std::string_view to_string(TransitionKind kind);

struct DummyPayload {
  std::optional<double> alpha;
  // Set on a loop back-edge dummy: number of body iterations.
  std::optional<double> iterations;

  bool operator==(const DummyPayload&) const = default;
};

struct ConcretePayload {
  // Absent means simulated (no real service bound).
  std::optional<std::string> service;
  QosVector qos;
  bool unavailable = false;

  bool operator==(const ConcretePayload&) const = default;
};

struct Branch;

struct RefinablePayload {
  std::vector<Branch> branches;

  bool operator==(const RefinablePayload&) const;
};

using TransitionPayload = std::variant<DummyPayload, ConcretePayload, RefinablePayload>;

struct Transition {
  std::string id;
  TransitionPayload payload;
  TimeWindow window;
  Time duration = 0;

  TransitionKind kind() const { return static_cast<TransitionKind>(payload.index()); }
  bool is_dummy() const { return kind() == TransitionKind::Dummy; }
  bool is_concrete() const { return kind() == TransitionKind::Concrete; }
  bool is_refinable() const { return kind() == TransitionKind::Refinable; }

  const DummyPayload& dummy() const { return std::get<DummyPayload>(payload); }
  const ConcretePayload& concrete() const { return std::get<ConcretePayload>(payload); }
  const RefinablePayload& refinable() const { return std::get<RefinablePayload>(payload); }
  DummyPayload& dummy() { return std::get<DummyPayload>(payload); }
  ConcretePayload& concrete() { return std::get<ConcretePayload>(payload); }
  RefinablePayload& refinable() { return std::get<RefinablePayload>(payload); }

  static Transition make_dummy(std::string id, std::optional<double> alpha = std::nullopt);
  static Transition make_concrete(std::string id, std::optional<std::string> service, QosVector qos,
                                  TimeWindow window = {}, Time duration = 0);
  static Transition make_unavailable(std::string id, std::optional<std::string> service = std::nullopt);
  static Transition make_refinable(std::string id, std::vector<Branch> branches);

  bool operator==(const Transition&) const = default;
};

/// A scope of places, transitions and arcs. Ids are unique within one scope;
/// nested scopes (branch nets) have their own id space.
struct SubNet {
  std::vector<Place> places;
  std::vector<Transition> transitions;
  std::vector<Arc> arcs;

  const Place* find_place(std::string_view id) const;
  const Transition* find_transition(std::string_view id) const;
  Place* find_place(std::string_view id);
  Transition* find_transition(std::string_view id);
  bool has_node(std::string_view id) const;

  bool operator==(const SubNet&) const = default;
};

/// One alternative of a refinable transition. Its net is a fragment with a
/// unique entry transition and a unique exit transition; the outer net
/// attaches to those when the branch is inlined.
struct Branch {
  std::string id;
  std::optional<double> alpha;
  SubNet net;

  bool operator==(const Branch&) const = default;
};

using Marking = std::map<std::string, int, std::less<>>;

struct Htppn {
  std::string name;
  SubNet net;
  std::string input_place;
  std::string output_place;
  Marking initial_marking;

  bool operator==(const Htppn&) const = default;
};

/// A net without refinable transitions: the result of flattening one
/// configuration.
struct FlatNet {
  std::string name;
  SubNet net;
  std::string input_place;
  std::string output_place;

  Marking initial_marking() const;

  bool operator==(const FlatNet&) const = default;
};

/// Branch choice per instantiated refinable. Keys are refinable paths
/// ("T4", "T4/T43"); values are 0-based branch indices. Textual forms use
/// 1-based indices.
using Configuration = std::map<std::string, std::size_t>;

std::string join_path(std::string_view parent, std::string_view child);

/// Sets initial_marking to {input_place: 1}.
void reset_initial_marking(Htppn& model);

/// Sorts places, transitions and arcs (recursively into branches) by id so
/// that declaration order does not matter. Branch order is preserved because
/// it is the meaning of a branch index.
SubNet canonicalized(SubNet net);
Htppn canonicalized(Htppn model);
bool structurally_equal(const Htppn& a, const Htppn& b);

/// Entry/exit transitions of a branch fragment: transitions without input
/// (resp. output) places inside the fragment.
std::vector<std::string> fragment_entries(const SubNet& net);
std::vector<std::string> fragment_exits(const SubNet& net);

// ---------------------------------------------------------------------------
// Validation

enum class Rule {
  EmptyId,
  UniqueId,
  DanglingArc,
  BipartiteArc,
  ArcWeight,
  Capacity,
  Window,
  Duration,
  InputPlace,
  OutputPlace,
  InitialMarking,
  RefinablePresent,
  BranchCount,
  BranchShape,
  RefinablePath,
  Probability,
  Iterations,
  Qos,
};

std::string_view rule_name(Rule rule);

struct Violation {
  Rule rule;
  std::string id;  // path-qualified for elements inside branches
  std::string message;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool operator==(const ValidationReport&) const = default;
};

ValidationReport validate_structure(const Htppn& model);

// ---------------------------------------------------------------------------
// Configurations

inline constexpr std::size_t kDefaultConfigurationCap = 1'000'000;

/// Number of feasible configurations; saturates at cap + 1.
std::size_t count_configurations(const Htppn& model, std::size_t cap = kDefaultConfigurationCap);

/// Every feasible configuration once, lexicographic in (path, branch index).
/// Throws SizeLimitExceeded when the count exceeds cap.
std::vector<Configuration> enumerate_configurations(const Htppn& model,
                                                    std::size_t cap = kDefaultConfigurationCap);

/// Inlines the chosen branch of every refinable. Inlined ids are prefixed
/// with "<refinable>/<branch>/". Throws InfeasibleConfiguration when a
/// choice is missing, out of range, or addresses a refinable that the other
/// choices do not instantiate.
FlatNet flatten(const Htppn& model, const Configuration& config);

/// Refinable paths in the model tree, including those inside every branch.
std::vector<std::string> refinable_paths(const Htppn& model);

/// "T3=1 T4=2 T4/T43=1" (1-based).
std::string format_configuration(const Configuration& config);

/// Parses "T3=1,T4=b2 T4/T43=1". Branches are given by 1-based index or by
/// branch id. Throws std::invalid_argument on malformed text or unknown
/// paths and branch ids.
Configuration parse_configuration(const Htppn& model, std::string_view text);

/// Treats a refinable-free model as a flat net. Throws std::invalid_argument
/// when a refinable is present.
FlatNet as_flat_net(const Htppn& model);

// ---------------------------------------------------------------------------
// Untimed token game

std::set<std::string> enabled_transitions(const FlatNet& net, const Marking& marking);

/// Throws NotEnabled when t is not enabled at marking.
Marking fire(const FlatNet& net, const Marking& marking, std::string_view transition);

}  // namespace htppn
