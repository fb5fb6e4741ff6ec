#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <fmt/format.h>
#include <stdexcept>

#include "htppn/errors.hpp"
#include "htppn/model.hpp"

namespace htppn {

namespace {

std::vector<const Transition*> sorted_refinables(const SubNet& net) {
  std::vector<const Transition*> out;
  for (const auto& t : net.transitions) {
    if (t.is_refinable()) out.push_back(&t);
  }
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->id < b->id; });
  return out;
}

std::size_t saturating_mul(std::size_t a, std::size_t b, std::size_t limit) {
  if (a == 0 || b == 0) return 0;
  if (a > limit / b) return limit;
  return std::min(a * b, limit);
}

// Product over refinables of the sum over their branches.
std::size_t count_scope(const SubNet& net, std::size_t limit) {
  std::size_t total = 1;
  for (const auto* r : sorted_refinables(net)) {
    std::size_t alternatives = 0;
    for (const auto& b : r->refinable().branches) {
      alternatives = std::min(limit, alternatives + count_scope(b.net, limit));
    }
    total = saturating_mul(total, alternatives, limit);
  }
  return total;
}

void enumerate_scope(const std::vector<const Transition*>& refinables, std::size_t index,
                     const std::string& path, Configuration& current,
                     std::vector<Configuration>& out,
                     const std::function<void(Configuration&)>& rest) {
  if (index == refinables.size()) {
    rest(current);
    return;
  }
  const Transition* r = refinables[index];
  const std::string rpath = join_path(path, r->id);
  const auto& branches = r->refinable().branches;
  for (std::size_t b = 0; b < branches.size(); ++b) {
    current[rpath] = b;
    auto inner = sorted_refinables(branches[b].net);
    // Inner refinables of this branch come before the remaining siblings,
    // matching the sorted order of paths ("T4" < "T4/T43" < "T5").
    enumerate_scope(inner, 0, rpath, current, out, [&](Configuration& c) {
      enumerate_scope(refinables, index + 1, path, c, out, rest);
    });
    // Drop inner choices before trying the next branch.
    for (auto it = current.lower_bound(rpath + "/"); it != current.end() && it->first.starts_with(rpath + "/");)
      it = current.erase(it);
  }
  current.erase(rpath);
}

void collect_paths(const SubNet& net, const std::string& path, std::vector<std::string>& out) {
  for (const auto* r : sorted_refinables(net)) {
    const std::string rpath = join_path(path, r->id);
    out.push_back(rpath);
    for (const auto& b : r->refinable().branches) collect_paths(b.net, rpath, out);
  }
}

struct Flattener {
  const Configuration& config;
  std::set<std::string> used;

  // Flattens one scope; ids are emitted with the given prefix.
  SubNet scope(const SubNet& net, const std::string& prefix, const std::string& path) {
    SubNet out;
    // Refinable id -> (entry, exit) of its inlined fragment, already prefixed.
    std::map<std::string, std::pair<std::string, std::string>> attach;
    for (const auto& p : net.places) {
      Place copy = p;
      copy.id = prefix + p.id;
      out.places.push_back(std::move(copy));
    }
    for (const auto& t : net.transitions) {
      if (!t.is_refinable()) {
        Transition copy = t;
        copy.id = prefix + t.id;
        out.transitions.push_back(std::move(copy));
        continue;
      }
      const std::string rpath = join_path(path, t.id);
      auto it = config.find(rpath);
      if (it == config.end())
        throw InfeasibleConfiguration(fmt::format("no branch chosen for refinable '{}'", rpath));
      const auto& branches = t.refinable().branches;
      if (it->second >= branches.size())
        throw InfeasibleConfiguration(fmt::format("branch {} out of range for refinable '{}' ({} branches)",
                                                  it->second + 1, rpath, branches.size()));
      used.insert(rpath);
      const Branch& branch = branches[it->second];
      SubNet inner = scope(branch.net, prefix + t.id + "/" + branch.id + "/", rpath);
      auto entries = fragment_entries(inner);
      auto exits = fragment_exits(inner);
      if (entries.size() != 1 || exits.size() != 1)
        throw InfeasibleConfiguration(
            fmt::format("branch '{}' of '{}' has no unique entry/exit transition", branch.id, rpath));
      attach[t.id] = {entries.front(), exits.front()};
      std::move(inner.places.begin(), inner.places.end(), std::back_inserter(out.places));
      std::move(inner.transitions.begin(), inner.transitions.end(), std::back_inserter(out.transitions));
      std::move(inner.arcs.begin(), inner.arcs.end(), std::back_inserter(out.arcs));
    }
    for (const auto& arc : net.arcs) {
      Arc copy{prefix + arc.source, prefix + arc.target, arc.weight};
      if (auto it = attach.find(arc.target); it != attach.end()) copy.target = it->second.first;
      if (auto it = attach.find(arc.source); it != attach.end()) copy.source = it->second.second;
      out.arcs.push_back(std::move(copy));
    }
    return out;
  }
};

}  // namespace

std::size_t count_configurations(const Htppn& model, std::size_t cap) {
  return count_scope(model.net, cap == SIZE_MAX ? cap : cap + 1);
}

std::vector<Configuration> enumerate_configurations(const Htppn& model, std::size_t cap) {
  const std::size_t count = count_configurations(model, cap);
  if (count > cap)
    throw SizeLimitExceeded(fmt::format("more than {} configurations", cap));
  std::vector<Configuration> out;
  out.reserve(count);
  Configuration current;
  enumerate_scope(sorted_refinables(model.net), 0, "", current, out,
                  [&](Configuration& c) { out.push_back(c); });
  return out;
}

FlatNet flatten(const Htppn& model, const Configuration& config) {
  Flattener f{config, {}};
  FlatNet flat;
  flat.name = model.name;
  flat.net = f.scope(model.net, "", "");
  flat.input_place = model.input_place;
  flat.output_place = model.output_place;
  for (const auto& [path, index] : config) {
    if (!f.used.contains(path))
      throw InfeasibleConfiguration(fmt::format("refinable '{}' is not instantiated by this configuration", path));
  }
  return flat;
}

std::vector<std::string> refinable_paths(const Htppn& model) {
  std::vector<std::string> out;
  collect_paths(model.net, "", out);
  return out;
}

std::string format_configuration(const Configuration& config) {
  std::string out;
  for (const auto& [path, index] : config) {
    if (!out.empty()) out += ' ';
    out += fmt::format("{}={}", path, index + 1);
  }
  return out;
}

namespace {

const Transition* find_refinable_by_path(const SubNet& net, std::string_view path) {
  auto slash = path.find('/');
  std::string_view head = path.substr(0, slash);
  for (const auto& t : net.transitions) {
    if (!t.is_refinable() || t.id != head) continue;
    if (slash == std::string_view::npos) return &t;
    for (const auto& b : t.refinable().branches) {
      if (const auto* found = find_refinable_by_path(b.net, path.substr(slash + 1))) return found;
    }
  }
  return nullptr;
}

}  // namespace

Configuration parse_configuration(const Htppn& model, std::string_view text) {
  Configuration config;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && (text[pos] == ',' || text[pos] == ' ' || text[pos] == '\t')) ++pos;
    if (pos >= text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && text[end] != ',' && text[end] != ' ' && text[end] != '\t') ++end;
    std::string_view item = text.substr(pos, end - pos);
    pos = end;
    auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 == item.size())
      throw std::invalid_argument(fmt::format("malformed configuration item '{}'", item));
    std::string_view path = item.substr(0, eq);
    std::string_view choice = item.substr(eq + 1);
    const Transition* r = find_refinable_by_path(model.net, path);
    if (r == nullptr) throw std::invalid_argument(fmt::format("unknown refinable path '{}'", path));
    const auto& branches = r->refinable().branches;
    std::size_t index = 0;
    auto [ptr, ec] = std::from_chars(choice.data(), choice.data() + choice.size(), index);
    if (ec == std::errc() && ptr == choice.data() + choice.size()) {
      if (index < 1 || index > branches.size())
        throw std::invalid_argument(fmt::format("branch index {} out of range for '{}'", index, path));
      --index;
    } else {
      auto it = std::find_if(branches.begin(), branches.end(), [&](const Branch& b) { return b.id == choice; });
      if (it == branches.end())
        throw std::invalid_argument(fmt::format("unknown branch '{}' of '{}'", choice, path));
      index = static_cast<std::size_t>(it - branches.begin());
    }
    if (!config.emplace(std::string(path), index).second)
      throw std::invalid_argument(fmt::format("refinable '{}' chosen twice", path));
  }
  return config;
}

FlatNet as_flat_net(const Htppn& model) {
  for (const auto& t : model.net.transitions) {
    if (t.is_refinable()) throw std::invalid_argument("model contains refinable transitions");
  }
  return FlatNet{model.name, model.net, model.input_place, model.output_place};
}

}  // namespace htppn
