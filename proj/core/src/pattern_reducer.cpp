#include "htppn/pattern_reducer.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "htppn/errors.hpp"

namespace htppn {

Block Block::leaf(std::string transition, QosVector qos) {
  Block b;
  b.kind = BlockKind::Leaf;
  b.transition = std::move(transition);
  b.qos = qos;
  return b;
}

Block Block::skip(double delay) {
  Block b;
  b.kind = BlockKind::Skip;
  b.delay = delay;
  return b;
}

bool Block::operator==(const Block&) const = default;

std::string_view to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::Leaf: return "Leaf";
    case BlockKind::Seq: return "Seq";
    case BlockKind::Par: return "Par";
    case BlockKind::Cond: return "Cond";
    case BlockKind::Loop: return "Loop";
    case BlockKind::Skip: return "Skip";
  }
  return "?";
}

std::vector<std::string> leaf_transitions(const Block& block) {
  std::vector<std::string> out;
  std::function<void(const Block&)> walk = [&](const Block& b) {
    if (b.kind == BlockKind::Leaf) out.push_back(b.transition);
    for (const auto& c : b.children) walk(c);
  };
  walk(block);
  return out;
}

std::string describe(const Block& block) {
  switch (block.kind) {
    case BlockKind::Leaf: return fmt::format("Leaf({})", block.transition);
    case BlockKind::Skip: return fmt::format("Skip({})", block.delay);
    case BlockKind::Loop: return fmt::format("Loop*{}[{}]", block.iterations, describe(block.children.front()));
    default: break;
  }
  std::string out = fmt::format("{}[", to_string(block.kind));
  for (std::size_t i = 0; i < block.children.size(); ++i) {
    if (i > 0) out += ", ";
    if (block.kind == BlockKind::Cond) out += fmt::format("{}:", block.probabilities[i]);
    out += describe(block.children[i]);
  }
  return out + "]";
}

namespace {

// Partially reduced fragment carried by a transition while rewriting.
// A unit without a block is pure dummy glue. `lead`/`trail` are glue delays
// before the first and after the last block (a glue-only unit keeps its
// whole delay in `lead`). `alpha` is the probability of the leading guard.
struct Unit {
  std::optional<Block> block;
  double lead = 0.0;
  double trail = 0.0;
  std::optional<double> alpha;
  std::optional<double> iterations;

  double glue_delay() const { return lead + trail; }
};

void append_flattened(Block& seq, Block part) {
  if (part.kind == BlockKind::Seq) {
    for (auto& c : part.children) seq.children.push_back(std::move(c));
    for (double d : part.delays) seq.delays.push_back(d);
  } else {
    seq.children.push_back(std::move(part));
  }
}

Unit seq_units(Unit a, double delay, Unit b) {
  Unit out;
  out.alpha = a.alpha ? a.alpha : (a.block ? std::nullopt : b.alpha);
  if (!a.block && !b.block) {
    out.lead = a.glue_delay() + delay + b.glue_delay();
    out.iterations = a.iterations ? a.iterations : b.iterations;
    return out;
  }
  if (!a.block) {
    out.block = std::move(b.block);
    out.lead = a.glue_delay() + delay + b.lead;
    out.trail = b.trail;
    return out;
  }
  if (!b.block) {
    out.block = std::move(a.block);
    out.lead = a.lead;
    out.trail = a.trail + delay + b.glue_delay();
    return out;
  }
  Block seq;
  seq.kind = BlockKind::Seq;
  append_flattened(seq, std::move(*a.block));
  seq.delays.push_back(a.trail + delay + b.lead);
  // Splice b after the connecting delay.
  if (b.block->kind == BlockKind::Seq) {
    for (auto& c : b.block->children) seq.children.push_back(std::move(c));
    for (double d : b.block->delays) seq.delays.push_back(d);
  } else {
    seq.children.push_back(std::move(*b.block));
  }
  out.block = std::move(seq);
  out.lead = a.lead;
  out.trail = b.trail;
  return out;
}

// A unit as a standalone block, with its glue delay kept as a trailing Skip.
Block materialize(Unit u) {
  if (!u.block) return Block::skip(u.glue_delay());
  if (u.glue_delay() == 0.0) return std::move(*u.block);
  Block seq;
  seq.kind = BlockKind::Seq;
  append_flattened(seq, std::move(*u.block));
  seq.delays.push_back(0.0);
  seq.children.push_back(Block::skip(u.glue_delay()));
  return seq;
}

struct PlaceNode {
  double delay = 0.0;
  std::set<std::string> pre;
  std::set<std::string> post;
};

struct TransitionNode {
  Unit unit;
  std::set<std::string> pre;
  std::set<std::string> post;
};

enum class RuleKind { Sequence, Parallel, Conditional, Loop };

struct Match {
  RuleKind rule;
  std::string anchor;  // first transition of a sequence, split, choice place, back-edge
};

class Reducer {
 public:
  explicit Reducer(const FlatNet& net) : input_(net.input_place), output_(net.output_place) {
    for (const auto& p : net.net.places) places_[p.id].delay = static_cast<double>(p.window.min);
    for (const auto& t : net.net.transitions) {
      TransitionNode node;
      if (t.is_concrete()) {
        node.unit.block = Block::leaf(t.id, t.concrete().qos);
      } else if (t.is_dummy()) {
        node.unit.alpha = t.dummy().alpha;
        node.unit.iterations = t.dummy().iterations;
      } else {
        throw std::invalid_argument(fmt::format("refinable transition '{}' in a flat net", t.id));
      }
      transitions_.emplace(t.id, std::move(node));
    }
    for (const auto& arc : net.net.arcs) {
      if (places_.contains(arc.source) && transitions_.contains(arc.target)) {
        places_[arc.source].post.insert(arc.target);
        transitions_[arc.target].pre.insert(arc.source);
      } else if (transitions_.contains(arc.source) && places_.contains(arc.target)) {
        transitions_[arc.source].post.insert(arc.target);
        places_[arc.target].pre.insert(arc.source);
      } else {
        throw NotWellStructured(fmt::format("arc {} -> {} is not place/transition", arc.source, arc.target));
      }
    }
  }

  Block run(const ReduceOptions& options) {
    std::optional<std::mt19937_64> rng;
    if (options.shuffle_seed) rng.emplace(*options.shuffle_seed);
    while (true) {
      std::vector<Match> matches;
      for (RuleKind rule : {RuleKind::Sequence, RuleKind::Parallel, RuleKind::Conditional, RuleKind::Loop}) {
        collect(rule, matches, /*first_only=*/!rng);
        if (!rng && !matches.empty()) break;
      }
      if (matches.empty()) break;
      const Match& m = rng ? matches[std::uniform_int_distribution<std::size_t>(0, matches.size() - 1)(*rng)]
                           : matches.front();
      apply(m);
    }
    return finish();
  }

 private:
  static const std::string& only(const std::set<std::string>& s) { return *s.begin(); }

  bool boundary(const std::string& place) const { return place == input_ || place == output_; }

  // --- matching -----------------------------------------------------------

  void collect(RuleKind rule, std::vector<Match>& out, bool first_only) {
    switch (rule) {
      case RuleKind::Sequence:
        for (const auto& [id, t] : transitions_) {
          if (match_sequence(id)) {
            out.push_back({rule, id});
            if (first_only) return;
          }
        }
        break;
      case RuleKind::Parallel:
        for (const auto& [id, t] : transitions_) {
          if (match_parallel(id)) {
            out.push_back({rule, id});
            if (first_only) return;
          }
        }
        break;
      case RuleKind::Conditional:
        for (const auto& [id, p] : places_) {
          if (match_conditional(id)) {
            out.push_back({rule, id});
            if (first_only) return;
          }
        }
        break;
      case RuleKind::Loop:
        for (const auto& [id, t] : transitions_) {
          if (match_loop(id)) {
            out.push_back({rule, id});
            if (first_only) return;
          }
        }
        break;
    }
  }

  // t1 -> p -> t2 with p private to the pair.
  std::optional<std::pair<std::string, std::string>> match_sequence(const std::string& t1) const {
    const auto& a = transitions_.at(t1);
    if (a.post.size() != 1) return std::nullopt;
    const std::string& p = only(a.post);
    if (boundary(p)) return std::nullopt;
    const auto& place = places_.at(p);
    if (place.pre.size() != 1 || place.post.size() != 1) return std::nullopt;
    const std::string& t2 = only(place.post);
    if (t2 == t1 || transitions_.at(t2).pre.size() != 1) return std::nullopt;
    return std::make_pair(p, t2);
  }

  struct ParallelShape {
    std::string join;
    // Per branch: first place, optional transition, last place.
    struct Arm {
      std::string first;
      std::optional<std::string> transition;
      std::string last;
    };
    std::vector<Arm> arms;
  };

  std::optional<ParallelShape> match_parallel(const std::string& split) const {
    const auto& s = transitions_.at(split);
    if (s.post.size() < 2) return std::nullopt;
    ParallelShape shape;
    std::set<std::string> lasts;
    for (const auto& pk : s.post) {
      if (boundary(pk)) return std::nullopt;
      const auto& first = places_.at(pk);
      if (first.pre.size() != 1 || first.post.size() != 1) return std::nullopt;
      const std::string& next = only(first.post);
      ParallelShape::Arm arm{pk, std::nullopt, pk};
      std::string join;
      const auto& tk = transitions_.at(next);
      if (tk.pre.size() == 1 && tk.post.size() == 1 && next != split) {
        const std::string& qk = only(tk.post);
        const auto& last = places_.at(qk);
        if (!boundary(qk) && last.pre.size() == 1 && last.post.size() == 1) {
          arm.transition = next;
          arm.last = qk;
          join = only(last.post);
        }
      }
      if (!arm.transition) join = next;
      if (join == split) return std::nullopt;
      if (shape.join.empty()) shape.join = join;
      else if (shape.join != join) return std::nullopt;
      if (arm.transition && *arm.transition == join) return std::nullopt;
      lasts.insert(arm.last);
      shape.arms.push_back(std::move(arm));
    }
    if (transitions_.at(shape.join).pre != lasts) return std::nullopt;
    return shape;
  }

  // p fans out to t1..tn which all lead to one merge place q.
  std::optional<std::string> match_conditional(const std::string& p) const {
    const auto& place = places_.at(p);
    if (place.post.size() < 2) return std::nullopt;
    std::optional<std::string> merge;
    for (const auto& tk : place.post) {
      const auto& t = transitions_.at(tk);
      if (t.pre.size() != 1 || t.post.size() != 1) return std::nullopt;
      const std::string& q = only(t.post);
      if (q == p) return std::nullopt;
      if (!merge) merge = q;
      else if (*merge != q) return std::nullopt;
    }
    if (places_.at(*merge).pre != place.post) return std::nullopt;
    return merge;
  }

  struct LoopShape {
    std::string body;
    std::string entry_place;
    std::string exit_place;
  };

  // back: q -> p (dummy glue), body: p -> q.
  std::optional<LoopShape> match_loop(const std::string& back) const {
    const auto& x = transitions_.at(back);
    if (x.unit.block || x.pre.size() != 1 || x.post.size() != 1) return std::nullopt;
    const std::string& q = only(x.pre);
    const std::string& p = only(x.post);
    if (p == q) return std::nullopt;
    const auto& entry = places_.at(p);
    const auto& exit = places_.at(q);
    if (entry.post.size() != 1 || exit.pre.size() != 1) return std::nullopt;
    if (entry.pre.size() < 2 || exit.post.size() < 2) return std::nullopt;
    const std::string& b = only(entry.post);
    if (b == back || only(exit.pre) != b) return std::nullopt;
    const auto& body = transitions_.at(b);
    if (body.pre.size() != 1 || body.post.size() != 1) return std::nullopt;
    return LoopShape{b, p, q};
  }

  // --- rewriting ----------------------------------------------------------

  void apply(const Match& m) {
    switch (m.rule) {
      case RuleKind::Sequence: apply_sequence(m.anchor); break;
      case RuleKind::Parallel: apply_parallel(m.anchor); break;
      case RuleKind::Conditional: apply_conditional(m.anchor); break;
      case RuleKind::Loop: apply_loop(m.anchor); break;
    }
  }

  // Moves the outputs of `from` onto `into`, removing `from`.
  void take_outputs(const std::string& into, const std::string& from) {
    auto node = transitions_.extract(from);
    auto& target = transitions_.at(into);
    target.post = node.mapped().post;
    for (const auto& q : target.post) {
      places_[q].pre.erase(from);
      places_[q].pre.insert(into);
    }
  }

  void apply_sequence(const std::string& t1) {
    auto [p, t2] = *match_sequence(t1);
    auto& a = transitions_.at(t1);
    a.unit = seq_units(std::move(a.unit), places_.at(p).delay, std::move(transitions_.at(t2).unit));
    places_.erase(p);
    take_outputs(t1, t2);
  }

  void apply_parallel(const std::string& split) {
    ParallelShape shape = *match_parallel(split);
    struct Arm {
      std::string key;
      std::optional<Block> block;
      double delay;
    };
    std::vector<Arm> arms;
    for (const auto& arm : shape.arms) {
      double delay = places_.at(arm.first).delay;
      std::optional<Block> block;
      if (arm.transition) {
        Unit& u = transitions_.at(*arm.transition).unit;
        delay += u.glue_delay() + places_.at(arm.last).delay;
        block = std::move(u.block);
        transitions_.erase(*arm.transition);
        places_.erase(arm.last);
      }
      places_.erase(arm.first);
      arms.push_back({arm.first, std::move(block), delay});
    }
    std::sort(arms.begin(), arms.end(), [](const Arm& a, const Arm& b) { return a.key < b.key; });

    // A glue-only arm no slower than the slowest real arm's delay is neutral:
    // R >= 0 for any block, C adds 0, A multiplies by 1, T takes min with +inf.
    double max_real = -1.0;
    double max_glue = 0.0;
    for (const auto& arm : arms) {
      if (arm.block) max_real = std::max(max_real, arm.delay);
      else max_glue = std::max(max_glue, arm.delay);
    }
    Unit par;
    if (max_real < 0.0) {
      par.lead = max_glue;
    } else {
      std::vector<Arm> kept;
      for (auto& arm : arms) {
        if (arm.block || arm.delay > max_real) kept.push_back(std::move(arm));
      }
      if (kept.size() == 1) {
        par.block = std::move(kept.front().block);
        par.lead = kept.front().delay;
      } else {
        Block block;
        block.kind = BlockKind::Par;
        for (auto& arm : kept) {
          block.children.push_back(arm.block ? std::move(*arm.block) : Block::skip());
          block.delays.push_back(arm.delay);
        }
        par.block = std::move(block);
      }
    }

    auto& s = transitions_.at(split);
    Unit joined = seq_units(std::move(s.unit), 0.0, std::move(par));
    joined = seq_units(std::move(joined), 0.0, std::move(transitions_.at(shape.join).unit));
    s.unit = std::move(joined);
    s.post.clear();
    take_outputs(split, shape.join);
  }

  void apply_conditional(const std::string& p) {
    const std::string q = *match_conditional(p);
    const std::vector<std::string> branches(places_.at(p).post.begin(), places_.at(p).post.end());

    std::vector<double> alphas;
    std::size_t present = 0;
    double sum = 0.0;
    for (const auto& tk : branches) {
      if (auto a = transitions_.at(tk).unit.alpha) {
        ++present;
        sum += *a;
      }
    }
    if (present == 0) {
      alphas.assign(branches.size(), 1.0 / static_cast<double>(branches.size()));
    } else if (present != branches.size()) {
      throw ProbabilityError(fmt::format("choice at place '{}' mixes guarded and unguarded branches", p));
    } else {
      if (std::abs(sum - 1.0) > kProbabilityTolerance)
        throw ProbabilityError(fmt::format("choice probabilities at place '{}' sum to {}", p, sum));
      for (const auto& tk : branches) alphas.push_back(*transitions_.at(tk).unit.alpha);
    }

    Block block;
    block.kind = BlockKind::Cond;
    for (std::size_t i = 0; i < branches.size(); ++i) {
      Unit& u = transitions_.at(branches[i]).unit;
      block.children.push_back(u.block ? std::move(*u.block) : Block::skip());
      block.delays.push_back(u.glue_delay());
      block.probabilities.push_back(alphas[i]);
    }

    const std::string& keep = branches.front();
    for (std::size_t i = 1; i < branches.size(); ++i) transitions_.erase(branches[i]);
    auto& node = transitions_.at(keep);
    node.unit = Unit{};
    node.unit.block = std::move(block);
    places_.at(p).post = {keep};
    places_.at(q).pre = {keep};
  }

  void apply_loop(const std::string& back) {
    LoopShape shape = *match_loop(back);
    const double k = transitions_.at(back).unit.iterations.value_or(1.0);
    places_.at(shape.exit_place).post.erase(back);
    places_.at(shape.entry_place).pre.erase(back);
    transitions_.erase(back);

    auto& body = transitions_.at(shape.body);
    Block loop;
    loop.kind = BlockKind::Loop;
    loop.iterations = k;
    loop.children.push_back(materialize(std::move(body.unit)));
    body.unit = Unit{};
    body.unit.block = std::move(loop);
  }

  Block finish() {
    if (transitions_.empty() && places_.size() == 1 && input_ == output_ && places_.contains(input_))
      return Block::skip();
    if (transitions_.size() == 1) {
      auto& [id, t] = *transitions_.begin();
      const bool shape_ok = t.pre == std::set<std::string>{input_} &&
                            t.post == std::set<std::string>{output_} &&
                            places_.size() == (input_ == output_ ? 1u : 2u);
      if (shape_ok) return materialize(std::move(t.unit));
    }
    std::string remnant = fmt::format("{} transitions remain:", transitions_.size());
    for (const auto& [id, t] : transitions_) {
      remnant += fmt::format(" {}({} in, {} out)", id, t.pre.size(), t.post.size());
    }
    remnant += fmt::format("; {} places remain", places_.size());
    throw NotWellStructured(remnant);
  }

  std::string input_;
  std::string output_;
  std::map<std::string, PlaceNode> places_;
  std::map<std::string, TransitionNode> transitions_;
};

}  // namespace

Block reduce(const FlatNet& net, const ReduceOptions& options) {
  return Reducer(net).run(options);
}

namespace {

QosVector shifted(QosVector q, double delay) {
  q.response_time += delay;
  return q;
}

}  // namespace

QosVector aggregate(const Block& block, CondMode mode) {
  switch (block.kind) {
    case BlockKind::Leaf: return block.qos;
    case BlockKind::Skip: return shifted(QosVector::neutral(), block.delay);
    case BlockKind::Loop: return loop_compose(aggregate(block.children.front(), mode), block.iterations);
    case BlockKind::Seq: {
      QosVector acc = aggregate(block.children.front(), mode);
      for (std::size_t i = 1; i < block.children.size(); ++i)
        acc = seq_compose(acc, aggregate(block.children[i], mode), block.delays[i - 1]);
      return acc;
    }
    case BlockKind::Par: {
      QosVector acc = shifted(aggregate(block.children.front(), mode), block.delays.front());
      for (std::size_t i = 1; i < block.children.size(); ++i)
        acc = par_compose(acc, shifted(aggregate(block.children[i], mode), block.delays[i]));
      return acc;
    }
    case BlockKind::Cond: {
      // Left fold: the accumulated prefix carries the total probability of
      // the branches folded so far.
      QosVector acc = aggregate(block.children.front(), mode);
      double acc_alpha = block.probabilities.front();
      double acc_delay = block.delays.front();
      for (std::size_t i = 1; i < block.children.size(); ++i) {
        const double alpha = block.probabilities[i];
        const double total = acc_alpha + alpha;
        const double wa = total > 0.0 ? acc_alpha / total : 0.5;
        const double wb = total > 0.0 ? alpha / total : 0.5;
        acc = cond_compose(acc, aggregate(block.children[i], mode), wa, wb, acc_delay, block.delays[i], mode);
        acc_alpha = total;
        acc_delay = 0.0;
      }
      return acc;
    }
  }
  return QosVector::neutral();
}

}  // namespace htppn
