#include "generators.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace htppn::testing {

namespace {

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool chance(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

struct Ends {
  std::string entry;
  std::string exit;
};

enum class Shape { Leaf, Refinable, Seq, Par, Cond, Loop };

class Generator {
 public:
  Generator(std::mt19937_64& rng, const GenOptions& o) : rng_(rng), o_(o), refinables_left_(o.max_refinables) {}

  Htppn model() {
    Htppn m;
    m.name = fmt::format("random{}", uniform(rng_, 0, 9999));
    SubNet& net = m.net;
    m.input_place = add_place(net, "in");
    m.output_place = add_place(net, "out");
    // The forced refinable guarantees at least one at top level.
    std::vector<Ends> parts;
    int budget = o_.size;
    --refinables_left_;
    if (chance(rng_, 0.5)) parts.push_back(fragment(net, 0, budget, true));
    parts.push_back(refinable(net, 0));
    if (chance(rng_, 0.5)) parts.push_back(fragment(net, 0, budget, true));
    const Ends all = chain(net, parts);
    net.arcs.push_back({m.input_place, all.entry});
    net.arcs.push_back({all.exit, m.output_place});
    if (o_.decorate) shuffle(m.net);
    reset_initial_marking(m);
    return m;
  }

 private:
  std::string fresh(std::string_view prefix) { return fmt::format("{}{}", prefix, counter_++); }

  TimeWindow place_window() {
    if (o_.decorate && chance(rng_, 0.3)) return {uniform(rng_, 0, 3), kTimeInfinity};
    if (!o_.timing && !o_.additive && !o_.decorate) return {0, kTimeInfinity};
    const Time lo = uniform(rng_, 0, 2);
    return {lo, lo + uniform(rng_, 0, 3)};
  }

  std::string add_place(SubNet& net, std::string_view prefix) {
    Place p;
    p.id = fresh(prefix);
    p.window = place_window();
    if (o_.decorate && chance(rng_, 0.2)) p.capacity = uniform(rng_, 1, 4);
    net.places.push_back(p);
    return p.id;
  }

  std::string add_dummy(SubNet& net) {
    Transition t = Transition::make_dummy(fresh("d"));
    net.transitions.push_back(std::move(t));
    return net.transitions.back().id;
  }

  QosVector leaf_qos() {
    if (o_.additive) {
      const double a[] = {0.9, 0.95, 0.99, 1.0};
      return {static_cast<double>(uniform(rng_, 0, 9)), static_cast<double>(uniform(rng_, 0, 9)),
              a[uniform(rng_, 0, 3)], static_cast<double>(uniform(rng_, 1, 100))};
    }
    return random_qos(rng_);
  }

  std::string add_leaf(SubNet& net) {
    std::optional<std::string> service;
    if (o_.decorate && chance(rng_, 0.6)) {
      const char* names[] = {"Plain", "With \"quotes\"", "Back\\slash", "Tab\there", "Line\nbreak", "Ünïcode"};
      service = names[uniform(rng_, 0, 5)];
    }
    Transition t = (!o_.additive && (o_.decorate || !o_.timing) && chance(rng_, 0.03))
                       ? Transition::make_unavailable(fresh("t"), service)
                       : Transition::make_concrete(fresh("t"), service, leaf_qos());
    if (o_.timing || o_.decorate) {
      const Time lo = uniform(rng_, 0, 4);
      t.window = {lo, lo + uniform(rng_, 0, 4)};
      if (o_.decorate && chance(rng_, 0.2)) t.window.max = kTimeInfinity;
      if (chance(rng_, 0.3)) t.duration = uniform(rng_, 0, 2);
    }
    net.transitions.push_back(std::move(t));
    return net.transitions.back().id;
  }

  Shape pick(int depth, int budget, bool allow_refinable) {
    const bool refinable_ok = allow_refinable && refinables_left_ > 0 && depth < o_.max_depth;
    if (budget <= 1) return refinable_ok && chance(rng_, 0.3) ? Shape::Refinable : Shape::Leaf;
    std::vector<std::pair<Shape, int>> weights{{Shape::Leaf, 4}, {Shape::Seq, 3}, {Shape::Par, 2},
                                               {Shape::Cond, 2}, {Shape::Loop, 1}};
    if (refinable_ok) weights.push_back({Shape::Refinable, 3});
    int total = 0;
    for (const auto& [s, w] : weights) total += w;
    int r = uniform(rng_, 1, total);
    for (const auto& [s, w] : weights) {
      if ((r -= w) <= 0) return s;
    }
    return Shape::Leaf;
  }

  Ends chain(SubNet& net, const std::vector<Ends>& parts) {
    Ends out = parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i) {
      const std::string p = add_place(net, "p");
      net.arcs.push_back({out.exit, p});
      net.arcs.push_back({p, parts[i].entry});
      out.exit = parts[i].exit;
    }
    return out;
  }

  Ends refinable(SubNet& net, int depth) {
    Transition r = Transition::make_refinable(fresh("R"), {});
    const int n = uniform(rng_, 2, o_.max_branches);
    std::vector<double> alpha;
    if (o_.decorate && chance(rng_, 0.3)) {
      for (int i = 0; i < n; ++i) alpha.push_back(1.0 / n);
    }
    for (int i = 0; i < n; ++i) {
      Branch b;
      b.id = fmt::format("b{}", i + 1);
      if (!alpha.empty()) b.alpha = alpha[static_cast<std::size_t>(i)];
      int budget = std::max(1, o_.size / 2);
      fragment(b.net, depth + 1, budget, true);
      if (o_.decorate) shuffle(b.net);
      r.refinable().branches.push_back(std::move(b));
    }
    net.transitions.push_back(std::move(r));
    return {net.transitions.back().id, net.transitions.back().id};
  }

  std::vector<double> probabilities(int n) {
    if (o_.additive) {
      if (n == 2) {
        const double a[] = {0.25, 0.5, 0.75};
        const double x = a[uniform(rng_, 0, 2)];
        return {x, 1.0 - x};
      }
      std::vector<double> p{0.25, 0.25, 0.5};
      std::shuffle(p.begin(), p.end(), rng_);
      return p;
    }
    if (chance(rng_, 0.3)) return {};
    std::vector<double> p;
    double total = 0;
    for (int i = 0; i < n; ++i) {
      p.push_back(real(rng_, 0.05, 1.0));
      total += p.back();
    }
    for (auto& x : p) x /= total;
    return p;
  }

  Ends fragment(SubNet& net, int depth, int& budget, bool allow_refinable) {
    const Shape shape = pick(depth, budget, allow_refinable);
    --budget;
    const bool inner_refinable = allow_refinable && (!o_.additive || o_.refinables_anywhere);
    switch (shape) {
      case Shape::Leaf: {
        const std::string t = add_leaf(net);
        return {t, t};
      }
      case Shape::Refinable:
        --refinables_left_;
        return refinable(net, depth);
      case Shape::Seq: {
        std::vector<Ends> parts;
        const int n = uniform(rng_, 2, 3);
        for (int i = 0; i < n; ++i) parts.push_back(fragment(net, depth, budget, allow_refinable));
        return chain(net, parts);
      }
      case Shape::Par: {
        const std::string split = add_dummy(net);
        const std::string join = add_dummy(net);
        const int n = uniform(rng_, 2, 3);
        for (int i = 0; i < n; ++i) {
          const Ends arm = fragment(net, depth, budget, inner_refinable);
          const std::string a = add_place(net, "p");
          const std::string b = add_place(net, "p");
          net.arcs.push_back({split, a});
          net.arcs.push_back({a, arm.entry});
          net.arcs.push_back({arm.exit, b});
          net.arcs.push_back({b, join});
        }
        return {split, join};
      }
      case Shape::Cond: {
        const std::string open = add_dummy(net);
        const std::string choice = add_place(net, "p");
        const std::string merge = add_place(net, "p");
        const std::string close = add_dummy(net);
        net.arcs.push_back({open, choice});
        net.arcs.push_back({merge, close});
        const int n = uniform(rng_, 2, 3);
        const auto alpha = probabilities(n);
        for (int i = 0; i < n; ++i) {
          const std::string guard = add_dummy(net);
          if (!alpha.empty()) net.transitions.back().dummy().alpha = alpha[static_cast<std::size_t>(i)];
          const std::string p = add_place(net, "p");
          const Ends arm = fragment(net, depth, budget, inner_refinable);
          net.arcs.push_back({choice, guard});
          net.arcs.push_back({guard, p});
          net.arcs.push_back({p, arm.entry});
          net.arcs.push_back({arm.exit, merge});
        }
        return {open, close};
      }
      case Shape::Loop: {
        const std::string enter = add_dummy(net);
        const std::string head = add_place(net, "p");
        const Ends body = fragment(net, depth, budget, inner_refinable);
        const std::string tail = add_place(net, "p");
        const std::string back = add_dummy(net);
        net.transitions.back().dummy().iterations =
            o_.additive ? static_cast<double>(uniform(rng_, 1, 3)) : real(rng_, 1.0, 3.0);
        const std::string leave = add_dummy(net);
        net.arcs.push_back({enter, head});
        net.arcs.push_back({head, body.entry});
        net.arcs.push_back({body.exit, tail});
        net.arcs.push_back({tail, back});
        net.arcs.push_back({back, head});
        net.arcs.push_back({tail, leave});
        return {enter, leave};
      }
    }
    return {};
  }

  void shuffle(SubNet& net) {
    std::shuffle(net.places.begin(), net.places.end(), rng_);
    std::shuffle(net.transitions.begin(), net.transitions.end(), rng_);
    std::shuffle(net.arcs.begin(), net.arcs.end(), rng_);
  }

  std::mt19937_64& rng_;
  GenOptions o_;
  int refinables_left_;
  int counter_ = 0;
};

}  // namespace

Htppn random_model(std::mt19937_64& rng, const GenOptions& options) { return Generator(rng, options).model(); }

QosVector random_qos(std::mt19937_64& rng) {
  return {real(rng, 0.0, 10.0), real(rng, 0.0, 10.0), real(rng, 0.5, 1.0), real(rng, 1.0, 100.0)};
}

QosVector random_simple_qos(std::mt19937_64& rng) {
  return {static_cast<double>(uniform(rng, 0, 9)), static_cast<double>(uniform(rng, 0, 9)),
          uniform(rng, 5, 10) / 10.0, static_cast<double>(uniform(rng, 1, 20))};
}

Weights random_additive_weights(std::mt19937_64& rng) {
  const std::pair<int, int> ratios[] = {{1, 0}, {0, 1}, {1, 1}, {1, 3}, {3, 1}, {5, 3}, {7, 1}};
  const auto [r, c] = ratios[uniform(rng, 0, 6)];
  return Weights(r, c, 0, 0);
}

Weights random_weights(std::mt19937_64& rng) {
  return Weights(real(rng, 0.01, 1.0), real(rng, 0.01, 1.0), real(rng, 0.01, 1.0), real(rng, 0.01, 1.0));
}

}  // namespace htppn::testing
