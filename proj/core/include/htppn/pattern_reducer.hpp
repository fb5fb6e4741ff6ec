#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "htppn/model.hpp"
#include "htppn/qos.hpp"

namespace htppn {

enum class BlockKind { Leaf, Seq, Par, Cond, Loop, Skip };

std::string_view to_string(BlockKind kind);

/// Node of the pattern decomposition of a flat net.
///
///  Leaf  one concrete transition and its QoS.
///  Seq   children in execution order; `delays` holds the place delay between
///        consecutive children (size n-1).
///  Par   concurrent children; `delays` holds per-branch place delays (size n).
///  Cond  exclusive children; `probabilities` and per-branch `delays` (size n).
///  Loop  one body child repeated `iterations` times.
///  Skip  a path made only of dummy glue: neutral QoS plus `delay` time units.
///
/// Dummy transitions never become leaves.
struct Block {
  BlockKind kind = BlockKind::Skip;
  std::string transition;
  QosVector qos;
  std::vector<Block> children;
  std::vector<double> delays;
  std::vector<double> probabilities;
  double iterations = 1.0;
  double delay = 0.0;

  static Block leaf(std::string transition, QosVector qos);
  static Block skip(double delay = 0.0);

  bool operator==(const Block&) const;
};

/// Transition ids of every leaf, in tree order.
std::vector<std::string> leaf_transitions(const Block& block);

/// One-line rendering, e.g. "Seq[Leaf(a), Par[Leaf(b), Leaf(c)]]".
std::string describe(const Block& block);

struct ReduceOptions {
  // When set, each step applies a uniformly chosen eligible rewrite instead
  // of the first one in rule order; used to check that the result does not
  // depend on rewrite order.
  std::optional<std::uint64_t> shuffle_seed;
};

/// Rewrites the net with the sequence, parallel, conditional and loop rules
/// until a single block remains. The place delay of a place is the lower
/// bound of its window. Throws NotWellStructured when no rule applies before
/// that point, and ProbabilityError when conditional guards carry
/// inconsistent probabilities.
Block reduce(const FlatNet& net, const ReduceOptions& options = {});

/// Folds a block tree into its composite QoS.
QosVector aggregate(const Block& block, CondMode mode = CondMode::Paper);

}  // namespace htppn
