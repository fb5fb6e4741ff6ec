#pragma once

#include <string>
#include <vector>

#include "htppn/model.hpp"
#include "htppn/qos.hpp"

namespace htppn {

struct SelectionStep {
  std::string path;
  std::vector<double> branch_scalars;
  std::size_t chosen = 0;  // 0-based

  bool operator==(const SelectionStep&) const = default;
};

struct SelectionResult {
  Configuration configuration;
  QosVector composite_qos;
  double scalar = 0.0;
  // Steps for the refinables instantiated by `configuration`, in the order
  // they were decided.
  std::vector<SelectionStep> trace;
  // Refinables decided, including those inside branches that lost. For the
  // brute-force search, the number of configurations evaluated.
  std::size_t selections_made = 0;

  bool operator==(const SelectionResult&) const = default;
};

/// Bottom-up stack selection. Top-level refinables are pushed in id order.
/// A popped refinable whose nested refinables are all decided scores each
/// branch (nested refinables collapsed to their chosen QoS) and keeps the
/// lowest scalar, ties to the lowest index; otherwise it is pushed back
/// beneath its undecided children.
SelectionResult select_optimal(const Htppn& model, const Weights& w, CondMode mode = CondMode::Paper);

/// Exhaustive minimum over every configuration. Ties go to the first
/// configuration in enumeration order. The result has an empty trace.
SelectionResult brute_force_optimal(const Htppn& model, const Weights& w, CondMode mode = CondMode::Paper,
                                    std::size_t cap = kDefaultConfigurationCap);

/// aggregate(reduce(flatten(model, config))).
QosVector evaluate_configuration(const Htppn& model, const Configuration& config, CondMode mode = CondMode::Paper);

}  // namespace htppn
