#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ssdal/network.hpp"

namespace ssdal {

struct GradcheckOptions {
  std::size_t seeds = 20;
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  /// Perturbs the analytic gradients so the check must fail.
  bool fault_injection = false;
  std::uint64_t base_seed = 0;

  void validate() const;
};

struct LossCheck {
  std::string loss;
  double max_relative_error = 0.0;
  std::size_t seeds = 0;
  bool passed = false;
};

struct GradcheckReport {
  std::vector<LossCheck> losses;
  double tolerance = 0.0;

  bool passed() const;
};

/// Names of the losses covered by run_gradcheck, in report order.
std::vector<std::string> registered_losses();

/// Evaluator for one registered loss on a small random problem drawn from
/// `seed`, together with the network it applies to.
struct GradcheckProblem {
  NetworkParams params;
  LossEvaluator evaluator;
};
GradcheckProblem make_gradcheck_problem(const std::string& loss, std::uint64_t seed,
                                        bool fault_injection = false);

/// Every registered loss on `seeds` random networks.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace ssdal
