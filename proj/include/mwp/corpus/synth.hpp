#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mwp/corpus/dataset.hpp"

namespace mwp {

struct SynthOptions {
  std::size_t count = 100;
  std::uint64_t seed = 1;
  // Template families to draw from; empty means all.
  std::vector<std::string> templates;
  // Probability of adding a sentence with an irrelevant number.
  double distractor_rate = 0.3;
};

// sum_diff, linear, ratio, consecutive, quadratic_area, three_var,
// temperature, recipe.
const std::vector<std::string>& synth_template_names();

// Seeded problem generator. Every problem is aligned and checked to solve to
// its answers before it is returned; unknown template names raise ConfigError.
std::vector<Problem> generate_problems(const SynthOptions& options);

}  // namespace mwp
