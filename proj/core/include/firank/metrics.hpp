#pragma once

#include <cstdint>
#include <vector>

namespace firank {

// Area under the ROC curve via the rank statistic; tied scores count 0.5.
// Requires at least one positive and one negative label.
double auc(const std::vector<double>& scores, const std::vector<uint8_t>& labels);

// Mean binary cross entropy with probabilities clamped to [1e-7, 1-1e-7].
double logloss(const std::vector<double>& probs, const std::vector<uint8_t>& labels);

}  // namespace firank
