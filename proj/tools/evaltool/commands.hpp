#pragma once

#include "config.hpp"

namespace evaltool {

// Each command returns the process exit code (0 on success; augment uses 10
// to signal partial completion).
int cmd_train(const Config& config);
int cmd_augment(const Config& config);
int cmd_score(const Config& config, const std::string& variant);
int cmd_eval(const Config& config);
int cmd_sweep(const Config& config);
int cmd_export_embeddings(const Config& config);

}  // namespace evaltool
