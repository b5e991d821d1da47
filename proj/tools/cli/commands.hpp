#pragma once

#include <iosfwd>

#include "cli/config.hpp"

namespace hamembed::cli {

/// Each command validates its inputs before touching the filesystem, writes
/// into a staging directory and renames it to cfg.out on success. Progress
/// and summaries go to `log`.
void cmd_gen_data(const ExperimentConfig& cfg, std::ostream& log);
void cmd_train(const ExperimentConfig& cfg, std::ostream& log);
void cmd_rollout(const ExperimentConfig& cfg, std::ostream& log);
void cmd_eval(const ExperimentConfig& cfg, std::ostream& log);
void cmd_pod(const ExperimentConfig& cfg, std::ostream& log);
void cmd_fit_decoder(const ExperimentConfig& cfg, std::ostream& log);
void cmd_plot(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace hamembed::cli
