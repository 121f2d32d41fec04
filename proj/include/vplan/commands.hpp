#pragma once

#include <iosfwd>
#include <string>

#include "vplan/config.hpp"

namespace vplan {

// Command bodies behind the CLI, callable in-process for tests. Machine
// output (LDJSON loss stream, JSON reports, stat lines) goes to `out`; human
// progress notes go to `err`. Errors: ConfigError / ValidationError /
// FormatError / ShapeError mean bad input (CLI exit 2); NumericError means
// runtime divergence (exit 3).

struct CollectStats {
  int frames = 0;
  int dropped = 0;
  int episodes = 0;
};

CollectStats cmd_collect(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// Returns the coverage stat (max over demos of min ADE to the vocabulary).
double cmd_build_vocab(const RunConfig& cfg, std::ostream& out, std::ostream& err);

void cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err);

void cmd_eval_open(const RunConfig& cfg, std::ostream& out, std::ostream& err);
void cmd_eval_closed(const RunConfig& cfg, std::ostream& out, std::ostream& err);

void cmd_replay_export(const RunConfig& cfg, const std::string& replay_path, std::ostream& out,
                       std::ostream& err);

}  // namespace vplan
