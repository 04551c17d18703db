#pragma once

#include <string>

#include "groupdir/grouping.hpp"
#include "groupdir/model.hpp"
#include "groupdir/training.hpp"

namespace groupdir {

struct Checkpoint {
  ModelParams params;
  TrainConfig config;
  GroupingScheme scheme;
};

// JSON serialization. Doubles survive a round trip bit-exactly, so a loaded
// checkpoint evaluates identically to the one that was saved.
std::string checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const std::string& text);

std::string train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& text);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace groupdir
