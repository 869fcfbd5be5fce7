#include "json.hpp"

#include "premsel/nn/train.hpp"

namespace premsel::nn {

std::string to_json_line(const EpochRecord& record) {
  nlohmann::ordered_json j;
  j["epoch"] = record.epoch;
  j["loss"] = record.loss;
  j["accuracy"] = record.accuracy;
  j["wall_ms"] = record.wall_ms;
  if (record.val_loss) j["val_loss"] = *record.val_loss;
  if (record.val_accuracy) j["val_accuracy"] = *record.val_accuracy;
  return j.dump();
}

}  // namespace premsel::nn
