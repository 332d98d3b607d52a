#ifndef SGAT_CHECKPOINT_HPP
#define SGAT_CHECKPOINT_HPP

#include <string>

#include "sgat/model.hpp"
#include "sgat/train.hpp"

namespace sgat {

// Versioned JSON checkpoint. Doubles are serialized with 17 significant
// digits, so save -> load reproduces every parameter bit-exactly.
struct Checkpoint {
  std::string dataset;
  TrainConfig config;
  SgatModel model;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sgat

#endif  // SGAT_CHECKPOINT_HPP
