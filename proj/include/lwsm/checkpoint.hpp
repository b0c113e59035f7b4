#pragma once
#include <string>

#include "lwsm/model.hpp"

namespace lwsm {

// Binary snapshot: magic, format version, config fingerprint, the canonical
// config text, then each named parameter tensor in registration order.
void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);

} // namespace lwsm
