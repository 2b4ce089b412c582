#pragma once

#include <string>

#include "resteer/config.hpp"

namespace resteer {

// Full benchmark pass: obtain the base model (load or train), apply the
// configured forgetting method to the targets, measure, and write reports
// (JSON + CSV), sample grids and patches under out_dir. Byte-identical
// outputs for identical configs and seeds.
void run_benchmark(const RunConfig& cfg, const std::string& out_dir);

}  // namespace resteer
