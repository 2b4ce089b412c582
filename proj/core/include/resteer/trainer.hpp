#pragma once

#include <vector>

#include "resteer/config.hpp"
#include "resteer/corpus.hpp"
#include "resteer/diffusion.hpp"
#include "resteer/model.hpp"

namespace resteer {

// Base training on ConceptBench-mini with Adam over all model parameters
// (text embeddings included). Single-threaded and bit-reproducible.
std::vector<double> train_base_model(Model& model, const Corpus& corpus, const NoiseSchedule& sched,
                                     const TrainSettings& cfg, uint64_t seed);

}  // namespace resteer
