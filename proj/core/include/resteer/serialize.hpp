#pragma once

#include <string>
#include <utility>
#include <vector>

#include "resteer/forgetting.hpp"
#include "resteer/model.hpp"

namespace resteer {

// Checkpoint: "RSTR" magic, version, config JSON (with the vocabulary text
// embedded), vocabulary hash, payload hash, then named tensors encoded as
// (name length, name, rank, extents, little-endian f64). Round trips are
// bit-exact; bad magic, unknown versions, truncation and payload corruption
// all fail closed.
void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);

// Patch: "RPCH" magic, version, 32-byte base fingerprint, metadata JSON,
// payload hash, named delta tensors.
void save_patch(const std::string& path, const ModelPatch& patch);
ModelPatch load_patch(const std::string& path);

// Named-tensor file ("REMB") for inverted embeddings.
void save_embeddings(const std::string& path, const std::vector<std::pair<std::string, Tensor>>& named);
std::vector<std::pair<std::string, Tensor>> load_embeddings(const std::string& path);

// Binary PPM (P6, 8-bit); values map linearly between [-1,1] and [0,255].
void write_ppm(const std::string& path, const Tensor& image);
Tensor read_ppm(const std::string& path);
Tensor mosaic(const std::vector<Tensor>& images, int64_t cols);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace resteer
