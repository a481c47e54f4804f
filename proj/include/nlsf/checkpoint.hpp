#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nlsf/nn.hpp"

namespace nlsf::nn {

/// Versioned binary bundle: named parameter tensors, Adam state, RNG state.
void save_checkpoint(const std::filesystem::path& path, const std::vector<ParamRef>& params, const AdamState& adam,
                     const std::string& rng_state);

/// Restores tensors into `params` (matched by name and shape) and returns the
/// stored optimizer and RNG state.
void load_checkpoint(const std::filesystem::path& path, const std::vector<ParamRef>& params, AdamState& adam,
                     std::string& rng_state);

}  // namespace nlsf::nn
