#pragma once

#include <filesystem>
#include <optional>

#include "nlsf/eig.hpp"

namespace nlsf::eig {

/// On-disk store of spectral bases keyed by the GSO content hash, so the
/// eigendecomposition of a graph is computed once across runs.
class BasisCache {
 public:
  explicit BasisCache(std::filesystem::path dir);

  std::filesystem::path path_for(const SparseSymMatrix& delta, const std::string& tag) const;
  std::optional<SpectralBasis> load(const SparseSymMatrix& delta, const std::string& tag) const;
  void store(const SparseSymMatrix& delta, const std::string& tag, const SpectralBasis& basis) const;

  /// Loads when present, otherwise computes and stores.
  template <typename F>
  SpectralBasis get_or_compute(const SparseSymMatrix& delta, const std::string& tag, F&& compute) const {
    if (auto hit = load(delta, tag)) return *std::move(hit);
    SpectralBasis b = compute();
    store(delta, tag, b);
    return b;
  }

 private:
  std::filesystem::path dir_;
};

void write_basis(const std::filesystem::path& path, const SpectralBasis& basis);
SpectralBasis read_basis(const std::filesystem::path& path);

}  // namespace nlsf::eig
