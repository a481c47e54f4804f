#include "nlsf/basis_cache.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace nlsf::eig {

namespace {

constexpr char kMagic[8] = {'N', 'L', 'S', 'F', 'B', 'A', 'S', '1'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ParseError(path.string(), 0, "truncated basis file");
  return v;
}

}  // namespace

void write_basis(const std::filesystem::path& path, const SpectralBasis& b) {
  // Write to a temporary name first so a crashed run never leaves a torn file.
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write basis cache file " + tmp);
    out.write(kMagic, sizeof(kMagic));
    put<std::int64_t>(out, b.num_nodes());
    put<std::int64_t>(out, b.num_pairs());
    put<std::int64_t>(out, static_cast<std::int64_t>(b.groups.size()));
    put<double>(out, b.lambda_max);
    put<std::uint8_t>(out, b.complete ? 1 : 0);
    put<std::int32_t>(out, b.iterations);
    out.write(reinterpret_cast<const char*>(b.eigenvalues.data()), sizeof(double) * b.eigenvalues.size());
    out.write(reinterpret_cast<const char*>(b.eigenvectors.data()), sizeof(double) * b.eigenvectors.size());
    for (const Group& g : b.groups) {
      put<std::int64_t>(out, g.begin);
      put<std::int64_t>(out, g.end);
    }
    if (!out) throw Error("failed writing basis cache file " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

SpectralBasis read_basis(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open basis file");
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + sizeof(magic), kMagic)) throw ParseError(path.string(), 0, "bad basis file header");
  const auto n = get<std::int64_t>(in, path);
  const auto m = get<std::int64_t>(in, path);
  const auto ng = get<std::int64_t>(in, path);
  if (n < 0 || m < 0 || m > n || ng < 0 || ng > m) throw ParseError(path.string(), 0, "corrupt basis dimensions");
  SpectralBasis b;
  b.lambda_max = get<double>(in, path);
  b.complete = get<std::uint8_t>(in, path) != 0;
  b.iterations = get<std::int32_t>(in, path);
  b.eigenvalues.resize(m);
  b.eigenvectors.resize(n, m);
  in.read(reinterpret_cast<char*>(b.eigenvalues.data()), sizeof(double) * m);
  in.read(reinterpret_cast<char*>(b.eigenvectors.data()), sizeof(double) * n * m);
  if (!in) throw ParseError(path.string(), 0, "truncated basis file");
  for (std::int64_t k = 0; k < ng; ++k) {
    Group g;
    g.begin = get<std::int64_t>(in, path);
    g.end = get<std::int64_t>(in, path);
    b.groups.push_back(g);
  }
  return b;
}

BasisCache::BasisCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path BasisCache::path_for(const SparseSymMatrix& delta, const std::string& tag) const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(delta.content_hash()));
  return dir_ / (std::string(buf) + "_" + tag + ".basis");
}

std::optional<SpectralBasis> BasisCache::load(const SparseSymMatrix& delta, const std::string& tag) const {
  const auto p = path_for(delta, tag);
  if (!std::filesystem::exists(p)) return std::nullopt;
  SpectralBasis b = read_basis(p);
  if (b.num_nodes() != delta.size()) return std::nullopt;
  return b;
}

void BasisCache::store(const SparseSymMatrix& delta, const std::string& tag, const SpectralBasis& basis) const {
  write_basis(path_for(delta, tag), basis);
}

}  // namespace nlsf::eig
