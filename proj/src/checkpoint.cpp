#include "nlsf/checkpoint.hpp"

#include <fstream>

namespace nlsf::nn {

namespace {

constexpr char kMagic[8] = {'N', 'L', 'S', 'F', 'C', 'K', 'P', '1'};

void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); }
void put_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); }
void put_str(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void put_mat(std::ostream& out, const Matrix& m) {
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
}

struct Reader {
  std::ifstream in;
  std::string file;

  void need() {
    if (!in) throw ParseError(file, 0, "truncated checkpoint");
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    need();
    return v;
  }
  double f64() {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    need();
    return v;
  }
  std::string str() {
    const auto n = u64();
    if (n > (1u << 24)) throw ParseError(file, 0, "corrupt checkpoint string");
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    need();
    return s;
  }
  Matrix mat() {
    const auto r = u64();
    const auto c = u64();
    if (r > (1u << 24) || c > (1u << 24)) throw ParseError(file, 0, "corrupt checkpoint tensor");
    Matrix m(r, c);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
    need();
    return m;
  }
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::vector<ParamRef>& params, const AdamState& adam,
                     const std::string& rng_state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put_u64(out, params.size());
  for (const auto& p : params) {
    put_str(out, p.name);
    put_mat(out, *p.value);
  }
  put_f64(out, adam.cfg.lr);
  put_f64(out, adam.cfg.beta1);
  put_f64(out, adam.cfg.beta2);
  put_f64(out, adam.cfg.eps);
  put_f64(out, adam.cfg.weight_decay);
  put_u64(out, static_cast<std::uint64_t>(adam.step));
  put_u64(out, adam.m.size());
  for (std::size_t k = 0; k < adam.m.size(); ++k) {
    put_mat(out, adam.m[k]);
    put_mat(out, adam.v[k]);
  }
  put_str(out, rng_state);
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

void load_checkpoint(const std::filesystem::path& path, const std::vector<ParamRef>& params, AdamState& adam,
                     std::string& rng_state) {
  Reader r{std::ifstream(path, std::ios::binary), path.string()};
  if (!r.in) throw ParseError(path.string(), 0, "cannot open checkpoint");
  char magic[sizeof(kMagic)];
  r.in.read(magic, sizeof(magic));
  if (!r.in || !std::equal(magic, magic + sizeof(magic), kMagic)) throw ParseError(path.string(), 0, "bad checkpoint header");
  const auto count = r.u64();
  if (count != params.size()) {
    throw ParseError(path.string(), 0, "checkpoint holds " + std::to_string(count) + " tensors, model has " +
                                           std::to_string(params.size()));
  }
  for (const auto& p : params) {
    const auto name = r.str();
    Matrix m = r.mat();
    if (name != p.name || m.rows() != p.value->rows() || m.cols() != p.value->cols()) {
      throw ParseError(path.string(), 0, "tensor '" + name + "' does not match model parameter '" + p.name + "'");
    }
    *p.value = std::move(m);
  }
  adam.cfg.lr = r.f64();
  adam.cfg.beta1 = r.f64();
  adam.cfg.beta2 = r.f64();
  adam.cfg.eps = r.f64();
  adam.cfg.weight_decay = r.f64();
  adam.step = static_cast<long>(r.u64());
  const auto moments = r.u64();
  if (moments != 0 && moments != params.size()) throw ParseError(path.string(), 0, "optimizer state size mismatch");
  adam.m.clear();
  adam.v.clear();
  for (std::uint64_t k = 0; k < moments; ++k) {
    adam.m.push_back(r.mat());
    adam.v.push_back(r.mat());
  }
  rng_state = r.str();
}

}  // namespace nlsf::nn
