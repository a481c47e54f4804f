#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include <cmath>
#include <functional>

#include "nlsf/graph.hpp"
#include "nlsf/nn.hpp"

namespace fixtures {

inline nlsf::GraphSignal path(int n, nlsf::Matrix x = {}) {
  std::vector<nlsf::Edge> e;
  for (int i = 0; i + 1 < n; ++i) e.push_back({i, i + 1, 1.0});
  return nlsf::make_graph(n, e, std::move(x));
}

inline nlsf::GraphSignal cycle(int n, nlsf::Matrix x = {}) {
  std::vector<nlsf::Edge> e;
  for (int i = 0; i < n; ++i) e.push_back({i, (i + 1) % n, 1.0});
  return nlsf::make_graph(n, e, std::move(x));
}

inline nlsf::GraphSignal complete(int n, nlsf::Matrix x = {}) {
  std::vector<nlsf::Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.push_back({i, j, 1.0});
  return nlsf::make_graph(n, e, std::move(x));
}

inline nlsf::GraphSignal star(int leaves) {
  std::vector<nlsf::Edge> e;
  for (int i = 1; i <= leaves; ++i) e.push_back({0, i, 1.0});
  return nlsf::make_graph(leaves + 1, e);
}

inline nlsf::Matrix gaussian(Eigen::Index n, Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  nlsf::Matrix x(n, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = normal(rng);
  return x;
}

inline nlsf::Matrix col(std::initializer_list<double> v) {
  nlsf::Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

inline std::vector<std::int64_t> random_permutation(std::int64_t n, std::mt19937_64& rng) {
  std::vector<std::int64_t> p(n);
  for (std::int64_t i = 0; i < n; ++i) p[i] = i;
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

// Central differences of f with respect to every entry of every parameter.
inline std::vector<nlsf::Matrix> numeric_grad(const std::function<double()>& f, const std::vector<nlsf::nn::ParamRef>& params,
                                 double h = 1e-5) {
  std::vector<nlsf::Matrix> out;
  for (const auto& p : params) {
    nlsf::Matrix g(p.value->rows(), p.value->cols());
    for (Eigen::Index k = 0; k < p.value->size(); ++k) {
      double& v = p.value->data()[k];
      const double keep = v;
      v = keep + h;
      const double up = f();
      v = keep - h;
      const double down = f();
      v = keep;
      g.data()[k] = (up - down) / (2 * h);
    }
    out.push_back(g);
  }
  return out;
}

inline double max_rel(const std::vector<nlsf::Matrix>& a, const std::vector<nlsf::Matrix>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (Eigen::Index k = 0; k < a[i].size(); ++k) {
      const double x = a[i].data()[k], y = b[i].data()[k];
      worst = std::max(worst, std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-5}));
    }
  return worst;
}

}  // namespace fixtures
