#pragma once

// Test-only reference computations. These work from the generative
// factors or from plain loops over the flat table and share no code with
// the library's discrete engine.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "confbound/discrete.hpp"

namespace oracle {

// J1: binary U, T, Y with y_levels (0, 1).
struct BinaryFactors {
  double p_u1 = 0.5;
  std::array<double, 2> p_t1_given_u{0.2, 0.8};                  // [u]
  std::array<std::array<double, 2>, 2> p_y1_given_tu{{{0.2, 0.6},  // t=0: [u]
                                                      {0.5, 0.9}}};  // t=1
};

inline std::vector<double> binary_table(const BinaryFactors& f) {
  std::vector<double> probs(8);
  for (int u = 0; u < 2; ++u) {
    const double pu = u == 1 ? f.p_u1 : 1.0 - f.p_u1;
    for (int t = 0; t < 2; ++t) {
      const double pt = t == 1 ? f.p_t1_given_u[u] : 1.0 - f.p_t1_given_u[u];
      for (int y = 0; y < 2; ++y) {
        const double py = y == 1 ? f.p_y1_given_tu[t][u] : 1.0 - f.p_y1_given_tu[t][u];
        probs[(u * 2 + t) * 2 + y] = pu * pt * py;
      }
    }
  }
  return probs;
}

inline confbound::CategoricalJoint j1(std::vector<double> y_levels = {0.0, 1.0}) {
  return confbound::CategoricalJoint({2, 2, 2}, binary_table(BinaryFactors{}), std::move(y_levels));
}

// Brute-force quantities straight from the flat table.
struct Enumeration {
  std::vector<double> p_u;        // [u]
  std::vector<double> p_u_given_t;  // [u]
  std::vector<double> mean_tu;    // E[Y|t,u]
  double obs = 0.0;               // E[Y|t]
  double do_ = 0.0;               // E[Y|do(t)]
};

inline Enumeration enumerate(const std::vector<double>& probs, std::size_t ku, std::size_t kt, std::size_t ky,
                             const std::vector<double>& y_levels, std::size_t t) {
  auto cell = [&](std::size_t u, std::size_t tt, std::size_t y) { return probs[(u * kt + tt) * ky + y]; };
  Enumeration e;
  e.p_u.assign(ku, 0.0);
  e.p_u_given_t.assign(ku, 0.0);
  e.mean_tu.assign(ku, 0.0);
  double p_t = 0.0;
  double y_t = 0.0;
  for (std::size_t u = 0; u < ku; ++u) {
    for (std::size_t tt = 0; tt < kt; ++tt) {
      for (std::size_t y = 0; y < ky; ++y) e.p_u[u] += cell(u, tt, y);
    }
    double p_ut = 0.0, y_ut = 0.0;
    for (std::size_t y = 0; y < ky; ++y) {
      p_ut += cell(u, t, y);
      y_ut += y_levels[y] * cell(u, t, y);
    }
    e.p_u_given_t[u] = p_ut;
    e.mean_tu[u] = p_ut > 0 ? y_ut / p_ut : 0.0;
    p_t += p_ut;
    y_t += y_ut;
  }
  for (double& v : e.p_u_given_t) v /= p_t;
  e.obs = y_t / p_t;
  for (std::size_t u = 0; u < ku; ++u) e.do_ += e.p_u[u] * e.mean_tu[u];
  return e;
}

inline Enumeration enumerate(const confbound::CategoricalJoint& j, std::size_t t) {
  return enumerate(j.probs(), j.k_u(), j.k_t(), j.k_y(), j.y_levels(), t);
}

// Random factored joints for property tests.
enum class Structure { General, UIndependentOfT, UIndependentOfYGivenT };

inline std::vector<double> random_simplex(std::size_t k, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> v(k);
  double s = 0.0;
  for (double& x : v) {
    x = g(rng) + 1e-3;
    s += x;
  }
  for (double& x : v) x /= s;
  return v;
}

inline confbound::CategoricalJoint random_joint(std::mt19937_64& rng, std::array<std::size_t, 3> dims,
                                                Structure structure = Structure::General) {
  const auto [ku, kt, ky] = dims;
  const auto p_u = random_simplex(ku, rng);
  const auto shared_t = random_simplex(kt, rng);
  std::vector<std::vector<double>> p_t_given_u(ku), shared_y(kt);
  for (std::size_t u = 0; u < ku; ++u) {
    p_t_given_u[u] = structure == Structure::UIndependentOfT ? shared_t : random_simplex(kt, rng);
  }
  for (std::size_t t = 0; t < kt; ++t) shared_y[t] = random_simplex(ky, rng);
  std::vector<double> probs(ku * kt * ky);
  for (std::size_t u = 0; u < ku; ++u) {
    for (std::size_t t = 0; t < kt; ++t) {
      const auto p_y = structure == Structure::UIndependentOfYGivenT ? shared_y[t] : random_simplex(ky, rng);
      for (std::size_t y = 0; y < ky; ++y) probs[(u * kt + t) * ky + y] = p_u[u] * p_t_given_u[u][t] * p_y[y];
    }
  }
  double s = 0.0;
  for (double p : probs) s += p;
  for (double& p : probs) p /= s;
  std::vector<double> y_levels(ky);
  std::uniform_real_distribution<double> step(0.1, 2.0);
  double y = -1.0;
  for (double& level : y_levels) {
    y += step(rng);
    level = y;
  }
  return confbound::CategoricalJoint(dims, std::move(probs), std::move(y_levels));
}

inline std::array<std::size_t, 3> random_dims(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> k(2, 4);
  return {k(rng), k(rng), k(rng)};
}

}  // namespace oracle
