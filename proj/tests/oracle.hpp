#pragma once

// Brute-force reference computations used as test oracles. Everything here
// is recomputed from raw event days and coordinates, one (i, t) pair at a
// time, without the library's timeline or evaluator.

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "cilm/core.hpp"
#include "cilm/ilm.hpp"

namespace oracle {

struct Instance {
  std::vector<cilm::Point> pts;
  std::vector<std::optional<int>> inf;
  std::vector<std::optional<int>> rem;
  int t_max = 0;
  int observe_from = 0;
  std::vector<int> labels;  // empty for the full model
  int K = 1;
};

struct Model {
  cilm::Frame frame = cilm::Frame::SIR;
  cilm::SparkKind spark = cilm::SparkKind::Zero;
  bool composite = false;
  int latent = 0;
  std::optional<int> period;
  double alpha = 0.0, beta = 0.0, eps = 0.0, bt = 0.0, delta = 1.0;
};

inline double dist(const cilm::Point& a, const cilm::Point& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y));
}

inline bool infectious(const Instance& in, const Model& m, std::size_t j, int t) {
  if (!in.inf[j]) return false;
  const int e = *in.inf[j];
  if (m.frame == cilm::Frame::SIR) return e <= t && (!in.rem[j] || t < *in.rem[j]);
  const int start = e + m.latent;
  int stop = std::numeric_limits<int>::max();
  if (in.rem[j]) stop = *in.rem[j];
  if (m.period) stop = std::min(stop, start + *m.period);
  return start <= t && t < stop;
}

inline int cluster(const Instance& in, const Model& m, std::size_t i) {
  return m.composite ? in.labels[i] : 0;
}

inline cilm::Point mean_of(const Instance& in, const std::vector<std::size_t>& ids) {
  cilm::Point c;
  for (auto j : ids) {
    c.x += in.pts[j].x;
    c.y += in.pts[j].y;
  }
  return {c.x / static_cast<double>(ids.size()), c.y / static_cast<double>(ids.size())};
}

inline double spark(const Instance& in, const Model& m, std::size_t i, int t) {
  using cilm::SparkKind;
  if (m.spark == SparkKind::Zero) return 0.0;
  if (m.spark == SparkKind::Constant) return m.eps;
  const int k = in.labels[i];
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(in.K)), inf(static_cast<std::size_t>(in.K));
  for (std::size_t j = 0; j < in.pts.size(); ++j) {
    members[static_cast<std::size_t>(in.labels[j])].push_back(j);
    if (infectious(in, m, j, t)) inf[static_cast<std::size_t>(in.labels[j])].push_back(j);
  }
  double s = 0.0;
  for (int kp = 0; kp < in.K; ++kp) {
    if (kp == k) continue;
    const auto& ikp = inf[static_cast<std::size_t>(kp)];
    if (ikp.empty()) continue;
    double d;
    if (m.spark == SparkKind::M3) {
      const auto& ik = inf[static_cast<std::size_t>(k)];
      const cilm::Point a = ik.empty() ? mean_of(in, members[static_cast<std::size_t>(k)]) : mean_of(in, ik);
      d = dist(a, mean_of(in, ikp));
    } else {
      d = dist(mean_of(in, members[static_cast<std::size_t>(k)]), mean_of(in, members[static_cast<std::size_t>(kp)]));
    }
    const double n = static_cast<double>(ikp.size());
    const double w = m.spark == SparkKind::M4 ? std::pow(n, m.delta) : n;
    s += w * std::pow(d, -m.bt);
  }
  return (m.spark == SparkKind::M1 ? m.eps : m.alpha) * s;
}

inline double rate(const Instance& in, const Model& m, std::size_t i, int t) {
  double k = 0.0;
  for (std::size_t j = 0; j < in.pts.size(); ++j) {
    if (j == i || !infectious(in, m, j, t)) continue;
    if (m.composite && in.labels[j] != in.labels[i]) continue;
    k += std::pow(dist(in.pts[i], in.pts[j]), -m.beta);
  }
  return m.alpha * k + spark(in, m, i, t);
}

// Sum over days t from the first modelled day to t_max - 1 of one Bernoulli
// term per individual still susceptible at t.
inline double log_likelihood(const Instance& in, const Model& m) {
  int first = std::numeric_limits<int>::max();
  for (const auto& v : in.inf) {
    if (v) first = std::min(first, *v);
  }
  if (first == std::numeric_limits<int>::max()) first = in.observe_from;
  const int t0 = std::max(first, in.observe_from);
  std::vector<std::optional<int>> cluster_first(static_cast<std::size_t>(in.K));
  for (std::size_t i = 0; i < in.pts.size(); ++i) {
    if (!in.inf[i]) continue;
    auto& cf = cluster_first[static_cast<std::size_t>(cluster(in, m, i))];
    if (!cf || *in.inf[i] < *cf) cf = in.inf[i];
  }
  double ll = 0.0;
  for (int t = t0; t < in.t_max; ++t) {
    for (std::size_t i = 0; i < in.pts.size(); ++i) {
      if (in.inf[i] && *in.inf[i] <= t) continue;
      const bool infected = in.inf[i] && *in.inf[i] == t + 1;
      if (infected && m.composite && m.spark == cilm::SparkKind::Zero &&
          *cluster_first[static_cast<std::size_t>(cluster(in, m, i))] == t + 1) {
        continue;
      }
      const double r = rate(in, m, i, t);
      if (infected) {
        ll += r == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(-std::expm1(-r));
      } else {
        ll += -r;
      }
    }
  }
  return ll;
}

// Random small instance: N in [2, max_n], t_max in [1, max_t].
inline Instance random_instance(std::mt19937_64& rng, int max_n, int max_t, int K) {
  std::uniform_int_distribution<int> nd(std::max(2, K), max_n);
  std::uniform_int_distribution<int> td(1, max_t);
  std::uniform_real_distribution<double> xy(0.0, 5.0);
  std::bernoulli_distribution coin(0.6);
  Instance in;
  const int n = nd(rng);
  in.t_max = td(rng);
  in.K = K;
  for (int i = 0; i < n; ++i) in.pts.push_back({xy(rng), xy(rng)});
  for (int i = 0; i < n; ++i) {
    std::optional<int> a, b;
    if (i == 0 || coin(rng)) {
      a = std::uniform_int_distribution<int>(0, in.t_max)(rng);
      if (*a < in.t_max && coin(rng)) b = std::uniform_int_distribution<int>(*a + 1, in.t_max)(rng);
    }
    in.inf.push_back(a);
    in.rem.push_back(b);
  }
  for (int i = 0; i < n; ++i) in.labels.push_back(i < K ? i : std::uniform_int_distribution<int>(0, K - 1)(rng));
  return in;
}

inline cilm::Population population(const Instance& in) { return cilm::Population(in.pts); }

inline cilm::EpidemicRecord record(const Instance& in) {
  return cilm::EpidemicRecord(in.inf, in.rem, in.t_max, in.observe_from);
}

inline cilm::ModelSpec spec(const Model& m) {
  cilm::ModelSpec s;
  s.frame = m.frame;
  s.spark = m.spark;
  s.composite = m.composite;
  s.latent_period = m.latent;
  s.infectious_period = m.period;
  return s;
}

inline cilm::ModelParams params(const Model& m) {
  using cilm::SparkKind;
  cilm::ModelParams p{m.alpha, m.beta, {}, {}, {}};
  if (m.spark == SparkKind::Constant || m.spark == SparkKind::M1) p.epsilon = m.eps;
  if (cilm::spark_needs_clusters(m.spark)) p.beta_tilde = m.bt;
  if (m.spark == SparkKind::M4) p.delta = m.delta;
  return p;
}

}  // namespace oracle
