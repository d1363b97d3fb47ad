#include "cilm/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cilm/errors.hpp"
#include "cilm/simd/kernels.hpp"

namespace cilm {

Population::Population(std::vector<Point> points) : points_(std::move(points)) {
  std::vector<std::size_t> order(points_.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (!std::isfinite(points_[i].x) || !std::isfinite(points_[i].y)) {
      throw ValidationError("non-finite coordinate for id " + std::to_string(i));
    }
    order[i] = i;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Point& p = points_[a];
    const Point& q = points_[b];
    return p.x != q.x ? p.x < q.x : p.y < q.y;
  });
  for (std::size_t k = 1; k < order.size(); ++k) {
    const Point& p = points_[order[k - 1]];
    const Point& q = points_[order[k]];
    if (p.x == q.x && p.y == q.y) {
      throw ValidationError("coincident coordinates for ids " + std::to_string(order[k - 1]) + " and " +
                            std::to_string(order[k]));
    }
  }
}

EpidemicRecord::EpidemicRecord(std::vector<std::optional<Day>> infection,
                               std::vector<std::optional<Day>> removal, Day t_max, Day observe_from)
    : infection_(std::move(infection)),
      removal_(std::move(removal)),
      t_max_(t_max),
      observe_from_(observe_from) {
  if (infection_.size() != removal_.size()) {
    throw ValidationError("infection and removal vectors differ in length");
  }
  if (t_max_ < 0) throw ValidationError("t_max must be non-negative");
  if (observe_from_ < 0 || observe_from_ > t_max_) {
    throw ValidationError("observe_from must lie in [0, t_max]");
  }
  for (std::size_t i = 0; i < infection_.size(); ++i) {
    const auto& inf = infection_[i];
    const auto& rem = removal_[i];
    const std::string id = std::to_string(i);
    if (rem && !inf) throw ValidationError("id " + id + ": removal without infection");
    if (inf && (*inf < 0 || *inf > t_max_)) {
      throw ValidationError("id " + id + ": infection time outside [0, t_max]");
    }
    if (rem && *rem > t_max_) throw ValidationError("id " + id + ": removal time after t_max");
    if (inf && rem && *rem <= *inf) {
      throw ValidationError("id " + id + ": removal time not after infection time");
    }
  }
}

std::optional<Day> EpidemicRecord::first_infection() const {
  std::optional<Day> first;
  for (const auto& inf : infection_) {
    if (inf && (!first || *inf < *first)) first = inf;
  }
  return first;
}

std::size_t EpidemicRecord::infected_count() const {
  return static_cast<std::size_t>(
      std::count_if(infection_.begin(), infection_.end(), [](const auto& v) { return v.has_value(); }));
}

EpidemicRecord EpidemicRecord::truncated(Day t_end) const {
  t_end = std::clamp(t_end, observe_from_, t_max_);
  std::vector<std::optional<Day>> inf(infection_.size());
  std::vector<std::optional<Day>> rem(removal_.size());
  for (std::size_t i = 0; i < infection_.size(); ++i) {
    if (infection_[i] && *infection_[i] <= t_end) {
      inf[i] = infection_[i];
      if (removal_[i] && *removal_[i] <= t_end) rem[i] = removal_[i];
    }
  }
  return EpidemicRecord(std::move(inf), std::move(rem), t_end, observe_from_);
}

CompartmentTimeline::CompartmentTimeline(const EpidemicRecord& record, const TimelineOptions& options)
    : onset_(record.size()),
      i_entry_(record.size()),
      r_entry_(record.size()),
      t_max_(record.t_max()),
      frame_(options.frame) {
  if (options.frame == Frame::SEIR && options.latent_period < 1) {
    throw ValidationError("SEIR timeline requires latent_period >= 1");
  }
  if (options.infectious_period && *options.infectious_period < 1) {
    throw ValidationError("infectious_period must be >= 1");
  }
  for (std::size_t i = 0; i < record.size(); ++i) {
    const auto& inf = record.infection(i);
    if (!inf) continue;
    onset_[i] = inf;
    if (options.frame == Frame::SIR) {
      i_entry_[i] = inf;
      r_entry_[i] = record.removal(i);
      continue;
    }
    const Day infectious_day = *inf + options.latent_period;
    std::optional<Day> removed = record.removal(i);
    if (options.infectious_period) {
      const Day natural = infectious_day + *options.infectious_period;
      removed = removed ? std::min(*removed, natural) : natural;
    }
    // Culled while still exposed: never becomes infectious.
    if (!removed || *removed > infectious_day) i_entry_[i] = infectious_day;
    r_entry_[i] = removed;
  }
}

Compartment CompartmentTimeline::state(std::size_t id, Day t) const {
  const auto& on = onset_[id];
  if (!on || t < *on) return Compartment::S;
  const auto& rem = r_entry_[id];
  if (rem && t >= *rem) return Compartment::R;
  const auto& inf = i_entry_[id];
  if (inf && t >= *inf) return Compartment::I;
  return Compartment::E;
}

std::vector<int> CompartmentTimeline::members(Compartment c, Day t) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < onset_.size(); ++i) {
    if (state(i, t) == c) out.push_back(static_cast<int>(i));
  }
  return out;
}

CompartmentTimeline build_timeline(const EpidemicRecord& record, const TimelineOptions& options) {
  return CompartmentTimeline(record, options);
}

std::vector<int> incidence_curve(const CompartmentTimeline& timeline) {
  std::vector<int> curve(static_cast<std::size_t>(std::max(timeline.t_max(), 0)), 0);
  for (std::size_t i = 0; i < timeline.size(); ++i) {
    const auto entry = timeline.infectious_from(i);
    if (entry && *entry >= 1 && *entry <= timeline.t_max()) ++curve[static_cast<std::size_t>(*entry - 1)];
  }
  return curve;
}

DistanceMatrix::DistanceMatrix(std::size_t n, std::vector<double> values) : n_(n), values_(std::move(values)) {
  if (values_.size() != n_ * n_) throw ValidationError("distance matrix size mismatch");
}

DistanceMatrix pairwise_distances(const Population& pop) {
  const std::size_t n = pop.size();
  std::vector<double> xs(n);
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = pop[i].x;
    ys[i] = pop[i].y;
  }
  std::vector<double> values(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> row(values.data() + i * n, n);
    simd::distance_row(xs[i], ys[i], xs, ys, row);
    row[i] = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && !(row[j] > 0.0)) {
        throw ValidationError("coincident coordinates for ids " + std::to_string(i) + " and " +
                              std::to_string(j));
      }
    }
  }
  return DistanceMatrix(n, std::move(values));
}

}  // namespace cilm
