#pragma once

// Shared domain types: population roster, event record, compartment timeline
// and the precomputed distance matrix.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace cilm {

using Day = int;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Immutable roster; individual ids are the indices 0..N-1.
class Population {
 public:
  Population() = default;
  // Throws ValidationError if two individuals share coordinates or a
  // coordinate is not finite.
  explicit Population(std::vector<Point> points);

  std::size_t size() const { return points_.size(); }
  const Point& operator[](std::size_t id) const { return points_[id]; }
  std::span<const Point> points() const { return points_; }

 private:
  std::vector<Point> points_;
};

enum class Frame { SIR, SEIR };

// Per-individual event days. `infection` is the day of I-entry (SIR) or
// E-entry (SEIR); absent means never infected within the record.
class EpidemicRecord {
 public:
  EpidemicRecord() = default;
  // Throws ValidationError naming the first offending id.
  EpidemicRecord(std::vector<std::optional<Day>> infection,
                 std::vector<std::optional<Day>> removal, Day t_max, Day observe_from = 0);

  std::size_t size() const { return infection_.size(); }
  Day t_max() const { return t_max_; }
  // Transitions before this day are not modelled; onsets at or before it are
  // conditioned on.
  Day observe_from() const { return observe_from_; }

  const std::optional<Day>& infection(std::size_t id) const { return infection_[id]; }
  const std::optional<Day>& removal(std::size_t id) const { return removal_[id]; }
  std::span<const std::optional<Day>> infections() const { return infection_; }
  std::span<const std::optional<Day>> removals() const { return removal_; }

  // Earliest recorded infection day, if any individual was infected.
  std::optional<Day> first_infection() const;
  std::size_t infected_count() const;

  // Record as it would be observed at day `t_end`: later events are dropped.
  EpidemicRecord truncated(Day t_end) const;

 private:
  std::vector<std::optional<Day>> infection_;
  std::vector<std::optional<Day>> removal_;
  Day t_max_ = 0;
  Day observe_from_ = 0;
};

enum class Compartment { S, E, I, R };

struct TimelineOptions {
  Frame frame = Frame::SIR;
  // SEIR only: days spent in E before becoming infectious (>= 1).
  int latent_period = 0;
  // SEIR only: if set, R-entry is min(I-entry + period, recorded removal).
  std::optional<int> infectious_period;
};

// Compartment membership over 0..t_max, stored as per-individual entry days.
class CompartmentTimeline {
 public:
  CompartmentTimeline(const EpidemicRecord& record, const TimelineOptions& options);

  std::size_t size() const { return onset_.size(); }
  Day t_max() const { return t_max_; }
  Frame frame() const { return frame_; }

  Compartment state(std::size_t id, Day t) const;
  bool infectious(std::size_t id, Day t) const { return state(id, t) == Compartment::I; }
  bool susceptible(std::size_t id, Day t) const { return state(id, t) == Compartment::S; }

  // Day the individual leaves S (E-entry for SEIR, I-entry for SIR).
  std::optional<Day> onset(std::size_t id) const { return onset_[id]; }
  std::optional<Day> infectious_from(std::size_t id) const { return i_entry_[id]; }
  std::optional<Day> removed_from(std::size_t id) const { return r_entry_[id]; }

  // Sorted ids in each compartment at day t.
  std::vector<int> members(Compartment c, Day t) const;
  std::vector<int> S(Day t) const { return members(Compartment::S, t); }
  std::vector<int> E(Day t) const { return members(Compartment::E, t); }
  std::vector<int> I(Day t) const { return members(Compartment::I, t); }
  std::vector<int> R(Day t) const { return members(Compartment::R, t); }

 private:
  std::vector<std::optional<Day>> onset_;
  std::vector<std::optional<Day>> i_entry_;
  std::vector<std::optional<Day>> r_entry_;
  Day t_max_ = 0;
  Frame frame_ = Frame::SIR;
};

CompartmentTimeline build_timeline(const EpidemicRecord& record, const TimelineOptions& options = {});

// curve[k] = |I(k+1) \ I(k)| for k = 0..t_max-1.
std::vector<int> incidence_curve(const CompartmentTimeline& timeline);

// Symmetric matrix of Euclidean distances, row-major.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::size_t n, std::vector<double> values);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * n_, n_);
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

// Throws ValidationError on coincident points.
DistanceMatrix pairwise_distances(const Population& pop);

}  // namespace cilm
