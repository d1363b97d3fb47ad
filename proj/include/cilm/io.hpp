#pragma once

// CSV persistence for populations, event records, cluster assignments,
// traces, assessment reports and curve ensembles.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cilm/assessment.hpp"
#include "cilm/core.hpp"
#include "cilm/ilm.hpp"
#include "cilm/inference.hpp"

namespace cilm::io {

namespace fs = std::filesystem;

// Rows of comma-separated fields; the header row is checked against
// `expected_header` and dropped. Throws ValidationError with the line number.
std::vector<std::vector<std::string>> read_csv(std::istream& in, const std::vector<std::string>& expected_header,
                                               const std::string& source);

// Shortest round-trip decimal representation.
std::string format_double(double v);

// id,x,y with ids 0..N-1 in order.
void write_population(std::ostream& out, const Population& pop);
Population read_population(std::istream& in, const std::string& source = "population");

// id,infection_time,removal_time; absent events are empty fields.
void write_events(std::ostream& out, const EpidemicRecord& record);
EpidemicRecord read_events(std::istream& in, Day t_max, const std::string& source = "events");

// id,cluster and cluster,x,y.
void write_assignment(std::ostream& out, const ClusterAssignment& a);
void write_centroids(std::ostream& out, const ClusterAssignment& a);
// Centroids are member means unless a centroid stream is given.
ClusterAssignment read_assignment(std::istream& in, const Population& pop, std::istream* centroids = nullptr,
                                  const std::string& source = "assignment");

// iter,<parameter columns>,log_post
void write_trace(std::ostream& out, const McmcTrace& trace);
McmcTrace read_trace(std::istream& in, int burn_in, const std::string& source = "trace");

struct ReportRow {
  std::string model;
  WaicResult result;
  std::size_t units = 0;
  std::size_t draws = 0;
};
// model,waic,lppd,p_waic,units,draws
void write_report(std::ostream& out, const std::vector<ReportRow>& rows);

// t,lower,median,upper
void write_curves(std::ostream& out, const CurveEnsemble& ensemble);

struct FmdWindow {
  Day start = 0;
  Day end = 0;
};

struct FmdData {
  Population population;
  EpidemicRecord record;
  std::vector<long> source_ids;  // original id per retained row
};

// id,x,y,infection_day,removal_day. Farms removed before the window start are
// dropped; events after the window end are treated as unobserved; the record
// uses absolute days with t_max = end and observe_from = start. Farms culled
// without a recorded infection stay susceptible.
FmdData read_fmd(std::istream& in, const FmdWindow& window, const std::string& source = "fmd");

// File helpers; throw ValidationError when the file cannot be opened.
std::ifstream open_in(const fs::path& path);
std::ofstream open_out(const fs::path& path);

}  // namespace cilm::io
