#include "cilm/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cilm/errors.hpp"

namespace cilm::io {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw ValidationError(source + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& s, const std::string& source, std::size_t line) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) fail(source, line, "not a number: '" + s + "'");
  return v;
}

long parse_long(const std::string& s, const std::string& source, std::size_t line) {
  long v = 0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) fail(source, line, "not an integer: '" + s + "'");
  return v;
}

std::optional<Day> parse_day(const std::string& s, const std::string& source, std::size_t line) {
  if (s.empty()) return std::nullopt;
  return static_cast<Day>(parse_long(s, source, line));
}

void expect_sequential_id(const std::string& field, std::size_t expected, const std::string& source,
                          std::size_t line) {
  if (parse_long(field, source, line) != static_cast<long>(expected)) {
    fail(source, line, "ids must be 0..N-1 in order, expected " + std::to_string(expected));
  }
}

}  // namespace

std::vector<std::vector<std::string>> read_csv(std::istream& in, const std::vector<std::string>& expected_header,
                                               const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::vector<std::string>> rows;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    auto fields = split(line);
    for (auto& f : fields) f = trim(f);
    if (header) {
      if (fields != expected_header) {
        std::string want;
        for (const auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
        fail(source, lineno, "expected header '" + want + "'");
      }
      header = false;
      continue;
    }
    if (fields.size() != expected_header.size()) {
      fail(source, lineno, "expected " + std::to_string(expected_header.size()) + " fields");
    }
    rows.push_back(std::move(fields));
  }
  if (header) fail(source, lineno, "missing header");
  return rows;
}

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw ValidationError("cannot format number");
  return std::string(buf, p);
}

void write_population(std::ostream& out, const Population& pop) {
  out << "id,x,y\n";
  for (std::size_t i = 0; i < pop.size(); ++i) {
    out << i << ',' << format_double(pop[i].x) << ',' << format_double(pop[i].y) << '\n';
  }
}

Population read_population(std::istream& in, const std::string& source) {
  const auto rows = read_csv(in, {"id", "x", "y"}, source);
  std::vector<Point> pts;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    expect_sequential_id(rows[r][0], r, source, r + 2);
    pts.push_back({parse_double(rows[r][1], source, r + 2), parse_double(rows[r][2], source, r + 2)});
  }
  return Population(std::move(pts));
}

void write_events(std::ostream& out, const EpidemicRecord& record) {
  out << "id,infection_time,removal_time\n";
  for (std::size_t i = 0; i < record.size(); ++i) {
    out << i << ',';
    if (record.infection(i)) out << *record.infection(i);
    out << ',';
    if (record.removal(i)) out << *record.removal(i);
    out << '\n';
  }
}

EpidemicRecord read_events(std::istream& in, Day t_max, const std::string& source) {
  const auto rows = read_csv(in, {"id", "infection_time", "removal_time"}, source);
  std::vector<std::optional<Day>> inf;
  std::vector<std::optional<Day>> rem;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    expect_sequential_id(rows[r][0], r, source, r + 2);
    inf.push_back(parse_day(rows[r][1], source, r + 2));
    rem.push_back(parse_day(rows[r][2], source, r + 2));
  }
  return EpidemicRecord(std::move(inf), std::move(rem), t_max);
}

void write_assignment(std::ostream& out, const ClusterAssignment& a) {
  out << "id,cluster\n";
  for (std::size_t i = 0; i < a.membership.size(); ++i) out << i << ',' << a.membership[i] << '\n';
}

void write_centroids(std::ostream& out, const ClusterAssignment& a) {
  out << "cluster,x,y\n";
  for (std::size_t k = 0; k < a.centroids.size(); ++k) {
    out << k << ',' << format_double(a.centroids[k].x) << ',' << format_double(a.centroids[k].y) << '\n';
  }
}

ClusterAssignment read_assignment(std::istream& in, const Population& pop, std::istream* centroids,
                                  const std::string& source) {
  const auto rows = read_csv(in, {"id", "cluster"}, source);
  if (rows.size() != pop.size()) throw ValidationError(source + ": assignment does not cover the population");
  std::vector<int> labels;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    expect_sequential_id(rows[r][0], r, source, r + 2);
    const long c = parse_long(rows[r][1], source, r + 2);
    if (c < 0) fail(source, r + 2, "negative cluster label");
    labels.push_back(static_cast<int>(c));
  }
  ClusterAssignment a = ClusterAssignment::from_labels(pop, std::move(labels));
  if (centroids != nullptr) {
    const auto crows = read_csv(*centroids, {"cluster", "x", "y"}, source + " centroids");
    if (crows.size() != static_cast<std::size_t>(a.K)) {
      throw ValidationError(source + ": centroid count does not match cluster count");
    }
    for (std::size_t r = 0; r < crows.size(); ++r) {
      expect_sequential_id(crows[r][0], r, source + " centroids", r + 2);
      a.centroids[r] = {parse_double(crows[r][1], source, r + 2), parse_double(crows[r][2], source, r + 2)};
    }
  }
  a.validate(pop.size());
  return a;
}

void write_trace(std::ostream& out, const McmcTrace& trace) {
  out << "iter";
  for (const auto& n : trace.names) out << ',' << n;
  out << ",log_post\n";
  for (std::size_t it = 0; it < trace.draws.size(); ++it) {
    out << it;
    for (double v : trace.draws[it]) out << ',' << format_double(v);
    out << ',' << format_double(trace.log_post[it]) << '\n';
  }
}

McmcTrace read_trace(std::istream& in, int burn_in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(source + ": empty trace");
  auto header = split(trim(line));
  for (auto& h : header) h = trim(h);
  if (header.size() < 4 || header.front() != "iter" || header.back() != "log_post") {
    throw ValidationError(source + ":1: trace header must be iter,<parameters>,log_post");
  }
  static const std::vector<std::string> order{"alpha", "beta", "beta_tilde", "epsilon", "delta"};
  McmcTrace t;
  t.names.assign(header.begin() + 1, header.end() - 1);
  std::size_t pos = 0;
  for (const auto& n : t.names) {
    while (pos < order.size() && order[pos] != n) ++pos;
    if (pos == order.size()) throw ValidationError(source + ":1: unknown or misordered column '" + n + "'");
  }
  in.clear();
  in.seekg(0);
  const auto rows = read_csv(in, header, source);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (parse_long(rows[r][0], source, r + 2) != static_cast<long>(r)) fail(source, r + 2, "iterations out of order");
    std::vector<double> d;
    for (std::size_t c = 1; c + 1 < rows[r].size(); ++c) d.push_back(parse_double(rows[r][c], source, r + 2));
    t.draws.push_back(std::move(d));
    t.log_post.push_back(parse_double(rows[r].back(), source, r + 2));
  }
  if (burn_in < 0 || static_cast<std::size_t>(burn_in) >= t.draws.size()) {
    throw ValidationError(source + ": burn-in leaves no draws");
  }
  t.burn_in = burn_in;
  return t;
}

void write_report(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "model,waic,lppd,p_waic,units,draws\n";
  for (const auto& r : rows) {
    out << r.model << ',' << format_double(r.result.waic) << ',' << format_double(r.result.lppd) << ','
        << format_double(r.result.p_waic) << ',' << r.units << ',' << r.draws << '\n';
  }
}

void write_curves(std::ostream& out, const CurveEnsemble& e) {
  out << "t,lower,median,upper\n";
  for (std::size_t k = 0; k < e.days(); ++k) {
    out << static_cast<std::size_t>(e.from) + k << ',' << format_double(e.lower[k]) << ','
        << format_double(e.median[k]) << ',' << format_double(e.upper[k]) << '\n';
  }
}

FmdData read_fmd(std::istream& in, const FmdWindow& window, const std::string& source) {
  if (window.start < 0 || window.end <= window.start) {
    throw ValidationError("FMD window must satisfy 0 <= start < end");
  }
  const auto rows = read_csv(in, {"id", "x", "y", "infection_day", "removal_day"}, source);
  FmdData out;
  std::vector<Point> pts;
  std::vector<std::optional<Day>> inf;
  std::vector<std::optional<Day>> rem;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t line = r + 2;
    const long id = parse_long(rows[r][0], source, line);
    const Point p{parse_double(rows[r][1], source, line), parse_double(rows[r][2], source, line)};
    auto i = parse_day(rows[r][3], source, line);
    auto d = parse_day(rows[r][4], source, line);
    if (i && d && *d <= *i) fail(source, line, "farm " + std::to_string(id) + ": removal not after infection");
    if (d && *d < window.start) continue;
    if (!i) d.reset();
    if (i && *i > window.end) {
      i.reset();
      d.reset();
    }
    if (d && *d > window.end) d.reset();
    out.source_ids.push_back(id);
    pts.push_back(p);
    inf.push_back(i);
    rem.push_back(d);
  }
  out.population = Population(std::move(pts));
  for (auto& v : inf) {
    if (v && *v < 0) throw ValidationError(source + ": negative infection day");
  }
  out.record = EpidemicRecord(std::move(inf), std::move(rem), window.end, window.start);
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open '" + path.string() + "' for reading");
  return f;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open '" + path.string() + "' for writing");
  return f;
}

}  // namespace cilm::io
