#include "cilm/app.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <omp.h>

#include "cilm/assessment.hpp"
#include "cilm/clustering.hpp"
#include "cilm/errors.hpp"
#include "cilm/inference.hpp"
#include "cilm/io.hpp"
#include "cilm/random.hpp"
#include "cilm/simd/kernels.hpp"
#include "cilm/simulator.hpp"
#include "json.hpp"

namespace cilm::app {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum CommandCode : std::uint64_t { kSimulate = 1, kCluster, kFit, kAssess, kForecast, kBench, kStudy };

// ---------------------------------------------------------------------------
// Config access with unknown-key rejection.

class Section {
 public:
  Section(const json& j, std::string path, std::vector<std::string> allowed, fs::path base = {})
      : j_(j), path_(std::move(path)), base_(std::move(base)) {
    if (!j_.is_object()) throw ValidationError("config: '" + path_ + "' must be an object");
    for (const auto& [key, value] : j_.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        throw ValidationError("config: unknown key '" + where(key) + "'");
      }
    }
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  template <class T>
  T get(const std::string& key, T fallback) const {
    return has(key) ? as<T>(key) : fallback;
  }

  template <class T>
  std::optional<T> opt(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return as<T>(key);
  }

  // Relative paths resolve against the config file's directory.
  std::optional<fs::path> path(const std::string& key) const {
    const auto v = opt<std::string>(key);
    if (!v) return std::nullopt;
    const fs::path p(*v);
    return p.is_relative() && !base_.empty() ? base_ / p : p;
  }

  const fs::path& base() const { return base_; }
  const json& raw(const std::string& key) const { return j_.at(key); }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  Section sub(const std::string& key, std::vector<std::string> allowed) const {
    static const json empty = json::object();
    return Section(has(key) ? j_.at(key) : empty, where(key), std::move(allowed), base_);
  }

 private:
  template <class T>
  T as(const std::string& key) const {
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError("config: '" + where(key) + "' has the wrong type");
    }
  }

  const json& j_;
  std::string path_;
  fs::path base_;
};

json load_config(const fs::path& path) {
  if (path.empty()) return json::object();
  auto in = io::open_in(path);
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw ValidationError("config: top level must be an object");
    return j;
  } catch (const json::parse_error& e) {
    throw ValidationError("config: " + path.string() + ": " + e.what());
  }
}

const std::vector<std::string> kTopKeys{"data", "model", "models", "mcmc", "priors", "clustering",
                                        "simulate", "ppd", "bench", "study"};

Section top_section(const json& j, const fs::path& config) {
  return Section(j, "", kTopKeys, config.empty() ? fs::path{} : config.parent_path());
}

// ---------------------------------------------------------------------------
// Typed config pieces.

struct FmdCfg {
  fs::path path;
  Day start = 0;
  Day end = 0;
};

struct DataCfg {
  std::optional<fs::path> population;
  std::optional<fs::path> events;
  Day t_max = 31;
  std::optional<fs::path> assignment;
  std::optional<fs::path> centroids;
  std::optional<FmdCfg> fmd;
};

DataCfg parse_data(const Section& top) {
  const Section s = top.sub("data", {"population", "events", "t_max", "assignment", "centroids", "fmd"});
  DataCfg d;
  d.population = s.path("population");
  d.events = s.path("events");
  d.t_max = s.get<int>("t_max", 31);
  d.assignment = s.path("assignment");
  d.centroids = s.path("centroids");
  if (s.has("fmd")) {
    const Section f = s.sub("fmd", {"path", "start", "end"});
    if (!f.has("path") || !f.has("start") || !f.has("end")) {
      throw ValidationError("config: data.fmd needs path, start and end");
    }
    d.fmd = FmdCfg{*f.path("path"), f.get<int>("start", 0), f.get<int>("end", 0)};
    if (d.population || d.events) throw ValidationError("config: data.fmd excludes data.population/events");
  }
  if (d.t_max < 1) throw ValidationError("config: data.t_max must be >= 1");
  return d;
}

struct ModelCfg {
  std::string name;
  ModelSpec spec;
  int period = 3;  // infectious period used for forward simulation
  std::optional<fs::path> assignment;
  std::optional<fs::path> centroids;
  std::optional<fs::path> trace;
};

const std::vector<std::string> kModelKeys{"name",          "frame",      "spark",     "composite", "latent_period",
                                          "infectious_period", "assignment", "centroids", "trace"};

ModelCfg parse_model(const Section& s, bool fmd) {
  ModelCfg m;
  const std::string frame = s.get<std::string>("frame", fmd ? "seir" : "sir");
  if (frame == "sir") m.spec.frame = Frame::SIR;
  else if (frame == "seir") m.spec.frame = Frame::SEIR;
  else throw ValidationError("config: '" + s.where("frame") + "' must be sir or seir");
  try {
    m.spec.spark = parse_spark(s.get<std::string>("spark", "zero"));
  } catch (const std::exception& e) {
    throw ValidationError("config: '" + s.where("spark") + "': " + e.what());
  }
  m.spec.composite = s.get<bool>("composite", spark_needs_clusters(m.spec.spark));
  const bool seir = m.spec.frame == Frame::SEIR;
  m.spec.latent_period = s.get<int>("latent_period", seir ? 5 : 0);
  m.period = s.get<int>("infectious_period", seir ? 4 : 3);
  if (m.period < 1) throw ValidationError("config: '" + s.where("infectious_period") + "' must be >= 1");
  if (seir) m.spec.infectious_period = m.period;
  if (!seir && m.spec.latent_period != 0) throw ValidationError("config: latent_period needs frame seir");
  m.spec.validate();
  m.assignment = s.path("assignment");
  m.centroids = s.path("centroids");
  m.trace = s.path("trace");
  std::string fallback = m.spec.composite ? "cilm_" : "silm";
  if (m.spec.composite) fallback += spark_name(m.spec.spark);
  else if (m.spec.spark != SparkKind::Zero) fallback += "_" + std::string(spark_name(m.spec.spark));
  m.name = s.get<std::string>("name", fallback);
  if (m.name.empty() || m.name.find_first_of(",\n/") != std::string::npos) {
    throw ValidationError("config: model name '" + m.name + "' is not usable in file names");
  }
  return m;
}

ModelCfg parse_single_model(const Section& top, bool fmd) {
  return parse_model(top.sub("model", kModelKeys), fmd);
}

std::vector<ModelCfg> parse_model_list(const Section& top, const std::string& key, bool fmd,
                                       std::vector<ModelCfg> fallback) {
  if (!top.has(key)) return fallback;
  const json& arr = top.raw(key);
  if (!arr.is_array() || arr.empty()) throw ValidationError("config: '" + top.where(key) + "' must be a non-empty list");
  std::vector<ModelCfg> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(parse_model(Section(arr[i], top.where(key) + "[" + std::to_string(i) + "]", kModelKeys, top.base()), fmd));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (out[i].name == out[j].name) throw ValidationError("config: duplicate model name '" + out[i].name + "'");
    }
  }
  return out;
}

McmcConfig parse_mcmc(const Section& top) {
  const Section s = top.sub("mcmc", {"iterations", "burn_in"});
  McmcConfig c;
  c.iterations = s.get<int>("iterations", 2000);
  c.burn_in = s.get<int>("burn_in", -1);
  if (c.iterations < 8) throw ValidationError("config: mcmc.iterations must be >= 8");
  if (c.resolved_burn_in() < 0 || c.iterations - c.resolved_burn_in() < 4) {
    throw ValidationError("config: mcmc.burn_in must leave at least 4 draws");
  }
  return c;
}

PriorSpec parse_priors(const Section& top) {
  const Section s = top.sub("priors", {"alpha", "beta", "beta_tilde", "epsilon", "delta"});
  PriorSpec p;
  auto gamma = [&](const char* key, GammaPrior& g) {
    const Section gs = s.sub(key, {"shape", "rate"});
    g.shape = gs.get<double>("shape", g.shape);
    g.rate = gs.get<double>("rate", g.rate);
  };
  gamma("alpha", p.alpha);
  gamma("beta", p.beta);
  gamma("beta_tilde", p.beta_tilde);
  gamma("epsilon", p.epsilon);
  const Section ds = s.sub("delta", {"mean", "sd"});
  p.delta.mean = ds.get<double>("mean", p.delta.mean);
  p.delta.sd = ds.get<double>("sd", p.delta.sd);
  p.validate();
  return p;
}

struct ClusterCfg {
  std::string method = "kmeans";
  int K = 3;
  bool temporal = true;
  DpmmConfig dpmm;
};

ClusterCfg parse_clustering(const Section& top) {
  const Section s = top.sub("clustering", {"method", "k", "temporal", "iterations", "burn_in", "components"});
  ClusterCfg c;
  c.method = s.get<std::string>("method", "kmeans");
  if (c.method != "kmeans" && c.method != "dpmm") throw ValidationError("config: clustering.method must be kmeans or dpmm");
  c.K = s.get<int>("k", 3);
  c.temporal = s.get<bool>("temporal", true);
  c.dpmm.iterations = s.get<int>("iterations", 2000);
  c.dpmm.burn_in = s.get<int>("burn_in", c.dpmm.iterations / 2);
  c.dpmm.components = s.get<int>("components", 30);
  c.dpmm.temporal = c.temporal;
  if (c.K < 1) throw ValidationError("config: clustering.k must be >= 1");
  if (c.dpmm.components < 2) throw ValidationError("config: clustering.components must be >= 2");
  if (c.dpmm.iterations < 1 || c.dpmm.burn_in < 0 || c.dpmm.burn_in >= c.dpmm.iterations) {
    throw ValidationError("config: clustering.burn_in must lie in [0, iterations)");
  }
  return c;
}

SpatialScenario parse_scenario(const std::string& name) {
  for (const auto& s : study_scenarios()) {
    if (s.name() == name) return s;
  }
  throw ValidationError("config: unknown scenario '" + name + "' (csr, lowvar_k3/5/8, highvar_k3/5/8)");
}

struct SimulateCfg {
  std::vector<SpatialScenario> scenarios = study_scenarios();
  int replicates = 10;
  int n = 100;
  Day t_max = 31;
  int period = 3;
  int initial_count = 1;
  ModelParams params{0.8, 2.0, {}, {}, {}};
};

SimulateCfg parse_simulate(const Section& s) {
  SimulateCfg c;
  if (s.has("scenarios")) {
    c.scenarios.clear();
    const auto names = s.get<std::vector<std::string>>("scenarios", {});
    if (names.empty()) throw ValidationError("config: '" + s.where("scenarios") + "' must not be empty");
    for (const auto& n : names) c.scenarios.push_back(parse_scenario(n));
  }
  c.replicates = s.get<int>("replicates", 10);
  c.n = s.get<int>("n", 100);
  c.t_max = s.get<int>("t_max", 31);
  c.period = s.get<int>("infectious_period", 3);
  c.initial_count = s.get<int>("initial_count", 1);
  c.params.alpha = s.get<double>("alpha", 0.8);
  c.params.beta = s.get<double>("beta", 2.0);
  if (c.replicates < 1) throw ValidationError("config: replicates must be >= 1");
  if (c.n < 1) throw ValidationError("config: n must be >= 1");
  if (c.t_max < 1) throw ValidationError("config: t_max must be >= 1");
  if (c.period < 1) throw ValidationError("config: infectious_period must be >= 1");
  if (c.initial_count < 1 || c.initial_count > c.n) throw ValidationError("config: initial_count must lie in [1, n]");
  if (!(c.params.alpha >= 0.0) || !(c.params.beta > 0.0)) throw ValidationError("config: need alpha >= 0, beta > 0");
  return c;
}

const std::vector<std::string> kSimulateKeys{"scenarios", "replicates", "n",     "t_max",
                                             "infectious_period", "initial_count", "alpha", "beta"};

struct PpdCfg {
  std::string mode = "forecast";
  int n_sims = 100;
  Day from_t = 5;
};

PpdCfg parse_ppd(const Section& top) {
  const Section s = top.sub("ppd", {"mode", "n_sims", "from_t"});
  PpdCfg c;
  c.mode = s.get<std::string>("mode", "forecast");
  c.n_sims = s.get<int>("n_sims", 100);
  c.from_t = s.get<int>("from_t", 5);
  if (c.mode != "forecast" && c.mode != "complete") throw ValidationError("config: ppd.mode must be forecast or complete");
  if (c.n_sims < 20) throw ValidationError("config: ppd.n_sims must be >= 20");
  if (c.from_t < 0) throw ValidationError("config: ppd.from_t must be >= 0");
  return c;
}

// ---------------------------------------------------------------------------
// Data loading.

struct Dataset {
  Population pop;
  EpidemicRecord record;
};

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw ValidationError(what + " file '" + p.string() + "' does not exist");
}

void check_inputs(const DataCfg& d, bool need_events) {
  if (d.fmd) {
    require_file(d.fmd->path, "FMD data");
    return;
  }
  if (!d.population) throw ValidationError("config: data.population is required");
  require_file(*d.population, "population");
  if (need_events) {
    if (!d.events) throw ValidationError("config: data.events is required");
    require_file(*d.events, "events");
  } else if (d.events) {
    require_file(*d.events, "events");
  }
  if (d.assignment) require_file(*d.assignment, "assignment");
  if (d.centroids) require_file(*d.centroids, "centroids");
}

void check_model_inputs(const ModelCfg& m, const DataCfg& d) {
  if (m.assignment) require_file(*m.assignment, "assignment");
  if (m.centroids) require_file(*m.centroids, "centroids");
  if (m.trace) require_file(*m.trace, "trace");
  if (m.spec.composite && !m.assignment && !d.assignment) {
    throw UsageError("model '" + m.name + "' is composite but no cluster assignment was given");
  }
}

Dataset load_dataset(const DataCfg& d) {
  if (d.fmd) {
    auto in = io::open_in(d.fmd->path);
    auto fmd = io::read_fmd(in, {d.fmd->start, d.fmd->end}, d.fmd->path.string());
    return {std::move(fmd.population), std::move(fmd.record)};
  }
  auto pin = io::open_in(*d.population);
  Population pop = io::read_population(pin, d.population->string());
  EpidemicRecord rec;
  if (d.events) {
    auto ein = io::open_in(*d.events);
    rec = io::read_events(ein, d.t_max, d.events->string());
  } else {
    rec = EpidemicRecord(std::vector<std::optional<Day>>(pop.size()), std::vector<std::optional<Day>>(pop.size()),
                         d.t_max);
  }
  if (rec.size() != pop.size()) throw ValidationError("events and population differ in length");
  return {std::move(pop), std::move(rec)};
}

std::optional<ClusterAssignment> load_assignment(const ModelCfg& m, const DataCfg& d, const Population& pop) {
  if (!m.spec.composite) return std::nullopt;
  const auto path = m.assignment ? m.assignment : d.assignment;
  const auto cpath = m.assignment ? m.centroids : d.centroids;
  auto in = io::open_in(*path);
  if (cpath) {
    auto cin = io::open_in(*cpath);
    return io::read_assignment(in, pop, &cin, path->string());
  }
  return io::read_assignment(in, pop, nullptr, path->string());
}

// ---------------------------------------------------------------------------
// Output helpers.

class Writer {
 public:
  explicit Writer(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec || !fs::is_directory(root_)) throw ValidationError("cannot create output directory '" + root_.string() + "'");
  }

  template <class F>
  void write(const fs::path& rel, F&& body) {
    if (rel.has_parent_path()) fs::create_directories(root_ / rel.parent_path());
    auto out = io::open_out(root_ / rel);
    body(out);
    out.flush();
    if (!out) throw ValidationError("failed writing '" + (root_ / rel).string() + "'");
    written_.push_back(rel);
  }

  std::vector<fs::path> files() const { return written_; }

 private:
  fs::path root_;
  std::vector<fs::path> written_;
};

json model_json(const ModelCfg& m) {
  json j;
  j["name"] = m.name;
  j["frame"] = m.spec.frame == Frame::SIR ? "sir" : "seir";
  j["spark"] = std::string(spark_name(m.spec.spark));
  j["composite"] = m.spec.composite;
  j["latent_period"] = m.spec.latent_period;
  j["infectious_period"] = m.period;
  return j;
}

json priors_json(const PriorSpec& p) {
  auto g = [](const GammaPrior& x) { return json{{"family", "gamma"}, {"shape", x.shape}, {"rate", x.rate}}; };
  return json{{"alpha", g(p.alpha)},
              {"beta", g(p.beta)},
              {"beta_tilde", g(p.beta_tilde)},
              {"epsilon", g(p.epsilon)},
              {"delta", {{"family", "normal"}, {"mean", p.delta.mean}, {"sd", p.delta.sd}}}};
}

json run_metadata(const std::string& command, const Options& opts, const json& config) {
  return json{{"command", command},
              {"seed", opts.seed},
              {"config", config},
              {"simd_backend", std::string(simd::backend_name(simd::active_backend()))}};
}

void write_metadata(Writer& w, json meta) {
  w.write("run.json", [&](std::ostream& out) { out << meta.dump(2) << '\n'; });
}

void write_diagnostics(std::ostream& out, const McmcTrace& trace) {
  out << "parameter,acceptance,rhat,flagged,median,hpdi_lower,hpdi_upper\n";
  for (const auto& d : diagnostics(trace)) {
    auto s = trace.samples(d.name);
    std::sort(s.begin(), s.end());
    const double med = s.size() % 2 ? s[s.size() / 2] : 0.5 * (s[s.size() / 2 - 1] + s[s.size() / 2]);
    out << d.name << ',' << io::format_double(d.acceptance) << ',' << io::format_double(d.rhat) << ','
        << (d.flagged ? 1 : 0) << ',' << io::format_double(med);
    if (s.size() >= 20) {
      const Interval iv = hpdi(s);
      out << ',' << io::format_double(iv.lower) << ',' << io::format_double(iv.upper);
    } else {
      out << ",,";
    }
    out << '\n';
  }
}

McmcConfig chain_config(McmcConfig base, std::uint64_t seed, int workers) {
  base.seed = seed;
  base.workers = workers;
  return base;
}

ClusterAssignment run_clustering(const ClusterCfg& c, const Population& pop, const EpidemicRecord& rec, Rng& rng) {
  if (c.method == "kmeans") return kmeans(pop, c.K, rng);
  const StandardizedData data = standardize(pop, rec);
  const auto chain = dpmm_gibbs(data, c.dpmm, rng);
  return extract_assignment(chain, c.dpmm.burn_in, data);
}

std::vector<int> observed_curve(const EpidemicRecord& rec, const ModelCfg& m) {
  TimelineOptions opts = m.spec.timeline();
  return incidence_curve(build_timeline(rec, opts));
}

void write_incidence(std::ostream& out, std::span<const int> curve) {
  out << "t,count\n";
  for (std::size_t t = 0; t < curve.size(); ++t) out << t << ',' << curve[t] << '\n';
}

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "cluster",  "fit",           "assess",
                                              "forecast", "bench",    "replicate-study"};
  return names;
}

std::vector<fs::path> run_command(const std::string& command, const Options& opts) {
  if (command == "simulate") return cmd_simulate(opts);
  if (command == "cluster") return cmd_cluster(opts);
  if (command == "fit") return cmd_fit(opts);
  if (command == "assess") return cmd_assess(opts);
  if (command == "forecast") return cmd_forecast(opts);
  if (command == "bench") return cmd_bench(opts);
  if (command == "replicate-study") return cmd_replicate_study(opts);
  throw UsageError("unknown command '" + command + "'");
}

std::vector<fs::path> cmd_simulate(const Options& opts) {
  const json cfg = load_config(opts.config);
  const Section top = top_section(cfg, opts.config);
  const SimulateCfg sc = parse_simulate(top.sub("simulate", kSimulateKeys));
  Writer w(opts.out);
  const std::uint64_t base = derive_seed(opts.seed, kSimulate);

  struct Job {
    std::size_t scenario;
    int rep;
    std::string pop_csv, events_csv, labels_csv;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < sc.scenarios.size(); ++s) {
    for (int r = 0; r < sc.replicates; ++r) jobs.push_back({s, r, {}, {}, {}});
  }
  std::vector<std::string> errors(jobs.size());
  const int threads = opts.workers > 0 ? opts.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    try {
      Job& job = jobs[j];
      Rng rng(derive_seed(base, job.scenario, static_cast<std::uint64_t>(job.rep)));
      const auto gen = generate_population(sc.scenarios[job.scenario], sc.n, rng);
      const DistanceMatrix dist = pairwise_distances(gen.population);
      const EpidemicSimulator sim(gen.population, dist, ModelSpec{});
      const auto rec = sim.run(sc.params, sc.t_max, sc.period, 0, sc.initial_count, rng);
      std::ostringstream p, e, l;
      io::write_population(p, gen.population);
      io::write_events(e, rec);
      io::write_assignment(l, ClusterAssignment::from_labels(gen.population, gen.labels));
      job.pop_csv = p.str();
      job.events_csv = e.str();
      job.labels_csv = l.str();
    } catch (const std::exception& ex) {
      errors[j] = ex.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw ValidationError(e);
  }
  for (const auto& job : jobs) {
    char rep[16];
    std::snprintf(rep, sizeof rep, "rep%02d", job.rep);
    const fs::path dir = sc.scenarios[job.scenario].name();
    w.write(dir / (std::string(rep) + "_population.csv"), [&](std::ostream& o) { o << job.pop_csv; });
    w.write(dir / (std::string(rep) + "_events.csv"), [&](std::ostream& o) { o << job.events_csv; });
    w.write(dir / (std::string(rep) + "_labels.csv"), [&](std::ostream& o) { o << job.labels_csv; });
  }
  json meta = run_metadata("simulate", opts, cfg);
  meta["t_max"] = sc.t_max;
  meta["infectious_period"] = sc.period;
  meta["alpha"] = sc.params.alpha;
  meta["beta"] = sc.params.beta;
  write_metadata(w, meta);
  return w.files();
}

std::vector<fs::path> cmd_cluster(const Options& opts) {
  const json cfg = load_config(opts.config);
  const Section top = top_section(cfg, opts.config);
  DataCfg data = parse_data(top);
  data.assignment.reset();
  data.centroids.reset();
  const ClusterCfg cc = parse_clustering(top);
  const bool need_events = cc.method == "dpmm" && cc.temporal;
  if (need_events && !data.fmd && !data.events) {
    throw ValidationError("spatio-temporal DPMM clustering needs data.events");
  }
  check_inputs(data, need_events);
  Writer w(opts.out);
  const Dataset ds = load_dataset(data);
  Rng rng(derive_seed(opts.seed, kCluster, 0));
  const ClusterAssignment a = run_clustering(cc, ds.pop, ds.record, rng);
  w.write("assignment.csv", [&](std::ostream& o) { io::write_assignment(o, a); });
  w.write("centroids.csv", [&](std::ostream& o) { io::write_centroids(o, a); });
  json meta = run_metadata("cluster", opts, cfg);
  meta["method"] = cc.method;
  meta["clusters"] = a.K;
  if (cc.method == "dpmm") {
    meta["dpmm"] = {{"components", cc.dpmm.components},
                    {"iterations", cc.dpmm.iterations},
                    {"burn_in", cc.dpmm.burn_in},
                    {"temporal", cc.temporal}};
  }
  write_metadata(w, meta);
  return w.files();
}

std::vector<fs::path> cmd_fit(const Options& opts) {
  const json cfg = load_config(opts.config);
  const Section top = top_section(cfg, opts.config);
  const DataCfg data = parse_data(top);
  const ModelCfg model = parse_single_model(top, data.fmd.has_value());
  const McmcConfig mcmc = parse_mcmc(top);
  const PriorSpec priors = parse_priors(top);
  check_inputs(data, true);
  check_model_inputs(model, data);
  Writer w(opts.out);
  const Dataset ds = load_dataset(data);
  const auto clusters = load_assignment(model, data, ds.pop);
  const McmcTrace trace = fit_mcmc(ds.record, ds.pop, model.spec, clusters ? &*clusters : nullptr, priors,
                                   chain_config(mcmc, derive_seed(opts.seed, kFit, 0), opts.workers));
  w.write("trace.csv", [&](std::ostream& o) { io::write_trace(o, trace); });
  w.write("diagnostics.csv", [&](std::ostream& o) { write_diagnostics(o, trace); });
  json meta = run_metadata("fit", opts, cfg);
  meta["model"] = model_json(model);
  meta["priors"] = priors_json(priors);
  meta["iterations"] = mcmc.iterations;
  meta["burn_in"] = trace.burn_in;
  meta["proposal"] = "adaptive random-walk Metropolis, log scale for positive parameters, target acceptance 0.44, "
                     "frozen after burn-in";
  write_metadata(w, meta);
  return w.files();
}

std::vector<fs::path> cmd_assess(const Options& opts) {
  const json cfg = load_config(opts.config);
  const Section top = top_section(cfg, opts.config);
  const DataCfg data = parse_data(top);
  const bool fmd = data.fmd.has_value();
  std::vector<ModelCfg> fallback;
  if (top.has("model")) fallback.push_back(parse_single_model(top, fmd));
  else fallback.push_back(parse_model(Section(json::object(), "model", kModelKeys), fmd));
  const auto models = parse_model_list(top, "models", fmd, fallback);
  const McmcConfig mcmc = parse_mcmc(top);
  const PriorSpec priors = parse_priors(top);
  check_inputs(data, true);
  for (const auto& m : models) check_model_inputs(m, data);
  Writer w(opts.out);
  const Dataset ds = load_dataset(data);
  const DistanceMatrix dist = pairwise_distances(ds.pop);

  std::vector<io::ReportRow> rows;
  json meta = run_metadata("assess", opts, cfg);
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    const ModelCfg& m = models[mi];
    const auto clusters = load_assignment(m, data, ds.pop);
    const LikelihoodEvaluator ev(ds.pop, ds.record, m.spec, dist, clusters ? &*clusters : nullptr, opts.workers);
    McmcTrace trace;
    if (m.trace) {
      auto in = io::open_in(*m.trace);
      trace = io::read_trace(in, mcmc.resolved_burn_in(), m.trace->string());
      if (trace.names != m.spec.parameter_names()) {
        throw UsageError("trace '" + m.trace->string() + "' does not match model '" + m.name + "'");
      }
    } else {
      trace = fit_mcmc(ev, priors, chain_config(mcmc, derive_seed(opts.seed, kAssess, mi), opts.workers));
      w.write(m.name + "_trace.csv", [&](std::ostream& o) { io::write_trace(o, trace); });
    }
    w.write(m.name + "_diagnostics.csv", [&](std::ostream& o) { write_diagnostics(o, trace); });
    const PointwiseLogLik pw = pointwise_loglik(ev, trace);
    rows.push_back({m.name, waic(pw), pw.units(), pw.draws()});
    meta["models"].push_back(model_json(m));
  }
  w.write("report.csv", [&](std::ostream& o) { io::write_report(o, rows); });
  meta["priors"] = priors_json(priors);
  meta["burn_in"] = mcmc.resolved_burn_in();
  meta["waic_unit"] = "one Bernoulli exposure per susceptible individual and day";
  write_metadata(w, meta);
  return w.files();
}

std::vector<fs::path> cmd_forecast(const Options& opts) {
  const json cfg = load_config(opts.config);
  const Section top = top_section(cfg, opts.config);
  const DataCfg data = parse_data(top);
  const ModelCfg model = parse_single_model(top, data.fmd.has_value());
  const McmcConfig mcmc = parse_mcmc(top);
  const PriorSpec priors = parse_priors(top);
  const PpdCfg pc = parse_ppd(top);
  check_inputs(data, true);
  check_model_inputs(model, data);
  Writer w(opts.out);
  const Dataset ds = load_dataset(data);
  const auto clusters = load_assignment(model, data, ds.pop);
  const ClusterAssignment* cl = clusters ? &*clusters : nullptr;
  const bool forecast = pc.mode == "forecast";
  if (forecast && (pc.from_t < ds.record.observe_from() || pc.from_t > ds.record.t_max())) {
    throw ValidationError("ppd.from_t must lie in [observation start, t_max]");
  }

  McmcTrace trace;
  if (model.trace) {
    auto in = io::open_in(*model.trace);
    trace = io::read_trace(in, mcmc.resolved_burn_in(), model.trace->string());
    if (trace.names != model.spec.parameter_names()) throw UsageError("trace does not match the model");
  } else {
    const EpidemicRecord fit_rec = forecast ? ds.record.truncated(pc.from_t) : ds.record;
    trace = fit_mcmc(fit_rec, ds.pop, model.spec, cl, priors,
                     chain_config(mcmc, derive_seed(opts.seed, kForecast, 0), opts.workers));
    w.write("trace.csv", [&](std::ostream& o) { io::write_trace(o, trace); });
  }
  PpdConfig ppd;
  ppd.n_sims = pc.n_sims;
  ppd.seed = derive_seed(opts.seed, kForecast, 1);
  ppd.infectious_period = model.period;
  ppd.latent_period = model.spec.latent_period;
  const CurveEnsemble ens = forecast ? ppd_forecast(trace, ds.record, ds.pop, model.spec, cl, pc.from_t, ppd)
                                     : ppd_complete(trace, ds.record, ds.pop, model.spec, cl, ppd);
  w.write("curves.csv", [&](std::ostream& o) { io::write_curves(o, ens); });
  const auto observed = observed_curve(ds.record, model);
  w.write("observed.csv", [&](std::ostream& o) { write_incidence(o, observed); });
  json meta = run_metadata("forecast", opts, cfg);
  meta["model"] = model_json(model);
  meta["mode"] = pc.mode;
  meta["n_sims"] = pc.n_sims;
  if (forecast) meta["from_t"] = pc.from_t;
  meta["burn_in"] = trace.burn_in;
  meta["coverage"] = ens.coverage(observed);
  write_metadata(w, meta);
  return w.files();
}

std::vector<fs::path> cmd_bench(const Options& opts) {
  const json cfg = load_config(opts.config);
  const Section top = top_section(cfg, opts.config);
  const Section s = top.sub("bench", {"n", "clusters", "spark", "repetitions", "warmup", "mcmc_iterations", "alpha",
                                      "beta", "beta_tilde", "t_max", "variance", "extent"});
  const int n = s.get<int>("n", 1000);
  const auto Ks = s.get<std::vector<int>>("clusters", {1, 2, 5, 10});
  const SparkKind spark = parse_spark(s.get<std::string>("spark", "m2"));
  const int reps = s.get<int>("repetitions", 20);
  const int warmup = s.get<int>("warmup", 3);
  const int mcmc_iters = s.get<int>("mcmc_iterations", 0);
  const ModelParams truth{s.get<double>("alpha", 0.3), s.get<double>("beta", 2.0), {},
                          s.get<double>("beta_tilde", 1.0), {}};
  const Day t_max = s.get<int>("t_max", 31);
  const double variance = s.get<double>("variance", 8.0);
  const double extent = s.get<double>("extent", 100.0);
  if (n < 2 || reps < 20 || warmup < 0 || mcmc_iters < 0 || t_max < 1 || Ks.empty()) {
    throw ValidationError("config: bench needs n >= 2, repetitions >= 20, warmup >= 0, t_max >= 1");
  }
  if (!spark_needs_clusters(spark) && spark != SparkKind::Zero) {
    throw ValidationError("config: bench.spark must be zero or m1..m4");
  }
  for (int K : Ks) {
    if (K < 1 || K > n) throw ValidationError("config: bench.clusters entries must lie in [1, n]");
  }
  Writer w(opts.out);
  const int workers = opts.workers > 0 ? opts.workers : omp_get_max_threads();
  using clock = std::chrono::steady_clock;

  std::ostringstream out;
  out << "n,k,spark,workers,backend,mode,units_full,units_composite,pairs_full,pairs_composite,"
         "full_seconds,composite_seconds,ratio\n";
  for (std::size_t ki = 0; ki < Ks.size(); ++ki) {
    const int K = Ks[ki];
    Rng rng(derive_seed(opts.seed, kBench, ki));
    const auto gen = generate_population(SpatialScenario::clustered(K, variance, 0.0, extent), n, rng);
    const ClusterAssignment clusters = ClusterAssignment::from_labels(gen.population, gen.labels);
    const DistanceMatrix dist = pairwise_distances(gen.population);
    ModelSpec sim_spec;
    sim_spec.composite = true;
    sim_spec.spark = SparkKind::M2;
    const EpidemicSimulator sim(gen.population, dist, sim_spec, &clusters);
    const EpidemicRecord rec = sim.run(truth, t_max, 3, 0, 1, rng);

    ModelSpec full_spec;
    ModelSpec comp_spec;
    comp_spec.composite = true;
    comp_spec.spark = spark;
    const LikelihoodEvaluator full(gen.population, rec, full_spec, dist, nullptr, workers);
    const LikelihoodEvaluator comp(gen.population, rec, comp_spec, dist, &clusters, workers);
    ModelParams p = truth;
    ModelParams pc = truth;
    if (spark == SparkKind::M1) pc.epsilon = 0.1;
    if (spark == SparkKind::M4) pc.delta = 1.0;
    if (!spark_needs_clusters(spark)) pc.beta_tilde.reset();

    auto median_seconds = [&](auto&& fn) {
      for (int r = 0; r < warmup; ++r) fn();
      std::vector<double> t;
      for (int r = 0; r < reps; ++r) {
        const auto t0 = clock::now();
        fn();
        t.push_back(std::chrono::duration<double>(clock::now() - t0).count());
      }
      std::sort(t.begin(), t.end());
      return reps % 2 ? t[t.size() / 2] : 0.5 * (t[t.size() / 2 - 1] + t[t.size() / 2]);
    };
    volatile double sink = 0.0;
    const double tf = median_seconds([&] { sink = sink + full.log_likelihood(p); });
    const double tc = median_seconds([&] { sink = sink + comp.log_likelihood(pc); });
    auto row = [&](const char* mode, double a, double b) {
      out << n << ',' << K << ',' << spark_name(spark) << ',' << workers << ','
          << simd::backend_name(simd::active_backend()) << ',' << mode << ',' << full.unit_count() << ','
          << comp.unit_count() << ',' << full.kernel_pairs() << ',' << comp.kernel_pairs() << ','
          << io::format_double(a) << ',' << io::format_double(b) << ',' << io::format_double(b / a) << '\n';
    };
    row("loglik", tf, tc);
    if (mcmc_iters > 0) {
      McmcConfig mc;
      mc.iterations = mcmc_iters;
      mc.workers = workers;
      mc.seed = derive_seed(opts.seed, kBench, 1000 + ki);
      const PriorSpec priors;
      auto t0 = clock::now();
      (void)fit_mcmc(full, priors, mc);
      const double mf = std::chrono::duration<double>(clock::now() - t0).count();
      t0 = clock::now();
      (void)fit_mcmc(comp, priors, mc);
      const double mcs = std::chrono::duration<double>(clock::now() - t0).count();
      row("mcmc", mf, mcs);
    }
  }
  w.write("bench.csv", [&](std::ostream& o) { o << out.str(); });
  return w.files();
}

std::vector<fs::path> cmd_replicate_study(const Options& opts) {
  const json cfg = load_config(opts.config);
  const Section top = top_section(cfg, opts.config);
  std::vector<std::string> study_keys = kSimulateKeys;
  study_keys.push_back("models");
  study_keys.push_back("ppd");
  const Section s = top.sub("study", study_keys);
  const SimulateCfg sc = parse_simulate(s);
  std::vector<ModelCfg> fallback;
  for (const char* spark : {"zero", "m2", "m3"}) {
    json j{{"spark", spark}};
    if (std::string(spark) == "zero") j["composite"] = false;
    fallback.push_back(parse_model(Section(j, "study.models", kModelKeys), false));
  }
  const auto models = parse_model_list(s, "models", false, fallback);
  for (const auto& m : models) {
    if (m.spec.frame != Frame::SIR) throw ValidationError("config: study models must use frame sir");
    if (m.assignment || m.trace) throw ValidationError("config: study models take no assignment or trace paths");
  }
  const bool with_ppd = s.get<bool>("ppd", false);
  const ClusterCfg cc = parse_clustering(top);
  const McmcConfig mcmc = parse_mcmc(top);
  const PriorSpec priors = parse_priors(top);
  const PpdCfg pc = parse_ppd(top);
  Writer w(opts.out);
  const std::uint64_t sim_base = derive_seed(opts.seed, kSimulate);
  const std::uint64_t study_base = derive_seed(opts.seed, kStudy);

  std::ostringstream out;
  out << "scenario,replicate,infected,model,clusters,waic,lppd,p_waic,alpha_median,alpha_lower,alpha_upper,"
         "alpha_covered,beta_median,beta_lower,beta_upper,beta_covered,ppd_coverage\n";
  for (std::size_t si = 0; si < sc.scenarios.size(); ++si) {
    for (int r = 0; r < sc.replicates; ++r) {
      Rng rng(derive_seed(sim_base, si, static_cast<std::uint64_t>(r)));
      const auto gen = generate_population(sc.scenarios[si], sc.n, rng);
      const DistanceMatrix dist = pairwise_distances(gen.population);
      const EpidemicSimulator sim(gen.population, dist, ModelSpec{});
      const EpidemicRecord rec = sim.run(sc.params, sc.t_max, sc.period, 0, sc.initial_count, rng);
      const std::uint64_t rep_seed = derive_seed(study_base, si, static_cast<std::uint64_t>(r));

      std::optional<ClusterAssignment> clusters;
      if (std::any_of(models.begin(), models.end(), [](const ModelCfg& m) { return m.spec.composite; })) {
        Rng crng(derive_seed(rep_seed, 0));
        clusters = run_clustering(cc, gen.population, rec, crng);
      }
      for (std::size_t mi = 0; mi < models.size(); ++mi) {
        const ModelCfg& m = models[mi];
        const ClusterAssignment* cl = m.spec.composite ? &*clusters : nullptr;
        const LikelihoodEvaluator ev(gen.population, rec, m.spec, dist, cl, opts.workers);
        const McmcTrace trace = fit_mcmc(ev, priors, chain_config(mcmc, derive_seed(rep_seed, 1 + mi), opts.workers));
        const WaicResult wr = waic(pointwise_loglik(ev, trace));
        out << sc.scenarios[si].name() << ',' << r << ',' << rec.infected_count() << ',' << m.name << ','
            << (cl ? cl->K : 1) << ',' << io::format_double(wr.waic) << ',' << io::format_double(wr.lppd) << ','
            << io::format_double(wr.p_waic);
        for (const auto& [name, truth] : {std::pair<const char*, double>{"alpha", sc.params.alpha},
                                          std::pair<const char*, double>{"beta", sc.params.beta}}) {
          auto samp = trace.samples(name);
          std::sort(samp.begin(), samp.end());
          const double med = samp[samp.size() / 2];
          if (samp.size() >= 20) {
            const Interval iv = hpdi(samp);
            out << ',' << io::format_double(med) << ',' << io::format_double(iv.lower) << ','
                << io::format_double(iv.upper) << ',' << (truth >= iv.lower && truth <= iv.upper ? 1 : 0);
          } else {
            out << ',' << io::format_double(med) << ",,,";
          }
        }
        if (with_ppd) {
          PpdConfig ppd;
          ppd.n_sims = pc.n_sims;
          ppd.seed = derive_seed(rep_seed, 100 + mi);
          ppd.infectious_period = sc.period;
          const CurveEnsemble ens = ppd_complete(trace, rec, gen.population, m.spec, cl, ppd);
          out << ',' << io::format_double(ens.coverage(observed_curve(rec, m)));
        } else {
          out << ',';
        }
        out << '\n';
      }
    }
  }
  w.write("study.csv", [&](std::ostream& o) { o << out.str(); });
  json meta = run_metadata("replicate-study", opts, cfg);
  for (const auto& m : models) meta["models"].push_back(model_json(m));
  meta["priors"] = priors_json(priors);
  meta["burn_in"] = mcmc.resolved_burn_in();
  meta["clustering"] = cc.method;
  meta["waic_unit"] = "one Bernoulli exposure per susceptible individual and day";
  write_metadata(w, meta);
  return w.files();
}

}  // namespace cilm::app
