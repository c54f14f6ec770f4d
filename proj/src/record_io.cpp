#include "abcdist/record_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace abcdist {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return fmt::format("{}", v);
}

double parse_double(std::string_view s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error(fmt::format("not a number: '{}'", s));
  return v;
}

namespace {

// JSON cannot hold infinities; they go in as strings.
json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double get_num(const json& j) {
  if (j.is_string()) return parse_double(j.get<std::string>());
  return j.get<double>();
}

json vec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

json vec(const Vector& v) { return vec(std::vector<double>(v.data(), v.data() + v.size())); }

std::vector<double> get_vec(const json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(get_num(x));
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json rule_json(const NestedAcceptanceRule& rule) {
  json a = json::array();
  for (const auto& s : rule.stages()) a.push_back({{"weights", vec(s.distance.weights())}, {"threshold", num(s.threshold)}});
  return a;
}

NestedAcceptanceRule get_rule(const json& j) {
  std::vector<AcceptanceStage> stages;
  for (const auto& s : j) stages.push_back({DistanceFunction(get_vec(s.at("weights"))), get_num(s.at("threshold"))});
  return NestedAcceptanceRule(std::move(stages));
}

std::string population_file(std::size_t t) { return fmt::format("population_{:03}.csv", t); }

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::ios_base::failure("cannot write " + p.string());
  os << content;
  if (!os) throw std::ios_base::failure("write failed: " + p.string());
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::ios_base::failure("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto& l : split(text, '\n'))
    if (!l.empty()) out.push_back(l);
  return out;
}

std::string population_csv(const IterationRecord& it, const std::vector<std::string>& param_names,
                           std::size_t n_summaries) {
  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  fmt::format_to(out, "iteration,particle");
  for (const auto& p : param_names) fmt::format_to(out, ",{}", p);
  for (std::size_t s = 0; s < n_summaries; ++s) fmt::format_to(out, ",summary_{}", s + 1);
  fmt::format_to(out, ",weight,distance\n");
  for (std::size_t i = 0; i < it.population.size(); ++i) {
    const auto& p = it.population.particles[i];
    fmt::format_to(out, "{},{}", it.t, i);
    for (Eigen::Index j = 0; j < p.theta.size(); ++j) fmt::format_to(out, ",{}", format_double(p.theta[j]));
    for (Eigen::Index j = 0; j < p.summary.size(); ++j) fmt::format_to(out, ",{}", format_double(p.summary[j]));
    fmt::format_to(out, ",{},{}\n", format_double(p.weight), p.distance ? format_double(*p.distance) : "");
  }
  return fmt::to_string(buf);
}

ParticlePopulation parse_population(std::string_view text, std::size_t t, std::size_t n_params,
                                    std::size_t n_summaries, const std::string& name) {
  ParticlePopulation pop;
  pop.iteration = t;
  const auto ls = lines(text);
  if (ls.empty()) throw Error(name + ": missing header");
  const std::size_t cols = 2 + n_params + n_summaries + 2;
  if (split(ls[0]).size() != cols) throw Error(name + ": unexpected column count in header");
  for (std::size_t r = 1; r < ls.size(); ++r) {
    const auto f = split(ls[r]);
    if (f.size() != cols) throw Error(fmt::format("{}:{}: expected {} fields", name, r + 1, cols));
    Particle p;
    p.theta.resize(static_cast<Eigen::Index>(n_params));
    p.summary.resize(static_cast<Eigen::Index>(n_summaries));
    std::size_t k = 2;
    for (std::size_t j = 0; j < n_params; ++j) p.theta[static_cast<Eigen::Index>(j)] = parse_double(f[k++]);
    for (std::size_t j = 0; j < n_summaries; ++j) p.summary[static_cast<Eigen::Index>(j)] = parse_double(f[k++]);
    p.weight = parse_double(f[k++]);
    if (!f[k].empty()) p.distance = parse_double(f[k]);
    pop.particles.push_back(std::move(p));
  }
  return pop;
}

}  // namespace

void write_run_record(const RunRecord& record, const fs::path& dir, const std::vector<std::string>& param_names) {
  fs::create_directories(dir);
  const std::size_t n_summaries = static_cast<std::size_t>(record.observed.size());

  json cfg = {{"N", record.config.N},
              {"alpha", record.config.alpha},
              {"budget", record.config.budget},
              {"scale_store_cap", record.config.scale_store_cap},
              {"delta", record.config.delta ? json(*record.config.delta) : json(nullptr)},
              {"seed", record.config.seed},
              {"workers", record.config.workers}};
  json iters = json::array();
  for (const auto& it : record.iterations) {
    iters.push_back({{"t", it.t},
                     {"population_file", population_file(it.t)},
                     {"particles", it.population.size()},
                     {"weights", vec(it.weights)},
                     {"threshold", num(it.threshold)},
                     {"region", rule_json(it.region)},
                     {"simulations", it.simulations},
                     {"cumulative_simulations", it.cumulative_simulations},
                     {"acceptances", it.acceptances},
                     {"incomplete", it.incomplete},
                     {"support_rejections", it.support_rejections},
                     {"importance_weight_ratio", num(it.importance_weight_ratio)},
                     {"eccentricity", num(it.eccentricity)},
                     {"zero_scale_indices", it.zero_scale_indices}});
  }
  const json doc = {{"algorithm", algorithm_name(record.algorithm)},
                    {"model_id", record.model_id},
                    {"param_names", param_names},
                    {"config", cfg},
                    {"observed", vec(record.observed)},
                    {"simd", record.simd_isa},
                    {"termination", termination_name(record.termination)},
                    {"total_simulations", record.total_simulations},
                    {"partial_iteration_simulations", record.partial_iteration_simulations},
                    {"notes", record.notes},
                    {"iterations", iters}};
  write_file(dir / "record.json", doc.dump(2) + "\n");

  std::string weights = "iteration,summary,weight,normalized_weight\n";
  for (const auto& it : record.iterations) {
    double total = 0.0;
    for (double w : it.weights) total += w;
    for (std::size_t s = 0; s < it.weights.size(); ++s)
      weights += fmt::format("{},{},{},{}\n", it.t, s + 1, format_double(it.weights[s]),
                             format_double(it.weights[s] / total));
    write_file(dir / population_file(it.t), population_csv(it, param_names, n_summaries));
  }
  write_file(dir / "weights.csv", weights);

  std::ostringstream regions;
  write_region_csv(regions, record);
  write_file(dir / "regions.csv", regions.str());
}

std::vector<std::string> read_param_names(const fs::path& dir) {
  return json::parse(read_file(dir / "record.json")).at("param_names").get<std::vector<std::string>>();
}

RunRecord read_run_record(const fs::path& dir) {
  const json doc = json::parse(read_file(dir / "record.json"));
  RunRecord r;
  r.algorithm = parse_algorithm(doc.at("algorithm").get<std::string>());
  r.model_id = doc.at("model_id").get<std::string>();
  const auto& c = doc.at("config");
  r.config.N = c.at("N").get<std::size_t>();
  r.config.alpha = c.at("alpha").get<double>();
  r.config.budget = c.at("budget").get<std::size_t>();
  r.config.scale_store_cap = c.at("scale_store_cap").get<std::size_t>();
  if (!c.at("delta").is_null()) r.config.delta = c.at("delta").get<double>();
  r.config.seed = c.at("seed").get<std::uint64_t>();
  r.config.workers = c.at("workers").get<std::size_t>();
  r.observed = to_vector(get_vec(doc.at("observed")));
  r.simd_isa = doc.at("simd").get<std::string>();
  r.termination = parse_termination(doc.at("termination").get<std::string>());
  r.total_simulations = doc.at("total_simulations").get<std::size_t>();
  r.partial_iteration_simulations = doc.at("partial_iteration_simulations").get<std::size_t>();
  r.notes = doc.at("notes").get<std::vector<std::string>>();
  const std::size_t n_params = doc.at("param_names").size();
  const std::size_t n_summaries = static_cast<std::size_t>(r.observed.size());
  for (const auto& j : doc.at("iterations")) {
    IterationRecord it;
    it.t = j.at("t").get<std::size_t>();
    it.weights = get_vec(j.at("weights"));
    it.threshold = get_num(j.at("threshold"));
    it.region = get_rule(j.at("region"));
    it.simulations = j.at("simulations").get<std::size_t>();
    it.cumulative_simulations = j.at("cumulative_simulations").get<std::size_t>();
    it.acceptances = j.at("acceptances").get<std::size_t>();
    it.incomplete = j.at("incomplete").get<std::size_t>();
    it.support_rejections = j.at("support_rejections").get<std::size_t>();
    it.importance_weight_ratio = get_num(j.at("importance_weight_ratio"));
    it.eccentricity = get_num(j.at("eccentricity"));
    it.zero_scale_indices = j.at("zero_scale_indices").get<std::vector<std::size_t>>();
    const std::string file = j.at("population_file").get<std::string>();
    it.population = parse_population(read_file(dir / file), it.t, n_params, n_summaries, file);
    r.iterations.push_back(std::move(it));
  }
  return r;
}

void write_region_csv(std::ostream& os, const RunRecord& record) {
  os << "iteration,stage,summary,weight,observed,threshold\n";
  for (const auto& it : record.iterations) {
    for (std::size_t k = 0; k < it.region.size(); ++k) {
      const auto& stage = it.region.stages()[k];
      const auto& w = stage.distance.weights();
      for (std::size_t s = 0; s < w.size(); ++s)
        os << fmt::format("{},{},{},{},{},{}\n", it.t, k + 1, s + 1, format_double(w[s]),
                          format_double(record.observed[static_cast<Eigen::Index>(s)]),
                          format_double(stage.threshold));
    }
  }
}

namespace {

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

bool same(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (!same(a[i], b[i])) return false;
  return true;
}

bool same(const NestedAcceptanceRule& a, const NestedAcceptanceRule& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (!(a.stages()[k].distance == b.stages()[k].distance) || !same(a.stages()[k].threshold, b.stages()[k].threshold))
      return false;
  return true;
}

bool same(const ParticlePopulation& a, const ParticlePopulation& b) {
  if (a.size() != b.size() || a.iteration != b.iteration) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& p = a.particles[i];
    const auto& q = b.particles[i];
    if (!same(p.theta, q.theta) || !same(p.summary, q.summary) || !same(p.weight, q.weight)) return false;
    if (p.distance.has_value() != q.distance.has_value()) return false;
    if (p.distance && !same(*p.distance, *q.distance)) return false;
  }
  return true;
}

}  // namespace

bool records_identical(const RunRecord& a, const RunRecord& b) {
  if (a.algorithm != b.algorithm || a.model_id != b.model_id || a.simd_isa != b.simd_isa ||
      a.termination != b.termination || a.total_simulations != b.total_simulations ||
      a.partial_iteration_simulations != b.partial_iteration_simulations || a.notes != b.notes)
    return false;
  const auto& ca = a.config;
  const auto& cb = b.config;
  if (ca.N != cb.N || ca.alpha != cb.alpha || ca.budget != cb.budget || ca.scale_store_cap != cb.scale_store_cap ||
      ca.delta != cb.delta || ca.seed != cb.seed || ca.workers != cb.workers)
    return false;
  if (!same(a.observed, b.observed) || a.iterations.size() != b.iterations.size()) return false;
  for (std::size_t i = 0; i < a.iterations.size(); ++i) {
    const auto& x = a.iterations[i];
    const auto& y = b.iterations[i];
    if (x.t != y.t || x.weights != y.weights || !same(x.threshold, y.threshold) || !same(x.region, y.region) ||
        x.simulations != y.simulations || x.cumulative_simulations != y.cumulative_simulations ||
        x.acceptances != y.acceptances || x.incomplete != y.incomplete ||
        x.support_rejections != y.support_rejections || !same(x.importance_weight_ratio, y.importance_weight_ratio) ||
        !same(x.eccentricity, y.eccentricity) || x.zero_scale_indices != y.zero_scale_indices ||
        !same(x.population, y.population))
      return false;
  }
  return true;
}

}  // namespace abcdist
