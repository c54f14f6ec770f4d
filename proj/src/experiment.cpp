#include "abcdist/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "abcdist/diagnostics.hpp"
#include "abcdist/models/gk.hpp"
#include "abcdist/models/lotka_volterra.hpp"
#include "abcdist/models/normal_toy.hpp"
#include "abcdist/record_io.hpp"
#include "abcdist/simd/kernels.hpp"
#include "abcdist/stats.hpp"

namespace abcdist {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;

std::string read_text(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::ios_base::failure("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::ios_base::failure("cannot write " + p.string());
  os << s;
  if (!os) throw std::ios_base::failure("write failed: " + p.string());
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// ---------------------------------------------------------------------------
// Model construction

bool is_count(const json& j) {
  if (j.is_number_unsigned()) return true;
  if (j.is_number_float()) {
    const double v = j.get<double>();
    return v >= 0.0 && v <= 9007199254740992.0 && std::floor(v) == v;
  }
  return false;
}

std::uint64_t as_count(const json& j) {
  return j.is_number_unsigned() ? j.get<std::uint64_t>() : static_cast<std::uint64_t>(j.get<double>());
}

class Overrides {
 public:
  explicit Overrides(const json& j) : j_(j) {
    if (!j.is_object()) throw Error("model.overrides must be an object");
  }

  void real(const char* key, double& target) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw Error(fmt::format("model.overrides.{} must be a number", key));
    target = v.get<double>();
  }
  template <class Int>
  void count(const char* key, Int& target) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (!is_count(j_.at(key))) throw Error(fmt::format("model.overrides.{} must be a non-negative integer", key));
    target = static_cast<Int>(as_count(j_.at(key)));
  }
  void reals(const char* key, std::vector<double>& target) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_array()) throw Error(fmt::format("model.overrides.{} must be an array of numbers", key));
    target.clear();
    for (const auto& x : v) {
      if (!x.is_number()) throw Error(fmt::format("model.overrides.{} must be an array of numbers", key));
      target.push_back(x.get<double>());
    }
  }
  void counts(const char* key, std::vector<std::size_t>& target) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_array()) throw Error(fmt::format("model.overrides.{} must be an array of integers", key));
    target.clear();
    for (const auto& x : v) {
      if (!is_count(x)) throw Error(fmt::format("model.overrides.{} must be an array of integers", key));
      target.push_back(static_cast<std::size_t>(as_count(x)));
    }
  }
  void finish(const std::string& model) const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw Error(fmt::format("model.overrides.{}: unknown parameter for model '{}'", k, model));
  }

 private:
  const json& j_;
  std::set<std::string> seen_;
};

void require_positive(double v, const char* name) {
  if (!(v > 0.0 && std::isfinite(v))) throw Error(fmt::format("model.overrides.{} must be positive", name));
}

// ---------------------------------------------------------------------------
// Config parsing

// Finds the line of a key path in the raw text by searching for each key in
// turn after the previous one. Good enough for error messages.
class Locator {
 public:
  Locator(std::string_view text, std::vector<std::string> prefix) : text_(text), prefix_(std::move(prefix)) {}

  std::size_t line_of(const std::vector<std::string>& path) const {
    std::size_t pos = 0;
    bool found_any = false;
    std::vector<std::string> full = prefix_;
    full.insert(full.end(), path.begin(), path.end());
    for (const auto& key : full) {
      if (!key.empty() && key.front() == '[') continue;
      const std::string quoted = "\"" + key + "\"";
      std::size_t p = pos;
      bool found = false;
      while ((p = text_.find(quoted, p)) != std::string_view::npos) {
        std::size_t q = p + quoted.size();
        while (q < text_.size() && std::isspace(static_cast<unsigned char>(text_[q]))) ++q;
        if (q < text_.size() && text_[q] == ':') {
          found = true;
          break;
        }
        p += quoted.size();
      }
      if (!found) break;
      pos = p;
      found_any = true;
    }
    if (!found_any) return 0;
    return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
  }

 private:
  std::string_view text_;
  std::vector<std::string> prefix_;
};

std::string dotted(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& k : path) {
    if (!out.empty() && k.front() != '[') out += '.';
    out += k;
  }
  return out;
}

class Parser {
 public:
  Parser(const Locator& loc, std::vector<ConfigError>& errors) : loc_(loc), errors_(errors) {}

  void error(const std::vector<std::string>& path, std::string msg) {
    errors_.push_back({loc_.line_of(path), dotted(path), std::move(msg)});
  }

  bool object(const json& j, const std::vector<std::string>& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
      error(path, "must be an object");
      return false;
    }
    for (const auto& [k, v] : j.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) {
        auto p = path;
        p.push_back(k);
        error(p, fmt::format("unknown key '{}'", k));
      }
    }
    return true;
  }

  std::optional<std::uint64_t> count(const json& j, const std::vector<std::string>& path) {
    if (!is_count(j)) {
      error(path, "must be a non-negative integer");
      return std::nullopt;
    }
    return as_count(j);
  }

  std::optional<double> real(const json& j, const std::vector<std::string>& path) {
    if (!j.is_number()) {
      error(path, "must be a number");
      return std::nullopt;
    }
    return j.get<double>();
  }

  std::optional<bool> boolean(const json& j, const std::vector<std::string>& path) {
    if (!j.is_boolean()) {
      error(path, "must be true or false");
      return std::nullopt;
    }
    return j.get<bool>();
  }

  std::optional<std::string> string(const json& j, const std::vector<std::string>& path) {
    if (!j.is_string()) {
      error(path, "must be a string");
      return std::nullopt;
    }
    return j.get<std::string>();
  }

  std::optional<std::vector<double>> reals(const json& j, const std::vector<std::string>& path) {
    if (!j.is_array()) {
      error(path, "must be an array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (const auto& x : j) {
      if (!x.is_number()) {
        error(path, "must be an array of numbers");
        return std::nullopt;
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

 private:
  const Locator& loc_;
  std::vector<ConfigError>& errors_;
};

void parse_run(Parser& p, const json& j, RunConfig& run) {
  const std::vector<std::string> base{"run"};
  if (!p.object(j, base, {"N", "alpha", "budget", "scale_store_cap", "delta", "seed"})) return;
  auto at = [&](const char* k) { return std::vector<std::string>{"run", k}; };
  if (j.contains("N"))
    if (auto v = p.count(j["N"], at("N"))) {
      if (*v == 0) p.error(at("N"), "N must be at least 1");
      run.N = *v;
    }
  if (j.contains("alpha"))
    if (auto v = p.real(j["alpha"], at("alpha"))) {
      if (!(*v > 0.0 && *v < 1.0))
        p.error(at("alpha"), fmt::format("alpha = {} is outside (0, 1); alpha < 1 is assumed throughout", *v));
      run.alpha = *v;
    }
  if (j.contains("budget"))
    if (auto v = p.count(j["budget"], at("budget"))) run.budget = *v;
  if (j.contains("scale_store_cap"))
    if (auto v = p.count(j["scale_store_cap"], at("scale_store_cap"))) {
      if (*v == 0) p.error(at("scale_store_cap"), "scale_store_cap must be positive");
      run.scale_store_cap = *v;
    }
  if (j.contains("delta") && !j["delta"].is_null())
    if (auto v = p.real(j["delta"], at("delta"))) {
      if (!(*v > 0.0)) p.error(at("delta"), "delta must be positive");
      run.delta = *v;
    }
  if (j.contains("seed"))
    if (auto v = p.count(j["seed"], at("seed"))) run.seed = *v;
  if (run.budget < run.N)
    p.error(j.contains("budget") ? at("budget") : base,
            fmt::format("budget ({}) is smaller than N ({})", run.budget, run.N));
}

void parse_dataset(Parser& p, const json& j, DatasetSpec& d) {
  const std::vector<std::string> base{"dataset"};
  if (!p.object(j, base, {"truth", "prior_predictive", "observed_file", "observed", "seed"})) return;
  auto at = [&](const char* k) { return std::vector<std::string>{"dataset", k}; };
  int sources = 0;
  if (j.contains("truth")) {
    ++sources;
    if (auto v = p.reals(j["truth"], at("truth"))) d.truth = to_vector(*v);
  }
  if (j.contains("prior_predictive")) {
    ++sources;
    if (auto v = p.count(j["prior_predictive"], at("prior_predictive"))) {
      if (*v == 0) p.error(at("prior_predictive"), "prior_predictive must be at least 1");
      d.prior_predictive = *v;
    }
  }
  if (j.contains("observed_file")) {
    ++sources;
    if (auto v = p.string(j["observed_file"], at("observed_file"))) d.observed_file = *v;
  }
  if (j.contains("observed")) {
    ++sources;
    const auto& o = j["observed"];
    if (o.is_object()) {
      if (p.object(o, at("observed"), {"values", "truth"})) {
        if (!o.contains("values"))
          p.error(at("observed"), "observed needs 'values'");
        else if (auto v = p.reals(o["values"], {"dataset", "observed", "values"}))
          d.observed = to_vector(*v);
        if (o.contains("truth"))
          if (auto v = p.reals(o["truth"], {"dataset", "observed", "truth"})) d.observed_truth = to_vector(*v);
      }
    } else if (auto v = p.reals(o, at("observed"))) {
      d.observed = to_vector(*v);
    }
  }
  if (sources != 1)
    p.error(base, sources == 0 ? "missing dataset spec: give one of truth, prior_predictive, observed_file, observed"
                               : "give exactly one of truth, prior_predictive, observed_file, observed");
  if (j.contains("seed"))
    if (auto v = p.count(j["seed"], at("seed"))) d.seed = *v;
}

}  // namespace

std::unique_ptr<SimulationModel> make_model(const std::string& id, const json& overrides) {
  Overrides o(overrides);
  if (id == "normal") {
    auto m = std::make_unique<NormalToyModel>();
    o.real("prior_sd", m->prior_sd);
    o.real("s1_sd", m->s1_sd);
    o.real("s2_sd", m->s2_sd);
    o.finish(id);
    require_positive(m->prior_sd, "prior_sd");
    require_positive(m->s1_sd, "s1_sd");
    require_positive(m->s2_sd, "s2_sd");
    return m;
  }
  if (id == "conjugate-normal") {
    auto m = std::make_unique<ConjugateNormalModel>();
    o.real("prior_sd", m->prior_sd);
    o.real("noise_sd", m->noise_sd);
    o.finish(id);
    require_positive(m->prior_sd, "prior_sd");
    require_positive(m->noise_sd, "noise_sd");
    return m;
  }
  if (id == "gk") {
    auto m = std::make_unique<GkModel>();
    o.real("c", m->c);
    o.counts("order_indices", m->order_indices);
    o.count("dataset_size", m->dataset_size);
    o.real("prior_lo", m->prior_lo);
    o.real("prior_hi", m->prior_hi);
    o.finish(id);
    m->validate();
    return m;
  }
  if (id == "lv") {
    auto m = std::make_unique<LotkaVolterraModel>();
    o.count("x1_0", m->x1_0);
    o.count("x2_0", m->x2_0);
    o.reals("obs_times", m->obs_times);
    o.real("obs_noise_sd", m->obs_noise_sd);
    o.count("transition_cap", m->transition_cap);
    o.real("log_prior_lo", m->log_prior_lo);
    o.real("log_prior_hi", m->log_prior_hi);
    o.finish(id);
    m->validate();
    return m;
  }
  throw Error(fmt::format("unknown model id '{}' (expected normal, conjugate-normal, gk or lv)", id));
}

std::string format_config_error(const fs::path& file, const ConfigError& e) {
  std::string where = file.empty() ? "config" : file.string();
  if (e.line > 0) where += fmt::format(":{}", e.line);
  if (e.path.empty()) return fmt::format("{}: {}", where, e.message);
  return fmt::format("{}: {}: {}", where, e.path, e.message);
}

ConfigResult parse_config(const std::string& text, const fs::path& source) {
  ConfigResult res;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports "at line L, column C".
    std::size_t line = 0;
    const std::string what = e.what();
    const auto pos = what.find("at line ");
    if (pos != std::string::npos) line = std::strtoul(what.c_str() + pos + 8, nullptr, 10);
    res.errors.push_back({line, "", fmt::format("malformed JSON ({})", what)});
    return res;
  }

  std::vector<std::string> prefix;
  if (doc.is_object() && doc.contains("manifest_version")) {
    if (!doc.contains("config")) {
      res.errors.push_back({0, "", "manifest has no embedded config"});
      return res;
    }
    doc = doc["config"];
    prefix = {"config"};
  }
  const Locator loc(text, prefix);
  Parser p(loc, res.errors);
  ExperimentConfig cfg;
  if (!p.object(doc, {}, {"description", "model", "algorithm", "algorithms", "run", "seeds", "dataset",
                          "shared_tuning", "output_dir", "workers", "rejection", "pmc"}))
    return res;

  if (doc.contains("description"))
    if (auto v = p.string(doc["description"], {"description"})) cfg.description = *v;

  // model
  if (!doc.contains("model")) {
    p.error({}, "missing 'model'");
  } else {
    const auto& m = doc["model"];
    if (m.is_string()) {
      cfg.model_id = m.get<std::string>();
    } else if (p.object(m, {"model"}, {"id", "overrides"})) {
      if (!m.contains("id"))
        p.error({"model"}, "missing 'id'");
      else if (auto v = p.string(m["id"], {"model", "id"}))
        cfg.model_id = *v;
      if (m.contains("overrides")) cfg.model_overrides = m["overrides"];
    }
  }

  // algorithms
  const bool one = doc.contains("algorithm");
  const bool many = doc.contains("algorithms");
  if (one == many) {
    p.error({}, one ? "give either 'algorithm' or 'algorithms', not both" : "missing 'algorithm' or 'algorithms'");
  } else {
    std::vector<std::pair<json, std::vector<std::string>>> names;
    if (one) {
      names.push_back({doc["algorithm"], {"algorithm"}});
    } else if (!doc["algorithms"].is_array() || doc["algorithms"].empty()) {
      p.error({"algorithms"}, "must be a non-empty array of algorithm ids");
    } else {
      for (std::size_t i = 0; i < doc["algorithms"].size(); ++i)
        names.push_back({doc["algorithms"][i], {"algorithms", fmt::format("[{}]", i)}});
    }
    for (const auto& [j, path] : names) {
      const auto s = p.string(j, path);
      if (!s) continue;
      if (*s == "rejection" || *s == "pmc" || *s == "pmc-adapt-prev" || *s == "pmc-adapt-curr") {
        const Algorithm a = parse_algorithm(*s);
        if (std::find(cfg.algorithms.begin(), cfg.algorithms.end(), a) != cfg.algorithms.end())
          p.error(path, fmt::format("algorithm '{}' listed twice", *s));
        else
          cfg.algorithms.push_back(a);
      } else {
        p.error(path, fmt::format("unknown algorithm '{}' (expected rejection, pmc, pmc-adapt-prev or pmc-adapt-curr)", *s));
      }
    }
  }

  if (doc.contains("run")) parse_run(p, doc["run"], cfg.run);

  if (doc.contains("seeds")) {
    const auto& s = doc["seeds"];
    if (!s.is_array() || s.empty()) {
      p.error({"seeds"}, "must be a non-empty array of integers");
    } else {
      for (std::size_t i = 0; i < s.size(); ++i)
        if (auto v = p.count(s[i], {"seeds", fmt::format("[{}]", i)})) cfg.seeds.push_back(*v);
    }
  } else {
    cfg.seeds = {cfg.run.seed};
  }

  if (!doc.contains("dataset"))
    p.error({}, "missing dataset spec: give 'dataset' with one of truth, prior_predictive, observed_file, observed");
  else
    parse_dataset(p, doc["dataset"], cfg.dataset);
  if (cfg.dataset.observed_file && cfg.dataset.observed_file->is_relative() && !source.empty())
    cfg.dataset.observed_file = source.parent_path() / *cfg.dataset.observed_file;

  if (doc.contains("shared_tuning"))
    if (auto v = p.boolean(doc["shared_tuning"], {"shared_tuning"})) cfg.shared_tuning = *v;
  if (doc.contains("output_dir") && !doc["output_dir"].is_null())
    if (auto v = p.string(doc["output_dir"], {"output_dir"})) cfg.output_dir = *v;
  if (doc.contains("workers"))
    if (auto v = p.count(doc["workers"], {"workers"})) {
      if (*v == 0) p.error({"workers"}, "workers must be at least 1");
      cfg.run.workers = *v;
    }

  if (doc.contains("rejection")) {
    const auto& r = doc["rejection"];
    if (p.object(r, {"rejection"}, {"threshold", "top_k", "distance"})) {
      if (r.contains("threshold") && !r["threshold"].is_null())
        if (auto v = p.real(r["threshold"], {"rejection", "threshold"})) {
          if (!(*v >= 0.0)) p.error({"rejection", "threshold"}, "threshold must be non-negative");
          cfg.rejection.threshold = *v;
        }
      if (r.contains("top_k") && !r["top_k"].is_null())
        if (auto v = p.count(r["top_k"], {"rejection", "top_k"})) {
          if (*v == 0 || *v > cfg.run.N) p.error({"rejection", "top_k"}, "top_k must lie in [1, N]");
          cfg.rejection.top_k = *v;
        }
      if (cfg.rejection.threshold && cfg.rejection.top_k)
        p.error({"rejection"}, "give either threshold or top_k, not both");
      if (r.contains("distance"))
        if (auto v = p.string(r["distance"], {"rejection", "distance"})) {
          if (*v == "mad")
            cfg.rejection.mad_distance = true;
          else if (*v == "uniform")
            cfg.rejection.mad_distance = false;
          else
            p.error({"rejection", "distance"}, "distance must be 'mad' or 'uniform'");
        }
    }
  }

  if (doc.contains("pmc")) {
    const auto& r = doc["pmc"];
    if (p.object(r, {"pmc"}, {"adapt_initial_distance", "fixed_schedule"})) {
      if (r.contains("adapt_initial_distance"))
        if (auto v = p.boolean(r["adapt_initial_distance"], {"pmc", "adapt_initial_distance"}))
          cfg.pmc.adapt_initial_distance = *v;
      if (r.contains("fixed_schedule") && !r["fixed_schedule"].is_null())
        if (auto v = p.reals(r["fixed_schedule"], {"pmc", "fixed_schedule"})) {
          if (v->empty()) p.error({"pmc", "fixed_schedule"}, "fixed_schedule must not be empty");
          for (double h : *v)
            if (!(h >= 0.0)) p.error({"pmc", "fixed_schedule"}, "thresholds must be non-negative");
          cfg.pmc.fixed_schedule = *v;
        }
    }
  }

  // Semantic checks that need the model.
  if (!cfg.model_id.empty()) {
    try {
      const auto model = make_model(cfg.model_id, cfg.model_overrides);
      const auto np = model->n_params();
      const auto ns = model->n_summaries();
      if (cfg.dataset.truth) {
        if (static_cast<std::size_t>(cfg.dataset.truth->size()) != np)
          p.error({"dataset", "truth"}, fmt::format("truth has {} entries; model '{}' has {} parameters",
                                                    cfg.dataset.truth->size(), cfg.model_id, np));
        else if (!(model->prior_density(*cfg.dataset.truth) > 0.0))
          p.error({"dataset", "truth"}, "truth lies outside the prior support");
      }
      if (cfg.dataset.observed && static_cast<std::size_t>(cfg.dataset.observed->size()) != ns)
        p.error({"dataset", "observed"}, fmt::format("observed has {} entries; model '{}' has {} summaries",
                                                     cfg.dataset.observed->size(), cfg.model_id, ns));
      if (cfg.dataset.observed_truth && static_cast<std::size_t>(cfg.dataset.observed_truth->size()) != np)
        p.error({"dataset", "observed", "truth"}, "truth has the wrong number of parameters");
    } catch (const Error& e) {
      p.error(cfg.model_overrides.empty() ? std::vector<std::string>{"model"}
                                          : std::vector<std::string>{"model", "overrides"},
              e.what());
    }
  }
  if (cfg.dataset.observed_file) {
    std::error_code ec;
    if (!fs::exists(*cfg.dataset.observed_file, ec))
      p.error({"dataset", "observed_file"}, fmt::format("file not found: {}", cfg.dataset.observed_file->string()));
  }

  if (res.errors.empty()) res.config = std::move(cfg);
  return res;
}

ConfigResult load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const std::ios_base::failure&) {
    ConfigResult res;
    res.errors.push_back({0, "", fmt::format("cannot read config file {}", path.string())});
    return res;
  }
  return parse_config(text, path);
}

std::vector<std::string> validate_config(const fs::path& path) {
  std::vector<std::string> out;
  for (const auto& e : load_config(path).errors) out.push_back(format_config_error(path, e));
  return out;
}

json ExperimentConfig::to_json() const {
  json algs = json::array();
  for (auto a : algorithms) algs.push_back(algorithm_name(a));
  json ds = json::object();
  if (dataset.truth) ds["truth"] = from_vector(*dataset.truth);
  if (dataset.prior_predictive) ds["prior_predictive"] = *dataset.prior_predictive;
  if (dataset.observed_file) ds["observed_file"] = fs::absolute(*dataset.observed_file).lexically_normal().string();
  if (dataset.observed) {
    ds["observed"] = {{"values", from_vector(*dataset.observed)}};
    if (dataset.observed_truth) ds["observed"]["truth"] = from_vector(*dataset.observed_truth);
  }
  ds["seed"] = dataset.seed;
  json rej = {{"distance", rejection.mad_distance ? "mad" : "uniform"}};
  if (rejection.threshold) rej["threshold"] = *rejection.threshold;
  if (rejection.top_k) rej["top_k"] = *rejection.top_k;
  json pmcj = {{"adapt_initial_distance", pmc.adapt_initial_distance}};
  if (pmc.fixed_schedule) pmcj["fixed_schedule"] = *pmc.fixed_schedule;
  json j = {{"model", {{"id", model_id}, {"overrides", model_overrides}}},
            {"algorithms", algs},
            {"run",
             {{"N", run.N},
              {"alpha", run.alpha},
              {"budget", run.budget},
              {"scale_store_cap", run.scale_store_cap},
              {"delta", run.delta ? json(*run.delta) : json(nullptr)},
              {"seed", run.seed}}},
            {"seeds", seeds},
            {"dataset", ds},
            {"shared_tuning", shared_tuning},
            {"workers", run.workers},
            {"rejection", rej},
            {"pmc", pmcj}};
  if (output_dir) j["output_dir"] = *output_dir;
  if (description) j["description"] = *description;
  return j;
}

json dataset_json(const ObservedDataset& d) {
  json j = {{"values", from_vector(d.values)}, {"seed", d.seed}, {"attempts", d.attempts}};
  j["truth"] = d.truth ? json(from_vector(*d.truth)) : json(nullptr);
  return j;
}

ObservedDataset dataset_from_json(const json& j) {
  if (!j.is_object() || !j.contains("values")) throw Error("observed data file needs a 'values' array");
  ObservedDataset d;
  d.values = to_vector(j.at("values").get<std::vector<double>>());
  if (j.contains("truth") && !j.at("truth").is_null()) d.truth = to_vector(j.at("truth").get<std::vector<double>>());
  if (j.contains("seed")) d.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("attempts")) d.attempts = j.at("attempts").get<std::size_t>();
  return d;
}

std::vector<ObservedDataset> make_datasets(const SimulationModel& model, const DatasetSpec& spec) {
  std::vector<ObservedDataset> out;
  if (spec.truth) {
    out.push_back(make_observed_dataset(model, spec.truth, spec.seed));
  } else if (spec.prior_predictive) {
    const RngStream root(spec.seed);
    for (std::size_t d = 0; d < *spec.prior_predictive; ++d)
      out.push_back(make_observed_dataset(model, std::nullopt, root.fork(d).bits()));
  } else if (spec.observed_file) {
    json j;
    try {
      j = json::parse(read_text(*spec.observed_file));
    } catch (const json::parse_error& e) {
      throw Error(fmt::format("{}: malformed JSON ({})", spec.observed_file->string(), e.what()));
    }
    out.push_back(dataset_from_json(j));
  } else if (spec.observed) {
    ObservedDataset d;
    d.values = *spec.observed;
    d.truth = spec.observed_truth;
    d.seed = spec.seed;
    d.attempts = 0;
    out.push_back(std::move(d));
  } else {
    throw Error("no dataset spec");
  }
  for (const auto& d : out)
    if (static_cast<std::size_t>(d.values.size()) != model.n_summaries())
      throw Error(fmt::format("observed data has {} summaries; model '{}' has {}", d.values.size(), model.id(),
                              model.n_summaries()));
  return out;
}

fs::path resolve_output_dir(const ExperimentConfig& cfg, const RunOptions& opts, const std::string& fallback_name) {
  fs::path root = fs::current_path();
  if (const char* env = std::getenv(kOutputRootEnv); env && *env) root = env;
  fs::path dir;
  if (opts.output_dir)
    dir = *opts.output_dir;
  else if (cfg.output_dir)
    dir = *cfg.output_dir;
  else
    dir = fallback_name;
  if (dir.is_relative()) dir = root / dir;
  return fs::absolute(dir).lexically_normal();
}

namespace {

RunRecord run_one(Algorithm a, const SimulationModel& model, const Vector& observed, const RunConfig& rc,
                  const ExperimentConfig& cfg, const std::optional<InitialTuning>& tuning) {
  switch (a) {
    case Algorithm::Rejection: {
      RejectionThreshold thr = TopK{cfg.rejection.top_k.value_or(
          std::min(rc.N, static_cast<std::size_t>(std::ceil(rc.alpha * static_cast<double>(rc.N)))))};
      if (cfg.rejection.threshold) thr = *cfg.rejection.threshold;
      std::optional<DistanceFunction> d;
      if (!cfg.rejection.mad_distance) d = DistanceFunction::uniform(model.n_summaries());
      return abc_rejection(model, observed, rc.N, thr, d, rc.seed).record;
    }
    case Algorithm::Pmc: {
      PmcOptions o;
      o.adapt_initial_distance = cfg.pmc.adapt_initial_distance;
      o.fixed_schedule = cfg.pmc.fixed_schedule;
      o.tuning = tuning;
      return abc_pmc(model, observed, rc, o);
    }
    case Algorithm::PmcAdaptPrev:
      return abc_pmc_adapt_prev(model, observed, rc, tuning);
    case Algorithm::PmcAdaptCurr:
      return abc_pmc_adapt_curr(model, observed, rc);
    case Algorithm::Importance:
      break;
  }
  throw Error("algorithm not available from experiment configs");
}

std::string dataset_label(std::size_t d) { return fmt::format("d{:03}", d); }

std::vector<TidyRow> rmse_rows(const std::vector<std::pair<Algorithm, std::uint64_t>>& groups,
                               const std::vector<std::vector<RecordWithTruth>>& members,
                               const std::vector<std::string>& names) {
  std::vector<TidyRow> rows;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (members[g].empty()) continue;
    const auto rmse = rmse_over_datasets(members[g]);
    for (std::size_t j = 0; j < rmse.size(); ++j)
      rows.push_back({std::string(algorithm_name(groups[g].first)), "all", std::to_string(groups[g].second), "final",
                      j < names.size() ? names[j] : std::to_string(j + 1), "rmse", rmse[j]});
  }
  return rows;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg_in, const RunOptions& opts,
                                const std::string& fallback_name) {
  ExperimentResult res;
  auto log = [&](const std::string& s) {
    if (opts.log) *opts.log << s << '\n';
  };
  ExperimentConfig cfg = cfg_in;
  if (opts.workers) cfg.run.workers = *opts.workers;
  if (opts.delta) cfg.run.delta = *opts.delta;

  std::unique_ptr<SimulationModel> model;
  std::vector<ObservedDataset> datasets;
  try {
    cfg.run.validate();
    if (cfg.algorithms.empty()) throw Error("no algorithms requested");
    if (cfg.seeds.empty()) throw Error("no seeds");
    model = make_model(cfg.model_id, cfg.model_overrides);
    datasets = make_datasets(*model, cfg.dataset);
  } catch (const Error& e) {
    res.exit_code = kExitConfig;
    res.messages.push_back(e.what());
    return res;
  } catch (const std::ios_base::failure& e) {
    res.exit_code = kExitIo;
    res.messages.push_back(e.what());
    return res;
  }

  const fs::path out = resolve_output_dir(cfg, opts, fallback_name);
  res.output_dir = out;
  cfg.output_dir = out.string();
  const auto names = model->param_names();
  const std::string simd(simd::isa_name(simd::active_kernels().isa));

  try {
    fs::create_directories(out / "datasets");
    json ds_list = json::array();
    for (std::size_t d = 0; d < datasets.size(); ++d) {
      const std::string file = "datasets/" + dataset_label(d) + ".json";
      write_text(out / file, dataset_json(datasets[d]).dump(2) + "\n");
      ds_list.push_back({{"index", d}, {"file", file}, {"seed", datasets[d].seed}, {"attempts", datasets[d].attempts}});
    }

    const bool needs_tuning =
        cfg.shared_tuning && std::any_of(cfg.algorithms.begin(), cfg.algorithms.end(), [](Algorithm a) {
          return a == Algorithm::Pmc || a == Algorithm::PmcAdaptPrev;
        });

    std::vector<std::pair<Algorithm, std::uint64_t>> groups;
    for (auto a : cfg.algorithms)
      for (auto s : cfg.seeds) groups.push_back({a, s});
    std::vector<std::vector<RecordWithTruth>> members(groups.size());
    std::vector<std::unique_ptr<RunRecord>> keep;  // RecordWithTruth points into these

    json runs = json::array();
    std::vector<TidyRow> rows;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
      const auto& ds = datasets[d];
      for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
        RunConfig rc = cfg.run;
        rc.seed = cfg.seeds[si];
        std::optional<InitialTuning> tuning;
        if (needs_tuning) {
          try {
            tuning = first_iteration_tuning(*model, ds.values, rc);
          } catch (const Error& e) {
            res.messages.push_back(fmt::format("{} seed {}: shared tuning failed: {}", dataset_label(d), rc.seed, e.what()));
            res.exit_code = kExitNoPopulation;
          }
        }
        for (std::size_t ai = 0; ai < cfg.algorithms.size(); ++ai) {
          const Algorithm a = cfg.algorithms[ai];
          const std::string rel =
              fmt::format("runs/{}/{}_s{}", algorithm_name(a), dataset_label(d), rc.seed);
          auto record = std::make_unique<RunRecord>();
          const bool tuned = a == Algorithm::Pmc || a == Algorithm::PmcAdaptPrev;
          if (needs_tuning && tuned && !tuning) {
            record->algorithm = a;
            record->model_id = std::string(model->id());
            record->config = rc;
            record->observed = ds.values;
            record->simd_isa = simd;
            record->notes.push_back("shared tuning unavailable; run skipped");
          } else {
            *record = run_one(a, *model, ds.values, rc, cfg, needs_tuning && tuned ? tuning : std::nullopt);
          }
          write_run_record(*record, out / rel, names);
          write_text(out / rel / "dataset.json", dataset_json(ds).dump(2) + "\n");
          log(fmt::format("{} {} seed {}: {} iterations, {} simulations, {}", algorithm_name(a), dataset_label(d),
                          rc.seed, record->iterations.size(), record->total_simulations,
                          termination_name(record->termination)));
          if (record->iterations.empty()) {
            res.exit_code = kExitNoPopulation;
            res.messages.push_back(fmt::format("{}: budget exhausted before the first population", rel));
          }
          auto r = diagnostics_rows(*record, dataset_label(d), names, ds.truth);
          rows.insert(rows.end(), r.begin(), r.end());
          runs.push_back({{"algorithm", algorithm_name(a)},
                          {"dataset", d},
                          {"seed", rc.seed},
                          {"dir", rel},
                          {"iterations", record->iterations.size()},
                          {"total_simulations", record->total_simulations},
                          {"termination", termination_name(record->termination)}});
          if (ds.truth && !record->iterations.empty())
            members[ai * cfg.seeds.size() + si].push_back({record.get(), *ds.truth});
          keep.push_back(std::move(record));
        }
      }
    }
    auto r = rmse_rows(groups, members, names);
    rows.insert(rows.end(), r.begin(), r.end());
    std::ostringstream csv;
    write_tidy_csv(csv, rows);
    write_text(out / "diagnostics.csv", csv.str());

    const json manifest = {{"manifest_version", kManifestVersion},
                           {"config", cfg.to_json()},
                           {"workers", cfg.run.workers},
                           {"simd", simd},
                           {"model", model->id()},
                           {"param_names", names},
                           {"datasets", ds_list},
                           {"runs", runs},
                           {"exit_code", res.exit_code}};
    write_text(out / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::ios_base::failure& e) {
    res.exit_code = kExitIo;
    res.messages.push_back(e.what());
  } catch (const fs::filesystem_error& e) {
    res.exit_code = kExitIo;
    res.messages.push_back(e.what());
  }
  return res;
}

std::vector<TidyRow> diagnostics_from_files(const fs::path& dir) {
  if (fs::exists(dir / "record.json")) {
    const RunRecord rec = read_run_record(dir);
    std::optional<Vector> truth;
    std::string label = dir.filename().string();
    if (fs::exists(dir / "dataset.json")) truth = dataset_from_json(json::parse(read_text(dir / "dataset.json"))).truth;
    if (const auto us = label.find("_s"); us != std::string::npos) label = label.substr(0, us);
    return diagnostics_rows(rec, label, read_param_names(dir), truth);
  }
  if (!fs::exists(dir / "manifest.json")) throw Error(fmt::format("{} holds neither manifest.json nor record.json", dir.string()));
  const json manifest = json::parse(read_text(dir / "manifest.json"));
  const auto names = manifest.at("param_names").get<std::vector<std::string>>();
  std::vector<std::pair<Algorithm, std::uint64_t>> groups;
  for (const auto& a : manifest.at("config").at("algorithms"))
    for (const auto& s : manifest.at("config").at("seeds"))
      groups.push_back({parse_algorithm(a.get<std::string>()), s.get<std::uint64_t>()});
  std::vector<std::vector<RecordWithTruth>> members(groups.size());
  std::vector<std::unique_ptr<RunRecord>> keep;
  std::vector<TidyRow> rows;
  for (const auto& run : manifest.at("runs")) {
    const fs::path rd = dir / run.at("dir").get<std::string>();
    auto rec = std::make_unique<RunRecord>(read_run_record(rd));
    const auto ds = dataset_from_json(json::parse(read_text(rd / "dataset.json")));
    auto r = diagnostics_rows(*rec, dataset_label(run.at("dataset").get<std::size_t>()), names, ds.truth);
    rows.insert(rows.end(), r.begin(), r.end());
    const std::pair<Algorithm, std::uint64_t> key{parse_algorithm(run.at("algorithm").get<std::string>()),
                                                  run.at("seed").get<std::uint64_t>()};
    const auto g = static_cast<std::size_t>(std::find(groups.begin(), groups.end(), key) - groups.begin());
    if (ds.truth && !rec->iterations.empty() && g < groups.size()) members[g].push_back({rec.get(), *ds.truth});
    keep.push_back(std::move(rec));
  }
  auto r = rmse_rows(groups, members, names);
  rows.insert(rows.end(), r.begin(), r.end());
  return rows;
}

}  // namespace abcdist
