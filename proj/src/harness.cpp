#include "tracephase/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "tracephase/functionals.hpp"
#include "tracephase/quadrature.hpp"
#include "tracephase/rng.hpp"
#include "tracephase/sublevel.hpp"
#include "tracephase/tarry.hpp"

namespace tracephase {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Canonical text output
// ---------------------------------------------------------------------------

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string render_csv(const CsvTable& t) {
  std::string out;
  for (size_t i = 0; i < t.header.size(); ++i) {
    if (i) out += ',';
    out += t.header[i];
  }
  out += '\n';
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size())
      throw Error(ErrorCode::ExperimentFailed, "csv row width differs from header");
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::ExperimentFailed, "cannot open for writing: " + path);
  f.write(content.data(), std::streamsize(content.size()));
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

namespace {

Rational parse_rational_cell(const json& v, const char* what) {
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<long long>());
  throw Error(ErrorCode::ConfigInvalid,
              std::string(what) + ": expected an integer or a rational string");
}

double parse_double_cell(const json& v, const char* what) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return to_double(parse_rational(v.get<std::string>()));
  throw Error(ErrorCode::ConfigInvalid, std::string(what) + ": expected a number");
}

std::vector<double> parse_double_list(const json& v, const char* what) {
  if (!v.is_array()) throw Error(ErrorCode::ConfigInvalid, std::string(what) + ": expected a list");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(parse_double_cell(e, what));
  return out;
}

std::vector<int> parse_int_list(const json& v, const char* what) {
  if (!v.is_array()) throw Error(ErrorCode::ConfigInvalid, std::string(what) + ": expected a list");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer())
      throw Error(ErrorCode::ConfigInvalid, std::string(what) + ": expected integers");
    out.push_back(e.get<int>());
  }
  return out;
}

}  // namespace

FieldSpec parse_field_spec(const json& j) {
  if (!j.is_object() || !j.contains("minpoly"))
    throw Error(ErrorCode::ConfigInvalid, "field spec needs a minpoly list");
  FieldSpec spec;
  for (const auto& c : j.at("minpoly")) spec.minpoly.push_back(parse_rational_cell(c, "minpoly"));
  if (j.contains("basis")) {
    const json& b = j.at("basis");
    if (!b.is_array() || b.empty())
      throw Error(ErrorCode::ConfigInvalid, "field basis must be a nonempty matrix");
    int k = int(b.size());
    RatMatrix m(k, k);
    for (int i = 0; i < k; ++i) {
      if (!b[i].is_array() || int(b[i].size()) != k)
        throw Error(ErrorCode::ConfigInvalid, "field basis must be square");
      for (int c = 0; c < k; ++c) m.at(i, c) = parse_rational_cell(b[i][c], "basis");
    }
    spec.basis = m;
  }
  return spec;
}

namespace {

std::string default_field_id(const FieldSpec& spec) {
  std::string id = "minpoly(";
  for (size_t i = 0; i < spec.minpoly.size(); ++i) {
    if (i) id += ',';
    id += format_rational(spec.minpoly[i]);
  }
  id += ')';
  return id;
}

}  // namespace

std::vector<std::string> experiment_names() {
  return {"field",     "phase",       "hfunc",    "jfunc", "polydisc", "cover",
          "integrate", "verify-main", "sublevel", "tarry", "pin"};
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object() || j.empty())
    throw Error(ErrorCode::ConfigInvalid, "empty experiment config");
  ExperimentConfig cfg;
  if (!j.contains("experiment") || !j.at("experiment").is_string())
    throw Error(ErrorCode::ConfigInvalid, "config needs an experiment name");
  cfg.experiment = j.at("experiment").get<std::string>();
  auto names = experiment_names();
  if (std::find(names.begin(), names.end(), cfg.experiment) == names.end())
    throw Error(ErrorCode::ConfigInvalid, "unknown experiment: " + cfg.experiment);

  if (j.contains("field")) {
    cfg.field = parse_field_spec(j.at("field"));
    cfg.has_field = true;
    cfg.field_id = default_field_id(cfg.field);
  }
  if (j.contains("field_id")) cfg.field_id = j.at("field_id").get<std::string>();

  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer())
      throw Error(ErrorCode::ConfigInvalid, "seed must be an integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("threads")) {
    cfg.threads = j.at("threads").get<int>();
    if (cfg.threads < 1 || cfg.threads > 256)
      throw Error(ErrorCode::ConfigInvalid, "threads out of range [1, 256]");
  }
  if (j.contains("tol")) {
    cfg.tol = parse_double_cell(j.at("tol"), "tol");
    if (!(cfg.tol >= 1e-12 && cfg.tol <= 1.0))
      throw Error(ErrorCode::ConfigInvalid, "tol out of range [1e-12, 1]");
  }
  if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
  if (j.contains("pinned")) cfg.pinned_path = j.at("pinned").get<std::string>();
  if (j.contains("params")) {
    if (!j.at("params").is_object())
      throw Error(ErrorCode::ConfigInvalid, "params must be an object");
    cfg.params = j.at("params");
  } else {
    cfg.params = json::object();
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Pinned constants
// ---------------------------------------------------------------------------

PinnedConstants PinnedConstants::load(const std::string& path) {
  PinnedConstants p;
  std::ifstream f(path, std::ios::binary);
  if (!f) return p;
  try {
    p.doc_ = json::parse(f);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("pinned constants file: ") + e.what());
  }
  if (!p.doc_.is_object()) p.doc_ = json::object();
  return p;
}

void PinnedConstants::save(const std::string& path) const {
  write_text_file(path, doc_.dump(2) + "\n");
}

namespace {

std::string pinned_slot(const PinnedKey& key) {
  return key.experiment + "|" + key.field_id + "|d" + std::to_string(key.d) + "|n" +
         std::to_string(key.n);
}

}  // namespace

std::optional<std::map<std::string, double>> PinnedConstants::find(const PinnedKey& key) const {
  auto it = doc_.find(pinned_slot(key));
  if (it == doc_.end() || !it->contains("constants")) return std::nullopt;
  std::map<std::string, double> out;
  for (const auto& [name, v] : it->at("constants").items()) out[name] = v.get<double>();
  return out;
}

void PinnedConstants::set(const PinnedKey& key, const std::map<std::string, double>& values,
                          const std::string& timestamp) {
  json entry;
  entry["experiment"] = key.experiment;
  entry["field_id"] = key.field_id;
  entry["d"] = key.d;
  entry["n"] = key.n;
  entry["timestamp"] = timestamp;
  json consts = json::object();
  for (const auto& [name, v] : values) consts[name] = v;
  entry["constants"] = consts;
  doc_[pinned_slot(key)] = entry;
}

void PinnedConstants::check(const PinnedKey& key,
                            const std::map<std::string, double>& measured) const {
  const auto pinned = find(key);
  if (!pinned) return;
  for (const auto& [name, value] : measured) {
    auto it = pinned->find(name);
    if (it == pinned->end()) continue;
    double ref = it->second;
    double drift = std::abs(value - ref) / std::max(std::abs(ref), 1e-300);
    if (drift > 0.25)
      throw Error(ErrorCode::ExperimentFailed,
                  "pinned constant " + name + " drifted " + format_double(drift * 100.0) +
                      "% from " + format_double(ref) + " (measured " + format_double(value) +
                      ") for " + pinned_slot(key));
  }
}

// ---------------------------------------------------------------------------
// Experiment machinery
// ---------------------------------------------------------------------------

namespace {

void expect(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ExperimentFailed, what);
}

struct ExperimentOutput {
  CsvTable table;
  json summary = json::object();
  std::map<std::string, double> constants;  // pinnable values
  PinnedKey key;
};

std::shared_ptr<const NumberField> require_field(const ExperimentConfig& cfg) {
  if (!cfg.has_field)
    throw Error(ErrorCode::ConfigInvalid, cfg.experiment + ": config needs a field spec");
  return std::make_shared<NumberField>(build_field(cfg.field));
}

MultiIndex parse_multi_index(std::string s, int n) {
  if (!s.empty() && s.front() == '(') s.erase(s.begin());
  if (!s.empty() && s.back() == ')') s.pop_back();
  MultiIndex alpha(n, 0);
  std::stringstream ss(s);
  std::string tok;
  int i = 0;
  while (std::getline(ss, tok, ',')) {
    if (i >= n) throw Error(ErrorCode::ConfigInvalid, "multi-index has too many entries");
    alpha[i++] = std::stoi(tok);
  }
  if (i != n) throw Error(ErrorCode::ConfigInvalid, "multi-index entry count mismatch");
  for (int a : alpha)
    if (a < 0) throw Error(ErrorCode::ConfigInvalid, "negative multi-index entry");
  return alpha;
}

TracePolynomial parse_trace_poly(std::shared_ptr<const NumberField> K, const json& j) {
  if (!j.is_object() || !j.contains("coeffs"))
    throw Error(ErrorCode::ConfigInvalid, "poly spec needs a coeffs object");
  int n = j.value("n", 1);
  if (n < 1) throw Error(ErrorCode::ConfigInvalid, "poly spec: n must be >= 1");
  TracePolynomial f = make_trace_polynomial(K, n);
  for (const auto& [key, arr] : j.at("coeffs").items()) {
    MultiIndex alpha = parse_multi_index(key, n);
    std::vector<double> c = parse_double_list(arr, "poly coefficient");
    if (int(c.size()) != K->k())
      throw Error(ErrorCode::ConfigInvalid, "poly coefficient needs k entries");
    f.set(alpha, std::move(c));
  }
  if (f.coeffs.empty()) throw Error(ErrorCode::ConfigInvalid, "poly spec has no coefficients");
  return f;
}

Cutoff parse_cutoff(int dim, const json& params) {
  double c = 0.0, r1 = 2.0, r2 = 3.0;
  if (params.contains("cutoff")) {
    const json& v = params.at("cutoff");
    std::vector<double> vals;
    if (v.is_string()) {
      std::stringstream ss(v.get<std::string>());
      std::string tok;
      while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    } else {
      vals = parse_double_list(v, "cutoff");
    }
    if (vals.size() != 3)
      throw Error(ErrorCode::ConfigInvalid, "cutoff must be center,r1,r2");
    c = vals[0];
    r1 = vals[1];
    r2 = vals[2];
  }
  return plateau_cutoff(dim, c, r1, r2);
}

QuadratureOptions quad_options(const ExperimentConfig& cfg) {
  QuadratureOptions opt;
  opt.tol = cfg.tol;
  opt.threads = cfg.threads;
  opt.max_panels = cfg.params.value("max_panels", 2000000LL);
  opt.max_depth = cfg.params.value("max_depth", 14);
  return opt;
}

std::string join_doubles(const std::vector<double>& v, char sep = ';') {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += format_double(v[i]);
  }
  return out;
}

double fit_log_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double mx = 0, my = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += std::log(xs[i]);
    my += std::log(std::max(ys[i], 1e-300));
  }
  mx /= double(xs.size());
  my /= double(xs.size());
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double dx = std::log(xs[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(std::max(ys[i], 1e-300)) - my);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

// ---- individual experiments ----

ExperimentOutput exp_field(const ExperimentConfig& cfg) {
  auto K = require_field(cfg);
  ExperimentOutput out;
  out.table.header = {"sigma", "is_real", "conj_index", "theta_re", "theta_im"};
  for (int s = 0; s < K->k(); ++s)
    out.table.rows.push_back({std::to_string(s), std::to_string(int(K->is_real(s))),
                              std::to_string(K->conj_index(s)),
                              format_double(K->theta()[s].real()),
                              format_double(K->theta()[s].imag())});
  RatMatrix T = trace_form(*K);
  json tf = json::array();
  for (int i = 0; i < K->k(); ++i) {
    json row = json::array();
    for (int j = 0; j < K->k(); ++j) row.push_back(format_rational(T.at(i, j)));
    tf.push_back(row);
  }
  json one = json::array();
  for (const auto& r : K->one_coords()) one.push_back(format_rational(r));
  out.summary["k"] = K->k();
  out.summary["k1"] = K->k1();
  out.summary["k2"] = K->k2();
  out.summary["trace_form"] = tf;
  out.summary["one_coords"] = one;
  out.summary["warnings"] = K->warnings();
  out.key = {"field", cfg.field_id, K->k(), 0};
  return out;
}

ExperimentOutput exp_phase(const ExperimentConfig& cfg) {
  auto K = require_field(cfg);
  if (!cfg.params.contains("poly"))
    throw Error(ErrorCode::ConfigInvalid, "phase: params need a poly spec");
  TracePolynomial f = parse_trace_poly(K, cfg.params.at("poly"));
  int samples = cfg.params.value("samples", 100);
  double range = cfg.params.value("range", 2.0);
  if (samples < 1) throw Error(ErrorCode::ConfigInvalid, "phase: samples must be >= 1");

  DetRng rng(cfg.seed);
  ExperimentOutput out;
  out.table.header = {"idx", "phase", "embed_re", "embed_im", "abs_diff"};
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    std::vector<double> x(size_t(f.n) * K->k());
    for (double& t : x) t = rng.uniform(-range, range);
    double direct = eval_phase(f, x);
    Complex via = eval_phase_embedding_route(f, x);
    double diff = std::abs(via - Complex(direct, 0.0));
    worst = std::max(worst, diff / (1.0 + std::abs(direct)));
    out.table.rows.push_back({std::to_string(i), format_double(direct),
                              format_double(via.real()), format_double(via.imag()),
                              format_double(diff)});
    expect(diff <= 1e-9 * (1.0 + std::abs(direct)),
           "phase: dual evaluation routes disagree at sample " + std::to_string(i));
  }
  out.summary["samples"] = samples;
  out.summary["max_rel_diff"] = worst;
  out.key = {"phase", cfg.field_id, K->k(), f.n};
  return out;
}

ExperimentOutput exp_functional(const ExperimentConfig& cfg, bool use_h) {
  auto K = require_field(cfg);
  const char* name = use_h ? "hfunc" : "jfunc";

  if (!use_h && cfg.params.value("op", "uniform") == std::string("stability")) {
    TracePolynomial f = parse_trace_poly(K, cfg.params.at("poly"));
    SubspaceDecomposition D = decompose(*K);
    Cutoff psi = parse_cutoff(K->k(), cfg.params);
    double eps = cfg.params.value("eps", 0.05);
    int base_points = cfg.params.value("base_points", 20);
    int per_disc = cfg.params.value("samples_per_disc", 10);
    JStabilityResult r =
        j_stability(f, D, psi, eps, base_points, per_disc, unsigned(cfg.seed));
    ExperimentOutput out;
    out.table.header = {"eps", "worst_ratio", "discs", "points"};
    out.table.rows.push_back({format_double(eps), format_double(r.worst_ratio),
                              std::to_string(r.discs_checked), std::to_string(r.points_checked)});
    out.summary["worst_ratio"] = r.worst_ratio;
    out.constants["C1_stability"] = r.worst_ratio;
    out.key = {"jfunc-stability", cfg.field_id, K->k(), f.n};
    double max_ratio = cfg.params.value("max_ratio", 10.0);
    expect(r.worst_ratio <= max_ratio,
           "jfunc: stability ratio " + format_double(r.worst_ratio) + " exceeds " +
               format_double(max_ratio));
    return out;
  }

  TracePolynomial f = parse_trace_poly(K, cfg.params.at("poly"));
  Cutoff psi = parse_cutoff(f.n * K->k(), cfg.params);
  std::vector<int> S;
  if (cfg.params.contains("S"))
    S = parse_int_list(cfg.params.at("S"), "S");
  else
    for (int s = 0; s < K->k(); ++s) S.push_back(s);

  ExperimentOutput out;
  out.table.header = {"sigma", "value", "argmin"};
  for (int sigma : S) {
    UniformResult r = use_h ? uniform_H(f, sigma, psi) : uniform_J(f, sigma, psi);
    out.table.rows.push_back(
        {std::to_string(sigma), format_double(r.value), join_doubles(r.argmin)});
  }
  if (use_h) out.summary["combined_H"] = combined_H(f, S, psi);
  out.key = {name, cfg.field_id, K->k(), f.n};
  return out;
}

ExperimentOutput exp_polydisc(const ExperimentConfig& cfg) {
  auto K = require_field(cfg);
  TracePolynomial f = parse_trace_poly(K, cfg.params.at("poly"));
  if (f.n != 1) throw Error(ErrorCode::ConfigInvalid, "polydisc: univariate phases only");
  SubspaceDecomposition D = decompose(*K);
  int samples = cfg.params.value("samples", 60);
  double box = cfg.params.value("box", 1.5);
  double C = cfg.params.value("C", 1.0);
  if (samples < 1) throw Error(ErrorCode::ConfigInvalid, "polydisc: samples must be >= 1");
  std::vector<int> classes;
  if (cfg.params.contains("classes"))
    classes = parse_int_list(cfg.params.at("classes"), "classes");
  else
    for (int c = 0; c < K->num_classes(); ++c) classes.push_back(c);

  DetRng rng(cfg.seed);
  std::vector<std::vector<double>> centers;
  std::vector<double> mean_radii(size_t(K->num_classes()), 0.0);
  ExperimentOutput out;
  out.table.header = {"idx", "center", "radii", "selected"};
  for (int i = 0; i < samples; ++i) {
    std::vector<double> x(K->k());
    for (double& t : x) t = rng.uniform(-box, box);
    Polydisc P = natural_polydisc(f, x, classes, C);
    for (size_t c = 0; c < P.radii.size(); ++c) mean_radii[c] += P.radii[c] / samples;
    centers.push_back(x);
    out.table.rows.push_back({std::to_string(i), join_doubles(x), join_doubles(P.radii), "0"});
  }
  // Cap the common radii so the covering stays nontrivial inside the box.
  for (double& r : mean_radii) r = std::min(r, box);
  VitaliResult v = vitali_cover(D, centers, mean_radii);
  for (int idx : v.selected) out.table.rows[size_t(idx)][3] = "1";

  out.summary["selected"] = int(v.selected.size());
  out.summary["covered"] = v.covered;
  out.summary["max_overlap_6x"] = v.max_overlap_6x;
  out.summary["common_radii"] = join_doubles(mean_radii);
  out.constants["N_overlap"] = double(v.max_overlap_6x);
  out.key = {"polydisc", cfg.field_id, K->k(), f.n};
  expect(v.covered, "polydisc: selected discs fail to cover the sample at triple scale");
  return out;
}

ExperimentOutput exp_cover(const ExperimentConfig& cfg) {
  std::string mode_name = cfg.params.value("mode", "real");
  CoverMode mode;
  if (mode_name == "real")
    mode = CoverMode::Real;
  else if (mode_name == "complex")
    mode = CoverMode::Complex;
  else
    throw Error(ErrorCode::ConfigInvalid, "cover: mode must be real or complex");
  int n = cfg.params.value("n", 2);
  double Q = cfg.params.value("Q", 4.0);

  ExperimentOutput out;
  out.table.header = {"idx", "in_cover", "box"};
  int hits = 0, total = 0;
  auto record = [&](const std::vector<Complex>& a) {
    BoxMembership m = coefficient_box_membership(mode, n, Q, a);
    std::string box;
    for (size_t i = 0; i < m.box.size(); ++i) {
      if (i) box += ';';
      box += std::to_string(m.box[i]);
    }
    out.table.rows.push_back({std::to_string(total), std::to_string(int(m.in_cover)), box});
    hits += int(m.in_cover);
    ++total;
  };

  if (cfg.params.contains("a")) {
    std::vector<Complex> a;
    for (const auto& e : cfg.params.at("a")) {
      if (e.is_array() && e.size() == 2)
        a.emplace_back(parse_double_cell(e[0], "a"), parse_double_cell(e[1], "a"));
      else
        a.emplace_back(parse_double_cell(e, "a"), 0.0);
    }
    record(a);
  } else {
    int samples = cfg.params.value("samples", 200);
    double scale = cfg.params.value("scale", 1.5);
    if (samples < 1) throw Error(ErrorCode::ConfigInvalid, "cover: samples must be >= 1");
    DetRng rng(cfg.seed);
    for (int i = 0; i < samples; ++i) {
      std::vector<Complex> a(n);
      double qp = 1.0;
      for (int l = 0; l < n; ++l) {
        qp *= Q;
        double re = rng.uniform(-scale * qp, scale * qp);
        double im = mode == CoverMode::Complex ? rng.uniform(-scale * qp, scale * qp) : 0.0;
        a[l] = Complex(re, im);
      }
      record(a);
    }
  }
  out.summary["in_cover"] = hits;
  out.summary["total"] = total;
  out.summary["fraction"] = total ? double(hits) / total : 0.0;
  out.key = {"cover", cfg.field_id.empty() ? "none" : cfg.field_id, 0, n};
  return out;
}

ExperimentOutput exp_integrate(const ExperimentConfig& cfg) {
  auto K = require_field(cfg);
  TracePolynomial f = parse_trace_poly(K, cfg.params.at("poly"));
  Cutoff psi = parse_cutoff(f.n * K->k(), cfg.params);
  QuadratureResult r = oscillatory_integral(f, psi, quad_options(cfg));
  ExperimentOutput out;
  out.table.header = {"value_re", "value_im", "abs", "error_estimate", "panels", "evals",
                      "converged"};
  out.table.rows.push_back({format_double(r.value.real()), format_double(r.value.imag()),
                            format_double(std::abs(r.value)), format_double(r.error_estimate),
                            std::to_string(r.panels), std::to_string(r.evals),
                            std::to_string(int(r.converged))});
  out.summary["abs"] = std::abs(r.value);
  out.summary["converged"] = r.converged;
  out.key = {"integrate", cfg.field_id, K->k(), f.n};
  if (!cfg.params.value("allow_unconverged", false))
    expect(r.converged, "integrate: quadrature did not converge within budget");
  return out;
}

ExperimentOutput exp_verify_main(const ExperimentConfig& cfg) {
  auto K = require_field(cfg);
  TracePolynomial f = parse_trace_poly(K, cfg.params.at("poly"));
  Cutoff psi = parse_cutoff(f.n * K->k(), cfg.params);
  std::vector<int> S;
  if (cfg.params.contains("S"))
    S = parse_int_list(cfg.params.at("S"), "S");
  else
    for (int s = 0; s < K->k(); ++s) S.push_back(s);
  std::vector<double> lambdas = cfg.params.contains("lambdas")
                                    ? parse_double_list(cfg.params.at("lambdas"), "lambdas")
                                    : std::vector<double>{16.0, 64.0, 256.0, 1024.0};

  DecayReport rep = verify_main_bound(f, S, psi, lambdas, quad_options(cfg));
  ExperimentOutput out;
  out.table.header = {"lambda", "abs_I", "H", "product", "vacuous", "converged"};
  for (const auto& row : rep.rows)
    out.table.rows.push_back({format_double(row.lambda), format_double(row.abs_value),
                              format_double(row.H), format_double(row.product),
                              std::to_string(int(row.vacuous)),
                              std::to_string(int(row.converged))});
  out.summary["slope_I"] = rep.slope_I;
  out.summary["slope_H"] = rep.slope_H;
  out.summary["max_product"] = rep.max_product;
  out.summary["median_product"] = rep.median_product;
  out.summary["bounded"] = rep.bounded;
  out.key = {"verify-main", cfg.field_id, K->k(), f.degree()};

  if (!cfg.params.value("allow_unconverged", false))
    expect(rep.all_converged, "verify-main: some integral did not converge");
  expect(rep.bounded, "verify-main: |I| * H exceeded 3x its median");
  if (cfg.params.contains("expected_slope")) {
    double want = parse_double_cell(cfg.params.at("expected_slope"), "expected_slope");
    double tol = cfg.params.value("slope_tol", 0.15);
    expect(std::abs(rep.slope_I - want) <= tol,
           "verify-main: decay slope " + format_double(rep.slope_I) + " outside " +
               format_double(want) + " +- " + format_double(tol));
  }
  return out;
}

ExperimentOutput exp_sublevel(const ExperimentConfig& cfg) {
  auto K = require_field(cfg);
  std::string op = cfg.params.value("op", "measure");

  if (op == "witness") {
    // Closeness-constant calibration: worst observed distance over the
    // predicted radius across random univariate draws.
    int samples = cfg.params.value("samples", 400);
    int deg = cfg.params.value("degree", 3);
    if (samples < 1 || deg < 2)
      throw Error(ErrorCode::ConfigInvalid, "sublevel witness: samples >= 1, degree >= 2");
    double C = cfg.params.value("C", 8.0);
    DetRng rng(cfg.seed);
    double worst = 0.0;
    ExperimentOutput out;
    out.table.header = {"idx", "k", "eps", "mu", "distance", "bound", "ratio"};
    for (int i = 0; i < samples; ++i) {
      std::vector<Complex> coeffs(size_t(deg) + 1);
      for (auto& c : coeffs) c = Complex(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
      Complex z0(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
      DerivativeZeroWitness w = nearest_derivative_zero(coeffs, z0, C);
      double ratio = w.bound > 0 ? w.distance / w.bound : 0.0;
      worst = std::max(worst, ratio);
      out.table.rows.push_back({std::to_string(i), std::to_string(w.k), format_double(w.eps),
                                format_double(w.mu), format_double(w.distance),
                                format_double(w.bound), format_double(ratio)});
      expect(w.within, "sublevel witness: derivative zero outside bound at sample " +
                           std::to_string(i));
    }
    out.summary["worst_ratio"] = worst;
    out.constants["C_cal"] = worst;
    out.key = {"sublevel-witness", cfg.field_id, K->k(), deg};
    return out;
  }

  if (op != "measure")
    throw Error(ErrorCode::ConfigInvalid, "sublevel: op must be measure or witness");

  TracePolynomial f = parse_trace_poly(K, cfg.params.at("poly"));
  SublevelSpec spec;
  spec.embeddings = parse_int_list(cfg.params.at("S"), "S");
  if (!cfg.params.contains("alpha") || !cfg.params.at("alpha").is_array())
    throw Error(ErrorCode::ConfigInvalid, "sublevel: params need alpha multi-indices");
  for (const auto& a : cfg.params.at("alpha")) {
    MultiIndex alpha(f.n, 0);
    auto ints = parse_int_list(a, "alpha");
    if (int(ints.size()) != f.n)
      throw Error(ErrorCode::ConfigInvalid, "sublevel: alpha entries need n components");
    for (int i = 0; i < f.n; ++i) alpha[i] = ints[i];
    spec.alpha.push_back(alpha);
  }
  std::vector<double> eps_sweep = parse_double_list(cfg.params.at("eps"), "eps");
  double mu = cfg.params.value("mu", 1.0);
  long long samples = cfg.params.value("samples", 200000LL);

  ExperimentOutput out;
  out.table.header = {"eps", "measure", "ci_low", "ci_high", "hits", "samples", "reference",
                      "ratio"};
  std::vector<double> measures;
  for (double e : eps_sweep) {
    spec.eps.assign(spec.embeddings.size(), e);
    spec.mu.assign(spec.embeddings.size(), mu);
    SublevelResult r = sublevel_measure(f, spec, samples, cfg.seed);
    measures.push_back(r.measure);
    out.table.rows.push_back({format_double(e), format_double(r.measure),
                              format_double(r.ci_low), format_double(r.ci_high),
                              std::to_string(r.hits), std::to_string(r.samples),
                              format_double(r.reference), format_double(r.ratio)});
  }
  out.summary["eps"] = eps_sweep;
  out.summary["measures"] = measures;
  if (eps_sweep.size() >= 2) {
    double slope = fit_log_slope(eps_sweep, measures);
    out.summary["slope"] = slope;
    if (cfg.params.contains("expected_slope")) {
      double want = parse_double_cell(cfg.params.at("expected_slope"), "expected_slope");
      double tol = cfg.params.value("slope_tol", 0.15);
      expect(std::abs(slope - want) <= tol,
             "sublevel: measure slope " + format_double(slope) + " outside " +
                 format_double(want) + " +- " + format_double(tol));
    }
  }
  out.key = {"sublevel", cfg.field_id, K->k(), f.n};
  return out;
}

ExperimentOutput exp_tarry(const ExperimentConfig& cfg) {
  auto K = require_field(cfg);
  std::string op = cfg.params.value("op", "lq");
  int n = cfg.params.value("n", 2);

  if (op == "classify") {
    std::vector<double> eta = parse_double_list(cfg.params.at("eta"), "eta");
    Cutoff psi = parse_cutoff(K->k(), cfg.params);
    EtaClass c = classify_eta(K, n, eta, psi);
    ExperimentOutput out;
    out.table.header = {"sigma", "H", "in_S", "alpha"};
    for (int s = 0; s < K->k(); ++s) {
      auto it = std::find(c.S.begin(), c.S.end(), s);
      bool in = it != c.S.end();
      out.table.rows.push_back({std::to_string(s), format_double(c.H[s]),
                                std::to_string(int(in)),
                                in ? std::to_string(c.alpha[size_t(it - c.S.begin())]) : ""});
    }
    out.summary["unclassified"] = c.unclassified;
    out.key = {"tarry-classify", cfg.field_id, K->k(), n};
    return out;
  }

  if (op == "sfrak") {
    std::vector<int> S = parse_int_list(cfg.params.at("S"), "S");
    std::vector<int> alpha = parse_int_list(cfg.params.at("alpha"), "alpha");
    Cutoff psi = parse_cutoff(K->k(), cfg.params);
    long long samples = cfg.params.value("samples", 2000LL);
    double hw = cfg.params.value("half_width", 0.0);
    SfrakResult r = sfrak_measure(K, n, S, alpha, psi, samples, cfg.seed, hw);
    ExperimentOutput out;
    out.table.header = {"measure", "ci_low", "ci_high", "hits", "samples", "box_volume",
                        "bound", "ratio"};
    out.table.rows.push_back({format_double(r.measure), format_double(r.ci_low),
                              format_double(r.ci_high), std::to_string(r.hits),
                              std::to_string(r.samples), format_double(r.box_volume),
                              format_double(r.bound), format_double(r.ratio)});
    out.summary["measure"] = r.measure;
    out.summary["ratio"] = r.ratio;
    out.key = {"tarry-sfrak", cfg.field_id, K->k(), n};
    return out;
  }

  if (op == "lq") {
    std::vector<double> q_list = cfg.params.contains("q")
                                     ? parse_double_list(cfg.params.at("q"), "q")
                                     : std::vector<double>{3.0, 5.0};
    int max_shell = cfg.params.value("max_shell", 4);
    Cutoff psi = parse_cutoff(K->k(), cfg.params);
    LqOptions opt;
    opt.dirs_per_shell = cfg.params.value("dirs", 8);
    opt.radii_per_dir = cfg.params.value("radii", 3);
    opt.aligned_dirs = cfg.params.value("aligned", 3);
    opt.seed = cfg.seed;
    opt.quad = quad_options(cfg);
    LqReport rep = lq_tail_experiment(K, n, q_list, max_shell, psi, opt);
    ExperimentOutput out;
    out.table.header = {"shell", "r_lo", "r_hi", "q", "mean_abs_q", "shell_sum"};
    for (const auto& row : rep.rows)
      for (size_t qi = 0; qi < q_list.size(); ++qi)
        out.table.rows.push_back({std::to_string(row.shell), format_double(row.r_lo),
                                  format_double(row.r_hi), format_double(q_list[qi]),
                                  format_double(row.mean_abs_q[qi]),
                                  format_double(row.shell_sum[qi])});
    json conv = json::object();
    for (size_t qi = 0; qi < q_list.size(); ++qi)
      conv[format_double(q_list[qi])] = bool(rep.convergent[qi]);
    out.summary["convergent"] = conv;
    out.key = {"tarry-lq", cfg.field_id, K->k(), n};
    if (cfg.params.contains("expect")) {
      for (const auto& [qs, want] : cfg.params.at("expect").items()) {
        double qv = std::stod(qs);
        for (size_t qi = 0; qi < q_list.size(); ++qi)
          if (q_list[qi] == qv)
            expect(rep.convergent[qi] == want.get<bool>(),
                   "tarry lq: exponent " + qs + " convergence flag mismatch");
      }
    }
    return out;
  }

  if (op == "sharpness") {
    SharpnessConfig sc;
    sc.A = cfg.params.value("A", 4.0);
    sc.m_min = cfg.params.value("m_min", 1);
    sc.m_max = cfg.params.value("m_max", 2);
    if (cfg.params.contains("Q_list"))
      sc.Q_list = parse_double_list(cfg.params.at("Q_list"), "Q_list");
    sc.a = cfg.params.value("a", K->k() > 1 ? 2.0 : 4.0);
    sc.c1 = cfg.params.value("c1", 1e-4);
    sc.trials = cfg.params.value("trials", 2);
    sc.C_KB = cfg.params.value("C_KB", 0.0);
    sc.shrink_cutoff = cfg.params.value("shrink_cutoff", K->k() > 1);
    sc.seed = cfg.seed;
    Cutoff psi = parse_cutoff(K->k(), cfg.params);
    SharpnessReport rep = sharpness_experiment(K, n, sc, psi, quad_options(cfg));
    ExperimentOutput out;
    out.table.header = {"Q", "r", "abs_II", "product", "converged"};
    for (const auto& row : rep.rows) {
      std::string r;
      for (size_t i = 0; i < row.r.size(); ++i) {
        if (i) r += ';';
        r += std::to_string(row.r[i]);
      }
      out.table.rows.push_back({format_double(row.Q), r, format_double(row.abs_II),
                                format_double(row.product),
                                std::to_string(int(row.converged))});
      expect(row.converged || cfg.params.value("allow_unconverged", false),
             "tarry sharpness: integral at Q=" + format_double(row.Q) + " did not converge");
    }
    out.summary["slope"] = rep.slope;
    out.summary["min_product"] = rep.min_product;
    out.summary["max_product"] = rep.max_product;
    out.summary["C_KB_used"] = rep.C_KB_used;
    out.summary["C_KB_reduced"] = rep.C_KB_reduced;
    out.constants["C_pin"] = rep.min_product;
    out.key = {"tarry-sharpness", cfg.field_id, K->k(), n};
    double factor = rep.max_product / std::max(rep.min_product, 1e-300);
    double max_factor = cfg.params.value("max_factor", 20.0);
    expect(factor <= max_factor, "tarry sharpness: product spread " + format_double(factor) +
                                     " exceeds " + format_double(max_factor));
    if (cfg.params.contains("expected_slope")) {
      double want = parse_double_cell(cfg.params.at("expected_slope"), "expected_slope");
      double tol = cfg.params.value("slope_tol", 0.2);
      expect(std::abs(rep.slope - want) <= tol,
             "tarry sharpness: slope " + format_double(rep.slope) + " outside " +
                 format_double(want) + " +- " + format_double(tol));
    }
    return out;
  }

  throw Error(ErrorCode::ConfigInvalid, "tarry: op must be classify, sfrak, lq, or sharpness");
}

ExperimentOutput dispatch(const ExperimentConfig& cfg) {
  if (cfg.experiment == "field") return exp_field(cfg);
  if (cfg.experiment == "phase") return exp_phase(cfg);
  if (cfg.experiment == "hfunc") return exp_functional(cfg, true);
  if (cfg.experiment == "jfunc") return exp_functional(cfg, false);
  if (cfg.experiment == "polydisc") return exp_polydisc(cfg);
  if (cfg.experiment == "cover") return exp_cover(cfg);
  if (cfg.experiment == "integrate") return exp_integrate(cfg);
  if (cfg.experiment == "verify-main") return exp_verify_main(cfg);
  if (cfg.experiment == "sublevel") return exp_sublevel(cfg);
  if (cfg.experiment == "tarry") return exp_tarry(cfg);
  throw Error(ErrorCode::ConfigInvalid, "unknown experiment: " + cfg.experiment);
}

json config_echo(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = cfg.experiment;
  j["field_id"] = cfg.field_id;
  if (cfg.has_field) {
    json mp = json::array();
    for (const auto& c : cfg.field.minpoly) mp.push_back(format_rational(c));
    j["minpoly"] = mp;
  }
  j["seed"] = cfg.seed;
  j["tol"] = cfg.tol;
  j["params"] = cfg.params;
  return j;
}

RunResult finalize(const ExperimentConfig& cfg, const ExperimentOutput& out) {
  RunResult res;
  res.csv = render_csv(out.table);
  res.summary = out.summary;
  if (!out.constants.empty()) {
    json c = json::object();
    for (const auto& [name, v] : out.constants) c[name] = v;
    res.summary["constants"] = c;
  }

  json echo = config_echo(cfg);
  res.manifest["experiment"] = cfg.experiment;
  res.manifest["field_id"] = cfg.field_id;
  res.manifest["seed"] = cfg.seed;
  res.manifest["threads"] = cfg.threads;
  res.manifest["version"] = kVersion;
  res.manifest["config_hash"] = content_hash(echo.dump());
  res.manifest["csv_hash"] = content_hash(res.csv);

  if (!cfg.out_dir.empty()) {
    std::filesystem::path dir(cfg.out_dir);
    std::string stem = cfg.experiment;
    std::string csv_path = (dir / (stem + ".csv")).string();
    std::string json_path = (dir / (stem + ".json")).string();
    std::string manifest_path = (dir / (stem + ".manifest.json")).string();
    write_text_file(csv_path, res.csv);
    json mirror;
    mirror["config"] = echo;
    mirror["summary"] = res.summary;
    write_text_file(json_path, mirror.dump(2) + "\n");
    res.artifacts = {csv_path, json_path, manifest_path};
    json art = json::array();
    for (const auto& a : res.artifacts)
      art.push_back(std::filesystem::path(a).filename().string());
    res.manifest["artifacts"] = art;
    write_text_file(manifest_path, res.manifest.dump(2) + "\n");
  }
  return res;
}

}  // namespace

RunResult run(const ExperimentConfig& cfg) {
  if (cfg.experiment == "pin") return pin_constants(cfg);
  ExperimentOutput out = dispatch(cfg);
  if (!cfg.pinned_path.empty() && !out.constants.empty())
    PinnedConstants::load(cfg.pinned_path).check(out.key, out.constants);
  return finalize(cfg, out);
}

RunResult pin_constants(const ExperimentConfig& cfg) {
  std::string target = cfg.params.value("target", "");
  if (target.empty())
    throw Error(ErrorCode::ConfigInvalid, "pin: params need a target experiment");
  if (cfg.pinned_path.empty())
    throw Error(ErrorCode::ConfigInvalid, "pin: config needs a pinned fixture path");

  ExperimentConfig sub = cfg;
  sub.experiment = target;
  sub.out_dir.clear();
  sub.pinned_path.clear();
  if (cfg.params.contains("target_params")) sub.params = cfg.params.at("target_params");

  ExperimentOutput first = dispatch(sub);
  if (first.constants.empty())
    throw Error(ErrorCode::ConfigInvalid, "pin: experiment " + target +
                                              " produces no pinnable constants");
  sub.seed = derive_seed(cfg.seed, 1);
  ExperimentOutput second = dispatch(sub);

  ExperimentOutput out;
  out.table.header = {"name", "value", "second_value", "rel_diff"};
  for (const auto& [name, v1] : first.constants) {
    double v2 = second.constants.at(name);
    double rel = std::abs(v1 - v2) / std::max({std::abs(v1), std::abs(v2), 1e-300});
    out.table.rows.push_back(
        {name, format_double(v1), format_double(v2), format_double(rel)});
    if (rel > 0.10)
      throw Error(ErrorCode::CalibrationUnstable,
                  "pin: constant " + name + " differs " + format_double(rel * 100.0) +
                      "% between calibration runs");
  }

  PinnedConstants pins = PinnedConstants::load(cfg.pinned_path);
  pins.set(first.key, first.constants, cfg.params.value("timestamp", "2026-08-15T00:00:00Z"));
  pins.save(cfg.pinned_path);

  out.summary["target"] = target;
  out.summary["pinned_path"] = cfg.pinned_path;
  for (const auto& [name, v] : first.constants) out.constants[name] = v;
  out.key = first.key;
  ExperimentConfig echo_cfg = cfg;
  return finalize(echo_cfg, out);
}

}  // namespace tracephase
