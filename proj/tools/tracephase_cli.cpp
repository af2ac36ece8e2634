#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "tracephase/harness.hpp"

using namespace tracephase;
using nlohmann::json;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::ConfigInvalid, "cannot read config file: " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
}

// Either a JSON field object or a bare comma-separated minimal polynomial,
// constant term first: "-2,0,1" is the quadratic with square 2.
json field_from_flag(const std::string& s) {
  if (!s.empty() && s.front() == '{') {
    try {
      return json::parse(s);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, std::string("field: ") + e.what());
    }
  }
  json mp = json::array();
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) mp.push_back(tok);
  if (mp.empty()) throw Error(ErrorCode::ConfigInvalid, "field: empty minpoly");
  return json{{"minpoly", mp}};
}

const std::map<std::string, std::string>& verb_help() {
  static const std::map<std::string, std::string> h = {
      {"field", "embeddings, trace form, and structure data of a number field"},
      {"phase", "evaluate a trace phase through both evaluation routes"},
      {"hfunc", "uniform derivative-size functional per embedding"},
      {"jfunc", "order >= 2 functional per embedding, or its stability ratio"},
      {"polydisc", "natural polydiscs around random centers with a Vitali selection"},
      {"cover", "grid-box membership of Taylor coefficient data"},
      {"integrate", "one oscillatory integral of a trace phase"},
      {"verify-main", "decay of the integral against the uniform functional"},
      {"sublevel", "sublevel-set measure sweep or derivative-zero witness"},
      {"tarry", "frequency classification, class measure, tail sums, sharpness"},
      {"pin", "calibrate empirical constants into the pinned fixture"},
  };
  return h;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trace phase experiments over number fields"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path, field_flag, out_dir, pinned_path;
  std::uint64_t seed = 42;
  int threads = 1;
  double tol = 1e-6;

  for (const auto& name : experiment_names()) {
    CLI::App* sub = app.add_subcommand(name, verb_help().at(name));
    sub->add_option("--config,-c", config_path, "JSON experiment config file")
        ->envname("TRACEPHASE_CONFIG");
    sub->add_option("--field,-f", field_flag,
                    "field as comma minpoly (constant first) or JSON object")
        ->envname("TRACEPHASE_FIELD");
    sub->add_option("--seed", seed, "RNG seed")->envname("TRACEPHASE_SEED");
    sub->add_option("--threads", threads, "worker threads")->envname("TRACEPHASE_THREADS");
    sub->add_option("--tol", tol, "quadrature tolerance")->envname("TRACEPHASE_TOL");
    sub->add_option("--out,-o", out_dir, "directory for CSV/JSON/manifest artifacts")
        ->envname("TRACEPHASE_OUT");
    sub->add_option("--pinned", pinned_path, "pinned constants fixture")
        ->envname("TRACEPHASE_PINNED");
  }

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();

  try {
    json doc = config_path.empty() ? json::object() : load_json_file(config_path);
    doc["experiment"] = sub->get_name();
    if (sub->count("--field")) doc["field"] = field_from_flag(field_flag);
    if (sub->count("--seed")) doc["seed"] = seed;
    if (sub->count("--threads")) doc["threads"] = threads;
    if (sub->count("--tol")) doc["tol"] = tol;
    if (sub->count("--out")) doc["out"] = out_dir;
    if (sub->count("--pinned")) doc["pinned"] = pinned_path;

    ExperimentConfig cfg = parse_config(doc);
    RunResult res = run(cfg);
    std::cout << res.summary.dump(2) << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "tracephase: " << e.what() << "\n";
    return (e.code == ErrorCode::ConfigInvalid || e.code == ErrorCode::ParseError) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "tracephase: unexpected: " << e.what() << "\n";
    return 3;
  }
}
