// ccrn: rate regions, simulations and the deviation study from the command line.

#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccrn/errors.hpp"
#include "ccrn/experiments.hpp"
#include "ccrn/model_io.hpp"
#include "ccrn/region.hpp"

using namespace ccrn;
using json = nlohmann::ordered_json;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kPrecondition = 3, kInternal = 4 };

struct Options {
  std::string model_path;
  std::optional<nlohmann::json> inline_model;
  std::string alg = "alg1";
  std::optional<double> g, s, u;
  std::optional<std::size_t> k1, k2;
  std::optional<double> r1, r2;
  std::optional<std::uint64_t> n;
  std::string n_list = "10000,20000,50000,100000,200000";
  std::size_t seeds = 20;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  std::string out;
  std::string summary;
  std::string format = "json";
  std::string trace;
  std::size_t payload_len = 8;
  std::size_t r1_points = 21;
  bool inner_total_time = false;
  std::string grid = "default";
  std::string r1_step = "fraction";
  std::string outer = "two-line";
};

ErasureModel resolve_model(const Options& o) {
  if (!o.model_path.empty()) return load_model(o.model_path);
  if (o.inline_model) return model_from_json(*o.inline_model);
  throw ConfigError("--model is required");
}

json model_source(const Options& o) {
  if (!o.model_path.empty()) return json(o.model_path);
  return o.inline_model ? json::parse(o.inline_model->dump()) : json();
}

MixParams mix_params(const Options& o) { return {o.g.value_or(0.0), o.s.value_or(0.0), o.u.value_or(0.0)}; }

// Output sink: the --out file or stdout.
class Sink {
public:
  explicit Sink(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path);
    if (!file_) throw ConfigError("cannot write " + path);
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
  std::ofstream file_;
};

std::uint64_t seed_or_generate(Options& o) {
  if (!o.seed) {
    std::random_device rd;
    o.seed = (std::uint64_t(rd()) << 32) ^ rd();
    std::cerr << "generated seed " << *o.seed << '\n';
  }
  return *o.seed;
}

std::vector<std::uint64_t> parse_n_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size() || v < 1.0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::uint64_t>(std::llround(v)));
    } catch (const std::exception&) {
      throw ConfigError("bad --n-list entry '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("--n-list is empty");
  return out;
}

RatePair required_rates(const Options& o) {
  if (!o.r1 || !o.r2) throw ConfigError("--r1 and --r2 are required");
  if (*o.r1 < 0.0 || *o.r2 < 0.0) throw ConfigError("rates must be nonnegative");
  return {*o.r1, *o.r2};
}

// --- subcommands ------------------------------------------------------------------------------

json cmd_classify(const Options& o) {
  const ErasureModel m = resolve_model(o);
  const CaseLabel c = classify_case(m);
  const auto k = region_coefficients(m);
  json j;
  j["case"] = to_string(c);
  j["B"] = 1.0 / k.c1;
  j["ratio_34"] = k.b;
  j["ratio_4"] = k.c;
  j["exact"] = m.has_exact();
  std::cout << j.dump(2) << '\n';
  return json::array();
}

json cmd_region(const Options& o) {
  const ErasureModel m = resolve_model(o);
  const CaseLabel c = classify_case(m);
  const double B = r1_upper_bound(m);
  if (o.r1_points < 2) throw ConfigError("--r1-points must be at least 2");
  json samples = json::array();
  for (std::size_t i = 0; i < o.r1_points; ++i) {
    const double R1 = B * double(i) / double(o.r1_points - 1);
    const double outer = outer_bound_max_r2(m, R1);
    const double inner = c == CaseLabel::Case3 ? inner_bound_max_r2(m, R1, {o.inner_total_time}) : outer;
    samples.push_back({{"R1", R1}, {"outer_R2", outer}, {"inner_R2", inner}});
  }
  Sink sink(o.out);
  if (o.format == "csv") {
    sink.stream() << "case,R1,outer_R2,inner_R2\n";
    for (const auto& s : samples)
      sink.stream() << to_string(c) << ',' << s["R1"].get<double>() << ',' << s["outer_R2"].get<double>() << ','
                    << s["inner_R2"].get<double>() << '\n';
  } else {
    json j;
    j["case"] = to_string(c);
    j["B"] = B;
    j["samples"] = samples;
    sink.stream() << j.dump(2) << '\n';
  }
  return o.out.empty() ? json::array() : json::array({o.out});
}

json cmd_simulate(Options& o) {
  SimConfig cfg;
  cfg.model = resolve_model(o);
  cfg.seed = seed_or_generate(o);
  cfg.payload_len = o.payload_len;
  cfg.deadline = o.n;
  if (o.k1 && o.k2) {
    cfg.k1 = *o.k1;
    cfg.k2 = *o.k2;
  } else if (o.n && o.r1 && o.r2) {
    std::tie(cfg.k1, cfg.k2) = packet_counts({*o.r1, *o.r2}, *o.n);
  } else {
    throw ConfigError("give --k1 and --k2, or --n with --r1 and --r2");
  }
  std::ofstream trace;
  if (!o.trace.empty()) {
    trace.open(o.trace);
    if (!trace) throw ConfigError("cannot write " + o.trace);
    cfg.trace = &trace;
  }
  auto policy = make_policy(o.alg, mix_params(o));
  const SimResult r = run_loop(cfg, *policy);
  json j = result_json(r);
  j["k1"] = cfg.k1;
  j["k2"] = cfg.k2;
  if (o.n) {
    j["n"] = *o.n;
    j["T_over_n"] = double(r.total_slots) / double(*o.n);
  }
  Sink sink(o.out);
  sink.stream() << j.dump(2) << '\n';
  json outputs = json::array();
  if (!o.out.empty()) outputs.push_back(o.out);
  if (!o.trace.empty()) outputs.push_back(o.trace);
  return outputs;
}

json cmd_sweep(Options& o) {
  RunSpec spec{resolve_model(o), required_rates(o), o.alg, mix_params(o), o.payload_len};
  const std::uint64_t seed = seed_or_generate(o);
  const auto rows = convergence_sweep(spec, parse_n_list(o.n_list), o.seeds, seed, o.jobs);
  Sink sink(o.out);
  if (o.format == "csv") {
    write_convergence_csv(sink.stream(), rows);
  } else {
    json arr = json::array();
    for (const auto& r : rows)
      arr.push_back({{"n", r.n},
                     {"seeds", r.seeds},
                     {"mean_T_over_n", r.mean_t_over_n},
                     {"stderr", r.stderr_t_over_n},
                     {"T_hat", r.t_hat},
                     {"deadline_met_frac", r.deadline_met_frac},
                     {"all_decoded", r.all_decoded}});
    sink.stream() << json{{"algorithm", o.alg}, {"R1", spec.rates.R1}, {"R2", spec.rates.R2}, {"rows", arr}}.dump(2)
                  << '\n';
  }
  return o.out.empty() ? json::array() : json::array({o.out});
}

GridSpec load_grid(const Options& o) {
  GridSpec g;
  if (o.grid != "default") {
    std::ifstream in(o.grid);
    if (!in) throw ConfigError("cannot open grid file " + o.grid);
    nlohmann::json j;
    try {
      in >> j;
      if (j.contains("values")) {
        g.values.clear();
        for (const auto& v : j["values"]) g.values.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      }
      g.r1_lo = j.value("r1_lo", g.r1_lo);
      g.r1_hi = j.value("r1_hi", g.r1_hi);
      g.r1_step = j.value("r1_step", g.r1_step);
      g.bin_width = j.value("bin_width", g.bin_width);
      g.hist_max = j.value("hist_max", g.hist_max);
      if (j.contains("restricted_thresholds")) g.restricted_thresholds = j["restricted_thresholds"].get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("grid file " + o.grid + ": " + e.what());
    }
  }
  if (o.r1_step == "absolute") g.step_rule = R1Step::Absolute;
  else if (o.r1_step != "fraction") throw ConfigError("--r1-step must be fraction or absolute");
  if (o.outer == "full") g.outer = OuterForm::Full;
  else if (o.outer != "two-line") throw ConfigError("--outer must be two-line or full");
  g.inner.impose_total_time = o.inner_total_time;
  g.validate();
  return g;
}

json cmd_deviation(const Options& o) {
  const GridSpec grid = load_grid(o);
  const DeviationResult res = deviation_study_parallel(grid, o.jobs);
  const json summary = summary_json(grid, res.summary);
  json outputs = json::array();
  if (!o.out.empty()) {
    Sink csv(o.out);
    write_deviation_csv(csv.stream(), res.records);
    outputs.push_back(o.out);
  }
  std::string summary_path = o.summary;
  if (summary_path.empty() && !o.out.empty()) summary_path = o.out + ".summary.json";
  Sink sum(summary_path);
  sum.stream() << summary.dump(2) << '\n';
  if (!summary_path.empty()) outputs.push_back(summary_path);
  return outputs;
}

// --- config files ------------------------------------------------------------------------------

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args)
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  return false;
}

// Merges a JSON config (or a manifest's "config" block) into the argument list. Flags given on
// the command line win.
void merge_config(std::vector<std::string>& args, Options& o) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  if (j.contains("subcommand") && j.contains("config")) j = j["config"];
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const std::string flag = "--" + key;
    if (has_flag(args, flag) || value.is_null()) continue;
    if (key == "model" && value.is_object()) {
      o.inline_model = value;
      continue;
    }
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
      continue;
    }
    args.push_back(flag);
    args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
  }
}

json resolved_config(const std::string& sub, const Options& o) {
  json c;
  if (sub != "deviation") c["model"] = model_source(o);
  auto opt = [&](const char* k, const auto& v) {
    if (v) c[k] = *v;
  };
  if (sub == "simulate" || sub == "sweep") {
    c["alg"] = o.alg;
    opt("g", o.g);
    opt("s", o.s);
    opt("u", o.u);
    opt("r1", o.r1);
    opt("r2", o.r2);
    opt("seed", o.seed);
    c["payload-len"] = o.payload_len;
  }
  if (sub == "simulate") {
    opt("k1", o.k1);
    opt("k2", o.k2);
    opt("n", o.n);
    if (!o.trace.empty()) c["trace"] = o.trace;
  }
  if (sub == "sweep") {
    c["n-list"] = o.n_list;
    c["seeds"] = o.seeds;
    c["jobs"] = o.jobs;
  }
  if (sub == "region") {
    c["r1-points"] = o.r1_points;
    c["inner-total-time"] = o.inner_total_time;
  }
  if (sub == "deviation") {
    c["grid"] = o.grid;
    c["r1-step"] = o.r1_step;
    c["outer"] = o.outer;
    c["inner-total-time"] = o.inner_total_time;
    c["jobs"] = o.jobs;
    if (!o.summary.empty()) c["summary"] = o.summary;
  }
  if (!o.out.empty()) c["out"] = o.out;
  if (sub == "region" || sub == "sweep") c["format"] = o.format;
  return c;
}

void print_error(int code, std::string_view kind, std::string_view message) {
  json e{{"error", {{"code", code}, {"kind", kind}, {"message", message}}}};
  std::cerr << e.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  std::vector<std::string> args(argv + 1, argv + argc);
  CLI::App app{"Rate regions and XOR coding simulations for a primary/secondary erasure network", "ccrn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CCRN_VERSION);

  auto add_model = [&](CLI::App* sub) { sub->add_option("--model", o.model_path, "Model JSON file"); };
  auto add_config = [&](CLI::App* sub) { sub->add_option("--config", "JSON config or manifest; flags win"); };
  auto add_alg = [&](CLI::App* sub) {
    sub->add_option("--alg", o.alg, "alg1 or alg2")->check(CLI::IsMember({"alg1", "alg2"}));
    sub->add_option("--g", o.g, "Algorithm 2: node-1 relay probability");
    sub->add_option("--s", o.s, "Algorithm 2: coding probability");
    sub->add_option("--u", o.u, "Algorithm 2: node-1 finish probability");
    sub->add_option("--seed", o.seed, "Random seed (generated and printed when absent)");
    sub->add_option("--payload-len", o.payload_len, "Payload bytes per packet")->check(CLI::PositiveNumber);
    sub->add_option("--r1", o.r1, "Primary rate R1");
    sub->add_option("--r2", o.r2, "Secondary rate R2");
  };

  auto* classify = app.add_subcommand("classify", "Print the model's case and B");
  add_model(classify);
  add_config(classify);

  auto* region = app.add_subcommand("region", "Outer and inner bound R2 over an R1 grid");
  add_model(region);
  add_config(region);
  region->add_option("--r1-points", o.r1_points, "Number of R1 samples in [0,B]");
  region->add_flag("--inner-total-time", o.inner_total_time, "Add the total-time inequality to the inner bound");
  region->add_option("--format", o.format)->check(CLI::IsMember({"json", "csv"}));
  region->add_option("--out", o.out, "Output file (default stdout)");

  auto* simulate = app.add_subcommand("simulate", "Run one simulation");
  add_model(simulate);
  add_config(simulate);
  add_alg(simulate);
  simulate->add_option("--k1", o.k1, "Primary packets");
  simulate->add_option("--k2", o.k2, "Secondary packets");
  simulate->add_option("--n", o.n, "Slot budget (deadline); with --r1/--r2 also sets k = ceil(n R)");
  simulate->add_option("--trace", o.trace, "JSON-lines per-slot trace file");
  simulate->add_option("--format", o.format)->check(CLI::IsMember({"json"}));
  simulate->add_option("--out", o.out, "Output file (default stdout)");

  auto* sweep = app.add_subcommand("sweep", "Mean T/n over seeds for several n");
  add_model(sweep);
  add_config(sweep);
  add_alg(sweep);
  sweep->add_option("--n-list", o.n_list, "Comma-separated slot budgets");
  sweep->add_option("--seeds", o.seeds, "Replicates per n")->check(CLI::PositiveNumber);
  sweep->add_option("--jobs", o.jobs, "Worker threads (0: all cores)");
  sweep->add_option("--format", o.format)->check(CLI::IsMember({"json", "csv"}));
  sweep->add_option("--out", o.out, "Output file (default stdout)");

  auto* dev = app.add_subcommand("deviation", "Inner/outer deviation study over an independent-erasure grid");
  add_config(dev);
  dev->add_option("--grid", o.grid, "\"default\" or a grid JSON file");
  dev->add_option("--r1-step", o.r1_step, "fraction (steps of 0.05 B) or absolute (steps of 0.05)");
  dev->add_option("--outer", o.outer, "two-line or full");
  dev->add_flag("--inner-total-time", o.inner_total_time, "Add the total-time inequality to the inner bound");
  dev->add_option("--jobs", o.jobs, "Worker threads (0: all cores)");
  dev->add_option("--out", o.out, "CSV output file");
  dev->add_option("--summary", o.summary, "Summary JSON (default <out>.summary.json, else stdout)");
  dev->add_option("--format", o.format)->check(CLI::IsMember({"csv", "json"}));

  const auto started = std::chrono::steady_clock::now();
  std::string sub;
  try {
    merge_config(args, o);
    std::vector<const char*> cargv{argv[0]};
    for (const auto& a : args) cargv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      throw ConfigError(e.what());
    }
    sub = app.get_subcommands().front()->get_name();
    if ((o.g || o.s || o.u) && o.alg != "alg2") throw ConfigError("--g, --s and --u require --alg alg2");
    try {
      mix_params(o).validate();
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }

    json outputs;
    if (sub == "classify") outputs = cmd_classify(o);
    else if (sub == "region") outputs = cmd_region(o);
    else if (sub == "simulate") outputs = cmd_simulate(o);
    else if (sub == "sweep") outputs = cmd_sweep(o);
    else outputs = cmd_deviation(o);

    json manifest;
    manifest["subcommand"] = sub;
    manifest["config"] = resolved_config(sub, o);
    manifest["seed"] = o.seed ? json(*o.seed) : json();
    manifest["version"] = CCRN_VERSION;
    manifest["outputs"] = outputs;
    manifest["wall_clock_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (!o.out.empty()) {
      std::ofstream mf(o.out + ".manifest.json");
      mf << manifest.dump(2) << '\n';
    } else {
      std::cerr << json{{"manifest", manifest}}.dump() << '\n';
    }
    return kOk;
  } catch (const ConfigError& e) {
    print_error(kConfig, "config", e.what());
    return kConfig;
  } catch (const PreconditionError& e) {
    print_error(kPrecondition, "precondition", e.what());
    return kPrecondition;
  } catch (const DomainError& e) {
    print_error(kPrecondition, "domain", e.what());
    return kPrecondition;
  } catch (const std::exception& e) {
    print_error(kInternal, "internal", e.what());
    return kInternal;
  }
}
