#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "fulllik/errors.hpp"
#include "fulllik_cli/cli.hpp"
#include "internal.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#ifndef FULLLIK_VERSION
#define FULLLIK_VERSION "unknown"
#endif

namespace fulllik::cli {
namespace {

enum class Type { integer, real, optional_real, text, boolean, integer_list, real_list, text_list };

struct Option {
  std::string flag;  // without leading dashes
  Type type;
  json value;        // default
  std::string help;
};

std::string key_of(const std::string& flag) {
  std::string k = flag;
  for (auto& ch : k)
    if (ch == '-') ch = '_';
  return k;
}

const std::vector<Option>& options(const std::string& command) {
  static const std::map<std::string, std::vector<Option>> table = {
      {"fit",
       {{"data", Type::text, "gen:sparse_linear", "CSV path or gen:<name>?k=v&..."},
        {"target", Type::text, "", "CSV target column (empty: none)"},
        {"target-kind", Type::text, "real", "real | classes"},
        {"model", Type::text, "linear", "linear | mlp | autoencoder"},
        {"hidden", Type::integer_list, json::array({16}), "hidden widths (mlp, autoencoder)"},
        {"code", Type::integer, 0, "autoencoder code width (0: half the features)"},
        {"dropout", Type::real, 0.0, "autoencoder dropout before the code"},
        {"init", Type::text, "glorot", "glorot | he"},
        {"likelihood", Type::text, "normal", "normal | laplace | softmax | robust"},
        {"provider", Type::text, "global", "fixed | global | data | predicted"},
        {"provider-dim", Type::integer, 1, "parameters per row (0: one per output)"},
        {"head", Type::text, "linear", "predicted head: linear | mlp"},
        {"head-hidden", Type::integer_list, json::array({16}), "predicted head hidden widths"},
        {"head-input", Type::text, "features", "features | representation"},
        {"isolated", Type::boolean, false, "stop head gradients at the head input"},
        {"freeze-sigma", Type::optional_real, nullptr, "freeze the sigma slot at this value"},
        {"freeze", Type::text_list, json::array(), "freeze slots: name=value,..."},
        {"prior", Type::text, "none", "none | laplace | normal"},
        {"prior-granularity", Type::text, "dynamic", "dynamic | multi"},
        {"prior-init", Type::real, 1.0, "initial prior scale"},
        {"optimizer", Type::text, "adam", "adam | sgd"},
        {"lr", Type::real, 1e-3, "model learning rate"},
        {"steps", Type::integer, 3000, "optimizer steps"},
        {"batch-size", Type::integer, 0, "minibatch rows (0: full batch)"},
        {"clip", Type::real, 1.0, "global gradient-norm clip (<= 0: off)"},
        {"lik-multiplier", Type::real, 0.1, "likelihood lr multiplier"},
        {"prior-multiplier", Type::optional_real, nullptr, "prior lr multiplier"},
        {"data-lr", Type::optional_real, nullptr, "data-parameter lr"},
        {"weight-decay", Type::real, 0.0, "model weight decay"},
        {"likelihood-decay", Type::real, 0.0, "likelihood parameter decay"},
        {"trajectory-stride", Type::integer, 1, "record the loss every this many steps"},
        {"test-fraction", Type::real, 0.2, "held-out fraction (0: none)"},
        {"transductive", Type::boolean, false, "allow data parameters with a test split"},
        {"standardize", Type::boolean, true, "standardize features on the training rows"}}},
      {"bench-reg",
       {{"n", Type::integer, 200, "rows"},
        {"d", Type::integer, 100, "features"},
        {"density", Type::real, 0.1, "fraction of nonzero true weights"},
        {"noise", Type::real, 2.4, "target noise standard deviation"},
        {"grid-points", Type::integer, 25, "log-grid points"},
        {"lambda-min", Type::real, 0.1, "smallest grid lambda"},
        {"lambda-max", Type::real, 1e4, "largest grid lambda"},
        {"steps", Type::integer, 4000, "steps for the learned-prior fits"},
        {"lr", Type::real, 0.01, "learning rate for the learned-prior fits"},
        {"sparsities", Type::real_list, json::array(), "densities for the sparsity sweep"}}},
      {"outliers",
       {{"data", Type::text, "gen:contaminated_gaussian", "CSV path or gen:<name>?k=v&..."},
        {"label-column", Type::text, "", "CSV column with 0/1 outlier labels"},
        {"detectors", Type::text_list, json::array({"pca_s", "pca_baseline"}),
         "pca_s, ae_s, pca_baseline, ae_baseline"},
        {"code", Type::integer, 0, "code width (0: a quarter of the features)"},
        {"steps", Type::integer, 0, "optimizer steps (0: detector default)"},
        {"lr", Type::optional_real, nullptr, "model learning rate"},
        {"data-lr", Type::optional_real, nullptr, "per-row scale learning rate"},
        {"svd-warm-start", Type::boolean, false, "start the PCA kinds from the top singular vectors"},
        {"standardize", Type::boolean, true, "standardize features first"}}},
      {"recalibrate",
       {{"data", Type::text, "gen:blobs?n=2300&d=10&classes=4&spread=0.7", "CSV path or gen:<name>?k=v&..."},
        {"target", Type::text, "", "CSV target column"},
        {"target-kind", Type::text, "classes", "real | classes"},
        {"train-rows", Type::integer, 300, "rows used to train the base model"},
        {"validation-rows", Type::integer, 1000, "rows used to fit the calibrators"},
        {"hidden", Type::integer, 100, "base model hidden width"},
        {"base-steps", Type::integer, 200, "base model steps"},
        {"base-lr", Type::real, 0.01, "base model learning rate"},
        {"steps", Type::integer, 2000, "calibrator steps"},
        {"lr", Type::real, 0.01, "calibrator learning rate"},
        {"bins", Type::integer, 15, "ECE bins"},
        {"levels", Type::integer, 10, "CAL levels"}}},
      {"plot",
       {{"input", Type::text, "", "CSV file to plot"},
        {"x", Type::text, "", "x column"},
        {"y", Type::text_list, json::array(), "y columns"},
        {"series", Type::text, "", "column splitting rows into series"},
        {"log-x", Type::boolean, false, "logarithmic x axis"},
        {"log-y", Type::boolean, false, "logarithmic y axis"},
        {"title", Type::text, "", "chart title"},
        {"name", Type::text, "", "output file name (default: <input stem>.svg)"}}},
  };
  const auto it = table.find(command);
  if (it == table.end()) throw InvalidArgument("unknown command '" + command + "'");
  return it->second;
}

bool type_matches(Type t, const json& v) {
  auto all = [&](auto pred) {
    if (!v.is_array()) return false;
    for (const auto& e : v)
      if (!pred(e)) return false;
    return true;
  };
  auto count = [](const json& e) { return e.is_number_unsigned() || (e.is_number_integer() && e.get<long long>() >= 0); };
  switch (t) {
    case Type::integer: return count(v);
    case Type::real: return v.is_number();
    case Type::optional_real: return v.is_number() || v.is_null();
    case Type::text: return v.is_string();
    case Type::boolean: return v.is_boolean();
    case Type::integer_list: return all(count);
    case Type::real_list: return all([](const json& e) { return e.is_number(); });
    case Type::text_list: return all([](const json& e) { return e.is_string(); });
  }
  return false;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::uint64_t parse_count(const std::string& s, const std::string& flag) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || s[0] == '-') throw InvalidArgument("--" + flag + " expects a count, got '" + s + "'");
  return v;
}

double parse_real(const std::string& s, const std::string& flag) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw InvalidArgument("--" + flag + " expects a number, got '" + s + "'");
  return v;
}

json convert(const Option& o, const std::string& raw) {
  switch (o.type) {
    case Type::integer: return parse_count(raw, o.flag);
    case Type::real:
    case Type::optional_real: return parse_real(raw, o.flag);
    case Type::text: return raw;
    case Type::boolean: return raw == "true";
    case Type::integer_list: {
      json a = json::array();
      for (const auto& s : split_commas(raw)) a.push_back(parse_count(s, o.flag));
      return a;
    }
    case Type::real_list: {
      json a = json::array();
      for (const auto& s : split_commas(raw)) a.push_back(parse_real(s, o.flag));
      return a;
    }
    case Type::text_list: {
      json a = json::array();
      for (const auto& s : split_commas(raw)) a.push_back(s);
      return a;
    }
  }
  return nullptr;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot open '" + path.string() + "'");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

bool is_manifest(const json& j) { return j.is_object() && j.contains("command") && j.contains("config"); }

}  // namespace

namespace {

std::string describe(const std::string& command) {
  if (command == "fit") return "fit a model with learned likelihood parameters";
  if (command == "bench-reg") return "regularization benchmark: lambda grid vs learned priors";
  if (command == "outliers") return "reconstruction-based outlier detection";
  if (command == "recalibrate") return "post-hoc recalibration comparison";
  if (command == "plot") return "render a CSV as an SVG line chart";
  return "";
}

}  // namespace

std::vector<std::string> command_names() { return {"fit", "bench-reg", "outliers", "recalibrate", "plot"}; }

json default_config(const std::string& command) {
  json c = json::object();
  for (const auto& o : options(command)) c[key_of(o.flag)] = o.value;
  c["seed"] = 0;
  c["threads"] = 1;
  return c;
}

json resolve_config(const std::string& command, const json& overrides) {
  if (!overrides.is_object()) throw InvalidArgument("config must be a JSON object");
  json c = default_config(command);
  for (const auto& [k, v] : overrides.items()) {
    if (!c.contains(k)) throw InvalidArgument("unknown config key '" + k + "' for " + command);
    bool ok = false;
    if (k == "seed" || k == "threads") {
      ok = type_matches(Type::integer, v);
    } else {
      for (const auto& o : options(command))
        if (key_of(o.flag) == k) ok = type_matches(o.type, v);
    }
    if (!ok) throw InvalidArgument("config key '" + k + "' has the wrong type");
    c[k] = v;
  }
  if (c["threads"].get<std::size_t>() == 0) throw InvalidArgument("threads must be >= 1");
  return c;
}

std::vector<std::string> run_command(const std::string& command, const json& config,
                                     const std::filesystem::path& out_dir) {
  RunContext ctx;
  ctx.config = resolve_config(command, config);
  ctx.out = out_dir;
  std::filesystem::create_directories(out_dir);
  if (command == "fit") cmd_fit(ctx);
  else if (command == "bench-reg") cmd_bench_reg(ctx);
  else if (command == "outliers") cmd_outliers(ctx);
  else if (command == "recalibrate") cmd_recalibrate(ctx);
  else if (command == "plot") cmd_plot(ctx);
  else throw InvalidArgument("unknown command '" + command + "'");

  json manifest;
  manifest["schema"] = kManifestSchema;
  manifest["version"] = FULLLIK_VERSION;
  manifest["command"] = command;
  manifest["seed"] = ctx.seed();
  manifest["config"] = ctx.config;
  manifest["artifacts"] = ctx.artifacts;
  ctx.write_json("manifest.json", manifest);
  return ctx.artifacts;
}

std::vector<std::string> replay(const std::filesystem::path& manifest, const std::filesystem::path& out_dir) {
  const json m = read_json(manifest);
  if (!is_manifest(m) || !m["command"].is_string()) throw SchemaError(manifest.string() + " is not a run manifest");
  if (m.contains("schema") && m["schema"] != kManifestSchema)
    throw SchemaError("unsupported manifest schema " + m["schema"].dump());
  return run_command(m["command"].get<std::string>(), m["config"], out_dir);
}

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Training loops churn through same-sized matrices; keep freed memory
  // instead of returning it to the kernel every step.
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
#endif
  CLI::App app{"Full-likelihood model fitting toolkit"};
  app.set_version_flag("--version", std::string(FULLLIK_VERSION));
  app.require_subcommand(1);

  struct Parsed {
    CLI::App* sub = nullptr;
    std::vector<std::string> raw;
    std::vector<int> flags;  // boolean options: -1 unset, 0 false, 1 true
  };
  std::map<std::string, Parsed> parsed;
  std::string out_dir, config_path, manifest_path;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  for (const auto& name : command_names()) {
    auto& p = parsed[name];
    p.sub = app.add_subcommand(name, describe(name));
    const auto& opts = options(name);
    p.raw.resize(opts.size());
    p.flags.assign(opts.size(), -1);
    for (std::size_t i = 0; i < opts.size(); ++i) {
      const auto& o = opts[i];
      if (o.type == Type::boolean) {
        p.sub->add_flag_callback("--" + o.flag, [&p, i] { p.flags[i] = 1; }, o.help);
        p.sub->add_flag_callback("--no-" + o.flag, [&p, i] { p.flags[i] = 0; }, "disable --" + o.flag);
      } else {
        p.sub->add_option("--" + o.flag, p.raw[i], o.help);
      }
    }
    p.sub->add_option("--seed", seed, "random seed");
    p.sub->add_option("--threads", threads, "worker threads");
    p.sub->add_option("--out", out_dir, "output directory")->required();
    p.sub->add_option("--config", config_path, "JSON config or run manifest (overrides flags)");
  }
  auto* rp = app.add_subcommand("replay", "re-run a manifest");
  rp->add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required();
  rp->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    std::vector<std::string> written;
    if (rp->parsed()) {
      written = replay(manifest_path, out_dir);
    } else {
      std::string command;
      for (auto& [name, p] : parsed)
        if (p.sub->parsed()) command = name;
      auto& p = parsed[command];
      const auto& opts = options(command);
      json overrides = json::object();
      for (std::size_t i = 0; i < opts.size(); ++i) {
        const auto key = key_of(opts[i].flag);
        if (opts[i].type == Type::boolean) {
          if (p.flags[i] >= 0) overrides[key] = p.flags[i] == 1;
        } else if (p.sub->count("--" + opts[i].flag) > 0) {
          overrides[key] = convert(opts[i], p.raw[i]);
        }
      }
      if (p.sub->count("--seed") > 0) overrides["seed"] = seed;
      if (p.sub->count("--threads") > 0) overrides["threads"] = threads;
      if (!config_path.empty()) {
        const json file = read_json(config_path);
        if (is_manifest(file) && file["command"] != command)
          throw InvalidArgument("manifest was written by '" + file["command"].get<std::string>() + "'");
        for (const auto& [k, v] : (is_manifest(file) ? file["config"] : file).items()) overrides[k] = v;
      }
      written = run_command(command, overrides, out_dir);
    }
    for (const auto& a : written) std::cout << (std::filesystem::path(out_dir) / a).string() << '\n';
    return 0;
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace fulllik::cli
