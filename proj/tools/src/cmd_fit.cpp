#include <cmath>
#include <limits>
#include <numeric>

#include "fulllik/errors.hpp"
#include "fulllik/rng.hpp"
#include "internal.hpp"

namespace fulllik::cli {
namespace {

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd") return OptimizerKind::sgd;
  throw InvalidArgument("optimizer must be 'adam' or 'sgd'");
}

std::vector<std::size_t> widths(const json& a) { return a.get<std::vector<std::size_t>>(); }

}  // namespace

void cmd_fit(RunContext& ctx) {
  const json& c = ctx.config;
  const auto seed = ctx.seed();
  auto src = load_data(c["data"], seed, c["target"], c["target_kind"]);
  const Family family = parse_family(c["likelihood"].get<std::string>());
  const std::string model_kind = c["model"];
  const std::string provider = c["provider"];
  const std::size_t n = src.data.rows(), d = src.data.cols();

  if (model_kind != "autoencoder" && src.data.target_kind == TargetKind::none)
    throw InvalidArgument("a " + model_kind + " model needs a target (--target)");
  if (family == Family::softmax && src.data.target_kind != TargetKind::classes)
    throw InvalidArgument("the softmax likelihood needs class targets");
  if (family != Family::softmax && src.data.target_kind == TargetKind::classes && model_kind != "autoencoder")
    throw InvalidArgument("class targets need the softmax likelihood");

  const double test_fraction = c["test_fraction"];
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw InvalidArgument("test fraction must lie in [0, 1)");
  if (provider == "data" && test_fraction > 0.0 && !c["transductive"].get<bool>())
    throw InvalidArgument("data parameters exist only for training rows; use --test-fraction 0 or --transductive");

  std::vector<std::size_t> train_rows(n), test_rows;
  std::iota(train_rows.begin(), train_rows.end(), std::size_t{0});
  if (test_fraction > 0.0) std::tie(train_rows, test_rows) = train_test_split(n, test_fraction, seed);
  Dataset all = c["standardize"].get<bool>() ? standardize(src.data, train_rows) : src.data;
  const Dataset train = all.subset(train_rows);
  const Dataset test = test_rows.empty() ? Dataset{} : all.subset(test_rows);

  Architecture arch;
  if (model_kind == "autoencoder") {
    const std::size_t code = c["code"].get<std::size_t>() ? c["code"].get<std::size_t>() : std::max<std::size_t>(1, d / 2);
    arch = Architecture::autoencoder(d, code, widths(c["hidden"]), c["dropout"]);
  } else {
    const std::size_t out = family == Family::softmax ? static_cast<std::size_t>(all.num_classes()) : 1;
    if (model_kind == "linear") arch = Architecture::linear(d, out);
    else if (model_kind == "mlp") arch = Architecture::mlp(d, widths(c["hidden"]), out);
    else throw InvalidArgument("model must be linear, mlp, or autoencoder");
  }
  const std::string init = c["init"];
  if (init != "glorot" && init != "he") throw InvalidArgument("init must be 'glorot' or 'he'");
  Model model(arch, init == "he" ? InitScheme::he : InitScheme::glorot_uniform, seed);

  LikelihoodSpec lik = LikelihoodSpec::make(family);
  const std::size_t dim = c["provider_dim"].get<std::size_t>() ? c["provider_dim"].get<std::size_t>() : arch.output;
  if (dim != 1 && dim != arch.output) throw InvalidArgument("provider dim must be 1 or the output width");
  const std::string head_input = c["head_input"];
  if (head_input != "features" && head_input != "representation")
    throw InvalidArgument("head input must be 'features' or 'representation'");
  if (head_input == "representation" && model_kind == "linear")
    throw InvalidArgument("a linear model has no representation layer for the head");
  std::size_t slot_index = 0;
  for (auto& slot : lik.slots) {
    const double init_value = slot.fixed_value;
    if (provider == "fixed") {
    } else if (provider == "global") {
      slot.make_global(init_value, dim);
    } else if (provider == "data") {
      slot.make_data(train.rows(), init_value, dim);
    } else if (provider == "predicted") {
      const bool rep = head_input == "representation";
      const std::size_t in = rep ? model.representation_width() : d;
      const Architecture head = c["head"] == "mlp" ? Architecture::mlp(in, widths(c["head_hidden"]), dim)
                                : c["head"] == "linear" ? Architecture::linear(in, dim)
                                                        : throw InvalidArgument("head must be 'linear' or 'mlp'");
      slot.make_predicted(head, c["isolated"], init_value,
                          Rng::derive(seed, "cli/head/" + std::to_string(slot_index)),
                          rep ? HeadInput::representation : HeadInput::features);
    } else {
      throw InvalidArgument("provider must be fixed, global, data, or predicted");
    }
    ++slot_index;
  }
  if (!c["freeze_sigma"].is_null()) lik.slot("sigma").freeze(c["freeze_sigma"].get<double>());
  for (const auto& item : c["freeze"]) {
    const std::string s = item;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--freeze expects name=value, got '" + s + "'");
    char* end = nullptr;
    const std::string value = s.substr(eq + 1);
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || *end != '\0') throw InvalidArgument("--freeze value is not a number: '" + s + "'");
    lik.slot(s.substr(0, eq)).freeze(v);
  }

  std::optional<PriorSpec> prior;
  const std::string prior_kind = c["prior"];
  if (prior_kind != "none") {
    if (prior_kind != "laplace" && prior_kind != "normal") throw InvalidArgument("prior must be none, laplace, or normal");
    const std::string g = c["prior_granularity"];
    if (g != "dynamic" && g != "multi") throw InvalidArgument("prior granularity must be 'dynamic' or 'multi'");
    prior.emplace(prior_kind == "laplace" ? PriorFamily::laplace : PriorFamily::normal,
                  g == "dynamic" ? PriorGranularity::dynamic : PriorGranularity::multi,
                  PriorSpec::non_bias_indices(model), c["prior_init"].get<double>());
  }

  FitConfig cfg;
  cfg.optimizer.kind = parse_optimizer(c["optimizer"]);
  cfg.optimizer.lr = c["lr"];
  cfg.steps = c["steps"];
  cfg.batch_size = c["batch_size"];
  const double clip = c["clip"];
  cfg.clip_norm = clip > 0.0 ? clip : std::numeric_limits<double>::infinity();
  cfg.likelihood_lr_multiplier = c["lik_multiplier"];
  if (!c["prior_multiplier"].is_null()) cfg.prior_lr_multiplier = c["prior_multiplier"].get<double>();
  if (!c["data_lr"].is_null()) cfg.data_lr = c["data_lr"].get<double>();
  cfg.weight_decay = c["weight_decay"];
  cfg.likelihood_decay = c["likelihood_decay"];
  cfg.trajectory_stride = c["trajectory_stride"];
  cfg.seed = seed;

  FitProblem pb;
  pb.model = &model;
  pb.likelihood = &lik;
  pb.prior = prior ? &*prior : nullptr;
  pb.train = &train;
  pb.test = test_rows.empty() ? nullptr : &test;
  const FitReport report = fit(pb, cfg);

  json doc;
  doc["schema"] = kReportSchema;
  doc["command"] = "fit";
  doc["data"] = {{"source", c["data"]},
                 {"rows", n},
                 {"features", d},
                 {"train_rows", train.rows()},
                 {"test_rows", test_rows.size()}};
  doc["model"] = arch.describe();
  doc["fit"] = fit_report_json(report);
  ctx.write_json("report.json", doc);

  std::string curve = "step,loss\n";
  for (std::size_t i = 0; i < report.trajectory.size(); ++i)
    curve += std::to_string(i * report.trajectory_stride) + "," + format_double(report.trajectory[i]) + "\n";
  ctx.write_text("loss_curve.csv", curve);
}

}  // namespace fulllik::cli
