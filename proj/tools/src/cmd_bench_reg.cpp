#include <algorithm>
#include <cmath>
#include <limits>

#include "fulllik/errors.hpp"
#include "fulllik/linear_solvers.hpp"
#include "internal.hpp"
#include "svg.hpp"

namespace fulllik::cli {
namespace {

double squared_error(std::span<const double> w, std::span<const double> truth) {
  double s = 0.0;
  for (std::size_t j = 0; j < truth.size(); ++j) s += (w[j] - truth[j]) * (w[j] - truth[j]);
  return s;
}

struct LearnedPrior {
  std::string method;
  PriorFamily family;
  PriorGranularity granularity;
};

const LearnedPrior kMethods[] = {{"D-Ridge", PriorFamily::normal, PriorGranularity::dynamic},
                                 {"D-LASSO", PriorFamily::laplace, PriorGranularity::dynamic},
                                 {"M-LASSO", PriorFamily::laplace, PriorGranularity::multi}};

struct LearnedResult {
  double error = 0.0;
  double lambda = 0.0;  // fixed-penalty equivalent; median over weights for multi
  double sigma = 0.0;
};

// The penalty of the matching fixed-strength problem sum r^2 + lambda * pen(w):
// 2 sigma^2 / b for a Laplace prior, sigma^2 / s^2 for a normal prior.
LearnedResult fit_learned(const SparseLinearData& gen, const LearnedPrior& m, std::size_t steps, double lr,
                          std::uint64_t seed) {
  const std::size_t d = gen.data.cols();
  Model model(Architecture::linear(d, 1), InitScheme::glorot_uniform, seed);
  auto lik = LikelihoodSpec::make(Family::normal);
  lik.slot("sigma").make_global(1.0);
  PriorSpec prior(m.family, m.granularity, PriorSpec::non_bias_indices(model));
  FitConfig cfg;
  cfg.optimizer.lr = lr;
  cfg.steps = steps;
  cfg.likelihood_lr_multiplier = 1.0;
  cfg.clip_norm = std::numeric_limits<double>::infinity();
  cfg.seed = seed;
  cfg.trajectory_stride = steps;
  const auto report = fit(model, lik, gen.data, cfg, nullptr, &prior);
  LearnedResult r;
  r.sigma = report.slots.front().mean;
  r.error = squared_error(model.weights().subspan(0, d), gen.true_weights);
  std::vector<double> lambdas;
  for (double s : prior.scales())
    lambdas.push_back(m.family == PriorFamily::laplace ? 2.0 * r.sigma * r.sigma / s : r.sigma * r.sigma / (s * s));
  std::sort(lambdas.begin(), lambdas.end());
  const std::size_t k = lambdas.size();
  r.lambda = k % 2 ? lambdas[k / 2] : 0.5 * (lambdas[k / 2 - 1] + lambdas[k / 2]);
  return r;
}

}  // namespace

void cmd_bench_reg(RunContext& ctx) {
  const json& c = ctx.config;
  const auto seed = ctx.seed();
  const std::size_t n = c["n"], d = c["d"], points = c["grid_points"], steps = c["steps"];
  const double density = c["density"], noise = c["noise"], lr = c["lr"];
  const double lmin = c["lambda_min"], lmax = c["lambda_max"];
  if (points < 2) throw InvalidArgument("grid needs at least two points");
  if (!(lmin > 0.0 && lmax > lmin)) throw InvalidArgument("grid bounds must satisfy 0 < lambda-min < lambda-max");

  const auto gen = gen_sparse_linear(n, d, density, noise, seed);
  const Dataset& ds = gen.data;

  // Grid: lambda = 0 (least squares) followed by the log grid.
  std::vector<double> grid{0.0};
  for (double l : log_grid(lmin, lmax, points)) grid.push_back(l);
  std::vector<double> ridge_err(grid.size()), lasso_err(grid.size());
  parallel_for(2 * grid.size(), ctx.threads(), [&](std::size_t t) {
    const std::size_t i = t / 2;
    if (t % 2 == 0) {
      ridge_err[i] = squared_error(ridge(ds.features, ds.targets, grid[i]).weights, gen.true_weights);
    } else {
      const auto fit = grid[i] == 0.0 ? ols(ds.features, ds.targets) : lasso(ds.features, ds.targets, grid[i]);
      lasso_err[i] = squared_error(fit.weights, gen.true_weights);
    }
  });

  std::vector<LearnedResult> learned(std::size(kMethods));
  parallel_for(learned.size(), ctx.threads(),
               [&](std::size_t k) { learned[k] = fit_learned(gen, kMethods[k], steps, lr, seed); });

  const auto sparsities = c["sparsities"].get<std::vector<double>>();
  struct SweepRow {
    double grid_lambda = 0, grid_error = 0, d_lambda = 0, d_error = 0, m_error = 0;
  };
  std::vector<SweepRow> sweep(sparsities.size());
  parallel_for(sparsities.size(), ctx.threads(), [&](std::size_t i) {
    const auto g = gen_sparse_linear(n, d, sparsities[i], noise, seed);
    SweepRow row;
    row.grid_error = std::numeric_limits<double>::infinity();
    for (double l : log_grid(lmin, lmax, points)) {
      const double e = squared_error(lasso(g.data.features, g.data.targets, l).weights, g.true_weights);
      if (e < row.grid_error) {
        row.grid_error = e;
        row.grid_lambda = l;
      }
    }
    const auto dl = fit_learned(g, kMethods[1], steps, lr, seed);
    row.d_lambda = dl.lambda;
    row.d_error = dl.error;
    row.m_error = fit_learned(g, kMethods[2], steps, lr, seed).error;
    sweep[i] = row;
  });

  std::string csv = "lambda,ridge_error,lasso_error\n";
  for (std::size_t i = 0; i < grid.size(); ++i)
    csv += format_double(grid[i]) + "," + format_double(ridge_err[i]) + "," + format_double(lasso_err[i]) + "\n";
  ctx.write_text("lambda_sweep.csv", csv);

  std::string dyn = "method,lambda,error\n";
  for (std::size_t k = 0; k < learned.size(); ++k)
    dyn += kMethods[k].method + "," + format_double(learned[k].lambda) + "," + format_double(learned[k].error) + "\n";
  ctx.write_text("dynamic.csv", dyn);

  if (!sweep.empty()) {
    std::string sw = "density,grid_lambda,grid_error,d_lasso_lambda,d_lasso_error,m_lasso_error\n";
    for (std::size_t i = 0; i < sweep.size(); ++i)
      sw += format_double(sparsities[i]) + "," + format_double(sweep[i].grid_lambda) + "," +
            format_double(sweep[i].grid_error) + "," + format_double(sweep[i].d_lambda) + "," +
            format_double(sweep[i].d_error) + "," + format_double(sweep[i].m_error) + "\n";
    ctx.write_text("sparsity_sweep.csv", sw);
  }

  Chart chart;
  chart.title = "Recovery error vs regularization strength";
  chart.x_label = "lambda";
  chart.y_label = "squared recovery error";
  chart.log_x = true;
  chart.log_y = true;
  Series ridge_s{"Ridge grid", {}, false}, lasso_s{"LASSO grid", {}, false};
  for (std::size_t i = 1; i < grid.size(); ++i) {
    ridge_s.points.emplace_back(grid[i], ridge_err[i]);
    lasso_s.points.emplace_back(grid[i], lasso_err[i]);
  }
  chart.series = {ridge_s, lasso_s};
  for (std::size_t k = 0; k < learned.size(); ++k)
    chart.series.push_back({kMethods[k].method, {{learned[k].lambda, learned[k].error}}, true});
  ctx.write_text("bench_reg.svg", render_svg(chart));

  auto min_of = [&](const std::vector<double>& e) {
    std::size_t best = 1;
    for (std::size_t i = 1; i < e.size(); ++i)
      if (e[i] < e[best]) best = i;
    return json{{"lambda", grid[best]}, {"error", number(e[best])}};
  };
  json doc;
  doc["schema"] = kReportSchema;
  doc["command"] = "bench-reg";
  doc["least_squares_error"] = number(lasso_err[0]);
  doc["ridge_grid_best"] = min_of(ridge_err);
  doc["lasso_grid_best"] = min_of(lasso_err);
  json dynamic = json::object();
  for (std::size_t k = 0; k < learned.size(); ++k)
    dynamic[kMethods[k].method] = {{"error", number(learned[k].error)},
                                   {"lambda", number(learned[k].lambda)},
                                   {"sigma", number(learned[k].sigma)}};
  doc["learned"] = dynamic;
  ctx.write_json("report.json", doc);
}

}  // namespace fulllik::cli
