#include "fulllik/outliers.hpp"

#include <algorithm>

#include "fulllik/errors.hpp"
#include "fulllik/metrics.hpp"
#include "fulllik/rng.hpp"

namespace fulllik {

const char* to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::pca_s: return "pca_s";
    case DetectorKind::ae_s: return "ae_s";
    case DetectorKind::pca_baseline: return "pca_baseline";
    case DetectorKind::ae_baseline: return "ae_baseline";
  }
  return "?";
}

DetectorKind parse_detector(const std::string& s) {
  if (s == "pca_s") return DetectorKind::pca_s;
  if (s == "ae_s") return DetectorKind::ae_s;
  if (s == "pca_baseline") return DetectorKind::pca_baseline;
  if (s == "ae_baseline") return DetectorKind::ae_baseline;
  throw InvalidArgument("unknown detector '" + s + "'");
}

DetectorSpec DetectorSpec::defaults(DetectorKind kind, std::size_t features) {
  DetectorSpec s;
  s.kind = kind;
  s.code = std::max<std::size_t>(1, features / 4);
  s.hidden = {std::max<std::size_t>(2 * s.code, 8)};
  s.fit.steps = 3000;
  s.fit.optimizer.lr = 1e-2;
  // Scales must outrun the reconstruction, or a single extreme row gets fitted
  // by the first component before its scale can grow.
  s.fit.data_lr = 0.2;
  if (kind == DetectorKind::ae_s || kind == DetectorKind::ae_baseline) {
    s.fit.optimizer.lr = 5e-4;
    s.fit.data_lr = 0.02;
    s.fit.steps = 4000;
  }
  return s;
}

std::vector<double> pca_autoencoder_weights(const Matrix& x, std::size_t code) {
  const auto d = static_cast<std::size_t>(x.cols());
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mu;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  Eigen::MatrixXd v = svd.matrixV().leftCols(static_cast<Eigen::Index>(code));
  // Fix signs so the warm start does not depend on the SVD backend.
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index arg = 0;
    v.col(j).cwiseAbs().maxCoeff(&arg);
    if (v(arg, j) < 0.0) v.col(j) *= -1.0;
  }
  std::vector<double> w;
  w.reserve(2 * d * code + code + d);
  for (std::size_t i = 0; i < d; ++i)  // encoder W: d x code
    for (std::size_t j = 0; j < code; ++j) w.push_back(v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  const Eigen::RowVectorXd b1 = -(mu * v);
  for (std::size_t j = 0; j < code; ++j) w.push_back(b1(static_cast<Eigen::Index>(j)));
  for (std::size_t j = 0; j < code; ++j)  // decoder W: code x d
    for (std::size_t i = 0; i < d; ++i) w.push_back(v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  for (std::size_t i = 0; i < d; ++i) w.push_back(mu(static_cast<Eigen::Index>(i)));
  return w;
}

OutlierScores detect(const DetectorSpec& spec, const Dataset& data) {
  const std::size_t d = data.cols();
  const std::size_t n = data.rows();
  if (spec.code == 0 || spec.code >= d) throw InvalidArgument("code dimension must lie in [1, features)");
  if (n < 2) throw InvalidArgument("outlier detection needs at least two rows");
  if (spec.scale_dim != 1 && spec.scale_dim != d) throw InvalidArgument("scale dimension must be 1 or the feature count");

  const bool linear = spec.kind == DetectorKind::pca_s || spec.kind == DetectorKind::pca_baseline;
  const bool scaled = spec.kind == DetectorKind::pca_s || spec.kind == DetectorKind::ae_s;
  const Architecture arch = linear ? Architecture::autoencoder(d, spec.code)
                                   : Architecture::autoencoder(d, spec.code, spec.hidden, spec.dropout);
  Model model(arch, InitScheme::glorot_uniform, Rng::derive(spec.fit.seed, "outliers/init"));
  if (linear && spec.svd_warm_start) model.set_weights(pca_autoencoder_weights(data.features, spec.code));

  Dataset ds = data;
  ds.target_kind = TargetKind::none;
  LikelihoodSpec lik = LikelihoodSpec::make(Family::normal);
  if (scaled) lik.slot("sigma").make_data(n, 1.0, spec.scale_dim);

  FitProblem pb;
  pb.model = &model;
  pb.likelihood = &lik;
  pb.train = &ds;
  pb.task = Task::reconstruction;

  OutlierScores out;
  out.kind = spec.kind;
  out.report = fit(pb, spec.fit);

  const Matrix recon = model.forward(ds.features);
  out.reconstruction_error.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.reconstruction_error[i] =
        (recon.row(static_cast<Eigen::Index>(i)) - ds.features.row(static_cast<Eigen::Index>(i))).squaredNorm() /
        static_cast<double>(d);
  if (scaled) {
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    ParamRequest req;
    req.indices = rows;
    const Matrix sigma = lik.slot("sigma").provider->get_params(req);
    out.scores.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.scores[i] = sigma.row(static_cast<Eigen::Index>(i)).mean();
  } else {
    out.scores = out.reconstruction_error;
  }
  return out;
}

double evaluate_auc(const OutlierScores& scores, std::span<const int> labels) {
  if (labels.size() != scores.scores.size()) throw InvalidArgument("label count must match score count");
  return roc_auc(scores.scores, labels);
}

}  // namespace fulllik
