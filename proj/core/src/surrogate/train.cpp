#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "pdml/surrogate/train.h"

namespace pdml::surrogate {

std::vector<DerivTerm> resolve_terms(const TrainConfig& cfg, int n_in, int n_out) {
  std::vector<DerivTerm> terms;
  switch (cfg.kind) {
    case LossKind::VML:
      return {};
    case LossKind::DML:
      terms = cfg.terms.empty() ? default_terms(n_in, n_out) : cfg.terms;
      break;
    case LossKind::PDML:
      terms = !cfg.terms.empty() ? cfg.terms : default_terms(n_in, n_out, cfg.pdml_pairs);
      break;
  }
  if (cfg.lambda_override >= 0) {
    for (auto& t : terms) t.lambda = cfg.lambda_override;
  }
  return terms;
}

Surrogate train(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& DY, const TrainConfig& cfg) {
  const Eigen::Index n = X.rows();
  if (n < 1) throw std::invalid_argument("training needs at least one sample");
  if (Y.rows() != n) throw std::invalid_argument("X and Y have different sample counts");
  if (cfg.batch_size == 0 || cfg.epochs == 0) throw std::invalid_argument("batch size and epochs must be positive");
  const int n_in = static_cast<int>(X.cols()), n_out = static_cast<int>(Y.cols());
  const auto terms = resolve_terms(cfg, n_in, n_out);
  bool need_dy = false;
  for (const auto& t : terms) need_dy = need_dy || t.lambda > 0;
  if (need_dy && (DY.rows() != n || DY.cols() != static_cast<Eigen::Index>(n_in) * n_out)) {
    throw std::invalid_argument("derivative loss requires DY with one column per output/input pair");
  }

  Surrogate s;
  s.scaler = Scaler::fit(X, Y);
  s.seed = cfg.init_seed;
  s.n_samples = static_cast<std::size_t>(n);
  const Eigen::MatrixXd Xs = s.scaler.apply_x(X);
  const Eigen::MatrixXd Ys = s.scaler.apply_y(Y);
  const Eigen::MatrixXd DYs = need_dy ? s.scaler.apply_dy(DY) : Eigen::MatrixXd();

  std::vector<int> sizes{n_in};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(n_out);
  s.net = MLPParams::glorot(sizes, cfg.act, cfg.init_seed);

  std::vector<double> theta = s.net.flatten();
  std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0), g;
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng(cfg.shuffle_seed);

  const std::size_t bs = std::min<std::size_t>(cfg.batch_size, static_cast<std::size_t>(n));
  const std::size_t n_batches = (static_cast<std::size_t>(n) + bs - 1) / bs;
  const double total_steps = static_cast<double>(cfg.epochs * n_batches);
  std::size_t step = 0;
  Batch batch;
  Surrogate last_good = s;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = perm.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
      std::swap(perm[i], perm[j]);
    }
    double epoch_loss = 0.0;
    for (std::size_t k = 0; k < n_batches; ++k) {
      const std::size_t lo = k * bs;
      const std::size_t hi = std::min(lo + bs, static_cast<std::size_t>(n));
      const auto m_rows = static_cast<Eigen::Index>(hi - lo);
      batch.X.resize(m_rows, n_in);
      batch.Y.resize(m_rows, n_out);
      if (need_dy) batch.DY.resize(m_rows, DYs.cols());
      for (Eigen::Index r = 0; r < m_rows; ++r) {
        const Eigen::Index src = perm[lo + static_cast<std::size_t>(r)];
        batch.X.row(r) = Xs.row(src);
        batch.Y.row(r) = Ys.row(src);
        if (need_dy) batch.DY.row(r) = DYs.row(src);
      }
      const LossValue lv = loss(s.net, batch, terms, &g);
      if (!std::isfinite(lv.total)) {
        throw TrainError("training diverged in epoch " + std::to_string(epoch) + ", batch " + std::to_string(k) +
                             " (loss is not finite)",
                         last_good);
      }
      epoch_loss += lv.total * static_cast<double>(m_rows);

      ++step;
      const double lr = cfg.cosine_decay
                            ? cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step - 1) / total_steps))
                            : cfg.lr;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t q = 0; q < theta.size(); ++q) {
        m[q] = cfg.beta1 * m[q] + (1.0 - cfg.beta1) * g[q];
        v[q] = cfg.beta2 * v[q] + (1.0 - cfg.beta2) * g[q] * g[q];
        theta[q] -= lr * (m[q] / c1) / (std::sqrt(v[q] / c2) + cfg.eps);
      }
      s.net.unflatten(theta);
    }
    s.loss_history.push_back(epoch_loss / static_cast<double>(n));
    last_good = s;
  }
  return s;
}

}  // namespace pdml::surrogate
