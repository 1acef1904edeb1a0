#include "popvb/expfam.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "popvb/special.hpp"

namespace popvb {

namespace {

void require_size(const FamilyKind& family, std::span<const double> p) {
  if (p.size() != family.coordinate_count()) {
    throw std::invalid_argument("natural parameter has " + std::to_string(p.size()) +
                                " coordinates, family expects " +
                                std::to_string(family.coordinate_count()));
  }
}

void require_same_layout(const SuffStats& a, const SuffStats& b) {
  if (!(a.layout == b.layout) || a.values.size() != b.values.size()) {
    throw std::invalid_argument("sufficient statistics layout mismatch");
  }
}

double log_gamma_draw(double shape, std::mt19937_64& rng) {
  // Small shapes underflow in linear space; use Gamma(a) = Gamma(a + 1) * U^(1/a).
  if (shape < 1.0) {
    std::gamma_distribution<double> g(shape + 1.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double uu = u(rng);
    while (uu <= 0.0) uu = u(rng);
    return std::log(g(rng)) + std::log(uu) / shape;
  }
  std::gamma_distribution<double> g(shape, 1.0);
  return std::log(g(rng));
}

}  // namespace

FamilyKind::FamilyKind(Family tag, std::size_t dim, std::vector<double> precision)
    : tag_(tag), dim_(dim), precision_(std::move(precision)) {
  if (dim_ == 0) throw std::invalid_argument("family dimension must be at least 1");
  for (double t : precision_) {
    if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("precision must be positive");
  }
}

FamilyKind FamilyKind::dirichlet(std::size_t dim) { return {Family::kDirichlet, dim, {}}; }
FamilyKind FamilyKind::beta() { return {Family::kBeta, 1, {}}; }
FamilyKind FamilyKind::categorical(std::size_t dim) { return {Family::kCategorical, dim, {}}; }

FamilyKind FamilyKind::gaussian(std::vector<double> precision) {
  const auto d = precision.size();
  return {Family::kGaussianKnownPrecision, d, std::move(precision)};
}

FamilyKind FamilyKind::normal_mean(std::vector<double> precision) {
  const auto d = precision.size();
  return {Family::kNormalMean, d, std::move(precision)};
}

std::size_t FamilyKind::coordinate_count() const {
  switch (tag_) {
    case Family::kBeta:
      return 2;
    case Family::kNormalMean:
      return dim_ + 1;
    default:
      return dim_;
  }
}

NatParam::NatParam(FamilyKind f, std::vector<double> v) : family(std::move(f)), values(std::move(v)) {
  require_size(family, values);
}

Layout::Layout(std::vector<FamilyKind> blocks) {
  std::vector<std::size_t> offsets{0};
  offsets.reserve(blocks.size() + 1);
  for (const auto& b : blocks) offsets.push_back(offsets.back() + b.coordinate_count());
  blocks_ = std::make_shared<const std::vector<FamilyKind>>(std::move(blocks));
  offsets_ = std::make_shared<const std::vector<std::size_t>>(std::move(offsets));
}

std::span<const FamilyKind> Layout::blocks() const {
  if (!blocks_) return {};
  return *blocks_;
}

bool Layout::operator==(const Layout& other) const {
  if (blocks_ == other.blocks_) return true;
  if (!blocks_ || !other.blocks_) return block_count() == 0 && other.block_count() == 0;
  return *blocks_ == *other.blocks_;
}

SuffStats SuffStats::zeros(Layout layout) {
  SuffStats s;
  s.values.assign(layout.size(), 0.0);
  s.layout = std::move(layout);
  return s;
}

SuffStats SuffStats::zeros(const FamilyKind& family) { return zeros(Layout({family})); }

void validate(const FamilyKind& family, std::span<const double> p) {
  require_size(family, p);
  for (double v : p) {
    if (!std::isfinite(v)) throw std::domain_error("natural parameter is not finite");
  }
  switch (family.tag()) {
    case Family::kDirichlet:
    case Family::kBeta:
      for (double v : p) {
        if (!(v > 0.0)) {
          throw std::domain_error("Dirichlet/Beta coordinate must be positive, got " + std::to_string(v));
        }
      }
      break;
    case Family::kNormalMean:
      if (!(p.back() > 0.0)) {
        throw std::domain_error("NormalMean count coordinate must be positive, got " + std::to_string(p.back()));
      }
      break;
    default:
      break;
  }
}

std::size_t enforce_floor(const Layout& layout, std::span<double> values, double floor) {
  if (values.size() != layout.size()) throw std::invalid_argument("enforce_floor: layout mismatch");
  std::size_t clamped = 0;
  auto raise = [&](double& v) {
    if (v < floor) {
      v = floor;
      ++clamped;
    }
  };
  const auto blocks = layout.blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto block = values.subspan(layout.offset(b), blocks[b].coordinate_count());
    switch (blocks[b].tag()) {
      case Family::kDirichlet:
      case Family::kBeta:
        for (double& v : block) raise(v);
        break;
      case Family::kNormalMean:
        raise(block.back());
        break;
      default:
        break;
    }
  }
  return clamped;
}

double log_normalizer(const FamilyKind& family, std::span<const double> p) {
  validate(family, p);
  switch (family.tag()) {
    case Family::kDirichlet:
    case Family::kBeta: {
      double total = 0.0;
      double acc = 0.0;
      for (double v : p) {
        acc += log_gamma(v);
        total += v;
      }
      return acc - log_gamma(total);
    }
    case Family::kCategorical:
      return log_sum_exp(p);
    case Family::kGaussianKnownPrecision: {
      double acc = 0.0;
      for (std::size_t d = 0; d < p.size(); ++d) acc += p[d] * p[d] / (2.0 * family.precision()[d]);
      return acc;
    }
    case Family::kNormalMean: {
      const double n = p.back();
      double acc = 0.0;
      for (std::size_t d = 0; d < family.dim(); ++d) {
        const double tau = family.precision()[d];
        acc += p[d] * p[d] / (2.0 * tau * n) + 0.5 * std::log(2.0 * std::numbers::pi / (tau * n));
      }
      return acc;
    }
  }
  throw std::logic_error("unknown family");
}

void mean_params(const FamilyKind& family, std::span<const double> p, std::span<double> out) {
  validate(family, p);
  if (out.size() != p.size()) throw std::invalid_argument("mean_params output size mismatch");
  switch (family.tag()) {
    case Family::kDirichlet:
    case Family::kBeta: {
      const double psi_total = digamma(std::accumulate(p.begin(), p.end(), 0.0));
      for (std::size_t k = 0; k < p.size(); ++k) out[k] = digamma(p[k]) - psi_total;
      return;
    }
    case Family::kCategorical: {
      const double lse = log_sum_exp(p);
      for (std::size_t k = 0; k < p.size(); ++k) out[k] = std::exp(p[k] - lse);
      return;
    }
    case Family::kGaussianKnownPrecision:
      for (std::size_t d = 0; d < p.size(); ++d) out[d] = p[d] / family.precision()[d];
      return;
    case Family::kNormalMean: {
      const double n = p.back();
      double neg_a = 0.0;
      for (std::size_t d = 0; d < family.dim(); ++d) {
        const double tau = family.precision()[d];
        out[d] = p[d] / (tau * n);
        neg_a -= p[d] * p[d] / (2.0 * tau * n * n) + 0.5 / n;
      }
      out[family.dim()] = neg_a;
      return;
    }
  }
}

double log_normalizer(const NatParam& p) { return log_normalizer(p.family, p.values); }

std::vector<double> mean_params(const NatParam& p) {
  std::vector<double> out(p.values.size());
  mean_params(p.family, p.values, out);
  return out;
}

SuffStats combine_stats(const SuffStats& a, const SuffStats& b) {
  SuffStats out = a;
  accumulate_stats(out, b);
  return out;
}

void accumulate_stats(SuffStats& into, const SuffStats& b) {
  require_same_layout(into, b);
  for (std::size_t i = 0; i < into.values.size(); ++i) into.values[i] += b.values[i];
  into.weight += b.weight;
}

SuffStats scale_stats(const SuffStats& s, double c) {
  if (!(c >= 0.0) || !std::isfinite(c)) {
    throw std::invalid_argument("scale factor must be nonnegative, got " + std::to_string(c));
  }
  SuffStats out = s;
  for (double& v : out.values) v *= c;
  out.weight *= c;
  return out;
}

double log_density(const NatParam& p, std::span<const double> x) {
  const FamilyKind& f = p.family;
  const double a = log_normalizer(p);
  switch (f.tag()) {
    case Family::kDirichlet: {
      if (x.size() != f.dim()) throw std::domain_error("Dirichlet observation has wrong dimension");
      double sum = 0.0;
      double acc = -a;
      for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(x[k] > 0.0)) throw std::domain_error("Dirichlet observation outside the open simplex");
        sum += x[k];
        acc += (p.values[k] - 1.0) * std::log(x[k]);
      }
      if (std::abs(sum - 1.0) > 1e-9) throw std::domain_error("Dirichlet observation does not sum to 1");
      return acc;
    }
    case Family::kBeta: {
      if (x.size() != 1 || !(x[0] > 0.0 && x[0] < 1.0)) {
        throw std::domain_error("Beta observation must be a single value in (0, 1)");
      }
      return (p.values[0] - 1.0) * std::log(x[0]) + (p.values[1] - 1.0) * std::log1p(-x[0]) - a;
    }
    case Family::kCategorical:
      throw std::domain_error("categorical observations are indices");
    case Family::kGaussianKnownPrecision: {
      if (x.size() != f.dim()) throw std::domain_error("Gaussian observation has wrong dimension");
      double acc = 0.0;
      for (std::size_t d = 0; d < x.size(); ++d) {
        if (!std::isfinite(x[d])) throw std::domain_error("Gaussian observation is not finite");
        const double tau = f.precision()[d];
        const double mean = p.values[d] / tau;
        const double diff = x[d] - mean;
        acc += 0.5 * std::log(tau / (2.0 * std::numbers::pi)) - 0.5 * tau * diff * diff;
      }
      return acc;
    }
    case Family::kNormalMean: {
      if (x.size() != f.dim()) throw std::domain_error("NormalMean observation has wrong dimension");
      const double n = p.values.back();
      double acc = -a;
      for (std::size_t d = 0; d < x.size(); ++d) {
        if (!std::isfinite(x[d])) throw std::domain_error("NormalMean observation is not finite");
        acc += p.values[d] * x[d] - 0.5 * n * f.precision()[d] * x[d] * x[d];
      }
      return acc;
    }
  }
  throw std::logic_error("unknown family");
}

double log_density(const NatParam& p, std::size_t category) {
  if (p.family.tag() != Family::kCategorical) {
    throw std::domain_error("index observations require a categorical family");
  }
  if (category >= p.family.dim()) {
    throw std::domain_error("category " + std::to_string(category) + " outside support of size " +
                            std::to_string(p.family.dim()));
  }
  return p.values[category] - log_normalizer(p);
}

double kl_divergence(const FamilyKind& family, std::span<const double> q, std::span<const double> p) {
  std::vector<double> grad(q.size());
  mean_params(family, q, grad);
  double acc = log_normalizer(family, p) - log_normalizer(family, q);
  for (std::size_t i = 0; i < q.size(); ++i) acc += (q[i] - p[i]) * grad[i];
  return acc;
}

void sample_statistic(const FamilyKind& family, std::span<const double> p, std::mt19937_64& rng,
                      std::span<double> out) {
  validate(family, p);
  if (out.size() != p.size()) throw std::invalid_argument("sample_statistic output size mismatch");
  switch (family.tag()) {
    case Family::kDirichlet:
    case Family::kBeta: {
      for (std::size_t k = 0; k < p.size(); ++k) out[k] = log_gamma_draw(p[k], rng);
      const double lse = log_sum_exp(out);
      for (double& v : out) v -= lse;
      return;
    }
    case Family::kCategorical: {
      std::vector<double> probs(p.size());
      mean_params(family, p, probs);
      std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
      const std::size_t k = pick(rng);
      for (std::size_t j = 0; j < out.size(); ++j) out[j] = j == k ? 1.0 : 0.0;
      return;
    }
    case Family::kGaussianKnownPrecision:
      for (std::size_t d = 0; d < p.size(); ++d) {
        const double tau = family.precision()[d];
        std::normal_distribution<double> n(p[d] / tau, 1.0 / std::sqrt(tau));
        out[d] = n(rng);
      }
      return;
    case Family::kNormalMean: {
      const double count = p.back();
      double neg_a = 0.0;
      for (std::size_t d = 0; d < family.dim(); ++d) {
        const double tau = family.precision()[d];
        std::normal_distribution<double> n(p[d] / (tau * count), 1.0 / std::sqrt(tau * count));
        out[d] = n(rng);
        neg_a -= 0.5 * tau * out[d] * out[d];
      }
      out[family.dim()] = neg_a;
      return;
    }
  }
}

}  // namespace popvb
