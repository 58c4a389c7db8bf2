#include "hapforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <fmt/format.h>

#include "hapforge/core/error.hpp"
#include "hapforge/io/formats.hpp"

namespace hapforge::metrics {

double mae(std::span<const double> pred, std::span<const double> truth) {
  require(pred.size() == truth.size(), ErrorKind::Length,
          fmt::format("cannot compare traces of length {} and {}", pred.size(), truth.size()));
  require(!pred.empty(), ErrorKind::Length, "cannot compare empty traces");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::fabs(pred[i] - truth[i]);
  return sum / static_cast<double>(pred.size());
}

double mae(const signals::FrictionTrace& pred, const signals::FrictionTrace& truth) {
  return mae(pred.samples(), truth.samples());
}

double mae_ratio(const signals::FrictionTrace& pred, const signals::FrictionTrace& truth) {
  const double m = signals::mean_friction(truth);
  require(m != 0.0, ErrorKind::Degenerate, "ground-truth mean is zero; MAE ratio undefined");
  return mae(pred, truth) / m;
}

namespace {

std::vector<double> gaussian_kernel(std::size_t n, double sigma) {
  std::vector<double> k(n);
  const double centre = 0.5 * static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(i) - centre;
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
  }
  const double s = std::accumulate(k.begin(), k.end(), 0.0);
  for (auto& v : k) v /= s;
  return k;
}

// Separable 'valid' filtering with the same 1-D kernel along both axes.
Grid<double> filter_valid(const Grid<double>& x, const std::vector<double>& k) {
  const std::size_t n = k.size();
  Grid<double> tmp(x.rows(), x.cols() - n + 1);
  for (std::size_t r = 0; r < tmp.rows(); ++r)
    for (std::size_t c = 0; c < tmp.cols(); ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += k[j] * x(r, c + j);
      tmp(r, c) = s;
    }
  Grid<double> out(x.rows() - n + 1, tmp.cols());
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += k[i] * tmp(r + i, c);
      out(r, c) = s;
    }
  return out;
}

Grid<double> product(const Grid<double>& a, const Grid<double>& b) {
  Grid<double> out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  return out;
}

}  // namespace

double ssim(const Grid<double>& a, const Grid<double>& b, const SsimParams& p) {
  require(a.same_shape(b), ErrorKind::Shape,
          fmt::format("SSIM needs equal shapes, got {}x{} and {}x{}", a.rows(), a.cols(), b.rows(), b.cols()));
  require(p.window >= 1 && p.sigma > 0.0 && p.dynamic_range > 0.0, ErrorKind::Parameter, "invalid SSIM parameters");
  require(a.rows() >= p.window && a.cols() >= p.window, ErrorKind::Shape,
          fmt::format("images must be at least {0}x{0} for SSIM", p.window));
  const auto k = gaussian_kernel(p.window, p.sigma);
  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);

  const Grid<double> mu_a = filter_valid(a, k);
  const Grid<double> mu_b = filter_valid(b, k);
  const Grid<double> e_aa = filter_valid(product(a, a), k);
  const Grid<double> e_bb = filter_valid(product(b, b), k);
  const Grid<double> e_ab = filter_valid(product(a, b), k);

  double sum = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a.data()[i], mb = mu_b.data()[i];
    const double va = e_aa.data()[i] - ma * ma;
    const double vb = e_bb.data()[i] - mb * mb;
    const double cov = e_ab.data()[i] - ma * mb;
    sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return sum / static_cast<double>(mu_a.size());
}

double incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, ErrorKind::Parameter, "incomplete beta needs positive shape parameters");
  require(x >= 0.0 && x <= 1.0, ErrorKind::Parameter, "incomplete beta argument must lie in [0,1]");
  if (x == 0.0 || x == 1.0) return x;
  // The continued fraction converges fast for x < (a+1)/(a+b+2); use symmetry otherwise.
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, 1.0 - x);

  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front) / a;

  // Modified Lentz evaluation of 1 / (1 + d1 / (1 + d2 / (1 + ...))).
  constexpr double tiny = 1e-300;
  double f = 1.0, c = 1.0, d = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const int m = i / 2;
    double num;
    if (i == 0) {
      num = 1.0;
    } else if (i % 2 == 0) {
      num = (m * (b - m) * x) / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
    } else {
      num = -((a + m) * (a + b + m) * x) / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
    }
    d = 1.0 + num * d;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    c = 1.0 + num / c;
    if (std::fabs(c) < tiny) c = tiny;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(1.0 - delta) < 1e-15) return front * (f - 1.0);
  }
  fail(ErrorKind::Degenerate, "incomplete beta continued fraction did not converge");
}

double student_t_two_sided_p(double t, double df) {
  require(df > 0.0, ErrorKind::Parameter, "degrees of freedom must be positive");
  if (!std::isfinite(t)) return 0.0;
  const double x = df / (df + t * t);
  return std::clamp(incomplete_beta(0.5 * df, 0.5, x), 0.0, 1.0);
}

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  require(a.size() >= 2 && b.size() >= 2, ErrorKind::Length, "each t-test sample needs at least 2 values");
  auto mean_var = [](std::span<const double> s) {
    // A constant sample must report exactly zero variance; summation rounding would not.
    if (std::all_of(s.begin(), s.end(), [&](double v) { return v == s.front(); })) return std::pair{s.front(), 0.0};
    const double m = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    double ss = 0.0;
    for (double v : s) ss += (v - m) * (v - m);
    return std::pair{m, ss / static_cast<double>(s.size() - 1)};
  };
  const auto [ma, va] = mean_var(a);
  const auto [mb, vb] = mean_var(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double sa = va / na, sb = vb / nb;
  if (sa + sb == 0.0) {
    require(ma == mb, ErrorKind::Degenerate, "both samples are constant with different means");
    return {0.0, na + nb - 2.0, 1.0};
  }
  TTestResult r;
  r.t = (ma - mb) / std::sqrt(sa + sb);
  r.df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

void EvalReport::validate() const {
  for (double v : {mae, mae_ratio, ssim_mean, t_statistic, p_value})
    require(std::isfinite(v), ErrorKind::Validation, "evaluation report holds a non-finite value");
  require(p_value >= 0.0 && p_value <= 1.0, ErrorKind::Validation, "p-value outside [0,1]");
}

void write_report(const std::filesystem::path& path, const EvalReport& r) {
  r.validate();
  io::write_record(path, {{"mae", io::format_real(r.mae)},
                          {"mae_ratio", io::format_real(r.mae_ratio)},
                          {"ssim_mean", io::format_real(r.ssim_mean)},
                          {"t_statistic", io::format_real(r.t_statistic)},
                          {"p_value", io::format_real(r.p_value)},
                          {"sample_count", std::to_string(r.sample_count)}});
}

EvalReport read_report(const std::filesystem::path& path) {
  const io::Record rec = io::read_record(path);
  auto get = [&](const char* key) {
    const auto it = rec.find(key);
    require(it != rec.end(), ErrorKind::Validation, path.string() + " lacks " + key);
    return it->second;
  };
  EvalReport r;
  r.mae = io::parse_real(get("mae"), "mae");
  r.mae_ratio = io::parse_real(get("mae_ratio"), "mae_ratio");
  r.ssim_mean = io::parse_real(get("ssim_mean"), "ssim_mean");
  r.t_statistic = io::parse_real(get("t_statistic"), "t_statistic");
  r.p_value = io::parse_real(get("p_value"), "p_value");
  r.sample_count = static_cast<std::size_t>(io::parse_integer(get("sample_count"), "sample_count"));
  r.validate();
  return r;
}

}  // namespace hapforge::metrics
