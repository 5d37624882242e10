#include "urbanpulse/forecaster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>

#include <Eigen/Dense>

#include "urbanpulse/error.hpp"

namespace urbanpulse {
namespace {

constexpr double kDaysPerMonth = 30.4375;

const std::array<double, kMinutesPerWeek>& cos_table() {
  static const auto table = [] {
    std::array<double, kMinutesPerWeek> t{};
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / kMinutesPerWeek);
    }
    return t;
  }();
  return table;
}

const std::array<double, kMinutesPerWeek>& sin_table() {
  static const auto table = [] {
    std::array<double, kMinutesPerWeek> t{};
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / kMinutesPerWeek);
    }
    return t;
  }();
  return table;
}

}  // namespace

HolidayCalendar HolidayCalendar::from_dates(const std::vector<std::string>& dates) {
  std::set<std::int64_t> days;
  for (const auto& d : dates) days.insert(parse_date(d));
  return HolidayCalendar(std::move(days));
}

double ForecastModel::trend(Minute t) const {
  const double u = static_cast<double>(t - origin) / time_scale;
  double v = intercept + slope * u;
  for (std::size_t j = 0; j < knots.size(); ++j) v += hinge[j] * std::max(0.0, u - knots[j]);
  return v;
}

std::vector<int> seasonal_harmonics(const ForecasterParams& params) {
  std::set<int> h;
  for (int k = 1; k <= params.fourier_order; ++k) h.insert(k);
  for (int k = 1; k <= params.daily_order; ++k) h.insert(7 * k);
  return {h.begin(), h.end()};
}

double ForecastModel::seasonality(int m) const {
  const auto& ct = cos_table();
  const auto& st = sin_table();
  double v = 0.0;
  for (std::size_t k = 0; k < fourier_cos.size(); ++k) {
    const auto idx = static_cast<std::size_t>((static_cast<std::int64_t>(harmonics[k]) * m) % kMinutesPerWeek);
    v += fourier_cos[k] * ct[idx] + fourier_sin[k] * st[idx];
  }
  return v;
}

ForecastModel fit_forecaster(std::span<const ActivityCube::Count> series, MinuteRange span,
                             const HolidayCalendar& holidays, const ForecasterParams& params) {
  if (params.fourier_order < 0 || params.daily_order < 0) throw SpecError("Fourier order must be >= 0");
  if (7 * params.daily_order >= kMinutesPerWeek / 2 || params.fourier_order >= kMinutesPerWeek / 2) {
    throw SpecError("Fourier order exceeds the Nyquist limit");
  }
  std::size_t present = 0;
  Minute first = 0, last = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i] == ActivityCube::kMissing) continue;
    const Minute t = span.begin + static_cast<Minute>(i);
    if (present == 0) first = t;
    last = t;
    ++present;
  }
  if (present < static_cast<std::size_t>(std::max(params.min_weeks, 1)) * kMinutesPerWeek) {
    throw InsufficientDataError("forecaster needs " + std::to_string(params.min_weeks) +
                                " weeks of training minutes, got " + std::to_string(present));
  }

  ForecastModel model;
  model.origin = first;
  model.time_scale = static_cast<double>(std::max<Minute>(last - first, 1));
  const double span_days = static_cast<double>(last - first) / kMinutesPerDay;
  const auto knot_count =
      static_cast<std::size_t>(std::max(0.0, std::round(params.knots_per_month * span_days / kDaysPerMonth)));
  for (std::size_t j = 1; j <= knot_count; ++j) {
    model.knots.push_back(static_cast<double>(j) / static_cast<double>(knot_count + 1));
  }
  model.harmonics = seasonal_harmonics(params);
  const std::size_t K = model.harmonics.size();
  const std::size_t p = 2 + knot_count + 2 * K + 1;
  const std::size_t holiday_col = p - 1;

  const auto& ct = cos_table();
  const auto& st = sin_table();
  // Rows are gathered in blocks so the Gram update runs as one product.
  constexpr Eigen::Index kBlock = 2048;
  const auto P = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(P, P);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(P);
  Eigen::MatrixXd block(P, kBlock);
  Eigen::VectorXd ys(kBlock);
  Eigen::Index filled = 0;
  auto flush = [&] {
    if (filled == 0) return;
    const auto xb = block.leftCols(filled);
    xtx.selfadjointView<Eigen::Upper>().rankUpdate(xb);
    xty.noalias() += xb * ys.head(filled);
    filled = 0;
  };
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i] == ActivityCube::kMissing) continue;
    const Minute t = span.begin + static_cast<Minute>(i);
    const double u = static_cast<double>(t - model.origin) / model.time_scale;
    const int m = minute_of_week(t);
    auto row = block.col(filled);
    row(0) = 1.0;
    row(1) = u;
    for (std::size_t j = 0; j < knot_count; ++j) {
      row(static_cast<Eigen::Index>(2 + j)) = std::max(0.0, u - model.knots[j]);
    }
    for (std::size_t k = 0; k < K; ++k) {
      const auto idx = static_cast<std::size_t>((static_cast<std::int64_t>(model.harmonics[k]) * m) % kMinutesPerWeek);
      row(static_cast<Eigen::Index>(2 + knot_count + 2 * k)) = ct[idx];
      row(static_cast<Eigen::Index>(3 + knot_count + 2 * k)) = st[idx];
    }
    row(static_cast<Eigen::Index>(holiday_col)) = holidays.is_holiday(t) ? 1.0 : 0.0;
    ys(filled) = series[i];
    if (++filled == kBlock) flush();
  }
  flush();
  const double lambda = params.ridge * static_cast<double>(present);
  for (std::size_t a = 0; a < p; ++a) {
    const auto ia = static_cast<Eigen::Index>(a);
    for (std::size_t b = 0; b < a; ++b) xtx(ia, static_cast<Eigen::Index>(b)) = xtx(static_cast<Eigen::Index>(b), ia);
    if (a > 0) xtx(ia, ia) += lambda;
  }
  const Eigen::VectorXd beta = xtx.ldlt().solve(xty);
  if (!beta.allFinite()) throw DegenerateModelError("forecaster normal equations are singular");

  model.intercept = beta(0);
  model.slope = beta(1);
  for (std::size_t j = 0; j < knot_count; ++j) model.hinge.push_back(beta(static_cast<Eigen::Index>(2 + j)));
  for (std::size_t k = 0; k < K; ++k) {
    model.fourier_cos.push_back(beta(static_cast<Eigen::Index>(2 + knot_count + 2 * k)));
    model.fourier_sin.push_back(beta(static_cast<Eigen::Index>(3 + knot_count + 2 * k)));
  }
  model.holiday = beta(static_cast<Eigen::Index>(holiday_col));
  return model;
}

}  // namespace urbanpulse
