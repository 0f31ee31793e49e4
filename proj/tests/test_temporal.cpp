#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ssmamba/errors.hpp"
#include "ssmamba/num/gradcheck.hpp"
#include "ssmamba/num/ops.hpp"
#include "ssmamba/num/rng.hpp"
#include "ssmamba/num/text.hpp"
#include "ssmamba/temporal/bspline.hpp"
#include "ssmamba/temporal/calendar.hpp"
#include "ssmamba/temporal/kan.hpp"
#include "support.hpp"

using namespace ssmamba;
using namespace ssmamba::temporal;

TEST(Calendar, MatchesDayByDayWalk) {
  for (const auto& w : support::walk_calendar(1900, 2200)) {
    const Date d = Date::from_ymd(w.year, w.month, w.day);
    ASSERT_EQ(d.ordinal(), w.days_since_1900 + Date::kMinOrdinal);
    const auto c = calendar_descriptor(d);
    ASSERT_EQ(c.year, w.year);
    ASSERT_EQ(c.month, w.month);
    ASSERT_EQ(c.day, w.day);
    ASSERT_EQ(c.dow, w.dow) << d.to_string();
    ASSERT_EQ(c.doy, w.doy) << d.to_string();
    ASSERT_EQ(c.quarter, (w.month - 1) / 3 + 1);
    ASSERT_EQ(Date::parse(d.to_string()), d);
  }
}

TEST(Calendar, KnownDates) {
  EXPECT_EQ(Date::parse("1970-01-01").ordinal(), 0);
  EXPECT_EQ(calendar_descriptor("1970-01-01").dow, 3);  // Thursday
  EXPECT_EQ(calendar_descriptor("2024-01-01").dow, 0);  // Monday
  EXPECT_EQ(calendar_descriptor("2024-12-31").doy, 366);
  EXPECT_EQ(calendar_descriptor("2023-12-31").doy, 365);
  EXPECT_EQ(Date::parse("2024-02-28").next().to_string(), "2024-02-29");
  EXPECT_TRUE(is_leap_year(2000));
  EXPECT_FALSE(is_leap_year(1900));
}

TEST(Calendar, RejectsMalformedDates) {
  for (const char* bad : {"2023-02-29", "2024-13-01", "2024/01/01", "2024-1-01", "1899-12-31", "2201-01-01",
                          "20a4-01-01", ""}) {
    EXPECT_THROW(Date::parse(bad), InputError) << bad;
  }
  try {
    Date::parse("2023-02-30");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("2023-02-30"), std::string::npos);
  }
  EXPECT_EQ(parse_field("doy"), CalendarField::doy);
  EXPECT_THROW(parse_field("week"), ConfigError);
}

class PartitionOfUnity : public ::testing::TestWithParam<std::tuple<int, int>> {};

TEST_P(PartitionOfUnity, SumsToOneAndMatchesCoxDeBoor) {
  const auto [m, r] = GetParam();
  const auto knots = clamped_uniform_knots(m, r);
  ASSERT_EQ(knots.size(), static_cast<std::size_t>(r + m + 1));
  num::Rng rng(static_cast<std::uint64_t>(m * 100 + r));
  std::vector<double> basis(static_cast<std::size_t>(r));
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform();
    EXPECT_FALSE(bspline_basis(x, m, knots, basis));
    double total = 0.0;
    int nonzero = 0;
    for (int q = 0; q < r; ++q) {
      const double expect = support::cox_de_boor(static_cast<std::size_t>(q), m, x, knots);
      ASSERT_NEAR(basis[q], expect, 1e-9) << "x=" << x << " r=" << q;
      ASSERT_GE(basis[q], 0.0);
      total += basis[q];
      nonzero += basis[q] != 0.0;
    }
    ASSERT_NEAR(total, 1.0, 1e-9);
    ASSERT_LE(nonzero, m + 1);
  }
}

INSTANTIATE_TEST_SUITE_P(Grid, PartitionOfUnity,
                         ::testing::Combine(::testing::Values(1, 2, 3), ::testing::Values(4, 8, 16)));

TEST(BSpline, EndpointsAndClamping) {
  const auto knots = clamped_uniform_knots(3, 8);
  std::vector<double> b(8);
  EXPECT_FALSE(bspline_basis(0.0, 3, knots, b));
  EXPECT_EQ(b[0], 1.0);
  EXPECT_FALSE(bspline_basis(1.0, 3, knots, b));
  EXPECT_EQ(b[7], 1.0);
  EXPECT_TRUE(bspline_basis(1.5, 3, knots, b));
  EXPECT_EQ(b[7], 1.0);
  EXPECT_TRUE(bspline_basis(-0.1, 3, knots, b));
  EXPECT_EQ(b[0], 1.0);
}

TEST(BSpline, ReproducesLinearFunctionFromGrevilleAbscissae) {
  for (int m = 1; m <= 3; ++m) {
    const int r = 8;
    const auto knots = clamped_uniform_knots(m, r);
    std::vector<double> coef(r);
    for (int q = 0; q < r; ++q) {
      double s = 0.0;
      for (int j = 1; j <= m; ++j) s += knots[q + j];
      coef[q] = s / m;
    }
    for (double x = 0.0; x <= 1.0; x += 0.01) EXPECT_NEAR(spline_value(x, m, knots, coef), x, 1e-12);
  }
}

TEST(BSpline, SpecValidation) {
  EXPECT_NO_THROW(SplineSpec::clamped_uniform(3, 16, 2).validate());
  EXPECT_THROW(SplineSpec::clamped_uniform(3, 17, 1).validate(), ContractViolation);
  EXPECT_THROW(clamped_uniform_knots(3, 3), ContractViolation);
  auto spec = SplineSpec::clamped_uniform(2, 6, 1);
  spec.knots[0][1] = 0.5;
  EXPECT_THROW(spec.validate(), ContractViolation);
  spec = SplineSpec::clamped_uniform(2, 6, 1);
  spec.degree = 4;
  EXPECT_THROW(spec.validate(), ContractViolation);
}

namespace {

DescriptorGrid grid_from(const std::string& first, std::size_t batch, std::size_t length, int stride_days) {
  DescriptorGrid g;
  g.batch = batch;
  g.length = length;
  const Date start = Date::parse(first);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t l = 0; l < length; ++l) {
      const auto offset = static_cast<std::int64_t>(b * 37 + l * static_cast<std::size_t>(stride_days));
      g.cells.push_back(calendar_descriptor(Date::from_ordinal(start.ordinal() + offset)));
    }
  }
  return g;
}

NormalizationRanges ranges_for(const std::string& lo, const std::string& hi) {
  const std::vector<Date> dates{Date::parse(lo), Date::parse(hi)};
  return NormalizationRanges::from_dates(dates);
}

}  // namespace

TEST(Kan, ForwardMatchesHandRolledOracle) {
  KanConfig cfg;
  cfg.degree = 2;
  cfg.basis_count = 6;
  const auto ranges = ranges_for("2020-01-01", "2022-12-31");
  auto params = make_kan_params<double>(cfg, 5, ranges, 11);
  support::perturb<double>(std::vector{&params.mix_bias}, 3, 0.3);
  const auto grid = grid_from("2021-03-01", 2, 9, 5);
  const auto z = kan_forward(grid, params, 9);
  ASSERT_EQ(z.shape(), (num::Shape{2, 9, 5}));

  const std::size_t k = cfg.features.size(), r = 6, n = 5;
  const auto knots = clamped_uniform_knots(2, 6);
  const auto& alpha = params.coefficients.value();
  const auto& w = params.mix_weight.value();
  const auto& bias = params.mix_bias.value();
  for (std::size_t cell = 0; cell < grid.cells.size(); ++cell) {
    std::vector<double> u(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const auto& fr = ranges[cfg.features[j]];
      double x = (grid.cells[cell].field(cfg.features[j]) - fr.lo) / (fr.hi - fr.lo);
      x = std::min(1.0, std::max(0.0, x));
      for (std::size_t q = 0; q < r; ++q) u[j] += alpha[j * r + q] * support::cox_de_boor(q, 2, x, knots);
    }
    for (std::size_t s = 0; s < n; ++s) {
      double a = bias[s];
      for (std::size_t j = 0; j < k; ++j) a += w[s * k + j] * u[j];
      EXPECT_NEAR(z.value()[cell * n + s], std::tanh(a), 1e-12);
    }
  }
}

TEST(Kan, InitializationRanges) {
  KanConfig cfg;
  const auto params = make_kan_params<double>(cfg, 16, ranges_for("2020-01-01", "2021-01-01"), 1);
  for (double a : params.coefficients.value().data()) {
    EXPECT_GE(a, -0.1);
    EXPECT_LT(a, 0.1);
  }
  for (double b : params.mix_bias.value().data()) EXPECT_EQ(b, 0.0);
  EXPECT_EQ(params.coefficients.shape(), (num::Shape{cfg.features.size(), 8}));
  EXPECT_EQ(params.mix_weight.shape(), (num::Shape{16, cfg.features.size()}));
}

TEST(Kan, GradientsMatchFiniteDifferences) {
  for (Activation act : {Activation::tanh, Activation::identity}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      KanConfig cfg;
      cfg.activation = act;
      const auto ranges = ranges_for("2019-01-01", "2020-06-30");
      auto params = make_kan_params<double>(cfg, 4, ranges, seed);
      std::vector<num::ParamLeaf<double>*> leaves;
      params.collect(leaves);
      support::perturb<double>(leaves, seed + 50, 0.2);
      const auto grid = grid_from("2019-05-03", 2, 6, 3);
      const auto weights = num::random_uniform<double>({2, 6, 4}, -1, 1, seed);
      auto loss = [&] { return num::sum(num::mul(kan_forward(grid, params, 6), num::constant(weights))); };
      const auto reports = num::check_gradients(loss, leaves);
      for (const auto& rep : reports) EXPECT_TRUE(rep.passed) << rep.param_name << " " << rep.max_rel_error;
    }
  }
}

TEST(Kan, CountsExtrapolatedFeatures) {
  KanConfig cfg;
  cfg.features = {CalendarField::ordinal, CalendarField::month};
  auto params = make_kan_params<double>(cfg, 3, ranges_for("2020-01-01", "2020-12-31"), 0);
  ExtrapolationCounter counter;
  kan_forward(grid_from("2020-06-01", 1, 4, 1), params, 4, &counter);
  EXPECT_EQ(counter.count, 0u);
  kan_forward(grid_from("2021-06-01", 1, 4, 1), params, 4, &counter);
  EXPECT_EQ(counter.count, 4u);
  EXPECT_THROW(kan_forward(grid_from("2020-06-01", 1, 4, 1), params, 5), ContractViolation);
}

TEST(Kan, SinusoidalFeatures) {
  const auto grid = grid_from("2024-01-01", 1, 2, 1);
  const auto f = sinusoidal_features<double>(grid);
  ASSERT_EQ(f.shape(), (num::Shape{1, 2, kSinusoidalDim}));
  const double tau = 2.0 * std::numbers::pi;
  EXPECT_NEAR(f[0], std::sin(tau * 1 / 365.25), 1e-15);
  EXPECT_NEAR(f[1], std::cos(tau * 1 / 365.25), 1e-15);
  EXPECT_NEAR(f[2], 0.0, 1e-15);  // Monday
  EXPECT_NEAR(f[3], 1.0, 1e-15);
  EXPECT_NEAR(f[6], std::sin(tau / 7), 1e-15);

  auto params = make_sinusoidal_params<double>(3, Activation::tanh, 4);
  std::vector<num::ParamLeaf<double>*> leaves;
  params.collect(leaves);
  support::perturb<double>(leaves, 9, 0.3);
  auto loss = [&] { return num::sum(num::square(sinusoidal_forward(grid, params, 2))); };
  EXPECT_TRUE(num::all_passed(num::check_gradients(loss, leaves)));
}

TEST(Kan, ExportWritesOneParseableFilePerFeature) {
  support::TempDir dir("splines");
  KanConfig cfg;
  cfg.features = {CalendarField::month, CalendarField::dow};
  const auto params = make_kan_params<double>(cfg, 4, ranges_for("2020-01-01", "2020-12-31"), 2);
  const auto paths = export_splines(params, dir.path());
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0].filename(), "spline_month.txt");
  EXPECT_EQ(paths[1].filename(), "spline_dow.txt");

  std::ifstream in(paths[1]);
  std::string line;
  std::map<std::string, std::vector<std::string>> fields;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string key, tok;
    ss >> key;
    while (ss >> tok) fields[key].push_back(tok);
  }
  EXPECT_EQ(fields["feature"], std::vector<std::string>{"dow"});
  EXPECT_EQ(fields["degree"], std::vector<std::string>{"3"});
  EXPECT_EQ(fields["range"], (std::vector<std::string>{"0", "6"}));
  ASSERT_EQ(fields["knots"].size(), 12u);
  ASSERT_EQ(fields["coefficients"].size(), 8u);
  for (std::size_t q = 0; q < 8; ++q) {
    EXPECT_EQ(*num::parse_double(fields["coefficients"][q]), params.coefficients.value()[8 + q]);
  }
}
