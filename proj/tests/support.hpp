#pragma once

// Test-side helpers and independent reference implementations. Nothing here
// calls into the library code it is used to check.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ssmamba/data/prepare.hpp"
#include "ssmamba/num/autograd.hpp"
#include "ssmamba/num/rng.hpp"

namespace ssmamba::support {

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static int counter = 0;
    const auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    path_ = base / ("ssmamba_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

// Adds N(0, scale^2) noise to every leaf so no gradient is trivially zero.
template <class T, class Params>
void perturb(const Params& params, std::uint64_t seed, double scale) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, scale);
  for (auto* p : params) {
    for (T& v : p->mutable_value().data()) v = static_cast<T>(static_cast<double>(v) + dist(gen));
  }
}

// Textbook recursive Cox-de Boor with the 0/0 = 0 convention. At the right
// end of the domain the last non-empty interval is treated as closed.
inline double cox_de_boor(std::size_t i, int p, double x, const std::vector<double>& t) {
  if (p == 0) {
    const double last = t.back();
    if (x == last) {
      std::size_t k = t.size() - 2;
      while (k > 0 && t[k] == t[k + 1]) --k;
      return i == k ? 1.0 : 0.0;
    }
    return (t[i] <= x && x < t[i + 1]) ? 1.0 : 0.0;
  }
  double left = 0.0, right = 0.0;
  const double dl = t[i + p] - t[i];
  const double dr = t[i + p + 1] - t[i + 1];
  if (dl != 0.0) left = (x - t[i]) / dl * cox_de_boor(i, p - 1, x, t);
  if (dr != 0.0) right = (t[i + p + 1] - x) / dr * cox_de_boor(i + 1, p - 1, x, t);
  return left + right;
}

// y[b,l,d] = sum_n c[b,l,n] * sum_{k<=l} (prod_{j=k+1..l} a[b,j,n]) * bb[b,k,n] * x[b,k,d]
// written out in closed form, O(L^2).
inline std::vector<double> unrolled_scan(const std::vector<double>& a, const std::vector<double>& bb,
                                         const std::vector<double>& c, const std::vector<double>& x,
                                         std::size_t batch, std::size_t length, std::size_t n, std::size_t d) {
  std::vector<double> y(batch * length * d, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t l = 0; l < length; ++l) {
      for (std::size_t ch = 0; ch < d; ++ch) {
        double acc = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
          double h = 0.0;
          for (std::size_t k = 0; k <= l; ++k) {
            double decay = 1.0;
            for (std::size_t j = k + 1; j <= l; ++j) decay *= a[(b * length + j) * n + s];
            h += decay * bb[(b * length + k) * n + s] * x[(b * length + k) * d + ch];
          }
          acc += c[(b * length + l) * n + s] * h;
        }
        y[(b * length + l) * d + ch] = acc;
      }
    }
  }
  return y;
}

// Row-major (m x k) * (k x n), triple loop.
inline std::vector<double> naive_matmul(const std::vector<double>& a, const std::vector<double>& b, std::size_t m,
                                        std::size_t k, std::size_t n) {
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t r = 0; r < k; ++r) out[i * n + j] += a[i * k + r] * b[r * n + j];
  return out;
}

// Walks the calendar one day at a time from 1900-01-01 (a Monday).
struct WalkedDay {
  int year, month, day, dow, doy;
  std::int64_t days_since_1900;
};

inline std::vector<WalkedDay> walk_calendar(int first_year, int last_year) {
  static const int month_len[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  std::vector<WalkedDay> out;
  std::int64_t count = 0;
  for (int y = 1900; y <= last_year; ++y) {
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    int doy = 0;
    for (int m = 1; m <= 12; ++m) {
      const int len = month_len[m - 1] + (m == 2 && leap ? 1 : 0);
      for (int d = 1; d <= len; ++d, ++count) {
        ++doy;
        if (y >= first_year) out.push_back({y, m, d, static_cast<int>(count % 7), doy, count});
      }
    }
  }
  return out;
}

// Recomputes every statistic that touches val/test data from the raw
// training range and checks that nothing outside it influences training
// inputs. Returns an empty string on success, else the first violation.
inline std::string leakage_audit(const data::SeriesRecord& record, const data::SplitSpec& spec,
                                 std::size_t window) {
  using namespace data;
  const auto p = prepare_series(record, spec);
  const std::size_t n = record.size();
  const auto& r = p.ranges;
  if (r.train.begin != 0 || r.train.end != r.val.begin || r.val.end != r.test.begin || r.test.end != n)
    return "ranges are not a contiguous cover";
  if (!(record.observations[r.train.end - 1].date < record.observations[r.val.begin].date) ||
      !(record.observations[r.val.end - 1].date < record.observations[r.test.begin].date))
    return "ranges are not chronological";

  long double sum = 0;
  for (std::size_t i = r.train.begin; i < r.train.end; ++i) sum += record.observations[i].value;
  const long double mean = sum / static_cast<long double>(r.train.size());
  long double ss = 0;
  for (std::size_t i = r.train.begin; i < r.train.end; ++i) {
    const long double d = record.observations[i].value - mean;
    ss += d * d;
  }
  const double sd = static_cast<double>(std::sqrt(ss / static_cast<long double>(r.train.size())));
  if (std::abs(p.scaler.mean - static_cast<double>(mean)) > 1e-12 * std::max(1.0, std::abs(p.scaler.mean)))
    return "scaler mean differs from the training-range mean";
  if (std::abs(p.scaler.std - sd) > 1e-12 * sd) return "scaler std differs from the training-range std";
  for (std::size_t i = 0; i < n; ++i) {
    const double expect = (record.observations[i].value - p.scaler.mean) / p.scaler.std;
    if (p.standardized[i] != expect) return "value " + std::to_string(i) + " not standardized with training stats";
  }

  // Tampering with everything after the training range must not change any
  // training input.
  auto tampered = record;
  for (std::size_t i = r.train.end; i < n; ++i) tampered.observations[i].value = tampered.observations[i].value * 1000 + 7;
  const auto q = prepare_series(tampered, spec);
  if (!(q.scaler == p.scaler)) return "scaler depends on data after the training range";
  const std::vector<PreparedSeries> ps{p}, qs{q};
  const auto wp = collect_windows(ps, Split::train, window);
  const auto wq = collect_windows(qs, Split::train, window);
  if (wp != wq) return "training windows depend on data after the training range";
  const auto bp = assemble_batch(ps, wp, window);
  const auto bq = assemble_batch(qs, wq, window);
  if (bp.inputs != bq.inputs || bp.targets != bq.targets) return "training batch depends on later data";

  for (Split split : {Split::train, Split::val, Split::test}) {
    const auto range = r[split];
    const auto refs = collect_windows(ps, split, window);
    if (range.size() > window && refs.size() != range.size() - window) return "wrong window count";
    const auto batch = assemble_batch(ps, refs, window);
    for (std::size_t b = 0; b < refs.size(); ++b) {
      const std::size_t s = refs[b].start;
      if (s < range.begin || s + window >= range.end) return "window straddles a split boundary";
      if (batch.raw_targets[b] != record.observations[s + window].value) return "target is not the next value";
      if (batch.dates[b * window + window - 1] != record.observations[s + window - 1].date)
        return "input dates misaligned";
    }
  }
  return {};
}

}  // namespace ssmamba::support
