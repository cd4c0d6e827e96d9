#include "shiftconf/core.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace shiftconf {

namespace {

constexpr double kBoundTol = 1e-9;  // relative slack for FP round-off at the boundary

std::string row_label(int data_row) {
  // data_row is 1-based; the header occupies file line 1
  return "row " + std::to_string(data_row) + " (file line " + std::to_string(data_row + 1) + ")";
}

}  // namespace

Dataset::Dataset(std::vector<Sample> samples, int dim, double x_norm_bound, double y_abs_bound)
    : samples_(std::move(samples)),
      dim_(dim),
      x_norm_bound_(x_norm_bound),
      y_abs_bound_(y_abs_bound) {
  if (dim_ <= 0) throw std::invalid_argument("Dataset: dim must be positive");
  if (!(x_norm_bound_ > 0.0) || !std::isfinite(x_norm_bound_))
    throw std::invalid_argument("Dataset: x_norm_bound must be positive and finite");
  if (!(y_abs_bound_ > 0.0) || !std::isfinite(y_abs_bound_))
    throw std::invalid_argument("Dataset: y_abs_bound must be positive and finite");
  if (samples_.empty()) throw std::invalid_argument("Dataset: empty dataset");

  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const Sample& s = samples_[i];
    if (s.x.size() != dim_)
      throw std::invalid_argument("Dataset: sample " + std::to_string(i + 1) +
                                  " has feature length " + std::to_string(s.x.size()) +
                                  ", expected " + std::to_string(dim_));
    if (!s.x.allFinite() || !std::isfinite(s.y))
      throw std::invalid_argument("Dataset: sample " + std::to_string(i + 1) +
                                  " has non-finite entries");
    const double norm = s.x.norm();
    if (norm > x_norm_bound_ * (1.0 + kBoundTol))
      throw std::runtime_error("Dataset: sample " + std::to_string(i + 1) +
                               " violates the feature bound: ||x||_2 = " + std::to_string(norm) +
                               " > " + std::to_string(x_norm_bound_));
    if (std::abs(s.y) > y_abs_bound_ * (1.0 + kBoundTol))
      throw std::runtime_error("Dataset: sample " + std::to_string(i + 1) +
                               " violates the response bound: |y| = " + std::to_string(std::abs(s.y)) +
                               " > " + std::to_string(y_abs_bound_));
  }
}

Dataset Dataset::subset(const std::vector<int>& indices) const {
  std::vector<Sample> out;
  out.reserve(indices.size());
  for (int i : indices) {
    if (i < 0 || i >= n()) throw std::invalid_argument("Dataset::subset: index out of range");
    out.push_back(samples_[static_cast<std::size_t>(i)]);
  }
  return Dataset(std::move(out), dim_, x_norm_bound_, y_abs_bound_);
}

Dataset Dataset::without(int index) const {
  if (index < 0 || index >= n()) throw std::invalid_argument("Dataset::without: index out of range");
  if (n() < 2) throw std::invalid_argument("Dataset::without: needs at least two samples");
  std::vector<Sample> out;
  out.reserve(samples_.size() - 1);
  for (int i = 0; i < n(); ++i)
    if (i != index) out.push_back(samples_[static_cast<std::size_t>(i)]);
  return Dataset(std::move(out), dim_, x_norm_bound_, y_abs_bound_);
}

Dataset Dataset::with_appended(Sample extra) const {
  std::vector<Sample> out = samples_;
  out.push_back(std::move(extra));
  return Dataset(std::move(out), dim_, x_norm_bound_, y_abs_bound_);
}

SplitSpec split(const Dataset& data, int n_train, RngStream rng) {
  const int n = data.n();
  if (n_train < 1 || n_train >= n)
    throw std::invalid_argument("split: n_train must satisfy 1 <= n_train < n");

  // Partial Fisher-Yates with our own index draws keeps the result
  // platform-independent.
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < n_train; ++i) {
    const std::size_t j =
        static_cast<std::size_t>(i) + rng.uniform_index(static_cast<std::size_t>(n - i));
    std::swap(order[static_cast<std::size_t>(i)], order[j]);
  }

  SplitSpec spec;
  spec.train_indices.assign(order.begin(), order.begin() + n_train);
  spec.cal_indices.assign(order.begin() + n_train, order.end());
  std::sort(spec.train_indices.begin(), spec.train_indices.end());
  std::sort(spec.cal_indices.begin(), spec.cal_indices.end());
  return spec;
}

SplitSpec split_ordered(const Dataset& data, int n_train) {
  const int n = data.n();
  if (n_train < 1 || n_train >= n)
    throw std::invalid_argument("split_ordered: n_train must satisfy 1 <= n_train < n");
  SplitSpec spec;
  spec.train_indices.resize(static_cast<std::size_t>(n_train));
  std::iota(spec.train_indices.begin(), spec.train_indices.end(), 0);
  spec.cal_indices.resize(static_cast<std::size_t>(n - n_train));
  std::iota(spec.cal_indices.begin(), spec.cal_indices.end(), n_train);
  return spec;
}

LikelihoodRatio::LikelihoodRatio(Regime regime,
                                 std::function<double(const Eigen::VectorXd&)> eval,
                                 double bound_value)
    : regime_(regime), eval_(std::move(eval)), bound_value_(bound_value) {}

LikelihoodRatio LikelihoodRatio::unweighted() {
  return LikelihoodRatio(Regime::unweighted, [](const Eigen::VectorXd&) { return 1.0; }, 1.0);
}

LikelihoodRatio LikelihoodRatio::bounded(std::function<double(const Eigen::VectorXd&)> eval,
                                         double sup_bound) {
  if (!(sup_bound >= 1.0))
    throw std::invalid_argument("LikelihoodRatio::bounded: sup bound must be >= 1");
  return LikelihoodRatio(Regime::bounded, std::move(eval), sup_bound);
}

LikelihoodRatio LikelihoodRatio::second_moment(std::function<double(const Eigen::VectorXd&)> eval,
                                               double moment_bound) {
  if (!(moment_bound >= 1.0))
    throw std::invalid_argument("LikelihoodRatio::second_moment: moment bound must be >= 1");
  return LikelihoodRatio(Regime::second_moment, std::move(eval), moment_bound);
}

double LikelihoodRatio::operator()(const Eigen::VectorXd& x) const {
  const double r = eval_(x);
  if (!(r >= 0.0))
    throw std::runtime_error("LikelihoodRatio: evaluated to a negative or NaN value");
  if (regime_ == Regime::bounded && r > bound_value_ * (1.0 + kBoundTol))
    throw std::runtime_error("LikelihoodRatio: value " + std::to_string(r) +
                             " exceeds the declared bound " + std::to_string(bound_value_));
  return r;
}

namespace {

double parse_field(const std::string& token, int data_row, const char* what) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw std::runtime_error("load_csv: non-numeric " + std::string(what) + " in " +
                             row_label(data_row) + ": '" + token + "'");
  return value;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

Dataset load_csv(const std::string& path, int dim, double x_norm_bound, double y_abs_bound) {
  if (dim <= 0) throw std::invalid_argument("load_csv: dim must be positive");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file '" + path + "'");
  const auto header = split_fields(line);
  if (static_cast<int>(header.size()) != dim + 1)
    throw std::runtime_error("load_csv: header has " + std::to_string(header.size()) +
                             " columns, expected " + std::to_string(dim + 1) +
                             " (x1..x" + std::to_string(dim) + ",y)");

  std::vector<Sample> samples;
  int data_row = 0;
  while (std::getline(in, line)) {
    ++data_row;
    // tolerate a trailing blank line
    if (line.empty() || line == "\r") {
      --data_row;
      continue;
    }
    const auto fields = split_fields(line);
    if (static_cast<int>(fields.size()) != dim + 1)
      throw std::runtime_error("load_csv: wrong number of fields (" +
                               std::to_string(fields.size()) + " instead of " +
                               std::to_string(dim + 1) + ") in " + row_label(data_row));
    Sample s;
    s.x.resize(dim);
    for (int j = 0; j < dim; ++j)
      s.x[j] = parse_field(fields[static_cast<std::size_t>(j)], data_row, "feature");
    s.y = parse_field(fields[static_cast<std::size_t>(dim)], data_row, "response");

    const double norm = s.x.norm();
    if (norm > x_norm_bound * (1.0 + kBoundTol))
      throw std::runtime_error("load_csv: feature bound violated in " + row_label(data_row) +
                               ": ||x||_2 = " + std::to_string(norm) + " > " +
                               std::to_string(x_norm_bound));
    if (std::abs(s.y) > y_abs_bound * (1.0 + kBoundTol))
      throw std::runtime_error("load_csv: response bound violated in " + row_label(data_row) +
                               ": |y| = " + std::to_string(std::abs(s.y)) + " > " +
                               std::to_string(y_abs_bound));
    samples.push_back(std::move(s));
  }

  if (samples.empty()) throw std::runtime_error("load_csv: empty dataset in '" + path + "'");
  return Dataset(std::move(samples), dim, x_norm_bound, y_abs_bound);
}

}  // namespace shiftconf
