#include "dllm/schedule.hpp"

#include <cmath>
#include <string>

#include "dllm/error.hpp"

namespace dllm {

TimeSchedule::TimeSchedule(std::vector<double> steps, std::vector<std::size_t> quotas)
    : steps_(std::move(steps)), quotas_(std::move(quotas)) {
  require(!quotas_.empty(), "schedule needs at least one step");
  require(steps_.size() == quotas_.size() + 1, "schedule needs N+1 time levels for N quotas");
  require(steps_.front() == 1.0 && steps_.back() == 0.0, "schedule must run from t=1 to t=0");
  for (std::size_t i = 1; i < steps_.size(); ++i) {
    require(steps_[i] < steps_[i - 1], "time levels must be strictly decreasing");
  }
  prefix_.reserve(quotas_.size() + 1);
  prefix_.push_back(0);
  for (std::size_t q : quotas_) {
    require(q >= 1, "every step must unmask at least one token");
    length_ += q;
    prefix_.push_back(length_);
  }
}

TimeSchedule make_uniform_schedule(std::size_t length, std::size_t steps) {
  require(steps >= 1, "step count must be positive");
  require(steps <= length,
          "step count " + std::to_string(steps) + " exceeds length " + std::to_string(length));
  std::vector<double> times(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    times[i] = 1.0 - static_cast<double>(i) / static_cast<double>(steps);
  }
  const std::size_t base = length / steps;
  const std::size_t extra = length % steps;
  std::vector<std::size_t> quotas(steps, base);
  for (std::size_t i = 0; i < extra; ++i) ++quotas[i];
  TimeSchedule schedule(std::move(times), std::move(quotas));
  schedule.set_kind("uniform");
  return schedule;
}

std::size_t unmask_quota(const TimeSchedule& schedule, std::size_t i, std::size_t j) {
  require(i < j, "quota needs i < j");
  require(j <= schedule.step_count(), "step index out of range");
  return schedule.revealed_through(j) - schedule.revealed_through(i);
}

double alpha_linear(double t) {
  require(t >= 0.0 && t <= 1.0, "time level outside [0, 1]");
  return 1.0 - t;
}

AlphaSchedule AlphaSchedule::linear() { return AlphaSchedule("linear", alpha_linear); }

AlphaSchedule::AlphaSchedule(std::string kind, std::function<double(double)> evaluator)
    : kind_(std::move(kind)), evaluator_(std::move(evaluator)) {
  require(static_cast<bool>(evaluator_), "alpha schedule needs an evaluator");
  require(evaluator_(0.0) == 1.0 && evaluator_(1.0) == 0.0, "alpha must satisfy alpha_0 = 1, alpha_1 = 0");
  double prev = 1.0;
  for (int k = 1; k <= 256; ++k) {
    const double a = evaluator_(k / 256.0);
    require(a <= prev && a >= 0.0, "alpha must be non-increasing within [0, 1]");
    prev = a;
  }
}

double AlphaSchedule::operator()(double t) const {
  require(t >= 0.0 && t <= 1.0, "time level outside [0, 1]");
  return evaluator_(t);
}

BlockLayout::BlockLayout(std::size_t block_size) : block_size_(block_size) {
  require(block_size >= 1, "block size must be positive");
}

}  // namespace dllm
