#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace dllm {

// Decreasing time levels 1 = t_0 > ... > t_N = 0 together with the number of
// tokens each step unmasks.
class TimeSchedule {
 public:
  TimeSchedule(std::vector<double> steps, std::vector<std::size_t> quotas);

  // Number of steps N.
  std::size_t step_count() const noexcept { return quotas_.size(); }
  // Sequence length L (sum of quotas).
  std::size_t length() const noexcept { return length_; }

  double time(std::size_t i) const { return steps_.at(i); }
  std::size_t quota(std::size_t i) const { return quotas_.at(i); }
  const std::vector<double>& steps() const noexcept { return steps_; }
  const std::vector<std::size_t>& quotas() const noexcept { return quotas_; }

  // Tokens unmasked on steps [0, i).
  std::size_t revealed_through(std::size_t i) const { return prefix_.at(i); }

  const std::string& kind() const noexcept { return kind_; }
  void set_kind(std::string kind) { kind_ = std::move(kind); }

  friend bool operator==(const TimeSchedule& a, const TimeSchedule& b) {
    return a.steps_ == b.steps_ && a.quotas_ == b.quotas_;
  }

 private:
  std::vector<double> steps_;
  std::vector<std::size_t> quotas_;
  std::vector<std::size_t> prefix_;
  std::size_t length_ = 0;
  std::string kind_ = "custom";
};

// t_i = 1 - i/N; L split over N steps, earlier steps take the remainder.
TimeSchedule make_uniform_schedule(std::size_t length, std::size_t steps);

// Tokens a scheduler must unmask when jumping from step i to step j (i < j).
std::size_t unmask_quota(const TimeSchedule& schedule, std::size_t i, std::size_t j);

double alpha_linear(double t);

// Noise schedule t -> alpha_t; non-increasing with alpha_0 = 1, alpha_1 = 0.
class AlphaSchedule {
 public:
  static AlphaSchedule linear();
  // Endpoints and monotonicity are checked on a grid at construction.
  AlphaSchedule(std::string kind, std::function<double(double)> evaluator);

  double operator()(double t) const;
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
  std::function<double(double)> evaluator_;
};

// Semi-autoregressive layout: [0,B), [B,2B), ... A block size >= L is a
// single block.
class BlockLayout {
 public:
  explicit BlockLayout(std::size_t block_size);

  std::size_t block_size() const noexcept { return block_size_; }
  std::size_t block_of(std::size_t position) const noexcept { return position / block_size_; }

  friend bool operator==(const BlockLayout&, const BlockLayout&) = default;

 private:
  std::size_t block_size_;
};

}  // namespace dllm
