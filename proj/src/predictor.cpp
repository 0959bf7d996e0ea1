#include "dllm/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dllm/error.hpp"
#include "dllm/hash.hpp"
#include "dllm/rng.hpp"

namespace dllm {

MarginalEstimate::MarginalEstimate(std::vector<std::size_t> positions, std::vector<double> probs,
                                   std::size_t vocab_size)
    : positions_(std::move(positions)), probs_(std::move(probs)), vocab_size_(vocab_size) {
  require(probs_.size() == positions_.size() * vocab_size_, "estimate rows do not match positions x vocab");
  require(std::is_sorted(positions_.begin(), positions_.end()) &&
              std::adjacent_find(positions_.begin(), positions_.end()) == positions_.end(),
          "estimate positions must be strictly increasing");
}

bool MarginalEstimate::covers(std::size_t position) const {
  return std::binary_search(positions_.begin(), positions_.end(), position);
}

std::span<const double> MarginalEstimate::row(std::size_t position) const {
  auto it = std::lower_bound(positions_.begin(), positions_.end(), position);
  if (it == positions_.end() || *it != position) {
    fail(ErrorCode::kInvalidArgument, "estimate has no row for position " + std::to_string(position));
  }
  return row_at(static_cast<std::size_t>(it - positions_.begin()));
}

std::span<const double> MarginalEstimate::row_at(std::size_t index) const {
  return std::span<const double>(probs_).subspan(index * vocab_size_, vocab_size_);
}

double MarginalEstimate::max_normalization_error() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < positions_.size(); ++k) {
    double sum = 0.0;
    for (double p : row_at(k)) sum += p;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

void Predictor::check_state(const SequenceState& state) const {
  require(state.mask_id() == vocab_.mask_id(), "state mask id does not match the predictor vocabulary");
  for (TokenId t : state.tokens()) {
    require(t == vocab_.mask_id() || vocab_.is_real(t), "state holds a token outside the vocabulary");
  }
  require(!state.complete(), "nothing to predict: state has no masked position");
}

MarginalEstimate Predictor::predict(const SequenceState& state, std::size_t step) {
  check_state(state);
  MarginalEstimate out = evaluate(state, step);
  ++counter_.forward_calls;
  ++counter_.sequence_evaluations;
  return out;
}

std::vector<MarginalEstimate> Predictor::predict_batch(std::span<const SequenceState> states,
                                                       std::span<const std::size_t> steps) {
  require(!states.empty(), "batch must be non-empty");
  require(states.size() == steps.size(), "batch states and steps differ in length");
  for (std::size_t k = 0; k < states.size(); ++k) {
    try {
      check_state(states[k]);
    } catch (const Error& e) {
      throw e.with_context("batch element " + std::to_string(k));
    }
  }
  std::vector<MarginalEstimate> out;
  out.reserve(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    try {
      out.push_back(evaluate(states[k], steps[k]));
    } catch (const Error& e) {
      throw e.with_context("batch element " + std::to_string(k));
    }
  }
  ++counter_.forward_calls;
  counter_.sequence_evaluations += states.size();
  return out;
}

std::uint64_t context_hash(const SequenceState& state, std::uint64_t seed) {
  std::uint64_t h = fnv_fold(kFnvOffset, seed);
  const auto tokens = state.tokens();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == state.mask_id()) continue;
    h = fnv_fold(h, i);
    h = fnv_fold(h, static_cast<std::uint64_t>(static_cast<std::uint32_t>(tokens[i])));
  }
  return h;
}

namespace {

class TablePredictor final : public Predictor {
 public:
  TablePredictor(const Vocabulary& vocab, std::vector<TokenId> target, double sensitivity, std::uint64_t seed)
      : Predictor(vocab), target_(std::move(target)), sensitivity_(sensitivity), seed_(seed) {
    require(!target_.empty(), "table predictor target is empty");
    require(sensitivity_ >= 0.0 && sensitivity_ <= 1.0, "sensitivity must lie in [0, 1]");
    for (TokenId t : target_) {
      require(vocab.is_real(t), "target holds a token outside the real vocabulary");
    }
  }

 protected:
  MarginalEstimate evaluate(const SequenceState& state, std::size_t /*step*/) const override {
    require(state.length() == target_.size(), "state length differs from the table target");
    const auto v = static_cast<std::size_t>(vocabulary().size());
    auto positions = state.masked_positions();
    std::vector<double> probs(positions.size() * v);
    const std::uint64_t ctx = sensitivity_ > 0.0 ? context_hash(state, seed_) : 0;
    std::vector<double> perturb(v);
    for (std::size_t k = 0; k < positions.size(); ++k) {
      const std::size_t i = positions[k];
      double* row = probs.data() + k * v;
      const double peak = v == 1 ? 1.0 : 0.6 + 0.4 * static_cast<double>(i % 3) / 2.0;
      const double rest = v == 1 ? 0.0 : (1.0 - peak) / static_cast<double>(v - 1);
      for (std::size_t tok = 0; tok < v; ++tok) {
        row[tok] = static_cast<TokenId>(tok) == target_[i] ? peak : rest;
      }
      if (sensitivity_ == 0.0) continue;
      // Weights (-log(1-u))^2, normalized below.
      const DeterministicRng rng(ctx);
      double total = 0.0;
      for (std::size_t tok = 0; tok < v; ++tok) {
        const double u = rng.uniform("perturb", i, tok);
        const double e = -std::log1p(-u);
        perturb[tok] = e * e;
        total += perturb[tok];
      }
      for (std::size_t tok = 0; tok < v; ++tok) {
        const double p = total > 0.0 ? perturb[tok] / total : 1.0 / static_cast<double>(v);
        row[tok] = (1.0 - sensitivity_) * row[tok] + sensitivity_ * p;
      }
    }
    return MarginalEstimate(std::move(positions), std::move(probs), v);
  }

 private:
  std::vector<TokenId> target_;
  double sensitivity_;
  std::uint64_t seed_;
};

class NgramPredictor final : public Predictor {
 public:
  NgramPredictor(const Vocabulary& vocab, const std::vector<std::vector<TokenId>>& corpus)
      : Predictor(vocab), v_(static_cast<std::size_t>(vocab.size())) {
    require(!corpus.empty(), "n-gram corpus is empty");
    unigram_.assign(v_, 0.0);
    forward_.assign(v_ * v_, 0.0);
    forward_total_.assign(v_, 0.0);
    backward_total_.assign(v_, 0.0);
    double total = 0.0;
    for (const auto& seq : corpus) {
      for (std::size_t k = 0; k < seq.size(); ++k) {
        require(vocab.is_real(seq[k]), "corpus holds a token outside the real vocabulary");
        unigram_[static_cast<std::size_t>(seq[k])] += 1.0;
        total += 1.0;
        if (k > 0) {
          const auto a = static_cast<std::size_t>(seq[k - 1]);
          const auto b = static_cast<std::size_t>(seq[k]);
          forward_[a * v_ + b] += 1.0;
          forward_total_[a] += 1.0;
          backward_total_[b] += 1.0;
        }
      }
    }
    require(total > 0.0, "n-gram corpus has no tokens");
    unigram_total_ = total;
  }

 protected:
  MarginalEstimate evaluate(const SequenceState& state, std::size_t /*step*/) const override {
    const auto tokens = state.tokens();
    const TokenId mask = state.mask_id();
    auto positions = state.masked_positions();
    std::vector<double> probs(positions.size() * v_);
    const double vd = static_cast<double>(v_);
    for (std::size_t k = 0; k < positions.size(); ++k) {
      const std::size_t i = positions[k];
      std::optional<std::size_t> left;
      std::optional<std::size_t> right;
      for (std::size_t j = i; j-- > 0;) {
        if (tokens[j] != mask) {
          left = static_cast<std::size_t>(tokens[j]);
          break;
        }
      }
      for (std::size_t j = i + 1; j < tokens.size(); ++j) {
        if (tokens[j] != mask) {
          right = static_cast<std::size_t>(tokens[j]);
          break;
        }
      }
      const double lambda_left = left ? 0.4 : 0.0;
      const double lambda_right = right ? 0.4 : 0.0;
      const double lambda_uni = 1.0 - lambda_left - lambda_right;
      double* row = probs.data() + k * v_;
      for (std::size_t tok = 0; tok < v_; ++tok) {
        double p = lambda_uni * (unigram_[tok] + 1.0) / (unigram_total_ + vd);
        if (left) p += lambda_left * (forward_[*left * v_ + tok] + 1.0) / (forward_total_[*left] + vd);
        if (right) p += lambda_right * (forward_[tok * v_ + *right] + 1.0) / (backward_total_[*right] + vd);
        row[tok] = p;
      }
    }
    return MarginalEstimate(std::move(positions), std::move(probs), v_);
  }

 private:
  std::size_t v_;
  std::vector<double> unigram_;
  double unigram_total_ = 0.0;
  std::vector<double> forward_;         // count(a -> b) at [a * v + b]
  std::vector<double> forward_total_;   // count(a -> *)
  std::vector<double> backward_total_;  // count(* -> b)
};

}  // namespace

std::unique_ptr<Predictor> make_table_predictor(const Vocabulary& vocab, std::vector<TokenId> target,
                                                double sensitivity, std::uint64_t seed) {
  return std::make_unique<TablePredictor>(vocab, std::move(target), sensitivity, seed);
}

std::unique_ptr<Predictor> make_ngram_predictor(const Vocabulary& vocab,
                                                const std::vector<std::vector<TokenId>>& corpus, int order) {
  require(order == 2, "only bigram order is supported");
  return std::make_unique<NgramPredictor>(vocab, corpus);
}

}  // namespace dllm
