#include "dllm/run_config.hpp"

#include <fstream>
#include <array>

#include "dllm/error.hpp"
#include "dllm/hash.hpp"
#include "dllm/rng.hpp"
#include "dllm/trace.hpp"

namespace dllm {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { fail(ErrorCode::kConfig, what); }

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

}  // namespace

std::string to_string(DecoderKind kind) {
  switch (kind) {
    case DecoderKind::kStatic:
      return "static";
    case DecoderKind::kThreshold:
      return "threshold";
    case DecoderKind::kFreeDave:
      return "freedave";
  }
  return "?";
}

DecoderKind parse_decoder_kind(const std::string& text) {
  if (text == "static") return DecoderKind::kStatic;
  if (text == "threshold") return DecoderKind::kThreshold;
  if (text == "freedave") return DecoderKind::kFreeDave;
  config_error("unknown decoder '" + text + "'");
}

void RunConfig::validate() const {
  if (draft_steps.has_value() != (decoder == DecoderKind::kFreeDave)) {
    config_error("'d' must be given exactly when the decoder is freedave");
  }
  if (threshold.has_value() != (decoder == DecoderKind::kThreshold)) {
    config_error("'threshold' must be given exactly when the decoder is threshold");
  }
  if (name.find_first_of(",\n\r") != std::string::npos) config_error("config name must not contain commas or newlines");
  if (draft_steps && *draft_steps < 1) config_error("'d' must be at least 1");
  if (threshold && !(*threshold > 0.0 && *threshold <= 1.0)) config_error("'threshold' must lie in (0, 1]");
  if (length < 1 || steps < 1 || steps > length) config_error("schedule needs 1 <= steps <= length");
  if (block_size < 1) config_error("block_size must be positive");
  if (!(temperature > 0.0)) config_error("temperature must be positive");
  if (repetitions < 1) config_error("repetitions must be positive");
  if (predictor.kind != "replay" && vocab_size < 1) config_error("vocab size must be positive");
  if (predictor.kind != "table" && predictor.kind != "ngram" && predictor.kind != "replay") {
    config_error("unknown predictor kind '" + predictor.kind + "'");
  }
}

Vocabulary RunConfig::vocabulary() const {
  try {
    return Vocabulary(vocab_size, eos_id);
  } catch (const Error& e) {
    config_error(e.what());
  }
}

TimeSchedule RunConfig::schedule() const {
  try {
    return make_uniform_schedule(length, steps);
  } catch (const Error& e) {
    config_error(e.what());
  }
}

SchedulerConfig RunConfig::scheduler() const {
  if (decoder == DecoderKind::kThreshold) {
    return SchedulerConfig::thresholded(*threshold, block_size, sampling, temperature);
  }
  return SchedulerConfig::greedy(block_size, sampling, temperature);
}

json RunConfig::to_json() const {
  json pred = {{"kind", predictor.kind}};
  if (predictor.kind == "table") {
    pred["sensitivity"] = predictor.sensitivity;
    if (!predictor.target.empty()) pred["target"] = predictor.target;
  } else if (predictor.kind == "ngram") {
    if (!predictor.corpus.empty()) {
      pred["corpus"] = predictor.corpus;
    } else {
      pred["synthetic_corpus"] = {{"sequences", predictor.corpus_sequences}, {"length", predictor.corpus_length}};
    }
  } else {
    pred["trace"] = predictor.trace.string();
  }
  if (predictor.seed) pred["seed"] = *predictor.seed;

  json run = {{"decoder", dllm::to_string(decoder)}};
  if (draft_steps) run["d"] = *draft_steps;
  if (threshold) run["threshold"] = *threshold;

  json vocab = {{"size", vocab_size}};
  if (eos_id) vocab["eos_id"] = *eos_id;
  return {{"format", kRunConfigFormat},
          {"name", name},
          {"vocab", vocab},
          {"predictor", pred},
          {"schedule", {{"length", length}, {"steps", steps}, {"block_size", block_size}}},
          {"sampling", {{"mode", dllm::to_string(sampling)}, {"temperature", temperature}}},
          {"seed", seed},
          {"repetitions", repetitions},
          {"runs", json::array({run})}};
}

std::string RunConfig::digest() const { return to_hex(fnv1a64(to_json().dump())); }

std::vector<RunConfig> parse_run_configs(const json& doc, const std::filesystem::path& base_dir) {
  try {
    if (doc.value("format", 0) != kRunConfigFormat) config_error("run config must declare \"format\": 1");
    RunConfig shared;
    shared.name = doc.value("name", "");
    shared.seed = doc.value("seed", std::uint64_t{0});
    shared.repetitions = doc.value("repetitions", std::size_t{1});

    const json& pred = doc.at("predictor");
    shared.predictor.kind = pred.at("kind").get<std::string>();
    shared.predictor.sensitivity = get_or(pred, "sensitivity", 0.0);
    shared.predictor.target = get_or(pred, "target", std::vector<TokenId>{});
    if (pred.contains("seed")) shared.predictor.seed = pred.at("seed").get<std::uint64_t>();
    shared.predictor.corpus = get_or(pred, "corpus", std::vector<std::vector<TokenId>>{});
    if (pred.contains("synthetic_corpus")) {
      shared.predictor.corpus_sequences = pred.at("synthetic_corpus").at("sequences").get<std::size_t>();
      shared.predictor.corpus_length = pred.at("synthetic_corpus").at("length").get<std::size_t>();
    }
    if (pred.contains("trace")) {
      std::filesystem::path trace = pred.at("trace").get<std::string>();
      shared.predictor.trace = trace.is_relative() && !base_dir.empty() ? base_dir / trace : trace;
    }

    const json& sched = doc.at("schedule");
    if (shared.predictor.kind == "replay") {
      // Vocabulary and shape come from the trace header.
      const TraceFile trace = read_trace(shared.predictor.trace);
      shared.vocab_size = trace.header.vocab_size;
      shared.eos_id = trace.header.eos_id;
      shared.length = get_or(sched, "length", trace.header.length);
      shared.steps = get_or(sched, "steps", trace.header.steps);
    } else {
      const json& vocab = doc.at("vocab");
      shared.vocab_size = vocab.at("size").get<std::int32_t>();
      if (vocab.contains("eos_id") && !vocab.at("eos_id").is_null()) shared.eos_id = vocab.at("eos_id").get<TokenId>();
      shared.length = sched.at("length").get<std::size_t>();
      shared.steps = get_or(sched, "steps", shared.length);
    }
    shared.block_size = get_or(sched, "block_size", shared.length);

    if (doc.contains("sampling")) {
      const json& s = doc.at("sampling");
      shared.sampling = parse_sampling_mode(s.value("mode", "argmax"));
      shared.temperature = s.value("temperature", 1.0);
    }

    std::vector<RunConfig> out;
    const json& runs = doc.at("runs");
    if (!runs.is_array() || runs.empty()) config_error("'runs' must be a non-empty array");
    for (const json& run : runs) {
      RunConfig cfg = shared;
      cfg.decoder = parse_decoder_kind(run.at("decoder").get<std::string>());
      if (run.contains("d")) cfg.draft_steps = run.at("d").get<std::size_t>();
      if (run.contains("threshold")) cfg.threshold = run.at("threshold").get<double>();
      cfg.validate();
      out.push_back(std::move(cfg));
    }
    return out;
  } catch (const json::exception& e) {
    config_error(std::string("run config: ") + e.what());
  }
}

std::vector<RunConfig> load_run_configs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    config_error("config " + path.string() + ": " + e.what());
  }
  return parse_run_configs(doc, path.parent_path());
}

std::vector<std::vector<TokenId>> make_synthetic_corpus(const Vocabulary& vocab, std::size_t sequences,
                                                        std::size_t length, std::uint64_t seed) {
  require(sequences >= 1 && length >= 1, "synthetic corpus needs sequences and length");
  const auto v = static_cast<std::uint64_t>(vocab.size());
  const DeterministicRng rng(seed);
  auto any = [&](std::string_view label, std::uint64_t a, std::uint64_t b) {
    return static_cast<TokenId>(rng.bits(label, a, b) % v);
  };
  // Each token has two favored successors, so bigrams carry signal.
  std::vector<std::array<TokenId, 2>> successors(v);
  for (std::uint64_t t = 0; t < v; ++t) successors[t] = {any("succ", t, 0), any("succ", t, 1)};
  std::vector<std::vector<TokenId>> corpus(sequences);
  for (std::size_t n = 0; n < sequences; ++n) {
    TokenId cur = any("start", n, 0);
    for (std::size_t k = 0; k < length; ++k) {
      corpus[n].push_back(cur);
      const std::uint64_t idx = n * length + k;
      if (rng.uniform("follow", idx) < 0.75) {
        cur = successors[static_cast<std::size_t>(cur)][rng.bits("pick", idx) & 1U];
      } else {
        cur = any("jump", idx, 0);
      }
    }
  }
  return corpus;
}

std::unique_ptr<Predictor> make_predictor(const RunConfig& cfg, std::uint64_t seed) {
  const std::uint64_t pseed = cfg.predictor.seed.value_or(seed);
  if (cfg.predictor.kind == "replay") return open_replay_predictor(cfg.predictor.trace);
  const Vocabulary vocab = cfg.vocabulary();
  if (cfg.predictor.kind == "ngram") {
    auto corpus = cfg.predictor.corpus;
    if (corpus.empty()) {
      if (cfg.predictor.corpus_sequences == 0) config_error("n-gram predictor needs a corpus");
      corpus = make_synthetic_corpus(vocab, cfg.predictor.corpus_sequences, cfg.predictor.corpus_length, pseed);
    }
    return make_ngram_predictor(vocab, corpus);
  }
  std::vector<TokenId> target = cfg.predictor.target;
  if (target.empty()) {
    const DeterministicRng rng(pseed);
    for (std::size_t i = 0; i < cfg.length; ++i) {
      target.push_back(static_cast<TokenId>(rng.bits("target", i) % static_cast<std::uint64_t>(vocab.size())));
    }
  }
  if (target.size() != cfg.length) config_error("table target length differs from the schedule length");
  return make_table_predictor(vocab, std::move(target), cfg.predictor.sensitivity, pseed);
}

}  // namespace dllm
