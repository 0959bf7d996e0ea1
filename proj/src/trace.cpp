#include "dllm/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "dllm/error.hpp"
#include "dllm/hash.hpp"

namespace dllm {

using nlohmann::json;

namespace {

constexpr double kRowTolerance = 1e-9;

[[noreturn]] void format_error(const std::string& what) { fail(ErrorCode::kTraceFormat, what); }

}  // namespace

std::vector<std::int32_t> canonical_tokens(const SequenceState& state) {
  std::vector<std::int32_t> out;
  out.reserve(state.length());
  for (TokenId t : state.tokens()) out.push_back(t == state.mask_id() ? -1 : t);
  return out;
}

std::string canonical_state_key(std::span<const std::int32_t> canonical) {
  std::vector<unsigned char> bytes;
  bytes.reserve(canonical.size() * 4);
  for (std::int32_t v : canonical) {
    const auto u = static_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<unsigned char>((u >> (8 * b)) & 0xffU));
  }
  return to_hex(fnv1a64(bytes));
}

std::string canonical_state_key(const SequenceState& state) { return canonical_state_key(canonical_tokens(state)); }

std::string format_probability(double p) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), p);
  if (ec != std::errc{}) format_error("cannot format probability");
  return std::string(buf, end);
}

double parse_probability(const std::string& text) {
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size() || !std::isfinite(value) || value < 0.0 || value > 1.0) {
    format_error("bad probability '" + text + "'");
  }
  return value;
}

std::vector<double> complete_row(const TraceRow& row, std::int32_t vocab_size) {
  const auto v = static_cast<std::size_t>(vocab_size);
  std::vector<double> dense(v, 0.0);
  std::vector<bool> listed(v, false);
  double mass = 0.0;
  for (auto [tok, p] : row.entries) {
    if (tok < 0 || tok >= vocab_size) format_error("row lists token " + std::to_string(tok) + " outside the vocabulary");
    if (listed[static_cast<std::size_t>(tok)]) format_error("row lists token " + std::to_string(tok) + " twice");
    listed[static_cast<std::size_t>(tok)] = true;
    dense[static_cast<std::size_t>(tok)] = p;
    mass += p;
  }
  const std::size_t unlisted = v - row.entries.size();
  const double tail = 1.0 - mass;
  if (tail < -kRowTolerance) format_error("row mass exceeds 1 at position " + std::to_string(row.position));
  if (unlisted == 0) {
    if (std::abs(tail) > kRowTolerance) format_error("full-width row does not sum to 1 at position " + std::to_string(row.position));
    return dense;
  }
  const double share = std::max(tail, 0.0) / static_cast<double>(unlisted);
  for (std::size_t tok = 0; tok < v; ++tok) {
    if (!listed[tok]) dense[tok] = share;
  }
  return dense;
}

namespace {

json header_to_json(const TraceHeader& h) {
  json j = {{"vocab_size", h.vocab_size}, {"mask_id", h.mask_id}, {"eos_id", nullptr}, {"length", h.length},
            {"steps", h.steps},           {"topk", h.topk},        {"schedule", h.schedule}};
  if (h.eos_id) j["eos_id"] = *h.eos_id;
  if (h.block_size) j["block_size"] = *h.block_size;
  if (h.sampling) j["sampling"] = *h.sampling;
  if (h.temperature) j["temperature"] = *h.temperature;
  if (h.draft_steps) j["draft_steps"] = *h.draft_steps;
  if (h.static_tokens) j["static_tokens"] = *h.static_tokens;
  if (h.recorder) j["recorder"] = *h.recorder;
  return j;
}

TraceHeader header_from_json(const json& j) {
  TraceHeader h;
  h.vocab_size = j.at("vocab_size").get<std::int32_t>();
  h.mask_id = j.at("mask_id").get<TokenId>();
  if (j.contains("eos_id") && !j.at("eos_id").is_null()) h.eos_id = j.at("eos_id").get<TokenId>();
  h.length = j.at("length").get<std::size_t>();
  h.steps = j.at("steps").get<std::size_t>();
  h.topk = j.at("topk").get<std::size_t>();
  h.schedule = j.at("schedule").get<std::string>();
  if (j.contains("block_size")) h.block_size = j.at("block_size").get<std::size_t>();
  if (j.contains("sampling")) h.sampling = j.at("sampling").get<std::string>();
  if (j.contains("temperature")) h.temperature = j.at("temperature").get<double>();
  if (j.contains("draft_steps")) h.draft_steps = j.at("draft_steps").get<std::size_t>();
  if (j.contains("static_tokens")) h.static_tokens = j.at("static_tokens").get<std::vector<TokenId>>();
  if (j.contains("recorder")) h.recorder = j.at("recorder").get<std::string>();
  return h;
}

json record_to_json(const TraceRecord& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json entries = json::array();
    for (auto [tok, p] : row.entries) entries.push_back({tok, format_probability(p)});
    rows.push_back({row.position, entries});
  }
  return {{"key", r.key}, {"step", r.step}, {"state", r.state}, {"rows", rows}};
}

TraceRecord record_from_json(const json& j) {
  TraceRecord r;
  r.key = j.at("key").get<std::string>();
  r.step = j.at("step").get<std::size_t>();
  r.state = j.at("state").get<std::vector<std::int32_t>>();
  for (const auto& row : j.at("rows")) {
    TraceRow tr;
    tr.position = row.at(0).get<std::size_t>();
    for (const auto& e : row.at(1)) {
      tr.entries.emplace_back(e.at(0).get<TokenId>(), parse_probability(e.at(1).get<std::string>()));
    }
    r.rows.push_back(std::move(tr));
  }
  return r;
}

void validate(const TraceFile& trace) {
  const TraceHeader& h = trace.header;
  if (h.vocab_size < 1) format_error("header vocab_size must be positive");
  if (h.mask_id < h.vocab_size) format_error("header mask_id collides with a real token");
  if (h.eos_id && (*h.eos_id < 0 || *h.eos_id >= h.vocab_size)) format_error("header eos_id is not a real token");
  if (h.steps < 1 || h.steps > h.length) format_error("header steps must lie in [1, length]");
  if (h.topk < 1 || h.topk > static_cast<std::size_t>(h.vocab_size)) format_error("header topk out of range");
  if (h.schedule != "uniform") format_error("unsupported schedule kind '" + h.schedule + "'");

  std::set<std::pair<std::string, std::size_t>> seen;
  for (const TraceRecord& r : trace.records) {
    if (r.state.size() != h.length) format_error("record state length differs from header length");
    if (canonical_state_key(r.state) != r.key) format_error("record key " + r.key + " does not match its state");
    if (!seen.emplace(r.key, r.step).second) format_error("duplicate record key " + r.key);
    std::vector<std::size_t> masked;
    for (std::size_t i = 0; i < r.state.size(); ++i) {
      if (r.state[i] == -1) {
        masked.push_back(i);
      } else if (r.state[i] < 0 || r.state[i] >= h.vocab_size) {
        format_error("record " + r.key + " holds a token outside the vocabulary");
      }
    }
    if (r.rows.size() != masked.size()) format_error("record " + r.key + " rows do not cover its masked positions");
    for (std::size_t k = 0; k < masked.size(); ++k) {
      if (r.rows[k].position != masked[k]) format_error("record " + r.key + " rows out of order");
      if (r.rows[k].entries.size() > h.topk) format_error("record " + r.key + " row wider than topk");
      complete_row(r.rows[k], h.vocab_size);
    }
  }
}

}  // namespace

std::string serialize_trace(const TraceFile& trace) {
  std::string out = std::string(kTraceMagic) + "\n" + header_to_json(trace.header).dump() + "\n";
  for (const TraceRecord& r : trace.records) out += record_to_json(r).dump() + "\n";
  return out;
}

TraceFile parse_trace(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTraceMagic) format_error("missing FDTRACE1 magic (unsupported version)");
  TraceFile trace;
  if (!std::getline(in, line)) format_error("missing trace header");
  try {
    trace.header = header_from_json(json::parse(line));
    std::size_t lineno = 2;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        trace.records.push_back(record_from_json(json::parse(line)));
      } catch (const json::exception& e) {
        format_error("line " + std::to_string(lineno) + ": " + e.what());
      }
    }
  } catch (const json::exception& e) {
    format_error(std::string("header: ") + e.what());
  }
  validate(trace);
  return trace;
}

TraceFile read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) format_error("cannot open trace " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str());
}

void write_trace(const TraceFile& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) format_error("cannot write trace " + path.string());
  out << serialize_trace(trace);
}

namespace {

class ReplayPredictor final : public Predictor {
 public:
  explicit ReplayPredictor(TraceFile trace)
      : Predictor(Vocabulary(trace.header.vocab_size, trace.header.mask_id, trace.header.eos_id)),
        trace_(std::move(trace)) {
    for (std::size_t k = 0; k < trace_.records.size(); ++k) {
      index_.emplace(trace_.records[k].key + "@" + std::to_string(trace_.records[k].step), k);
    }
  }

 protected:
  MarginalEstimate evaluate(const SequenceState& state, std::size_t step) const override {
    const auto canonical = canonical_tokens(state);
    const std::string key = canonical_state_key(canonical);
    auto it = index_.find(key + "@" + std::to_string(step));
    if (it == index_.end()) {
      fail(ErrorCode::kTraceMiss, "trace miss: state " + key + " at step " + std::to_string(step));
    }
    const TraceRecord& record = trace_.records[it->second];
    if (record.state != canonical) {
      fail(ErrorCode::kTraceMiss, "trace miss: hash collision on state " + key);
    }
    const auto v = static_cast<std::size_t>(trace_.header.vocab_size);
    std::vector<std::size_t> positions;
    std::vector<double> probs;
    probs.reserve(record.rows.size() * v);
    for (const TraceRow& row : record.rows) {
      positions.push_back(row.position);
      const auto dense = complete_row(row, trace_.header.vocab_size);
      probs.insert(probs.end(), dense.begin(), dense.end());
    }
    return MarginalEstimate(std::move(positions), std::move(probs), v);
  }

 private:
  TraceFile trace_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace

std::unique_ptr<Predictor> open_replay_predictor(const std::filesystem::path& path) {
  return make_replay_predictor(read_trace(path));
}

std::unique_ptr<Predictor> make_replay_predictor(TraceFile trace) {
  validate(trace);
  return std::make_unique<ReplayPredictor>(std::move(trace));
}

RecordingPredictor::RecordingPredictor(const Predictor& inner, std::size_t topk)
    : Predictor(inner.vocabulary()), inner_(inner), topk_(topk) {
  require(topk >= 1 && topk <= static_cast<std::size_t>(inner.vocabulary().size()), "topk out of range");
}

MarginalEstimate RecordingPredictor::evaluate(const SequenceState& state, std::size_t step) const {
  MarginalEstimate estimate = evaluate_inner(inner_, state, step);
  const auto canonical = canonical_tokens(state);
  const std::string key = canonical_state_key(canonical);
  if (records_.contains({key, step})) return estimate;

  TraceRecord record{key, step, canonical, {}};
  std::vector<std::size_t> order(estimate.vocab_size());
  for (std::size_t k = 0; k < estimate.row_count(); ++k) {
    const auto row = estimate.row_at(k);
    for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
    TraceRow tr{estimate.positions()[k], {}};
    for (std::size_t t = 0; t < topk_; ++t) tr.entries.emplace_back(static_cast<TokenId>(order[t]), row[order[t]]);
    std::sort(tr.entries.begin(), tr.entries.end());
    record.rows.push_back(std::move(tr));
  }
  records_.emplace(std::make_pair(key, step), std::move(record));
  return estimate;
}

TraceFile RecordingPredictor::take_trace(TraceHeader header) const {
  header.vocab_size = vocabulary().size();
  header.mask_id = vocabulary().mask_id();
  header.eos_id = vocabulary().eos_id();
  header.topk = topk_;
  TraceFile trace{std::move(header), {}};
  for (const auto& [key, record] : records_) trace.records.push_back(record);
  return trace;
}

}  // namespace dllm
