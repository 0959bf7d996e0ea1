#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dllm/bench.hpp"
#include "dllm/decoder.hpp"
#include "dllm/error.hpp"
#include "dllm/path_lab.hpp"
#include "dllm/run_config.hpp"
#include "dllm/trace.hpp"

namespace py = pybind11;
using namespace dllm;

namespace {

Vocabulary vocab_from(std::int32_t size, std::optional<TokenId> eos) { return Vocabulary(size, eos); }

SequenceState to_state(const Predictor& p, const std::vector<std::int32_t>& tokens, std::size_t step) {
  std::vector<TokenId> ids(tokens.begin(), tokens.end());
  for (auto& t : ids) {
    if (t < 0) t = p.vocabulary().mask_id();
  }
  return SequenceState(std::move(ids), step, p.vocabulary().mask_id());
}

py::dict estimate_to_dict(const MarginalEstimate& est) {
  py::dict rows;
  for (std::size_t k = 0; k < est.row_count(); ++k) {
    auto row = est.row_at(k);
    rows[py::int_(est.positions()[k])] = std::vector<double>(row.begin(), row.end());
  }
  return rows;
}

std::string result_json(const DecodeResult& r) { return to_json(r).dump(); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Masked-diffusion decoding engine bindings";

  py::register_exception<Error>(m, "EngineError", PyExc_RuntimeError);

  m.def("uniform_schedule", [](std::size_t length, std::size_t steps) {
    const TimeSchedule s = make_uniform_schedule(length, steps);
    std::vector<double> times;
    std::vector<std::size_t> quotas;
    for (std::size_t i = 0; i <= s.step_count(); ++i) times.push_back(s.time(i));
    for (std::size_t i = 0; i < s.step_count(); ++i) quotas.push_back(s.quota(i));
    return py::make_tuple(times, quotas);
  }, py::arg("length"), py::arg("steps"));

  m.def("valid_token_count", [](const std::vector<TokenId>& tokens, std::int32_t vocab_size, std::optional<TokenId> eos) {
    return valid_token_count(tokens, vocab_from(vocab_size, eos));
  }, py::arg("tokens"), py::arg("vocab_size"), py::arg("eos_id") = py::none());

  py::class_<Predictor>(m, "Predictor")
      .def_property_readonly("vocab_size", [](const Predictor& p) { return p.vocabulary().size(); })
      .def_property_readonly("mask_id", [](const Predictor& p) { return p.vocabulary().mask_id(); })
      .def_property_readonly("forward_calls", [](const Predictor& p) { return p.counter().forward_calls; })
      .def_property_readonly("sequence_evaluations", [](const Predictor& p) { return p.counter().sequence_evaluations; })
      .def("reset_counter", &Predictor::reset_counter)
      .def("predict", [](Predictor& p, const std::vector<std::int32_t>& tokens, std::size_t step) {
        return estimate_to_dict(p.predict(to_state(p, tokens, step), step));
      }, py::arg("tokens"), py::arg("step"), "Rows keyed by masked position; -1 marks a masked slot.");

  m.def("table_predictor", [](std::int32_t vocab_size, std::vector<TokenId> target, double sensitivity,
                              std::uint64_t seed, std::optional<TokenId> eos) {
    return make_table_predictor(vocab_from(vocab_size, eos), std::move(target), sensitivity, seed);
  }, py::arg("vocab_size"), py::arg("target"), py::arg("sensitivity") = 0.0, py::arg("seed") = 0,
     py::arg("eos_id") = py::none());
  m.def("ngram_predictor", [](std::int32_t vocab_size, const std::vector<std::vector<TokenId>>& corpus,
                              std::optional<TokenId> eos) {
    return make_ngram_predictor(vocab_from(vocab_size, eos), corpus);
  }, py::arg("vocab_size"), py::arg("corpus"), py::arg("eos_id") = py::none());
  m.def("replay_predictor", &open_replay_predictor, py::arg("path"));

  py::class_<SchedulerConfig>(m, "SchedulerConfig")
      .def_static("greedy", [](std::size_t block, const std::string& sampling, double temperature) {
        return SchedulerConfig::greedy(block, parse_sampling_mode(sampling), temperature);
      }, py::arg("block_size"), py::arg("sampling") = "argmax", py::arg("temperature") = 1.0)
      .def_static("thresholded", [](double tau, std::size_t block, const std::string& sampling, double temperature) {
        return SchedulerConfig::thresholded(tau, block, parse_sampling_mode(sampling), temperature);
      }, py::arg("tau"), py::arg("block_size"), py::arg("sampling") = "argmax", py::arg("temperature") = 1.0)
      .def_property_readonly("kind", [](const SchedulerConfig& c) { return to_string(c.kind); })
      .def_property_readonly("threshold", [](const SchedulerConfig& c) { return c.threshold; })
      .def_property_readonly("block_size", [](const SchedulerConfig& c) { return c.layout.block_size(); });

  m.def("decode_static", [](Predictor& p, const SchedulerConfig& cfg, std::size_t length, std::size_t steps,
                             std::uint64_t seed) {
    return result_json(decode_static(p, cfg, make_uniform_schedule(length, steps), DeterministicRng(seed)));
  }, py::arg("predictor"), py::arg("scheduler"), py::arg("length"), py::arg("steps"), py::arg("seed") = 0);
  m.def("decode_threshold", [](Predictor& p, const SchedulerConfig& cfg, std::size_t length, std::size_t steps,
                                std::uint64_t seed) {
    return result_json(decode_threshold(p, cfg, make_uniform_schedule(length, steps), DeterministicRng(seed)));
  }, py::arg("predictor"), py::arg("scheduler"), py::arg("length"), py::arg("steps"), py::arg("seed") = 0);
  m.def("decode_freedave", [](Predictor& p, const SchedulerConfig& cfg, std::size_t length, std::size_t steps,
                               std::size_t d, std::uint64_t seed) {
    return result_json(decode_freedave(p, cfg, make_uniform_schedule(length, steps), d, DeterministicRng(seed)));
  }, py::arg("predictor"), py::arg("scheduler"), py::arg("length"), py::arg("steps"), py::arg("d"),
     py::arg("seed") = 0);

  m.def("check_lemma", [](Predictor& p, const SchedulerConfig& cfg, std::size_t length, std::size_t steps,
                           std::uint64_t seed, std::size_t cap) {
    const TimeSchedule schedule = make_uniform_schedule(length, steps);
    const DeterministicRng rng(seed);
    const FeasibleGraph graph = build_feasible_graph({p, cfg, schedule, rng, cap});
    nlohmann::json doc = {{"graph", to_json(graph)}, {"lemma", to_json(check_lemma(graph, cfg, schedule, rng))}};
    return doc.dump();
  }, py::arg("predictor"), py::arg("scheduler"), py::arg("length"), py::arg("steps"), py::arg("seed") = 0,
     py::arg("cap") = kDefaultPathLabCap);

  m.def("compare", [](const std::string& config_path, bool as_json) {
    const BenchReport report = run_comparison(load_run_configs(config_path));
    return as_json ? report_json(report).dump() : report_csv(report);
  }, py::arg("config_path"), py::arg("as_json") = false);
  m.def("verify_report_csv", [](const std::string& text) { return read_report_csv(text).rows.size(); },
        py::arg("text"));
  m.def("read_trace_header", [](const std::filesystem::path& path) {
    const TraceFile trace = read_trace(path);
    return py::make_tuple(trace.header.vocab_size, trace.header.length, trace.header.steps, trace.records.size());
  }, py::arg("path"));
}
