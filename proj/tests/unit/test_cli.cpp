#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dllm/bench.hpp"
#include "dllm/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dllm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = dllm::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string config(const std::string& name) { return std::string(DLLM_SOURCE_DIR) + "/configs/" + name; }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dllm_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("cli decode") {
  const auto r = cli({"decode", "--config", config("context_free.json"), "--decoder", "freedave", "--d", "8"});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc.at("result").at("nfe").at("forward_calls") == 5);
  CHECK(doc.at("valid_tokens") == 32);

  const auto s = cli({"decode", "--config", config("context_free.json"), "--seed", "3"});
  REQUIRE(s.code == 0);
  CHECK(nlohmann::json::parse(s.out).at("config").at("seed") == 3);

  CHECK(cli({"decode", "--config", config("context_free.json"), "--decoder", "threshold"}).code == 1);
  CHECK(cli({"decode", "--config", config("trado_style.json"), "--decoder", "threshold"}).code == 0);
  CHECK(cli({"decode", "--config", config("trado_style.json"), "--decoder", "static", "--d", "2"}).code == 1);
  CHECK(cli({"decode", "--config", config("trado_style.json"), "--decoder", "greedy"}).code == 1);
}

TEST_CASE("cli usage errors") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"compare", "--config", config("trado_style.json")}).code == 1);
  CHECK(cli({"decode", "--config", "/nonexistent/config.json"}).code == 1);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("cli compare and sweep write reports") {
  const auto csv = scratch("compare.csv");
  REQUIRE(cli({"compare", "--config", config("lossiness_witness.json"), "--out", csv.string()}).code == 0);
  const auto report = dllm::read_report_csv(slurp(csv));
  CHECK(report.rows.size() == 24);

  const auto js = scratch("compare.json");
  REQUIRE(cli({"compare", "--config", config("context_free.json"), "--out", js.string()}).code == 0);
  CHECK(nlohmann::json::parse(slurp(js)).at("rows").size() == 2);

  const auto sweep = scratch("sweep.csv");
  REQUIRE(cli({"sweep", "--config", config("context_free.json"), "--d-list", "1,4,32", "--out", sweep.string()}).code == 0);
  CHECK(dllm::read_report_csv(slurp(sweep)).rows.size() == 6);
}

TEST_CASE("cli pathlab") {
  const auto out = scratch("pathlab.json");
  REQUIRE(cli({"pathlab", "--config", config("pathlab.json"), "--out", out.string()}).code == 0);
  const auto doc = nlohmann::json::parse(slurp(out));
  CHECK(doc.at("results").size() == 20);
  for (const auto& r : doc.at("results")) {
    for (const auto& f : r.at("freedave")) {
      CHECK(f.at("greedy_path_is_feasible") == true);
      CHECK(f.at("engine_matches_greedy") == true);
    }
  }
  CHECK(cli({"pathlab", "--config", config("pathlab.json"), "--max-steps", "8", "--out", out.string()}).code == 1);
}

TEST_CASE("cli trace recording and replay validation") {
  const auto trace = scratch("rec.fdt");
  REQUIRE(cli({"record-trace", "--config", config("trado_style.json"), "--d", "4", "--out", trace.string()}).code == 0);
  const auto ok = cli({"replay-validate", "--trace", trace.string()});
  CHECK(ok.code == 0);
  CHECK(nlohmann::json::parse(ok.out).at("freedave_replay") == "ok");

  std::string text = slurp(trace);
  const auto header_end = text.find('\n', text.find('\n') + 1);
  auto header = nlohmann::json::parse(text.substr(text.find('\n') + 1, header_end - text.find('\n') - 1));

  header["draft_steps"] = 16;
  const auto wider = scratch("wider.fdt");
  std::ofstream(wider) << "FDTRACE1\n" << header.dump() << text.substr(header_end);
  const auto miss = cli({"replay-validate", "--trace", wider.string()});
  CHECK(miss.code == 3);
  CHECK(miss.err.find("trace miss") != std::string::npos);

  header["draft_steps"] = 4;
  auto tokens = header.at("static_tokens").get<std::vector<int>>();
  tokens[0] = (tokens[0] + 1) % 17;
  header["static_tokens"] = tokens;
  const auto wrong = scratch("wrong.fdt");
  std::ofstream(wrong) << "FDTRACE1\n" << header.dump() << text.substr(header_end);
  CHECK(cli({"replay-validate", "--trace", wrong.string()}).code == 3);

  const auto bad = scratch("bad.fdt");
  std::ofstream(bad) << "FDTRACE0\n";
  CHECK(cli({"replay-validate", "--trace", bad.string()}).code == 3);
}

TEST_CASE("cli replay config") {
  const auto trace = scratch("for_config.fdt");
  REQUIRE(cli({"record-trace", "--config", config("trado_style.json"), "--d", "8", "--out", trace.string()}).code == 0);
  const auto cfg = scratch("replay.json");
  nlohmann::json doc = {{"format", 1},
                        {"name", "replay"},
                        {"predictor", {{"kind", "replay"}, {"trace", trace.string()}}},
                        {"schedule", {{"block_size", 4}}},
                        {"sampling", {{"mode", "stochastic"}}},
                        {"runs", {{{"decoder", "static"}}, {{"decoder", "freedave"}, {"d", 8}}}}};
  std::ofstream(cfg) << doc.dump();
  const auto out = scratch("replay.csv");
  REQUIRE(cli({"compare", "--config", cfg.string(), "--out", out.string()}).code == 0);
  for (const auto& row : dllm::read_report_csv(slurp(out)).rows) CHECK(row.lossless);

  doc["runs"] = {{{"decoder", "freedave"}, {"d", 16}}};
  std::ofstream(cfg) << doc.dump();
  CHECK(cli({"compare", "--config", cfg.string(), "--out", out.string()}).code == 3);
}
