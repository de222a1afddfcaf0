#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "cli.hpp"

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "lcgf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = lcgf::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string all_help() {
  std::string text = lcgf::cli::help_text("");
  for (const auto& name : lcgf::cli::subcommand_names()) text += "\n==== " + name + "\n" + lcgf::cli::help_text(name);
  return text;
}

// The config block of an output header: the '# ' lines after the version line, prefix removed.
std::string config_from_header(const std::string& output) {
  std::istringstream in(output);
  std::string line;
  std::string cfg;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) != 0) continue;
    if (first) {
      first = false;
      continue;
    }
    cfg += line.substr(2) + "\n";
  }
  return cfg;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("lcgf_test_" + name);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("every subcommand is present") {
    const auto names = lcgf::cli::subcommand_names();
    for (const char* want : {"cov", "sample", "check-assumptions", "max-stats", "tail", "pairs", "loc", "dmart", "xi",
                             "barrier", "gstar", "limit-compare", "clrem-w"}) {
      CHECK(std::find(names.begin(), names.end(), want) != names.end());
    }
  }

  TEST_CASE("help documents every flag; nothing is hidden") {
    for (const auto& name : lcgf::cli::subcommand_names()) {
      const std::string help = lcgf::cli::help_text(name);
      for (const auto& o : lcgf::cli::option_info(name)) {
        CAPTURE(name);
        CAPTURE(o.names);
        CHECK_FALSE(o.group.empty());
        CHECK_FALSE(o.description.empty());
        // The longest name form appears in --help.
        std::string flag = o.names.substr(o.names.rfind(',') == std::string::npos ? 0 : o.names.rfind(',') + 1);
        CHECK(help.find(flag) != std::string::npos);
      }
    }
  }

  TEST_CASE("help snapshot") {
    const std::filesystem::path snap = std::filesystem::path(LCGF_TEST_DATA) / "cli_help.txt";
    const std::string now = all_help();
    if (std::getenv("LCGF_UPDATE_SNAPSHOTS") != nullptr) {
      std::filesystem::create_directories(snap.parent_path());
      std::ofstream(snap, std::ios::binary) << now;
    }
    REQUIRE(std::filesystem::exists(snap));
    CHECK(read_file(snap) == now);
  }

  TEST_CASE("cov example") {
    const auto r = run({"cov", "--family", "clrem", "-N", "8", "-W", "0", "--k", "0", "--l", "4"});
    CHECK(r.code == 0);
    CHECK(r.out.find("-0.693147") != std::string::npos);
  }

  TEST_CASE("exit codes") {
    CHECK(run({"no-such-command"}).code == 1);
    CHECK(run({}).code == 1);
    CHECK(run({"max-stats", "--bogus"}).code == 1);
    CHECK(run({"cov", "--family", "clrem", "-N", "8", "--k", "0", "--l", "9"}).code == 1);
    const auto g = run({"gstar", "--k", "1", "--l", "1", "-d", "2", "--beta-star", "1000", "--gamma", "0.6"});
    CHECK(g.code == 2);
    CHECK(g.err.find("exceeds 1") != std::string::npos);
    CHECK(run({"xi", "-d", "1", "-n", "6", "--alpha", "0"}).code == 2);
    // W = -1 keeps the diagonal positive but the matrix is not positive definite.
    CHECK(run({"sample", "--family", "clrem", "-N", "8", "-W", "-1"}).code == 2);
    CHECK(run({"sample", "--family", "clrem", "-N", "8", "-W", "-5"}).code == 1);
    CHECK(run({"limit-compare", "--empirical", temp_path("missing.csv").string()}).code != 0);
  }

  TEST_CASE("max-stats is deterministic, worker independent and re-derivable from its header") {
    const std::vector<std::string> base{"max-stats", "--family", "mbrw", "-d", "2", "-n", "5", "--replicas", "40",
                                        "--seed", "7"};
    const auto a = run(base);
    REQUIRE(a.code == 0);
    auto with_workers = base;
    with_workers.insert(with_workers.end(), {"--workers", "3"});
    CHECK(run(with_workers).out == a.out);
    CHECK(run(base).out == a.out);

    const auto cfg = temp_path("max.cfg");
    std::ofstream(cfg) << config_from_header(a.out);
    const auto b = run({"max-stats", "--config", cfg.string()});
    CHECK(b.code == 0);
    CHECK(b.out == a.out);

    // A flag overrides the file.
    const auto c = run({"max-stats", "--config", cfg.string(), "--seed", "8"});
    CHECK(c.out != a.out);
    std::filesystem::remove(cfg);
  }

  TEST_CASE("binary output writes a config sidecar that re-derives the file") {
    const auto out = temp_path("field.bin");
    const auto r = run({"sample", "--family", "mbrw", "-d", "1", "-n", "6", "--seed", "3", "--format", "bin", "-o",
                        out.string()});
    REQUIRE(r.code == 0);
    const auto sidecar = std::filesystem::path(out.string() + ".cfg");
    REQUIRE(std::filesystem::exists(sidecar));
    const auto cfg = temp_path("field.cfg");
    std::ofstream(cfg) << config_from_header(read_file(sidecar));
    const auto out2 = temp_path("field2.bin");
    CHECK(run({"sample", "--config", cfg.string(), "-o", out2.string()}).code == 0);
    CHECK(read_file(out) == read_file(out2));
    for (const auto& p : {out, sidecar, cfg, out2, std::filesystem::path(out2.string() + ".cfg")}) {
      std::filesystem::remove(p);
    }
  }

  TEST_CASE("json reports carry the header") {
    const auto r = run({"check-assumptions", "--family", "mbrw", "-d", "1", "-n", "4", "--pair-budget", "100"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("\"header\"") != std::string::npos);
    CHECK(r.out.find("\"result\"") != std::string::npos);
    CHECK(r.out.find("\"version\"") != std::string::npos);
  }

  TEST_CASE("remaining subcommands run") {
    CHECK(run({"tail", "--family", "mbrw", "-d", "1", "-n", "5", "--replicas", "50"}).code == 0);
    CHECK(run({"pairs", "--family", "mbrw", "-d", "1", "-n", "5", "--replicas", "5", "--r", "2"}).code == 0);
    CHECK(run({"loc", "--family", "mbrw", "-d", "2", "-n", "5", "--replicas", "5", "--r", "4", "--c", "0.5"}).code ==
          0);
    CHECK(run({"dmart", "--family", "mbrw", "-d", "1", "-n", "5", "--replicas", "5"}).code == 0);
    CHECK(run({"xi", "-d", "1", "-n", "6", "--mode", "model"}).code == 0);
    CHECK(run({"barrier", "-d", "2", "-n", "6", "--replicas", "3"}).code == 0);
    CHECK(run({"gstar", "-d", "2", "--k", "1", "--l", "1", "--replicas", "50"}).code == 0);
    CHECK(run({"clrem-w", "-N", "8"}).code == 0);
    CHECK(run({"shift-check", "--family", "mbrw", "-d", "2", "-n", "4", "--replicas", "100"}).code == 0);
  }
}
