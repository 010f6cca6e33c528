// Command-line driver: run scenarios, sweep seeds, exhaustive oracle, lattice laws.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "deltacrdt/deltacrdt.hpp"

namespace fs = std::filesystem;
using namespace dcrdt;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot write " + path.string());
  out << text;
}

scenario load(const std::string& path) {
  try {
    return parse_scenario(read_file(path));
  } catch (const parse_error& e) {
    throw parse_error(e.line(), e.column(), path + ": " + e.what());
  }
}

crdt_kind kind_arg(const std::string& s) {
  auto k = parse_crdt_kind(s);
  if (!k) throw error("unknown crdt '" + s + "' (gcounter, gset, pncounter, twopset)");
  return *k;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delta-state CRDT simulator and convergence checker"};
  app.require_subcommand(1);

  std::string file, out_dir, seeds, crdt = "gcounter", style = "delta";
  std::uint64_t seed = 0, trials = 1000;
  std::uint32_t replicas = 2, max_dup = 2;
  std::size_t ops = 2;
  unsigned threads = 0;

  auto* run = app.add_subcommand("run", "run one scenario and judge it");
  run->add_option("file", file, "scenario file")->required();
  auto* seed_opt = run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--out", out_dir, "write transcript.log, verdict.txt and summary.txt here");

  auto* sweep = app.add_subcommand("sweep", "run a scenario over a seed range");
  sweep->add_option("file", file, "scenario file")->required();
  sweep->add_option("--seeds", seeds, "half-open range A..B")->required();
  sweep->add_option("--threads", threads, "worker threads (0: one per core)");

  auto* oracle = app.add_subcommand("oracle", "enumerate every delivery schedule of a small instance");
  oracle->add_option("--crdt", crdt, "gcounter, gset, pncounter or twopset");
  oracle->add_option("--replicas", replicas, "replica count (1 to 3)");
  oracle->add_option("--ops", ops, "operation count (0 to 4)");
  oracle->add_option("--max-dup", max_dup, "copies of each message per replica (1 or 2)");
  oracle->add_option("--style", style, "state, op, delta or delta-refined");

  auto* laws = app.add_subcommand("laws", "randomized lattice law checks");
  laws->add_option("--crdt", crdt, "gcounter, gset, pncounter or twopset");
  laws->add_option("--trials", trials, "trials per law");
  laws->add_option("--seed", seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto sc = load(file);
      const auto r = run_scenario(sc, *seed_opt ? std::optional<std::uint64_t>(seed) : std::nullopt);
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "transcript.log", r.transcript());
        write_file(fs::path(out_dir) / "verdict.txt", r.verdict_text());
        write_file(fs::path(out_dir) / "summary.txt", r.summary());
      } else {
        std::cout << r.transcript() << "\n";
      }
      std::cout << r.verdict_text() << "\n" << r.summary();
      return r.exit_code();
    }
    if (*sweep) {
      const auto sc = load(file);
      const auto [a, b] = parse_seed_range(seeds);
      const auto rep = run_sweep(sc, a, b, threads);
      std::cout << rep.text();
      return rep.exit_code();
    }
    if (*oracle) {
      auto s = parse_replica_style(style);
      if (!s) throw error("unknown style '" + style + "'");
      const auto rep = brute_force_oracle(kind_arg(crdt), *s, replicas, ops, max_dup);
      std::cout << rep.text();
      return rep.pass ? 0 : 1;
    }
    if (*laws) {
      const auto rep = lattice_law_suite(kind_arg(crdt), trials, seed);
      std::cout << rep.text();
      return rep.pass() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
