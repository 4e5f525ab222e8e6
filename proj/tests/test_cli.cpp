#include "fixtures.hpp"

#include <doctest.h>

#include <fstream>

namespace {

std::string quote(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

std::size_t lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("solve writes a report") {
  const auto out = fixtures::scratch("cli_solve");
  const int rc = fixtures::run_cli("solve --case " + quote(fixtures::data("two_bus.m")) + " --out " + quote(out),
                                   out / "log.txt");
  CHECK(rc == 0);
  CHECK(std::filesystem::exists(out / "report.txt"));
  CHECK(std::filesystem::exists(out / "config.json"));
  CHECK(fixtures::slurp(out / "report.txt").find("Optimal") != std::string::npos);
}

TEST_CASE("validate names a dangling bus and exits with 2") {
  const auto out = fixtures::scratch("cli_validate");
  std::string text = fixtures::slurp(fixtures::data("two_bus.m"));
  const std::string row = "\t1\t2\t0.01\t0.05\t0.02\t250";
  text.replace(text.find(row), row.size(), "\t1\t7\t0.01\t0.05\t0.02\t250");
  std::ofstream(out / "bad.m") << text;
  const int rc = fixtures::run_cli("validate --case " + quote(out / "bad.m") + " --out " + quote(out), out / "log.txt");
  CHECK(rc == 2);
  CHECK(fixtures::slurp(out / "log.txt").find('7') != std::string::npos);
}

TEST_CASE("sweep writes one row per sample") {
  const auto out = fixtures::scratch("cli_sweep");
  const int rc = fixtures::run_cli("sweep --case " + quote(fixtures::data("corridor.m")) + " --ext " +
                                       quote(fixtures::data("corridor_lfac.json")) +
                                       " --from 1 --to 50 --step 0.5 --out " + quote(out),
                                   out / "log.txt");
  REQUIRE(rc == 0);
  CHECK(lines(fixtures::slurp(out / "sweep.csv")) == 100);
}

TEST_CASE("unknown options are usage errors") {
  const auto out = fixtures::scratch("cli_usage");
  CHECK(fixtures::run_cli("solve --bogus", out / "log.txt") == 2);
  CHECK(fixtures::run_cli("sweep --case " + quote(fixtures::data("corridor.m")) + " --step 0 --out " + quote(out),
                          out / "log.txt") == 2);
}

TEST_CASE("help lists the subcommands and flags") {
  const auto out = fixtures::scratch("cli_help");
  CHECK(fixtures::run_cli("--help", out / "help.txt") == 0);
  const auto help = fixtures::slurp(out / "help.txt");
  for (const char* word : {"solve", "sweep", "compare-modes", "compare-hvdc", "probe", "validate", "check-derivs"})
    CHECK(help.find(word) != std::string::npos);
  CHECK(fixtures::run_cli("sweep --help", out / "sweep.txt") == 0);
  const auto sweep = fixtures::slurp(out / "sweep.txt");
  for (const char* flag : {"--case", "--ext", "--from", "--to", "--step", "--out", "--mode"})
    CHECK(sweep.find(flag) != std::string::npos);
}

}  // TEST_SUITE
